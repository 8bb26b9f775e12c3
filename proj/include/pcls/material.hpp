#pragma once

// Reluctivity laws for air and hard steel and the two-phase mixing rule
//   v(x, s) = v1(s) (2 - phi) + v2(s) (phi - 1),   s = |grad A|^2.

#include <variant>

namespace pcls {

/// Saturating steel law v2(s) = d1 + c1 s^b1 / (a1^b1 + s^b1) and constant air
/// reluctivity v_air.
struct MaterialCurve {
  double a1 = 0.5;
  double b1 = 4.0;
  double c1 = 3.0;
  double d1 = 0.2;
  double v_air = 1.0;

  /// Throws std::invalid_argument unless a1 > 0, b1 >= 1, c1 > 0, d1 > 0, v_air > 0.
  void validate() const;
};

double v2(const MaterialCurve& curve, double s);
double v2_prime(const MaterialCurve& curve, double s);
double mix_v(const MaterialCurve& curve, double phi, double s);
double mix_vprime(const MaterialCurve& curve, double phi, double s);

/// Two-phase material used by the solvers. The steel phase is either the
/// saturating curve or a constant; the constant form gives linear problems
/// used as test references.
class Material {
 public:
  explicit Material(const MaterialCurve& curve);
  static Material constant(double v_air, double v_steel);

  double v1(double /*s*/) const noexcept { return v_air_; }
  double v1_prime(double /*s*/) const noexcept { return 0.0; }
  double v2(double s) const;
  double v2_prime(double s) const;

  double mix_v(double phi, double s) const { return v1(s) * (2.0 - phi) + v2(s) * (phi - 1.0); }
  double mix_vprime(double phi, double s) const {
    return (2.0 - phi) * v1_prime(s) + (phi - 1.0) * v2_prime(s);
  }

  /// Curve parameters when the steel phase is saturating.
  const MaterialCurve* curve() const noexcept { return std::get_if<MaterialCurve>(&steel_); }

 private:
  Material(double v_air, double v_steel) : v_air_(v_air), steel_(v_steel) {}

  double v_air_;
  std::variant<MaterialCurve, double> steel_;
};

}  // namespace pcls
