#include "pcls/material.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pcls {

namespace {

void check_argument(double s) {
  if (!std::isfinite(s) || s < 0.0)
    throw std::invalid_argument("reluctivity argument must be finite and nonnegative, got " +
                                std::to_string(s));
}

}  // namespace

void MaterialCurve::validate() const {
  if (!(a1 > 0.0)) throw std::invalid_argument("material: a1 must be > 0");
  if (!(b1 >= 1.0)) throw std::invalid_argument("material: b1 must be >= 1");
  if (!(c1 > 0.0)) throw std::invalid_argument("material: c1 must be > 0");
  if (!(d1 > 0.0)) throw std::invalid_argument("material: d1 must be > 0");
  if (!(v_air > 0.0)) throw std::invalid_argument("material: v_air must be > 0");
}

// Both forms use the ratio t = (s/a1)^b1 or its reciprocal, whichever is
// <= 1, so neither overflows for extreme s.
double v2(const MaterialCurve& curve, double s) {
  check_argument(s);
  if (s <= curve.a1) {
    const double t = std::pow(s / curve.a1, curve.b1);
    return curve.d1 + curve.c1 * t / (1.0 + t);
  }
  const double r = std::pow(curve.a1 / s, curve.b1);
  return curve.d1 + curve.c1 / (1.0 + r);
}

double v2_prime(const MaterialCurve& curve, double s) {
  check_argument(s);
  if (s == 0.0) return curve.b1 == 1.0 ? curve.c1 / curve.a1 : 0.0;
  const double t = s <= curve.a1 ? std::pow(s / curve.a1, curve.b1) : std::pow(curve.a1 / s, curve.b1);
  return curve.c1 * curve.b1 / s * t / ((1.0 + t) * (1.0 + t));
}

double mix_v(const MaterialCurve& curve, double phi, double s) {
  return curve.v_air * (2.0 - phi) + v2(curve, s) * (phi - 1.0);
}

double mix_vprime(const MaterialCurve& curve, double phi, double s) {
  return (phi - 1.0) * v2_prime(curve, s);
}

Material::Material(const MaterialCurve& curve) : v_air_(curve.v_air), steel_(curve) {
  curve.validate();
}

Material Material::constant(double v_air, double v_steel) {
  if (!(v_air > 0.0) || !(v_steel > 0.0))
    throw std::invalid_argument("material: constant reluctivities must be > 0");
  return Material(v_air, v_steel);
}

double Material::v2(double s) const {
  if (const auto* c = std::get_if<MaterialCurve>(&steel_)) return pcls::v2(*c, s);
  check_argument(s);
  return std::get<double>(steel_);
}

double Material::v2_prime(double s) const {
  if (const auto* c = std::get_if<MaterialCurve>(&steel_)) return pcls::v2_prime(*c, s);
  check_argument(s);
  return 0.0;
}

}  // namespace pcls
