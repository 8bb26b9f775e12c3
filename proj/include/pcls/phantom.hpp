#pragma once

// Ground-truth geometries, source currents, synthetic measurements and noise.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pcls/forward.hpp"

namespace pcls {

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

struct Ellipse {
  Vec2 center;
  Vec2 semi_axes;
  double rotation = 0.0;  // radians, counter-clockwise
};

/// Points inside `outer` and outside `inner` (a crescent when the discs overlap).
struct DiscDifference {
  Circle outer;
  Circle inner;
};

using Shape = std::variant<Circle, Ellipse, DiscDifference>;

/// Union of air-filled shapes; nodes inside any shape get phi = 1, all others phi = 2.
struct Phantom {
  std::vector<Shape> shapes;

  void validate() const;
  bool contains(Vec2 p) const;
};

NodalField rasterize(const Phantom& phantom, const Grid& grid);

enum class SourceKind { strip_coils, uniform };

struct SourceSpec {
  SourceKind kind = SourceKind::strip_coils;
  double J1 = 500.0;
};

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& s);

/// strip_coils: J1 for y > 0.4, -J1 for y < -0.4, 0 otherwise. uniform: J1 everywhere.
SourceField make_source(const SourceSpec& spec);

struct NoiseSpec {
  double level = 0.0;
  std::uint64_t seed = 0;
};

struct MeasurementSet {
  QuadVectorField mbar;
  NodalField phi_exact;
  int newton_iterations = 0;
};

/// Solves the forward problem for the rasterized phantom and samples grad A
/// at the quadrature points of `grid`. With refine > 1 the forward problem is
/// solved on a grid refined by that factor and its gradient is sampled at the
/// reconstruction quadrature points.
MeasurementSet synthesize(const Phantom& phantom, const SourceField& J, const Material& material,
                          const Grid& grid, const NewtonConfig& newton, int refine = 1);

QuadVectorField generate_measurements(const Phantom& phantom, const SourceField& J,
                                      const Material& material, const Grid& grid,
                                      const NewtonConfig& newton);

/// Mbar + level * rms(Mbar) * G with G independent standard normal 2-vectors.
QuadVectorField add_noise(const QuadVectorField& Mbar, const NoiseSpec& spec);

}  // namespace pcls
