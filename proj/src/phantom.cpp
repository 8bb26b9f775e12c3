#include "pcls/phantom.hpp"

#include <cmath>
#include <random>

#include "pcls/run_config.hpp"

namespace pcls {

namespace {

constexpr double kDomainMin = -0.5;
constexpr double kDomainMax = 0.5;

bool inside(const Circle& c, Vec2 p) {
  const double dx = p.x - c.center.x;
  const double dy = p.y - c.center.y;
  return dx * dx + dy * dy <= c.radius * c.radius;
}

bool inside(const Ellipse& e, Vec2 p) {
  const double dx = p.x - e.center.x;
  const double dy = p.y - e.center.y;
  const double cs = std::cos(e.rotation);
  const double sn = std::sin(e.rotation);
  const double u = (cs * dx + sn * dy) / e.semi_axes.x;
  const double v = (-sn * dx + cs * dy) / e.semi_axes.y;
  return u * u + v * v <= 1.0;
}

bool inside(const DiscDifference& d, Vec2 p) { return inside(d.outer, p) && !inside(d.inner, p); }

void check_box(Vec2 center, double half_x, double half_y, const char* what) {
  if (center.x - half_x < kDomainMin || center.x + half_x > kDomainMax ||
      center.y - half_y < kDomainMin || center.y + half_y > kDomainMax)
    throw std::invalid_argument(std::string("phantom: ") + what + " extends outside the domain");
}

void check(const Circle& c) {
  if (!(c.radius > 0.0)) throw std::invalid_argument("phantom: circle radius must be > 0");
  check_box(c.center, c.radius, c.radius, "circle");
}

void check(const Ellipse& e) {
  if (!(e.semi_axes.x > 0.0 && e.semi_axes.y > 0.0))
    throw std::invalid_argument("phantom: ellipse semi-axes must be > 0");
  const double cs = std::cos(e.rotation);
  const double sn = std::sin(e.rotation);
  const double hx = std::hypot(e.semi_axes.x * cs, e.semi_axes.y * sn);
  const double hy = std::hypot(e.semi_axes.x * sn, e.semi_axes.y * cs);
  check_box(e.center, hx, hy, "ellipse");
}

void check(const DiscDifference& d) {
  check(d.outer);
  if (!(d.inner.radius > 0.0)) throw std::invalid_argument("phantom: inner disc radius must be > 0");
}

}  // namespace

void Phantom::validate() const {
  if (shapes.empty()) throw std::invalid_argument("phantom: at least one shape is required");
  for (const auto& s : shapes) std::visit([](const auto& shape) { check(shape); }, s);
}

bool Phantom::contains(Vec2 p) const {
  for (const auto& s : shapes)
    if (std::visit([p](const auto& shape) { return inside(shape, p); }, s)) return true;
  return false;
}

NodalField rasterize(const Phantom& phantom, const Grid& grid) {
  phantom.validate();
  NodalField phi = NodalField::constant(grid, 2.0);
  for (int n = 0; n < grid.n_nodes(); ++n)
    if (phantom.contains(grid.node_coord(n))) phi.values[n] = 1.0;
  return phi;
}

std::string to_string(SourceKind kind) {
  return kind == SourceKind::strip_coils ? "strip_coils" : "uniform";
}

SourceKind source_kind_from_string(const std::string& s) {
  if (s == "strip_coils") return SourceKind::strip_coils;
  if (s == "uniform") return SourceKind::uniform;
  throw std::invalid_argument("unknown source kind '" + s + "'");
}

SourceField make_source(const SourceSpec& spec) {
  if (!(spec.J1 > 0.0)) throw std::invalid_argument("make_source: J1 must be > 0");
  const double j1 = spec.J1;
  if (spec.kind == SourceKind::uniform) return SourceField([j1](double, double) { return j1; });
  return SourceField([j1](double, double y) {
    if (y > 0.4) return j1;
    if (y < -0.4) return -j1;
    return 0.0;
  });
}

MeasurementSet synthesize(const Phantom& phantom, const SourceField& J, const Material& material,
                          const Grid& grid, const NewtonConfig& newton, int refine) {
  if (refine < 1) throw std::invalid_argument("synthesize: refine must be >= 1");
  MeasurementSet out{QuadVectorField::zeros(grid), rasterize(phantom, grid), 0};
  if (refine == 1) {
    NewtonResult fwd = newton_solve(out.phi_exact, J, material, newton);
    out.newton_iterations = fwd.iterations;
    out.mbar = gradient_at_quad(fwd.A);
    return out;
  }

  const Grid fine = build_grid(grid.dim() * refine);
  NewtonResult fwd = newton_solve(rasterize(phantom, fine), J, material, newton);
  out.newton_iterations = fwd.iterations;
  std::vector<Vec2> points;
  points.reserve(out.mbar.vectors.size());
  for (int c = 0; c < grid.n_cells(); ++c)
    for (int q = 0; q < kQuadPerCell; ++q) points.push_back(grid.quad_point(c, q));
  out.mbar.vectors = sample_gradient(fwd.A, points);
  return out;
}

QuadVectorField generate_measurements(const Phantom& phantom, const SourceField& J,
                                      const Material& material, const Grid& grid,
                                      const NewtonConfig& newton) {
  return synthesize(phantom, J, material, grid, newton).mbar;
}

QuadVectorField add_noise(const QuadVectorField& Mbar, const NoiseSpec& spec) {
  if (!(spec.level >= 0.0)) throw std::invalid_argument("add_noise: level must be >= 0");
  QuadVectorField out = Mbar;
  if (spec.level == 0.0 || Mbar.vectors.empty()) return out;

  double sum_sq = 0.0;
  for (const Vec2& m : Mbar.vectors) sum_sq += dot(m, m);
  const double rms = std::sqrt(sum_sq / static_cast<double>(Mbar.vectors.size()));
  const double scale = spec.level * rms;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Vec2& m : out.vectors) {
    m.x += scale * normal(rng);
    m.y += scale * normal(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (dim < 2) throw std::invalid_argument("grid.dim must be >= 2");
  material.validate();
  if (!(source.J1 > 0.0)) throw std::invalid_argument("source.J1 must be > 0");
  if (phantom) phantom->validate();
  if (generation_refine < 1) throw std::invalid_argument("generation.refine must be >= 1");
  pcls.validate();
  newton.validate();
  if (!(noise.level >= 0.0)) throw std::invalid_argument("noise.level must be >= 0");
}

std::vector<BuiltinExample> builtin_examples() {
  // The crescent and the disconnected geometry are representative stand-ins;
  // only the circle of the first example has published coordinates.
  const Phantom circle{{Circle{{0.2, 0.15}, 0.1}}};
  const Phantom crescent{{DiscDifference{Circle{{0.0, 0.05}, 0.22}, Circle{{0.08, 0.10}, 0.18}}}};
  const Phantom disconnected{{Circle{{-0.25, 0.25}, 0.1}, Circle{{0.25, 0.25}, 0.1},
                              Ellipse{{0.0, -0.2}, {0.2, 0.1}, 0.0}}};

  std::vector<BuiltinExample> out;

  RunConfig ex1;
  ex1.dim = 50;
  ex1.source = {SourceKind::strip_coils, 500.0};
  ex1.phantom = circle;
  ex1.pcls.sigma = 0.9;
  ex1.pcls.alpha = 0.001;
  ex1.pcls.osci_max = 10;
  ex1.pcls.phi0 = InitialGuess::constant(1.5);
  out.push_back({"example1-circle", ex1, {}});

  RunConfig ex2 = ex1;
  ex2.dim = 40;
  ex2.phantom = crescent;
  ex2.pcls.osci_max = 15;
  out.push_back({"example2-crescent", ex2, {}});

  RunConfig ex3 = ex1;
  ex3.source = {SourceKind::uniform, 500.0};
  ex3.phantom = disconnected;
  out.push_back({"example3-disconnected", ex3, {}});

  RunConfig ex4 = ex1;
  ex4.phantom = crescent;
  ex4.pcls.alpha = 0.1;
  ex4.noise = {0.05, 20130501};
  out.push_back({"example4-noise", ex4, {0.05, 0.10, 0.15, 0.20}});

  for (auto& ex : out) {
    ex.config.output.dir = ex.name;
    ex.config.validate();
  }
  return out;
}

}  // namespace pcls
