#include "pcls/gradcheck.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace pcls {

bool GradCheckResult::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return !rows.empty();
}

NodalField smooth_direction(const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double c[3][3];
  for (auto& row : c)
    for (double& v : row) v = normal(rng);
  const double pi = std::numbers::pi;
  NodalField h = NodalField::from_function(grid, [&](double x, double y) {
    double sum = 0.0;
    for (int m = 1; m <= 3; ++m)
      for (int n = 1; n <= 3; ++n)
        sum += c[m - 1][n - 1] * std::sin(m * pi * (x + 0.5)) * std::sin(n * pi * (y + 0.5));
    return sum;
  });
  for (int n : grid.boundary_nodes()) h.values[n] = 0.0;
  return h;
}

NodalField random_phi(const Grid& grid, double low, double high, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(low, high);
  NodalField phi = NodalField::zeros(grid);
  for (int n = 0; n < grid.n_nodes(); ++n) phi.values[n] = unit(rng);
  return phi;
}

double objective(const NodalField& phi, const SourceField& J, const QuadVectorField& Mbar,
                 const GradientEvaluator& evaluator, const NewtonConfig& newton,
                 const std::optional<NodalField>& warm_start) {
  const NewtonResult fwd = newton_solve(phi, J, evaluator.material(), newton, warm_start);
  return evaluate_misfit(fwd.A, Mbar) + evaluator.regularization(phi);
}

GradCheckResult gradient_check(const QuadVectorField& Mbar, const SourceField& J, const Material& material,
                               double alpha, const NewtonConfig& newton, const GradCheckOptions& options) {
  if (options.directions < 1) throw std::invalid_argument("gradient_check: need at least one direction");
  if (!(options.eps > 0.0)) throw std::invalid_argument("gradient_check: eps must be positive");
  const Grid& grid = Mbar.grid;
  const GradientEvaluator evaluator(grid, material, alpha);

  const NodalField phi = random_phi(grid, options.phi_low, options.phi_high, options.seed);
  const NewtonResult base = newton_solve(phi, J, material, newton);
  GradientBundle bundle = evaluator.evaluate(base.A, phi, Mbar);
  if (options.flip_sign) bundle.DF.values = -bundle.DF.values;
  const Eigen::VectorXd M_DF = evaluator.mass().apply(bundle.DF.values);

  GradCheckResult result;
  result.F = bundle.F;
  for (int d = 0; d < options.directions; ++d) {
    const NodalField h = smooth_direction(grid, options.seed * 1000003ULL + static_cast<std::uint64_t>(d) + 1);
    const NodalField plus{grid, phi.values + options.eps * h.values};
    const NodalField minus{grid, phi.values - options.eps * h.values};
    const double fp = objective(plus, J, Mbar, evaluator, newton, base.A);
    const double fm = objective(minus, J, Mbar, evaluator, newton, base.A);

    GradCheckRow row;
    row.finite_difference = (fp - fm) / (2.0 * options.eps);
    row.adjoint = M_DF.dot(h.values);
    const double scale = std::max(std::abs(row.finite_difference), std::abs(row.adjoint));
    row.rel_error = scale == 0.0 ? 0.0 : std::abs(row.finite_difference - row.adjoint) / std::abs(row.finite_difference);
    if (row.finite_difference == 0.0 && scale != 0.0) row.rel_error = std::numeric_limits<double>::infinity();
    row.pass = row.rel_error <= options.tolerance;
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace pcls
