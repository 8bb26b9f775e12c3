#include "pcls/pcls.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pcls {

void PclsConfig::validate() const {
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("pcls: sigma must lie in (0, 1)");
  if (!(alpha >= 0.0)) throw std::invalid_argument("pcls: alpha must be >= 0");
  if (osci_max < 1) throw std::invalid_argument("pcls: osci_max must be >= 1");
  if (max_outer_iters < 1) throw std::invalid_argument("pcls: max_outer_iters must be >= 1");
  if (phi0.kind == InitialGuess::Kind::constant && !(phi0.value > 1.0 && phi0.value < 2.0))
    throw std::invalid_argument("pcls: constant initial guess must lie strictly between 1 and 2");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::oscillation_limit: return "oscillation-limit";
    case StopReason::all_nodes_at_bounds: return "all-nodes-at-bounds";
    case StopReason::iteration_cap: return "iteration-cap";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& s) {
  if (s == "oscillation-limit") return StopReason::oscillation_limit;
  if (s == "all-nodes-at-bounds") return StopReason::all_nodes_at_bounds;
  if (s == "iteration-cap") return StopReason::iteration_cap;
  throw std::invalid_argument("unknown stop reason '" + s + "'");
}

NodalField constraint_K(const NodalField& phi) {
  return {phi.grid, ((phi.values.array() - 1.0) * (phi.values.array() - 2.0)).matrix()};
}

NodalField dL_dphi(const NodalField& DF, const NodalField& phi) {
  if (!(DF.grid == phi.grid)) throw std::invalid_argument("dL_dphi: grid mismatch");
  const auto k = (phi.values.array() - 1.0) * (phi.values.array() - 2.0);
  return {phi.grid, (-4.0 * k * DF.values.array()).matrix()};
}

double cfl_dt(const NodalField& g, double sigma, double h) {
  const double peak = g.values.size() == 0 ? 0.0 : g.values.cwiseAbs().maxCoeff();
  if (peak == 0.0) throw CflStall();
  return sigma * h / peak;
}

NodalField clamp_12(const NodalField& phi) {
  return {phi.grid, phi.values.cwiseMax(1.0).cwiseMin(2.0)};
}

NodalField binarize(const NodalField& phi) {
  return {phi.grid, phi.values.unaryExpr([](double v) { return v <= 1.5 ? 1.0 : 2.0; })};
}

int count_at_bounds(const NodalField& phi) {
  return static_cast<int>((phi.values.array() == 1.0 || phi.values.array() == 2.0).count());
}

NodalField make_initial_phi(const Grid& grid, const InitialGuess& guess) {
  if (guess.kind == InitialGuess::Kind::constant) {
    if (!(guess.value > 1.0 && guess.value < 2.0))
      throw std::invalid_argument("initial guess must lie strictly between 1 and 2");
    return NodalField::constant(grid, guess.value);
  }
  std::mt19937_64 rng(guess.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NodalField phi = NodalField::zeros(grid);
  for (int n = 0; n < grid.n_nodes(); ++n) {
    double u = 0.0;
    while (u == 0.0) u = unit(rng);  // keep 1 out of the initial values
    phi.values[n] = 1.0 + u;
  }
  return phi;
}

ReconReport run_reconstruction(const QuadVectorField& Mbar, const SourceField& J,
                               const Material& material, const PclsConfig& cfg, const Grid& grid,
                               const std::optional<NodalField>& phi_exact,
                               const NewtonConfig& newton, const ProgressCallback& progress) {
  cfg.validate();
  newton.validate();
  if (!(Mbar.grid == grid)) throw std::invalid_argument("run_reconstruction: measurements are on another grid");
  if (phi_exact && !(phi_exact->grid == grid))
    throw std::invalid_argument("run_reconstruction: phi_exact is on another grid");

  const auto start = std::chrono::steady_clock::now();
  const GradientEvaluator evaluator(grid, material, cfg.alpha);
  const int n_total = grid.n_nodes();

  ReconReport report{.final_phi = NodalField::zeros(grid), .relaxed_phi = NodalField::zeros(grid)};
  NodalField phi = make_initial_phi(grid, cfg.phi0);
  std::optional<NodalField> A;
  double f1_prev = 10000.0;
  int osci = 0;

  auto finish = [&](StopReason reason) {
    report.stop_reason = reason;
    report.iterations = static_cast<int>(report.f1_history.size());
    report.osci = osci;
    report.relaxed_phi = phi;
    report.final_phi = binarize(phi);
    if (phi_exact)
      report.mismatch_count =
          static_cast<int>((report.final_phi.values.array() != phi_exact->values.array()).count());
    report.wall_time = std::chrono::steady_clock::now() - start;
  };

  for (int k = 0;; ++k) {
    if (k == cfg.max_outer_iters) {
      finish(StopReason::iteration_cap);
      return report;
    }

    IterationRecord rec;
    rec.iteration = k;
    try {
      // Step 1: forward solve, warm-started from the previous iterate.
      NewtonResult fwd = newton_solve(phi, J, material, newton, A);
      rec.newton_iterations = fwd.iterations;
      A = std::move(fwd.A);

      // Step 2: misfit and oscillation count.
      rec.f1 = evaluate_misfit(*A, Mbar);
      rec.f = rec.f1 + evaluator.regularization(phi);
      report.f1_history.push_back(rec.f1);
      if (rec.f1 > f1_prev) ++osci;
      f1_prev = rec.f1;
      rec.osci = osci;
      if (osci == cfg.osci_max) {
        rec.n_at_bounds = count_at_bounds(phi);
        rec.phi_min = phi.values.minCoeff();
        rec.phi_max = phi.values.maxCoeff();
        report.records.push_back(rec);
        if (progress) progress(rec, phi);
        finish(StopReason::oscillation_limit);
        return report;
      }

      // Step 3: adjoint gradient and descent direction.
      const NodalField p = solve_adjoint(*A, phi, Mbar, material);
      const NodalField DF = evaluator.project(gradient_functional(*A, p, phi, material, cfg.alpha));
      const NodalField g = dL_dphi(DF, phi);

      // Step 4: CFL-limited forward Euler step.
      double dt = 0.0;
      try {
        dt = cfl_dt(g, cfg.sigma, grid.h());
      } catch (const CflStall&) {
        rec.n_at_bounds = count_at_bounds(phi);
        rec.phi_min = phi.values.minCoeff();
        rec.phi_max = phi.values.maxCoeff();
        report.records.push_back(rec);
        if (progress) progress(rec, phi);
        finish(StopReason::all_nodes_at_bounds);
        return report;
      }
      rec.dt = dt;

      // Step 5: clamp to [1,2] and count nodes on the bounds.
      phi = clamp_12(NodalField{grid, phi.values - dt * g.values});
    } catch (const NewtonFailure& e) {
      finish(report.stop_reason);
      throw ReconstructionAborted(std::string("forward solve failed: ") + e.what(), report);
    } catch (const SolverFailure& e) {
      finish(report.stop_reason);
      throw ReconstructionAborted(std::string("linear solve failed: ") + e.what(), report);
    }

    rec.phi_min = phi.values.minCoeff();
    rec.phi_max = phi.values.maxCoeff();
    if (!(rec.phi_min >= 1.0 && rec.phi_max <= 2.0) || !phi.all_finite())
      throw std::logic_error("run_reconstruction: clamped level set left [1,2]");
    rec.n_at_bounds = count_at_bounds(phi);
    report.records.push_back(rec);
    if (progress) progress(rec, phi);
    if (rec.n_at_bounds == n_total) {
      finish(StopReason::all_nodes_at_bounds);
      return report;
    }
  }
}

}  // namespace pcls
