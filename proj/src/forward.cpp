#include "pcls/forward.hpp"

#include <cmath>
#include <sstream>

namespace pcls {

namespace {

void check_same_grid(const NodalField& a, const NodalField& b, const char* where) {
  if (!(a.grid == b.grid) || a.values.size() != a.grid.n_nodes() || b.values.size() != b.grid.n_nodes())
    throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

void zero_boundary(const Grid& grid, Eigen::VectorXd& v) {
  for (int n : grid.boundary_nodes()) v[n] = 0.0;
}

Eigen::VectorXd stiffness_part(const NodalField& A, const NodalField& phi, const Material& material,
                               Exec exec) {
  const Grid& grid = A.grid;
  return assemble_vector(
      grid,
      [&](int c, ElementVector& re) {
        const auto a_loc = cell_values(grid, A.values, c);
        const auto phi_loc = cell_values(grid, phi.values, c);
        for (int q = 0; q < kQuadPerCell; ++q) {
          const auto grads = shape_gradients(grid, q);
          const Vec2 gA = gradient_at(grid, a_loc, q);
          const double v = material.mix_v(interpolate_at_quad(phi_loc, q), dot(gA, gA));
          const double wv = quad_weight(grid, q) * v;
          for (int a = 0; a < kNodesPerCell; ++a) re[a] += wv * dot(gA, grads[a]);
        }
      },
      exec);
}

}  // namespace

void NewtonConfig::validate() const {
  if (!(rel_residual_tol > 0.0)) throw std::invalid_argument("newton: rel_residual_tol must be > 0");
  if (max_iters < 1) throw std::invalid_argument("newton: max_iters must be >= 1");
  if (!(damping_min > 0.0 && damping_min <= 1.0))
    throw std::invalid_argument("newton: damping_min must lie in (0, 1]");
}

Eigen::VectorXd assemble_load(const Grid& grid, const SourceField& J, Exec exec) {
  const auto& ref = reference_element();
  Eigen::VectorXd b = assemble_vector(
      grid,
      [&](int c, ElementVector& be) {
        for (int q = 0; q < kQuadPerCell; ++q) {
          const Vec2 x = grid.quad_point(c, q);
          const double wj = quad_weight(grid, q) * J(x.x, x.y);
          for (int a = 0; a < kNodesPerCell; ++a) be[a] += wj * ref.shape[q][a];
        }
      },
      exec);
  zero_boundary(grid, b);
  return b;
}

Eigen::VectorXd assemble_residual(const NodalField& A, const NodalField& phi, const SourceField& J,
                                  const Material& material, Exec exec) {
  check_same_grid(A, phi, "assemble_residual");
  Eigen::VectorXd r = stiffness_part(A, phi, material, exec) - assemble_load(A.grid, J, exec);
  zero_boundary(A.grid, r);
  return r;
}

SymSparseOperator assemble_tangent(const NodalField& A, const NodalField& phi,
                                   const Material& material, Exec exec) {
  check_same_grid(A, phi, "assemble_tangent");
  const Grid& grid = A.grid;
  return assemble_operator(
      grid,
      [&](int c, ElementMatrix& ke) {
        const auto a_loc = cell_values(grid, A.values, c);
        const auto phi_loc = cell_values(grid, phi.values, c);
        for (int q = 0; q < kQuadPerCell; ++q) {
          const auto grads = shape_gradients(grid, q);
          const Vec2 gA = gradient_at(grid, a_loc, q);
          const double s = dot(gA, gA);
          const double phi_q = interpolate_at_quad(phi_loc, q);
          const double w = quad_weight(grid, q);
          const double wv = w * material.mix_v(phi_q, s);
          const double w2vp = 2.0 * w * material.mix_vprime(phi_q, s);
          std::array<double, kNodesPerCell> proj;
          for (int a = 0; a < kNodesPerCell; ++a) proj[a] = dot(gA, grads[a]);
          for (int a = 0; a < kNodesPerCell; ++a)
            for (int b = a; b < kNodesPerCell; ++b)
              ke[a][b] += w2vp * proj[a] * proj[b] + wv * dot(grads[a], grads[b]);
        }
      },
      exec);
}

NewtonResult newton_solve(const NodalField& phi, const SourceField& J, const Material& material,
                          const NewtonConfig& cfg, const std::optional<NodalField>& warm_start) {
  cfg.validate();
  const Grid& grid = phi.grid;
  NewtonResult result{NodalField::zeros(grid), 0, {}};
  if (warm_start) {
    check_same_grid(*warm_start, phi, "newton_solve");
    result.A = *warm_start;
    zero_boundary(grid, result.A.values);
  }

  const Eigen::VectorXd load = assemble_load(grid, J);
  const double target = cfg.rel_residual_tol * load.norm();

  auto residual = [&](const NodalField& A) {
    Eigen::VectorXd r = stiffness_part(A, phi, material, Exec::parallel) - load;
    zero_boundary(grid, r);
    return r;
  };

  Eigen::VectorXd r = residual(result.A);
  double r_norm = r.norm();
  result.residual_history.push_back(r_norm);

  while (!(r_norm <= target)) {
    if (!std::isfinite(r_norm))
      throw NewtonFailure("newton_solve: residual is not finite", result.residual_history);
    if (result.iterations == cfg.max_iters) {
      std::ostringstream msg;
      msg << "newton_solve: no convergence after " << cfg.max_iters << " iterations (residual "
          << r_norm << ", target " << target << ")";
      throw NewtonFailure(msg.str(), result.residual_history);
    }

    auto [T, rhs] = apply_dirichlet_zero(assemble_tangent(result.A, phi, material), r, grid);
    const Eigen::VectorXd step = solve_spd(T, rhs, 1e-12);

    // Halve until the residual drops; at damping_min the step is taken as is.
    double lambda = 1.0;
    for (;;) {
      NodalField trial{grid, result.A.values - lambda * step};
      Eigen::VectorXd r_trial = residual(trial);
      const double trial_norm = r_trial.norm();
      if (trial_norm < r_norm || trial_norm <= target || lambda * 0.5 < cfg.damping_min) {
        result.A = std::move(trial);
        r = std::move(r_trial);
        r_norm = trial_norm;
        break;
      }
      lambda *= 0.5;
    }
    ++result.iterations;
    result.residual_history.push_back(r_norm);
  }
  return result;
}

}  // namespace pcls
