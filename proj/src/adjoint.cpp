#include "pcls/adjoint.hpp"

namespace pcls {

namespace {

constexpr double kSolveTol = 1e-12;

void check_grids(const NodalField& A, const QuadVectorField& Mbar, const char* where) {
  if (!(A.grid == Mbar.grid) || Mbar.q_per_cell != kQuadPerCell ||
      Mbar.vectors.size() != static_cast<std::size_t>(A.grid.n_cells()) * kQuadPerCell)
    throw std::invalid_argument(std::string(where) + ": measurement layout does not match the grid");
}

void check_grids(const NodalField& a, const NodalField& b, const char* where) {
  if (!(a.grid == b.grid)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

}  // namespace

double evaluate_misfit(const NodalField& A, const QuadVectorField& Mbar, Exec exec) {
  check_grids(A, Mbar, "evaluate_misfit");
  const Grid& grid = A.grid;
  return 0.5 * integrate_cells(
                   grid,
                   [&](int c) {
                     const auto a_loc = cell_values(grid, A.values, c);
                     double sum = 0.0;
                     for (int q = 0; q < kQuadPerCell; ++q) {
                       const Vec2 g = gradient_at(grid, a_loc, q);
                       const Vec2& m = Mbar.at(c, q);
                       const Vec2 d{g.x - m.x, g.y - m.y};
                       sum += Mbar.quad_weights[q] * dot(d, d);
                     }
                     return sum;
                   },
                   exec);
}

Eigen::VectorXd adjoint_rhs(const NodalField& A, const QuadVectorField& Mbar, Exec exec) {
  check_grids(A, Mbar, "adjoint_rhs");
  const Grid& grid = A.grid;
  Eigen::VectorXd r = assemble_vector(
      grid,
      [&](int c, ElementVector& re) {
        const auto a_loc = cell_values(grid, A.values, c);
        for (int q = 0; q < kQuadPerCell; ++q) {
          const auto grads = shape_gradients(grid, q);
          const Vec2 g = gradient_at(grid, a_loc, q);
          const Vec2& m = Mbar.at(c, q);
          const Vec2 d{g.x - m.x, g.y - m.y};
          for (int a = 0; a < kNodesPerCell; ++a) re[a] += Mbar.quad_weights[q] * dot(d, grads[a]);
        }
      },
      exec);
  for (int n : grid.boundary_nodes()) r[n] = 0.0;
  return r;
}

NodalField solve_adjoint(const NodalField& A, const NodalField& phi, const QuadVectorField& Mbar,
                         const Material& material) {
  check_grids(A, phi, "solve_adjoint");
  auto [T, rhs] = apply_dirichlet_zero(assemble_tangent(A, phi, material), adjoint_rhs(A, Mbar), A.grid);
  NodalField p{A.grid, solve_spd(T, rhs, kSolveTol)};
  for (int n : A.grid.boundary_nodes()) p.values[n] = 0.0;
  return p;
}

Eigen::VectorXd gradient_functional(const NodalField& A, const NodalField& p, const NodalField& phi,
                                    const Material& material, double alpha, Exec exec) {
  check_grids(A, p, "gradient_functional");
  check_grids(A, phi, "gradient_functional");
  if (!(alpha >= 0.0)) throw std::invalid_argument("gradient_functional: alpha must be >= 0");
  const Grid& grid = A.grid;
  const auto& ref = reference_element();
  return assemble_vector(
      grid,
      [&](int c, ElementVector& ge) {
        const auto a_loc = cell_values(grid, A.values, c);
        const auto p_loc = cell_values(grid, p.values, c);
        const auto phi_loc = cell_values(grid, phi.values, c);
        for (int q = 0; q < kQuadPerCell; ++q) {
          const auto grads = shape_gradients(grid, q);
          const Vec2 gA = gradient_at(grid, a_loc, q);
          const Vec2 gp = gradient_at(grid, p_loc, q);
          const Vec2 gphi = gradient_at(grid, phi_loc, q);
          const double s = dot(gA, gA);
          const double w = quad_weight(grid, q);
          const double shape_term = -w * (material.v2(s) - material.v1(s)) * dot(gA, gp);
          for (int a = 0; a < kNodesPerCell; ++a)
            ge[a] += shape_term * ref.shape[q][a] + 2.0 * alpha * w * dot(gphi, grads[a]);
        }
      },
      exec);
}

NodalField assemble_gradient(const NodalField& A, const NodalField& p, const NodalField& phi,
                             const Material& material, double alpha) {
  const Eigen::VectorXd g = gradient_functional(A, p, phi, material, alpha);
  return {A.grid, solve_spd(assemble_mass(A.grid), g, kSolveTol)};
}

GradientEvaluator::GradientEvaluator(const Grid& grid, Material material, double alpha)
    : grid_(grid),
      material_(std::move(material)),
      alpha_(alpha),
      mass_(assemble_mass(grid)),
      stiffness_(assemble_stiffness(grid)),
      mass_solver_(std::make_shared<const SpdFactorization>(mass_)) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("GradientEvaluator: alpha must be >= 0");
}

double GradientEvaluator::regularization(const NodalField& phi) const {
  return alpha_ * phi.values.dot(stiffness_.apply(phi.values));
}

NodalField GradientEvaluator::project(const Eigen::VectorXd& functional) const {
  return {grid_, mass_solver_->solve(functional, kSolveTol)};
}

GradientBundle GradientEvaluator::evaluate(const NodalField& A, const NodalField& phi,
                                           const QuadVectorField& Mbar) const {
  const double f1 = evaluate_misfit(A, Mbar);
  NodalField p = solve_adjoint(A, phi, Mbar, material_);
  NodalField df = project(gradient_functional(A, p, phi, material_, alpha_));
  return {f1, f1 + regularization(phi), std::move(p), std::move(df)};
}

GradientBundle compute_gradient_bundle(const NodalField& A, const NodalField& phi,
                                       const QuadVectorField& Mbar, const Material& material,
                                       double alpha) {
  return GradientEvaluator(A.grid, material, alpha).evaluate(A, phi, Mbar);
}

}  // namespace pcls
