#pragma once

// Misfit, adjoint state and projected gradient of
//   F(phi) = 1/2 int |grad A(phi) - Mbar|^2 + alpha int |grad phi|^2.
//
// With T the forward tangent, the adjoint p solves T p = r with
// r(psi) = int (grad A - Mbar) . grad psi, and the first variation is
//   dF[h] = -int (v2 - v1) (grad A . grad p) h + 2 alpha int grad phi . grad h.
// DF is the L2 (mass) projection of that functional onto the nodal space.

#include <memory>

#include "pcls/forward.hpp"

namespace pcls {

struct GradientBundle {
  double F1 = 0.0;
  double F = 0.0;
  NodalField p;
  NodalField DF;
};

double evaluate_misfit(const NodalField& A, const QuadVectorField& Mbar, Exec exec = Exec::parallel);

/// Nodal vector r_k = int (grad A - Mbar) . grad psi_k, boundary entries zero.
Eigen::VectorXd adjoint_rhs(const NodalField& A, const QuadVectorField& Mbar, Exec exec = Exec::parallel);

NodalField solve_adjoint(const NodalField& A, const NodalField& phi, const QuadVectorField& Mbar,
                         const Material& material);

/// Unprojected gradient vector g_k = dF/dphi_k; DF solves M DF = g.
Eigen::VectorXd gradient_functional(const NodalField& A, const NodalField& p, const NodalField& phi,
                                    const Material& material, double alpha,
                                    Exec exec = Exec::parallel);

NodalField assemble_gradient(const NodalField& A, const NodalField& p, const NodalField& phi,
                             const Material& material, double alpha);

/// Reuses the mass factorization and stiffness operator of one grid across
/// evaluations. Evaluations are const and may run concurrently.
class GradientEvaluator {
 public:
  GradientEvaluator(const Grid& grid, Material material, double alpha);

  const Grid& grid() const noexcept { return grid_; }
  double alpha() const noexcept { return alpha_; }
  const Material& material() const noexcept { return material_; }
  const SymSparseOperator& mass() const noexcept { return mass_; }

  /// alpha int |grad phi|^2
  double regularization(const NodalField& phi) const;
  /// Mass-projection of a nodal functional vector.
  NodalField project(const Eigen::VectorXd& functional) const;

  GradientBundle evaluate(const NodalField& A, const NodalField& phi, const QuadVectorField& Mbar) const;

 private:
  Grid grid_;
  Material material_;
  double alpha_;
  SymSparseOperator mass_;
  SymSparseOperator stiffness_;
  std::shared_ptr<const SpdFactorization> mass_solver_;
};

GradientBundle compute_gradient_bundle(const NodalField& A, const NodalField& phi,
                                       const QuadVectorField& Mbar, const Material& material,
                                       double alpha);

}  // namespace pcls
