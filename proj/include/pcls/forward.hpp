#pragma once

// Newton-Raphson solver for the quasi-linear magnetostatic problem
//
//   find A in W0^{1,2}:  int v(phi, |grad A|^2) grad A . grad psi = int J psi  for all psi.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcls/material.hpp"
#include "pcls/mesh_fem.hpp"

namespace pcls {

struct NewtonConfig {
  double rel_residual_tol = 1e-10;
  int max_iters = 50;
  double damping_min = 1.0 / 16.0;

  void validate() const;
};

/// Current density J(x, y).
class SourceField {
 public:
  SourceField() = default;
  explicit SourceField(std::function<double(double, double)> f) : f_(std::move(f)) {}

  double evaluate(double x, double y) const { return f_ ? f_(x, y) : 0.0; }
  double operator()(double x, double y) const { return evaluate(x, y); }

 private:
  std::function<double(double, double)> f_;
};

class NewtonFailure : public std::runtime_error {
 public:
  NewtonFailure(const std::string& what, std::vector<double> residual_history)
      : std::runtime_error(what), residual_history_(std::move(residual_history)) {}
  const std::vector<double>& residual_history() const noexcept { return residual_history_; }

 private:
  std::vector<double> residual_history_;
};

/// Load vector int J psi_k, boundary entries zero.
Eigen::VectorXd assemble_load(const Grid& grid, const SourceField& J, Exec exec = Exec::parallel);

/// R_k = int v grad A . grad psi_k - int J psi_k on interior nodes, zero on the boundary.
Eigen::VectorXd assemble_residual(const NodalField& A, const NodalField& phi, const SourceField& J,
                                  const Material& material, Exec exec = Exec::parallel);

/// Gateaux derivative of the residual map with respect to A:
///   int 2 v' (grad A . grad dA)(grad A . grad psi) + v grad dA . grad psi.
/// Returned without boundary elimination.
SymSparseOperator assemble_tangent(const NodalField& A, const NodalField& phi,
                                   const Material& material, Exec exec = Exec::parallel);

struct NewtonResult {
  NodalField A;
  int iterations = 0;
  std::vector<double> residual_history;  // ||R|| before each step and after the last
};

NewtonResult newton_solve(const NodalField& phi, const SourceField& J, const Material& material,
                          const NewtonConfig& cfg, const std::optional<NodalField>& warm_start = {});

}  // namespace pcls
