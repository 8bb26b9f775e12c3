#pragma once

// Finite-difference check of the adjoint gradient: the central difference
// (F(phi + eps h) - F(phi - eps h)) / (2 eps) against <DF, h> in L2.

#include <cstdint>
#include <vector>

#include "pcls/adjoint.hpp"

namespace pcls {

struct GradCheckOptions {
  int directions = 5;
  double eps = 1e-4;
  double tolerance = 1e-3;
  std::uint64_t seed = 1;
  double phi_low = 1.1;  // phi is drawn uniformly from [phi_low, phi_high]
  double phi_high = 1.9;
  bool flip_sign = false;  // sabotage hook: negates DF
};

struct GradCheckRow {
  double finite_difference = 0.0;
  double adjoint = 0.0;
  double rel_error = 0.0;
  bool pass = false;
};

struct GradCheckResult {
  std::vector<GradCheckRow> rows;
  double F = 0.0;
  bool all_pass() const;
};

/// Smooth direction sum_{m,n<=3} c_mn sin(m pi (x+1/2)) sin(n pi (y+1/2)), c ~ N(0,1); zero on the boundary.
NodalField smooth_direction(const Grid& grid, std::uint64_t seed);
NodalField random_phi(const Grid& grid, double low, double high, std::uint64_t seed);

/// F = F1 + alpha int |grad phi|^2 at phi, solving the forward problem from `warm_start`.
double objective(const NodalField& phi, const SourceField& J, const QuadVectorField& Mbar,
                 const GradientEvaluator& evaluator, const NewtonConfig& newton,
                 const std::optional<NodalField>& warm_start = {});

GradCheckResult gradient_check(const QuadVectorField& Mbar, const SourceField& J, const Material& material,
                               double alpha, const NewtonConfig& newton, const GradCheckOptions& options);

}  // namespace pcls
