#pragma once

// Piecewise constant level set descent for the two-phase reconstruction.
//
// phi takes the value 1 in air and 2 in steel. The constraint
// K(phi) = (phi-1)(phi-2) = 0 is enforced through a Lagrange multiplier that
// is eliminated algebraically, leaving the descent direction
//   dL/dphi = -4 (phi-1)(phi-2) DF,
// integrated by forward Euler with a CFL-limited step and clamped to [1,2].

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcls/adjoint.hpp"

namespace pcls {

struct InitialGuess {
  enum class Kind { constant, random };
  Kind kind = Kind::constant;
  double value = 1.5;       // constant in (1,2), endpoints excluded
  std::uint64_t seed = 0;   // random: 1 + U(0,1) per node

  static InitialGuess constant(double v) { return {Kind::constant, v, 0}; }
  static InitialGuess random(std::uint64_t seed) { return {Kind::random, 1.5, seed}; }
};

struct PclsConfig {
  double sigma = 0.9;
  double alpha = 0.001;
  int osci_max = 10;
  int max_outer_iters = 2000;
  InitialGuess phi0;

  void validate() const;
};

enum class StopReason { oscillation_limit, all_nodes_at_bounds, iteration_cap };

std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& s);

/// State of one outer iteration, captured before the update.
struct IterationRecord {
  int iteration = 0;
  double f1 = 0.0;
  double f = 0.0;
  double dt = 0.0;         // 0 when the iteration exits before the update
  int osci = 0;
  int n_at_bounds = 0;     // after the clamp of this iteration
  int newton_iterations = 0;
  double phi_min = 0.0;    // range of the clamped update
  double phi_max = 0.0;
};

struct ReconReport {
  int iterations = 0;
  std::vector<double> f1_history{};
  std::vector<IterationRecord> records{};
  StopReason stop_reason = StopReason::iteration_cap;
  NodalField final_phi;    // binarized
  NodalField relaxed_phi;  // clamped iterate at exit, before binarization
  std::optional<int> mismatch_count{};
  int osci = 0;
  std::chrono::duration<double> wall_time{0};
};

/// Raised when dL/dphi vanishes at every node, so no CFL step exists.
class CflStall : public std::runtime_error {
 public:
  CflStall() : std::runtime_error("cfl_dt: descent direction vanishes identically") {}
};

/// Wraps a forward or linear solver failure with the report accumulated so far.
class ReconstructionAborted : public std::runtime_error {
 public:
  ReconstructionAborted(const std::string& what, ReconReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const ReconReport& partial_report() const noexcept { return partial_; }

 private:
  ReconReport partial_;
};

NodalField constraint_K(const NodalField& phi);
NodalField dL_dphi(const NodalField& DF, const NodalField& phi);
/// sigma h / max|g|. Throws CflStall when g is identically zero.
double cfl_dt(const NodalField& g, double sigma, double h);
NodalField clamp_12(const NodalField& phi);
NodalField binarize(const NodalField& phi);
int count_at_bounds(const NodalField& phi);

NodalField make_initial_phi(const Grid& grid, const InitialGuess& guess);

using ProgressCallback = std::function<void(const IterationRecord&, const NodalField& phi)>;

ReconReport run_reconstruction(const QuadVectorField& Mbar, const SourceField& J,
                               const Material& material, const PclsConfig& cfg, const Grid& grid,
                               const std::optional<NodalField>& phi_exact = {},
                               const NewtonConfig& newton = {},
                               const ProgressCallback& progress = {});

}  // namespace pcls
