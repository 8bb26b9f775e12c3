#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcls/pcls.hpp"
#include "pcls/phantom.hpp"

namespace pcls {

struct OutputSpec {
  std::string dir = ".";
  std::string measurement = "mbar.field";
  std::string phi_exact = "phi_exact.field";
  std::string phi = "phi_final.field";
  std::string report = "report.json";
  std::string log;  // per-iteration JSON lines; empty disables
};

/// Everything one generate or reconstruct run needs.
struct RunConfig {
  int dim = 50;
  MaterialCurve material;
  SourceSpec source;
  std::optional<Phantom> phantom;
  std::string measurement_path;  // reconstruct from a measurement file instead of a phantom
  std::string phi_exact_path;
  int generation_refine = 1;
  PclsConfig pcls;
  NewtonConfig newton;
  NoiseSpec noise;
  OutputSpec output;

  void validate() const;
};

struct BuiltinExample {
  std::string name;
  RunConfig config;
  std::vector<double> noise_levels;  // empty for noiseless studies
};

/// The four benchmark configurations: single circle, crescent, disconnected
/// circles plus ellipse, and the crescent under noise.
std::vector<BuiltinExample> builtin_examples();

}  // namespace pcls
