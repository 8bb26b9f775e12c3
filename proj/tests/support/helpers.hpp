#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "pcls/mesh_fem.hpp"

namespace testing {

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = d(rng);
  return v;
}

inline pcls::NodalField random_field(const pcls::Grid& g, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return {g, random_vector(g.n_nodes(), seed, lo, hi)};
}

/// Random field with zero boundary values, usable as a forward state.
inline pcls::NodalField random_interior_field(const pcls::Grid& g, std::uint64_t seed, double scale = 1.0) {
  pcls::NodalField f = random_field(g, seed, -scale, scale);
  for (int n : g.boundary_nodes()) f.values[n] = 0.0;
  return f;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pcls-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
