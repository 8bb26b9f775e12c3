#include "doctest.h"

#include <omp.h>

#include <cstring>

#include "pcls/adjoint.hpp"
#include "support/helpers.hpp"

using namespace pcls;

namespace {

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool same_bits(const SymSparseOperator& a, const SymSparseOperator& b) {
  const auto& x = a.matrix();
  const auto& y = b.matrix();
  if (x.nonZeros() != y.nonZeros() || x.rows() != y.rows()) return false;
  return std::memcmp(x.valuePtr(), y.valuePtr(), sizeof(double) * x.nonZeros()) == 0 &&
         std::memcmp(x.innerIndexPtr(), y.innerIndexPtr(), sizeof(int) * x.nonZeros()) == 0;
}

bool same_bits(const QuadVectorField& a, const QuadVectorField& b) {
  return a.vectors.size() == b.vectors.size() &&
         std::memcmp(a.vectors.data(), b.vectors.data(), sizeof(Vec2) * a.vectors.size()) == 0;
}

// Runs `fn` with several thread counts and checks each parallel result
// against the serial one bit for bit.
template <class Fn>
void check_across_threads(Fn&& fn) {
  const auto serial = fn(Exec::serial);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    CAPTURE(threads);
    CHECK(same_bits(serial, fn(Exec::parallel)));
  }
  omp_set_num_threads(saved);
}

}  // namespace

TEST_CASE("parallel kernels equal the serial path bit for bit") {
  const Grid g = build_grid(23);
  const Material mat{MaterialCurve{}};
  const NodalField A = testing::random_interior_field(g, 3, 0.4);
  const NodalField phi = testing::random_field(g, 4, 1.0, 2.0);
  const NodalField p = testing::random_interior_field(g, 5);
  const SourceField J([](double x, double y) { return 1.0 + x - 0.5 * y; });
  QuadVectorField mbar = gradient_at_quad(testing::random_interior_field(g, 6, 0.3));

  SUBCASE("mass") { check_across_threads([&](Exec e) { return assemble_mass(g, e); }); }
  SUBCASE("stiffness") { check_across_threads([&](Exec e) { return assemble_stiffness(g, e); }); }
  SUBCASE("tangent") { check_across_threads([&](Exec e) { return assemble_tangent(A, phi, mat, e); }); }
  SUBCASE("load") { check_across_threads([&](Exec e) { return assemble_load(g, J, e); }); }
  SUBCASE("residual") { check_across_threads([&](Exec e) { return assemble_residual(A, phi, J, mat, e); }); }
  SUBCASE("adjoint right-hand side") { check_across_threads([&](Exec e) { return adjoint_rhs(A, mbar, e); }); }
  SUBCASE("gradient functional") {
    check_across_threads([&](Exec e) { return gradient_functional(A, p, phi, mat, 0.001, e); });
  }
  SUBCASE("quadrature gradients") { check_across_threads([&](Exec e) { return gradient_at_quad(A, e); }); }
  SUBCASE("misfit") {
    check_across_threads([&](Exec e) {
      Eigen::VectorXd v(1);
      v[0] = evaluate_misfit(A, mbar, e);
      return v;
    });
  }
}
