#include "doctest.h"

#include "pcls/forward.hpp"
#include "pcls/phantom.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace pcls;

namespace {
const SourceField kZero(SourceField([](double, double) { return 0.0; }));
const SourceField kStrip = make_source({SourceKind::strip_coils, 500.0});
}  // namespace

TEST_CASE("residual special cases") {
  const Grid g = build_grid(3);
  const Material mat{MaterialCurve{}};
  const NodalField A0 = NodalField::zeros(g);
  const NodalField phi = testing::random_field(g, 1, 1.0, 2.0);

  CHECK(assemble_residual(A0, phi, kZero, mat).norm() == 0.0);

  const SourceField J500([](double, double) { return 500.0; });
  const Eigen::VectorXd R = assemble_residual(A0, phi, J500, mat);
  const Eigen::VectorXd rows = assemble_mass(g).to_dense().rowwise().sum();
  for (int n = 0; n < g.n_nodes(); ++n) {
    if (g.on_boundary(n))
      CHECK(R[n] == 0.0);
    else
      CHECK(R[n] == doctest::Approx(-500.0 * rows[n]).epsilon(1e-12));
  }

  // v == 1: R = K A - b on the interior.
  const NodalField A = testing::random_interior_field(g, 2);
  const Material lin = Material::constant(1.0, 1.0);
  Eigen::VectorXd expect = oracle::stiffness(3) * A.values;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(g.n_nodes());
  for (const auto& s : oracle::quad_samples(3))
    for (int a = 0; a < 4; ++a) load[s.nodes[a]] += s.weight * kStrip(s.x, s.y) * s.shape[a];
  expect -= load;
  for (int n : g.boundary_nodes()) expect[n] = 0.0;
  CHECK((assemble_residual(A, phi, kStrip, lin) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("residual with the saturating curve matches the dense oracle") {
  const Grid g = build_grid(3);
  const NodalField A = testing::random_interior_field(g, 3, 0.5);
  const NodalField phi = testing::random_field(g, 4, 1.0, 2.0);
  auto J = [](double x, double y) { return 100.0 * x - 40.0 * y; };
  const Eigen::VectorXd ref = oracle::residual(3, A.values, phi.values, oracle::Curve{}, J);
  const Eigen::VectorXd got = assemble_residual(A, phi, SourceField(J), Material(MaterialCurve{}));
  CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tangent") {
  const Grid g = build_grid(4);
  const Material mat{MaterialCurve{}};
  SUBCASE("A = 0 reduces to the v(phi, 0) weighted stiffness") {
    const NodalField phi = testing::random_field(g, 5, 1.0, 2.0);
    const Eigen::MatrixXd ref = oracle::stiffness(4, [&](const oracle::QuadSample& s) {
      return oracle::Curve{}.v(oracle::value_at(s, phi.values), 0.0);
    });
    CHECK((assemble_tangent(NodalField::zeros(g), phi, mat).to_dense() - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("dense oracle") {
    const NodalField A = testing::random_interior_field(g, 6, 0.5);
    const NodalField phi = testing::random_field(g, 7, 1.0, 2.0);
    const Eigen::MatrixXd ref = oracle::tangent(4, A.values, phi.values, oracle::Curve{});
    CHECK((assemble_tangent(A, phi, mat).to_dense() - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("finite-difference directional derivative decays at first order") {
    for (int trial = 0; trial < 5; ++trial) {
      const NodalField A = testing::random_interior_field(g, 100 + trial, 0.6);
      const NodalField phi = testing::random_field(g, 200 + trial, 1.0, 2.0);
      const NodalField h = testing::random_interior_field(g, 300 + trial);
      const Eigen::VectorXd R0 = assemble_residual(A, phi, kStrip, mat);
      Eigen::VectorXd Th = assemble_tangent(A, phi, mat).apply(h.values);
      for (int n : g.boundary_nodes()) Th[n] = 0.0;
      std::vector<double> errs;
      for (double eps : {1e-3, 1e-4, 1e-5}) {
        const NodalField Ae{g, A.values + eps * h.values};
        errs.push_back(((assemble_residual(Ae, phi, kStrip, mat) - R0) / eps - Th).norm());
      }
      CHECK(errs[1] < 0.2 * errs[0]);
      CHECK(errs[2] < 0.2 * errs[1]);
      CHECK(errs[2] <= 1e-3 * std::max(1.0, Th.norm()));
    }
  }
}

TEST_CASE("grid mismatch is rejected") {
  const NodalField A = NodalField::zeros(build_grid(3));
  const NodalField phi = NodalField::constant(build_grid(4), 1.5);
  CHECK_THROWS_AS(assemble_residual(A, phi, kStrip, Material(MaterialCurve{})), std::invalid_argument);
  CHECK_THROWS_AS(assemble_tangent(A, phi, Material(MaterialCurve{})), std::invalid_argument);
}

TEST_CASE("newton_solve") {
  const Material mat{MaterialCurve{}};
  SUBCASE("zero source") {
    const Grid g = build_grid(6);
    const auto r = newton_solve(NodalField::constant(g, 1.5), kZero, mat, {});
    CHECK(r.iterations <= 1);
    CHECK(r.A.values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear material converges in one step to the Poisson solution") {
    const Grid g = build_grid(6);
    const Material lin = Material::constant(1.0, 1.0);
    const auto r = newton_solve(NodalField::constant(g, 1.5), kStrip, lin, {});
    CHECK(r.iterations == 1);
    Eigen::VectorXd load = Eigen::VectorXd::Zero(g.n_nodes());
    for (const auto& s : oracle::quad_samples(6))
      for (int a = 0; a < 4; ++a) load[s.nodes[a]] += s.weight * kStrip(s.x, s.y) * s.shape[a];
    const Eigen::VectorXd ref = oracle::solve_interior(6, oracle::stiffness(6), load);
    CHECK((r.A.values - ref).cwiseAbs().maxCoeff() < 1e-10 * ref.cwiseAbs().maxCoeff());
  }
  SUBCASE("example 1 phantom converges with non-increasing residuals") {
    const Grid g = build_grid(50);
    const Phantom ph{{Circle{{0.2, 0.15}, 0.1}}};
    const NodalField phi = rasterize(ph, g);
    const NewtonConfig cfg;
    const auto r = newton_solve(phi, kStrip, mat, cfg);
    CHECK(r.iterations <= 30);
    const double load = assemble_load(g, kStrip).norm();
    CHECK(assemble_residual(r.A, phi, kStrip, mat).norm() <= cfg.rel_residual_tol * load);
    for (std::size_t k = 1; k < r.residual_history.size(); ++k)
      CHECK(r.residual_history[k] <= r.residual_history[k - 1]);
    for (int n : g.boundary_nodes()) CHECK(r.A.values[n] == 0.0);

    SUBCASE("warm start from the solution") {
      const auto again = newton_solve(phi, kStrip, mat, cfg, r.A);
      CHECK(again.iterations <= 1);
    }
  }
  SUBCASE("uniform source with saturating steel") {
    const Grid g = build_grid(20);
    const auto r = newton_solve(NodalField::constant(g, 2.0), make_source({SourceKind::uniform, 500.0}), mat, {});
    CHECK(r.A.all_finite());
    for (int n : g.boundary_nodes()) CHECK(r.A.values[n] == 0.0);
  }
  SUBCASE("iteration budget exhausted") {
    const Grid g = build_grid(10);
    NewtonConfig tight;
    tight.max_iters = 1;
    tight.rel_residual_tol = 1e-14;
    try {
      newton_solve(NodalField::constant(g, 2.0), kStrip, mat, tight);
      FAIL("expected NewtonFailure");
    } catch (const NewtonFailure& e) {
      CHECK(!e.residual_history().empty());
    }
  }
  SUBCASE("config validation") {
    NewtonConfig bad;
    bad.rel_residual_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.max_iters = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.damping_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
