#include "doctest.h"

#include <fstream>

#include "pcls/config_io.hpp"
#include "support/helpers.hpp"

using namespace pcls;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults are pre-filled and an empty document is valid") {
  const RunConfig cfg = config_from_json(Json::object());
  CHECK(cfg.dim == 50);
  CHECK(cfg.pcls.sigma == 0.9);
  CHECK(cfg.pcls.alpha == 0.001);
  CHECK(cfg.material.a1 == 0.5);
  CHECK(cfg.material.b1 == 4.0);
  CHECK(cfg.newton.max_iters == 50);
  CHECK_FALSE(cfg.phantom.has_value());
}

TEST_CASE("every built-in example survives a JSON round trip") {
  for (const auto& ex : builtin_examples()) {
    const Json j = config_to_json(ex.config);
    const RunConfig back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.phantom->shapes.size() == ex.config.phantom->shapes.size());
  }
}

TEST_CASE("unknown keys and wrong types are rejected by name") {
  CHECK(error_of([] { config_from_json(Json::parse(R"({"pcls": {"sigmaa": 0.5}})")); }).find("pcls.sigmaa") !=
        std::string::npos);
  CHECK(error_of([] { config_from_json(Json::parse(R"({"extra": 1})")); }).find("extra") != std::string::npos);
  CHECK(error_of([] { config_from_json(Json::parse(R"({"grid": {"dim": "fifty"}})")); }).find("grid.dim") !=
        std::string::npos);
  CHECK(error_of([] { config_from_json(Json::parse(R"({"grid": {"dim": 2.5}})")); }).find("grid.dim") !=
        std::string::npos);
  CHECK(error_of([] {
          config_from_json(Json::parse(R"({"phantom": {"shapes": [{"type": "square"}]}})"));
        }).find("phantom.shapes.0.type") != std::string::npos);
  CHECK(error_of([] {
          config_from_json(Json::parse(R"({"phantom": {"shapes": [{"type": "circle", "radius": 0.1, "r": 1}]}})"));
        }).find("phantom.shapes.0.r") != std::string::npos);
  CHECK(error_of([] { config_from_json(Json::parse(R"({"source": {"kind": "coil"}})")); }).find("source.kind") !=
        std::string::npos);
  CHECK(error_of([] { config_from_json(Json::parse(R"({"noise": {"seed": -4}})")); }).find("noise.seed") !=
        std::string::npos);
}

TEST_CASE("overrides") {
  Json doc = config_to_json(builtin_examples()[0].config);
  apply_override(doc, "sigma=0.6");
  CHECK(config_from_json(doc).pcls.sigma == 0.6);
  apply_override(doc, "pcls.phi0.kind=random");
  apply_override(doc, "pcls.phi0.seed=12");
  CHECK(config_from_json(doc).pcls.phi0.kind == InitialGuess::Kind::random);
  CHECK(config_from_json(doc).pcls.phi0.seed == 12);
  apply_override(doc, "phantom.shapes.0.radius=0.12");
  CHECK(std::get<Circle>(config_from_json(doc).phantom->shapes[0]).radius == 0.12);
  apply_override(doc, "output.dir=some/where");
  CHECK(config_from_json(doc).output.dir == "some/where");
  apply_override(doc, "dim=20");
  CHECK(config_from_json(doc).dim == 20);

  CHECK(error_of([&] { apply_override(doc, "bogus=1"); }).find("bogus") != std::string::npos);
  CHECK(error_of([&] { apply_override(doc, "seed=1"); }).find("ambiguous") != std::string::npos);
  CHECK(error_of([&] { apply_override(doc, "pcls.nope=1"); }).find("pcls.nope") != std::string::npos);
  CHECK(error_of([&] { apply_override(doc, "phantom.shapes.4.radius=1"); }) != "");
  CHECK(error_of([&] { apply_override(doc, "sigma"); }).find("key=value") != std::string::npos);
}

TEST_CASE("resolve_config validates ranges") {
  const auto dir = testing::scratch_dir("config");
  save_config(dir / "ex1.json", builtin_examples()[0].config);
  CHECK(resolve_config(dir / "ex1.json", {"sigma=0.6"}).pcls.sigma == 0.6);
  CHECK_THROWS_AS(resolve_config(dir / "ex1.json", {"sigma=1.5"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(dir / "ex1.json", {"pcls.phi0.value=2"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(dir / "missing.json", {}), ConfigError);
  std::ofstream(dir / "broken.json") << "{ \"grid\": ";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK(resolve_config("", {}).dim == 50);
}

TEST_CASE("report document") {
  const Grid g = build_grid(2);
  ReconReport r{.final_phi = NodalField::constant(g, 2.0), .relaxed_phi = NodalField::constant(g, 1.9)};
  r.iterations = 3;
  r.f1_history = {3.0, 2.0, 1.0};
  for (int k = 0; k < 3; ++k) r.records.push_back(IterationRecord{.iteration = k, .f1 = r.f1_history[k]});
  r.stop_reason = StopReason::oscillation_limit;

  Json j = report_to_json(r, RunConfig{});
  CHECK(j["f1_history"].size() == 3);
  CHECK(j["records"].size() == 3);
  CHECK(j["stop_reason"] == "oscillation-limit");
  CHECK_FALSE(j.contains("mismatch_count"));
  CHECK(j.contains("wall_time_seconds"));
  CHECK(config_from_json(j["config"]).dim == 50);

  r.mismatch_count = 4;
  const auto dir = testing::scratch_dir("report");
  write_report(dir / "r.json", r, RunConfig{});
  std::ifstream is(dir / "r.json");
  CHECK(Json::parse(is)["mismatch_count"] == 4);
  CHECK_THROWS(write_report(dir / "no" / "such" / "r.json", r, RunConfig{}));
}
