#include "pcls/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "pcls/config_io.hpp"
#include "pcls/field_io.hpp"
#include "pcls/gradcheck.hpp"

namespace fs = std::filesystem;

namespace pcls {

namespace {

struct CommonArgs {
  std::string config;
  std::string example;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string log;
};

// Failure somewhere in the pipeline; `code` is the process exit code.
struct StageError : std::runtime_error {
  StageError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  auto* cfg = cmd->add_option("-c,--config", args.config, "JSON run configuration");
  auto* ex = cmd->add_option("-e,--example", args.example, "start from a built-in example (name or 1-4)");
  cfg->excludes(ex);
  cmd->add_option("-O,--override", args.overrides, "key=value, dotted path or unique leaf name")
      ->allow_extra_args(false);
  cmd->add_option("-o,--out", args.out, "output directory (overrides output.dir)");
  cmd->add_option("--seed", args.seed, "seed for noise and random initial guesses");
}

const BuiltinExample& find_example(const std::string& key) {
  static const std::vector<BuiltinExample> all = builtin_examples();
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto& ex = all[k];
    if (key == ex.name || key == std::to_string(k + 1) || key == "example" + std::to_string(k + 1)) return ex;
  }
  throw ConfigError("unknown example '" + key + "'");
}

RunConfig resolve(const CommonArgs& args, const std::optional<RunConfig>& fallback = {}) {
  Json doc;
  if (!args.example.empty())
    doc = config_to_json(find_example(args.example).config);
  else if (!args.config.empty())
    doc = config_to_json(load_config(args.config));
  else
    doc = config_to_json(fallback.value_or(RunConfig{}));
  for (const auto& o : args.overrides) apply_override(doc, o);
  if (args.seed) {
    doc["noise"]["seed"] = *args.seed;
    doc["pcls"]["phi0"]["seed"] = *args.seed;
  }
  if (!args.out.empty()) doc["output"]["dir"] = args.out;
  if (!args.log.empty()) doc["output"]["log"] = args.log;
  RunConfig cfg = config_from_json(doc);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

/// Relative output directories are placed under $PCLS_OUTPUT_DIR when it is set.
fs::path output_dir(const RunConfig& cfg, bool from_flag) {
  fs::path dir = cfg.output.dir.empty() ? fs::path(".") : fs::path(cfg.output.dir);
  if (!from_flag && dir.is_relative()) {
    if (const char* base = std::getenv(kOutputDirEnv); base && *base) dir = fs::path(base) / dir;
  }
  return dir;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError(kExitConfig, "cannot create output directory '" + dir.string() + "': " + ec.message());
}

MeasurementSet synthesize_for(const RunConfig& cfg, const Grid& grid, const char* stage) {
  if (!cfg.phantom) throw ConfigError(std::string(stage) + ": config names no phantom");
  try {
    return synthesize(*cfg.phantom, make_source(cfg.source), Material(cfg.material), grid, cfg.newton,
                      cfg.generation_refine);
  } catch (const NewtonFailure& e) {
    throw StageError(kExitSolver, std::string(stage) + ": forward solve for the phantom failed: " + e.what());
  } catch (const SolverFailure& e) {
    throw StageError(kExitSolver, std::string(stage) + ": linear solve for the phantom failed: " + e.what());
  }
}

int do_generate(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
  const Grid grid = build_grid(cfg.dim);
  MeasurementSet set = synthesize_for(cfg, grid, "generate");
  const QuadVectorField mbar = add_noise(set.mbar, cfg.noise);
  ensure_dir(dir);
  write_field(dir / cfg.output.measurement, mbar);
  write_field(dir / cfg.output.phi_exact, set.phi_exact);
  save_config(dir / "generate.config.json", cfg);
  out << "forward Newton iterations: " << set.newton_iterations << '\n'
      << "wrote " << (dir / cfg.output.measurement).string() << '\n'
      << "wrote " << (dir / cfg.output.phi_exact).string() << '\n';
  return kExitOk;
}

struct ReconInputs {
  QuadVectorField mbar;
  std::optional<NodalField> phi_exact;
};

ReconInputs load_inputs(const RunConfig& cfg, const Grid& grid) {
  if (!cfg.measurement_path.empty()) {
    QuadVectorField mbar = read_quad_field(cfg.measurement_path);
    if (mbar.grid.dim() != cfg.dim)
      throw ConfigError("reconstruct: measurement file has dim " + std::to_string(mbar.grid.dim()) +
                        ", config asks for " + std::to_string(cfg.dim));
    std::optional<NodalField> exact;
    if (!cfg.phi_exact_path.empty()) {
      exact = read_nodal_field(cfg.phi_exact_path);
      if (exact->grid.dim() != cfg.dim) throw ConfigError("reconstruct: phi_exact file is on another grid");
    }
    return {add_noise(mbar, cfg.noise), std::move(exact)};
  }
  if (!cfg.phantom) throw ConfigError("reconstruct: config names neither input.measurement nor a phantom");
  MeasurementSet set = synthesize_for(cfg, grid, "reconstruct");
  std::optional<NodalField> exact = std::move(set.phi_exact);
  if (!cfg.phi_exact_path.empty()) exact = read_nodal_field(cfg.phi_exact_path);
  return {add_noise(set.mbar, cfg.noise), std::move(exact)};
}

void print_summary(const ReconReport& r, std::ostream& out) {
  out << "iterations: " << r.iterations << '\n' << "stop reason: " << to_string(r.stop_reason) << '\n';
  if (!r.f1_history.empty())
    out << std::setprecision(6) << "F1: " << r.f1_history.front() << " -> " << r.f1_history.back() << '\n';
  if (r.mismatch_count) out << "mismatch count: " << *r.mismatch_count << '\n';
  out << std::setprecision(3) << "wall time: " << r.wall_time.count() << " s\n";
}

int do_reconstruct(const RunConfig& cfg, const fs::path& dir, std::ostream& out,
                   const std::optional<ReconInputs>& preloaded = {}) {
  const Grid grid = build_grid(cfg.dim);
  const ReconInputs inputs = preloaded ? *preloaded : load_inputs(cfg, grid);
  ensure_dir(dir);
  save_config(dir / "reconstruct.config.json", cfg);

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (cfg.output.log == "-") {
    log = &out;
  } else if (!cfg.output.log.empty()) {
    const fs::path p = dir / cfg.output.log;
    log_file.open(p, std::ios::trunc);
    if (!log_file) throw StageError(kExitConfig, "cannot open log '" + p.string() + "'");
    log = &log_file;
  }
  ProgressCallback progress;
  if (log) progress = [log](const IterationRecord& rec, const NodalField&) { *log << record_to_json(rec).dump() << '\n'; };

  const ReconReport report = [&] {
    try {
      return run_reconstruction(inputs.mbar, make_source(cfg.source), Material(cfg.material), cfg.pcls, grid,
                                inputs.phi_exact, cfg.newton, progress);
    } catch (const ReconstructionAborted& e) {
      Json j = report_to_json(e.partial_report(), cfg);
      j["error"] = e.what();
      std::ofstream os(dir / cfg.output.report, std::ios::trunc);
      os << j.dump(2) << '\n';
      throw StageError(kExitSolver, std::string("reconstruct: ") + e.what());
    }
  }();

  write_field(dir / cfg.output.phi, report.final_phi);
  write_report(dir / cfg.output.report, report, cfg);
  print_summary(report, out);
  out << "wrote " << (dir / cfg.output.phi).string() << '\n' << "wrote " << (dir / cfg.output.report).string() << '\n';
  return report.stop_reason == StopReason::iteration_cap ? kExitIterationCap : kExitOk;
}

struct GradArgs {
  int directions = 5;
  double eps = 1e-4;
  double tol = 1e-3;
  bool flip_sign = false;
};

int do_gradcheck(const RunConfig& cfg, const GradArgs& g, std::uint64_t seed, std::ostream& out) {
  const Grid grid = build_grid(cfg.dim);
  NewtonConfig newton = cfg.newton;
  newton.rel_residual_tol = std::min(newton.rel_residual_tol, 1e-12);
  const MeasurementSet set = synthesize_for(cfg, grid, "gradcheck");

  GradCheckOptions opt;
  opt.directions = g.directions;
  opt.eps = g.eps;
  opt.tolerance = g.tol;
  opt.seed = seed;
  opt.flip_sign = g.flip_sign;
  GradCheckResult res;
  try {
    res = gradient_check(add_noise(set.mbar, cfg.noise), make_source(cfg.source), Material(cfg.material),
                         cfg.pcls.alpha, newton, opt);
  } catch (const NewtonFailure& e) {
    throw StageError(kExitSolver, std::string("gradcheck: forward solve failed: ") + e.what());
  } catch (const SolverFailure& e) {
    throw StageError(kExitSolver, std::string("gradcheck: linear solve failed: ") + e.what());
  }

  out << "dim " << cfg.dim << ", alpha " << cfg.pcls.alpha << ", eps " << g.eps << ", F " << std::setprecision(10)
      << res.F << '\n';
  out << std::left << std::setw(5) << "dir" << std::setw(24) << "finite-difference" << std::setw(24) << "adjoint"
      << std::setw(14) << "rel-error"
      << "status\n";
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    const auto& r = res.rows[k];
    out << std::left << std::setw(5) << k << std::setprecision(15) << std::setw(24) << r.finite_difference
        << std::setw(24) << r.adjoint << std::setprecision(4) << std::setw(14) << r.rel_error
        << (r.pass ? "pass" : "FAIL") << '\n';
  }
  return res.all_pass() ? kExitOk : kExitDifference;
}

int do_compare(const std::string& a_path, const std::string& b_path, std::ostream& out) {
  NodalField a = read_nodal_field(a_path);
  NodalField b = read_nodal_field(b_path);
  if (!(a.grid == b.grid))
    throw ConfigError("compare: grids differ (dim " + std::to_string(a.grid.dim()) + " vs " +
                      std::to_string(b.grid.dim()) + ")");
  const int n = compare_fields(a, b);
  out << n << '\n';
  return n == 0 ? kExitOk : kExitDifference;
}

std::string level_dir(double level) {
  std::ostringstream ss;
  ss << "noise-" << std::fixed << std::setprecision(2) << level;
  return ss.str();
}

// Runs one built-in example end to end inside `root / name`.
int run_example(const BuiltinExample& ex, const fs::path& root, std::ostream& out) {
  RunConfig cfg = ex.config;
  const fs::path dir = root / ex.name;
  out << "== " << ex.name << '\n';

  RunConfig clean = cfg;
  clean.noise.level = 0.0;
  do_generate(clean, dir, out);
  const Grid grid = build_grid(cfg.dim);
  ReconInputs inputs{read_quad_field(dir / cfg.output.measurement), read_nodal_field(dir / cfg.output.phi_exact)};

  if (ex.noise_levels.empty()) return do_reconstruct(cfg, dir, out, inputs);
  int code = kExitOk;
  for (double level : ex.noise_levels) {
    RunConfig noisy = cfg;
    noisy.noise.level = level;
    out << "-- noise level " << level << '\n';
    ReconInputs with_noise{add_noise(inputs.mbar, noisy.noise), inputs.phi_exact};
    code = std::max(code, do_reconstruct(noisy, dir / level_dir(level), out, with_noise));
  }
  return code;
}

// Maps library exceptions onto exit codes; `body` does the work.
template <class Fn>
int guarded(const std::string& stage, std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const StageError& e) {
    err << "error: " << e.what() << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    err << "error: " << stage << ": configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FieldParseError& e) {
    err << "error: " << stage << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const NewtonFailure& e) {
    err << "error: " << stage << ": forward solve failed: " << e.what() << '\n';
    return kExitSolver;
  } catch (const SolverFailure& e) {
    err << "error: " << stage << ": linear solve failed: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    err << "error: " << stage << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << stage << ": " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-phase shape reconstruction from magnetic induction data"};
  app.name("pcls");
  app.require_subcommand(1, 1);

  CommonArgs gen_args, rec_args, grad_args;
  auto* gen = app.add_subcommand("generate", "synthesize measurements and the exact level set from a phantom");
  add_common(gen, gen_args);

  auto* rec = app.add_subcommand("reconstruct", "run the level set descent and write the report and final phi");
  add_common(rec, rec_args);
  rec->add_option("--log", rec_args.log, "per-iteration JSON lines, relative to the output dir ('-' for stdout)");

  GradArgs g;
  auto* grad = app.add_subcommand("gradcheck", "compare the adjoint gradient with finite differences");
  add_common(grad, grad_args);
  grad->add_option("-n,--directions", g.directions, "number of random directions")->check(CLI::PositiveNumber);
  grad->add_option("--eps", g.eps, "finite-difference step")->check(CLI::PositiveNumber);
  grad->add_option("--tol", g.tol, "relative error bound")->check(CLI::PositiveNumber);
  grad->add_flag("--flip-sign", g.flip_sign, "negate the adjoint gradient (self-test of the checker)");

  std::string cmp_a, cmp_b;
  auto* cmp = app.add_subcommand("compare", "count nodes where two binary level sets differ");
  cmp->add_option("a", cmp_a, "first nodal field")->required();
  cmp->add_option("b", cmp_b, "second nodal field")->required();

  bool list = false;
  std::vector<std::string> only;
  std::string ex_out;
  int jobs = 1;
  auto* exs = app.add_subcommand("examples", "run the four built-in studies");
  exs->add_flag("-l,--list", list, "list the built-in examples and exit");
  exs->add_option("--only", only, "run only these examples (name or 1-4)");
  exs->add_option("-o,--out", ex_out, "root output directory");
  exs->add_option("-j,--jobs", jobs, "examples to run concurrently")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (*gen)
    return guarded("generate", err, [&] {
      const RunConfig cfg = resolve(gen_args);
      return do_generate(cfg, output_dir(cfg, !gen_args.out.empty()), out);
    });
  if (*rec)
    return guarded("reconstruct", err, [&] {
      const RunConfig cfg = resolve(rec_args);
      return do_reconstruct(cfg, output_dir(cfg, !rec_args.out.empty()), out);
    });
  if (*grad)
    return guarded("gradcheck", err, [&] {
      RunConfig fallback = find_example("1").config;
      fallback.dim = 10;
      const RunConfig cfg = resolve(grad_args, fallback);
      return do_gradcheck(cfg, g, grad_args.seed.value_or(1), out);
    });
  if (*cmp) return guarded("compare", err, [&] { return do_compare(cmp_a, cmp_b, out); });

  return guarded("examples", err, [&] {
    const auto all = builtin_examples();
    if (list) {
      for (std::size_t k = 0; k < all.size(); ++k) {
        const auto& c = all[k].config;
        out << k + 1 << "  " << all[k].name << "  dim=" << c.dim << " alpha=" << c.pcls.alpha
            << " osci_max=" << c.pcls.osci_max << " source=" << to_string(c.source.kind);
        if (!all[k].noise_levels.empty()) out << " noise-levels=" << all[k].noise_levels.size();
        out << '\n';
      }
      return static_cast<int>(kExitOk);
    }
    std::vector<const BuiltinExample*> selected;
    if (only.empty())
      for (const auto& ex : all) selected.push_back(&ex);
    else
      for (const auto& key : only) selected.push_back(&find_example(key));

    fs::path root = ex_out.empty() ? fs::path(".") : fs::path(ex_out);
    if (ex_out.empty())
      if (const char* base = std::getenv(kOutputDirEnv); base && *base) root = base;

    // Each example writes into its own directory and buffers its console output.
    std::vector<std::ostringstream> logs(selected.size());
    std::vector<int> codes(selected.size(), kExitOk);
    std::vector<std::string> errors(selected.size());
    auto work = [&](std::size_t k) {
      std::ostringstream e;
      codes[k] = guarded(selected[k]->name, e, [&] { return run_example(*selected[k], root, logs[k]); });
      errors[k] = e.str();
    };
    if (jobs <= 1) {
      for (std::size_t k = 0; k < selected.size(); ++k) {
        work(k);
        out << logs[k].str();
        err << errors[k];
      }
    } else {
      std::vector<std::thread> pool;
      std::mutex next_mutex;
      std::size_t next = 0;
      for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
          for (;;) {
            std::size_t k;
            {
              std::lock_guard<std::mutex> lock(next_mutex);
              if (next == selected.size()) return;
              k = next++;
            }
            work(k);
          }
        });
      for (auto& t : pool) t.join();
      for (std::size_t k = 0; k < selected.size(); ++k) {
        out << logs[k].str();
        err << errors[k];
      }
    }
    int code = kExitOk;
    for (int c : codes) code = std::max(code, c);
    return code;
  });
}

}  // namespace pcls
