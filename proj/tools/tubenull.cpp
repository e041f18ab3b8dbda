// tubenull <kind> --config <path> [--seed S] [--out DIR]
//
// Exit status: 0 ok, 1 a checked property failed, 2 configuration or runtime error.
// Errors are also printed to stderr as a one-line JSON object.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tubenull/experiment.hpp"

namespace {

int fail(const std::string& type, const std::string& message, const std::string& out_dir = {}) {
  tubenull::json err{{"error", type}, {"message", message}};
  std::cerr << err.dump() << '\n';
  if (!out_dir.empty()) {
    try {
      tubenull::write_atomic(std::filesystem::path(out_dir) / "error.json", err.dump(2) + "\n");
    } catch (...) {
    }
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random fractal construction and tube/curve statistics"};
  std::string kind, config_path, out;
  std::uint64_t seed = 0;
  app.add_option("kind", kind, "build | lines | convex | tubes | fibers | report")->required();
  app.add_option("--config", config_path, "TOML or JSON experiment file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the master seed");
  app.add_option("--out", out, "output directory (default: the config's `out`)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what());
  }

  tubenull::ValidatedConfig vc;
  try {
    vc = tubenull::validate_config(tubenull::read_file(config_path));
  } catch (const tubenull::config_error& e) {
    return fail("config", e.what(), out);
  } catch (const std::exception& e) {
    return fail("config", e.what(), out);
  }
  auto& cfg = vc.config;
  const auto parsed = tubenull::parse_kind(kind);
  if (!parsed) return fail("usage", "unknown experiment kind '" + kind + "'");
  cfg.kind = *parsed;
  if (*seed_opt) cfg.seed = seed;
  if (!out.empty()) cfg.out = out;
  for (const auto& w : vc.warnings) std::cerr << "warning: " << w << '\n';

  try {
    const auto res = tubenull::run_experiment(cfg, cfg.out);
    for (const auto& f : res.files) std::cout << (res.dir / f).string() << '\n';
    if (cfg.kind != tubenull::ExperimentKind::report) {
      for (const auto& [name, ok] : res.summary["properties"].items())
        std::cout << (ok.get<bool>() ? "pass " : "FAIL ") << name << '\n';
    }
    return res.status;
  } catch (const tubenull::report_error& e) {
    tubenull::json err{{"error", "report"}, {"message", e.what()}, {"missing", e.missing()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const tubenull::cardinality_exceeded& e) {
    return fail("cardinality", e.what(), cfg.out);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), cfg.out);
  }
}
