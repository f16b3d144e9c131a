#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "waveinv/harness.hpp"

namespace fs = std::filesystem;
using namespace waveinv;
using namespace waveinv::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBatch = 3;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ExperimentConfig load(const GlobalOptions& g, const std::string& objective_override = "") {
  io::KeyValues kv;
  if (!g.config.empty()) {
    try {
      kv = io::read_key_values(g.config);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  if (!objective_override.empty()) kv["objective"] = objective_override;
  return ExperimentConfig::from_key_values(kv);
}

int cmd_gen_refs(const GlobalOptions& g) {
  const auto cfg = load(g);
  const auto bundle = gen_refs(cfg);
  write_refs(bundle, g.out);
  for (const auto& r : bundle.refs) {
    if (!r.signal) std::cerr << "reference " << r.index << " failed: " << r.error << "\n";
  }
  std::cout << "wrote " << bundle.usable() << "/" << bundle.refs.size() << " references to " << g.out << "\n";
  return bundle.usable() == 0 ? kExitBatch : 0;
}

int cmd_optimize(const GlobalOptions& g, const std::string& refs_dir) {
  const auto cfg = load(g);
  const auto refs = read_refs(refs_dir.empty() ? fs::path(g.out) : fs::path(refs_dir), cfg);
  if (refs.refs.empty()) throw BatchError("reference bundle is empty");
  const auto result = optimize_batch(cfg, refs);
  write_batch(result, g.out);
  const auto s = result.summary();
  std::cout << cfg.material << " " << s.optimizer << ": " << s.successes() << "/" << s.runs.size()
            << " successful, median evals " << io::format_double(s.median_evals()) << "\n";
  const bool all_failed = std::all_of(result.runs.begin(), result.runs.end(),
                                      [](const RunResult& r) { return r.trace.status == Status::error; });
  return all_failed ? kExitBatch : 0;
}

int cmd_surface(const GlobalOptions& g, const std::string& objective) {
  const auto cfg = load(g, objective);
  const auto scan = surface_scan(cfg, prior_mean_x(cfg.prior()));
  fs::create_directories(g.out);
  const auto path = fs::path(g.out) / ("surface_" + cfg.material + "_" + std::string(to_string(cfg.objective)) + ".csv");
  std::ofstream(path) << surface_to_csv(scan, cfg);
  std::cout << "interior_minima: " << scan.interior_minima << "\n";
  return 0;
}

int cmd_manifold(const GlobalOptions& g, const std::string& objective) {
  const auto cfg = load(g, objective);
  const auto m = manifold_export(cfg);
  fs::create_directories(g.out);
  const auto path =
      fs::path(g.out) / ("manifold_" + cfg.material + "_" + std::string(to_string(cfg.objective)) + ".csv");
  std::ofstream(path) << manifold_to_csv(m, cfg);
  std::cout << "components: " << m.projection.components
            << " reconstruction_error: " << io::format_double(m.projection.reconstruction_error) << "\n";
  return 0;
}

int cmd_report(const GlobalOptions& g, std::vector<std::string> dirs) {
  if (dirs.empty()) dirs.push_back(g.out);
  std::vector<fs::path> files;
  for (const auto& d : dirs) {
    if (!fs::is_directory(d)) throw BatchError("no results directory " + d);
    for (const auto& entry : fs::directory_iterator(d)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("results_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw BatchError("no results_*.csv files found");
  std::vector<BenchSummary> summaries;
  for (const auto& f : files) summaries.push_back(parse_results_csv(io::read_text(f)));
  write_report(summaries, g.out);
  std::cout << summary_text(summaries);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Material parameter inversion benchmarks for a waveguide surrogate"};
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Experiment config (flat key = value)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", g.out, "Output directory");
  app.fallthrough();

  auto* gen = app.add_subcommand("gen-refs", "Simulate reference measurements from LHS prior draws");
  auto* opt = app.add_subcommand("optimize", "Run the configured optimizer on every reference");
  std::string refs_dir;
  opt->add_option("--refs", refs_dir, "Reference bundle directory (default: --out)");
  auto* surf = app.add_subcommand("surface", "Scan the objective on a grid around the prior mean");
  std::string surf_objective;
  surf->add_option("--objective", surf_objective, "Override the config objective");
  auto* man = app.add_subcommand("manifold", "PCA projection of forward outputs over a parameter grid");
  std::string man_objective;
  man->add_option("--objective", man_objective, "Override the config objective");
  auto* rep = app.add_subcommand("report", "Aggregate results_*.csv files into summary files");
  std::vector<std::string> result_dirs;
  rep->add_option("--results", result_dirs, "Directories holding results_*.csv (default: --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*gen) return cmd_gen_refs(g);
    if (*opt) return cmd_optimize(g, refs_dir);
    if (*surf) return cmd_surface(g, surf_objective);
    if (*man) return cmd_manifold(g, man_objective);
    if (*rep) return cmd_report(g, result_dirs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBatch;
  }
  return 0;
}
