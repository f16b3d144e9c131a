#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "waveinv/forward.hpp"
#include "waveinv/io.hpp"
#include "waveinv/objective.hpp"
#include "waveinv/optimizer.hpp"
#include "waveinv/stats.hpp"

namespace waveinv::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Batch-level failure (nothing usable produced).
class BatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string material = "PEEK";
  std::string preset = "desk";
  ObjectiveKind objective = ObjectiveKind::autocorr_phase;
  Method optimizer = Method::modified_lm;
  int n_refs = 20;
  std::uint64_t seed = 1;
  double cutoff = 1e-6;
  std::uint64_t eval_budget = 200;
  int lhs_restarts = 100;
  double start_sigma = 1.0;  // x0 drawn within mean +- start_sigma * std
  double damping_c = 1.0;
  int grid_size = 41;
  double grid_sigma = 2.0;
  int manifold_size = 9;
  int manifold_dim = 3;
  ForwardConfig forward = ForwardConfig::desk_preset();

  void validate() const;
  ObjectiveConfig objective_config() const;
  const MaterialPrior& prior() const { return builtin_prior(material); }
  /// Canonical key = value text; round-trips through from_text.
  std::string to_text() const;
  std::string checksum() const;

  /// Unknown keys and malformed values raise ConfigError. Forward keys
  /// (length, center_frequency, packet_center, bandwidth, samples, dt)
  /// override the preset.
  static ExperimentConfig from_key_values(const io::KeyValues& kv);
  static ExperimentConfig from_text(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Prior mean of (E, nu) in SI and the fixed density.
Vector prior_mean_x(const MaterialPrior& prior);
Vector prior_std_x(const MaterialPrior& prior);
double prior_density(const MaterialPrior& prior);

struct Reference {
  std::size_t index = 0;
  MaterialParams truth;
  Vector x0;
  std::optional<Signal> signal;  // empty when the forward model failed
  std::string error;
};

struct ReferenceBundle {
  ExperimentConfig config;
  std::vector<Reference> refs;
  std::vector<RedrawEvent> redraws;

  std::size_t usable() const;
};

/// Draws start points uniformly in CDF space over mean +- k std per parameter.
Vector draw_start(const MaterialPrior& prior, double k_sigma, Rng& rng);

ReferenceBundle gen_refs(const ExperimentConfig& cfg);
/// refs.csv plus signal_###.bin (+ .cfg sidecar) in `dir`.
void write_refs(const ReferenceBundle& bundle, const std::filesystem::path& dir);
ReferenceBundle read_refs(const std::filesystem::path& dir, const ExperimentConfig& cfg);

struct RunResult {
  std::size_t ref_index = 0;
  Vector truth;
  Vector x0;
  OptTrace trace;
  std::optional<std::uint64_t> evals_to_success;
};

struct RunSummary {
  std::size_t ref_index = 0;
  bool success = false;
  std::optional<std::uint64_t> evals_to_success;
  std::uint64_t evaluations = 0;
  std::string status;
  double final_rel1 = kNaN;
  double final_rel2 = kNaN;
};

struct ErrorCurve {
  std::vector<std::uint64_t> eval;
  std::vector<double> log_mean, min, max;
};

struct BenchSummary {
  std::string material;
  std::string optimizer;
  std::string objective;
  std::vector<RunSummary> runs;

  std::size_t successes() const;
  double success_rate() const;
  /// Median over all runs with failures ranked as +infinity; NaN when no runs.
  double median_evals() const;
  /// Mean over successful runs; NaN when none succeeded.
  double mean_evals() const;
  std::map<std::uint64_t, std::size_t> histogram() const;
};

struct BenchResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;

  BenchSummary summary() const;
  /// Log-mean, min and max over runs per evaluation index; stopped runs
  /// keep their last value.
  ErrorCurve rel1_curve() const;
  ErrorCurve rel2_curve() const;
};

/// Runs the configured optimizer once per reference. Per-run failures are
/// recorded as unsuccessful; never throws for a single run.
BenchResult optimize_batch(const ExperimentConfig& cfg, const ReferenceBundle& refs);
RunResult run_reference(const ExperimentConfig& cfg, const Reference& ref);

std::string results_to_csv(const BenchResult& result);
std::string curves_to_csv(const BenchResult& result);
/// results_<material>_<optimizer>.csv, curves_..., traces/<...>_ref###.csv
void write_batch(const BenchResult& result, const std::filesystem::path& dir);
BenchSummary parse_results_csv(std::string_view text);

struct SurfaceScan {
  std::vector<double> e_axis;
  std::vector<double> nu_axis;
  Matrix values;  // rows: E index, cols: nu index
  std::vector<std::vector<bool>> flagged;
  Vector truth;
  int interior_minima = 0;
};

/// Strict 8-neighbour local minima over interior nodes; flagged nodes are
/// neither counted nor used as neighbours.
int count_interior_minima(const Matrix& values, const std::vector<std::vector<bool>>& flagged);

/// Half squared residual norm on a size x size grid spanning
/// truth +- k std of the (E, nu) marginals, reference simulated at truth.
SurfaceScan surface_scan(const ExperimentConfig& cfg, const Vector& truth);
std::string surface_to_csv(const SurfaceScan& scan, const ExperimentConfig& cfg);

struct PcaProjection {
  Matrix coords;             // N x components
  Vector explained_variance;  // per component, non-increasing
  double reconstruction_error = 0.0;  // relative Frobenius norm
  int components = 0;
  bool degenerate = false;  // fewer than target_dim directions
};

/// Dual PCA on the Gram matrix of the centered rows of `outputs`.
PcaProjection pca_project(const Matrix& outputs, int target_dim);

struct ManifoldExport {
  PcaProjection projection;
  std::vector<double> e;
  std::vector<double> nu;
  std::vector<int> e_index;
  std::vector<int> nu_index;
};

/// Projects the selected feature of forward outputs on a manifold_size^2
/// grid over the +- grid_sigma box.
ManifoldExport manifold_export(const ExperimentConfig& cfg);
std::string manifold_to_csv(const ManifoldExport& m, const ExperimentConfig& cfg);

/// histogram.csv, success_table.csv and summary.txt.
void write_report(const std::vector<BenchSummary>& results, const std::filesystem::path& dir);
std::string histogram_csv(const std::vector<BenchSummary>& results);
std::string success_table_csv(const std::vector<BenchSummary>& results);
std::string summary_text(const std::vector<BenchSummary>& results);

}  // namespace waveinv::harness
