#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace waveinv {

/// Seeded random source. Uniform draws are built from raw 64-bit output so
/// sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream index (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct GammaDist {
  double alpha = 1.0;  // shape
  double theta = 1.0;  // scale

  double mean() const { return alpha * theta; }
  double variance() const { return alpha * theta * theta; }
  double stddev() const;
  bool valid() const { return alpha > 0.0 && theta > 0.0; }
  void validate() const;
};

/// x^(alpha-1) / (Gamma(alpha) theta^alpha) exp(-x / theta); 0 for x < 0.
double gamma_pdf(const GammaDist& d, double x);
double gamma_cdf(const GammaDist& d, double x);
/// Quantile for p in (0, 1); throws std::invalid_argument otherwise.
double gamma_inv_cdf(const GammaDist& d, double p);

/// Maximum-likelihood fit: Newton iteration on log(alpha) - digamma(alpha) = s
/// with s = log(mean) - mean(log x), then theta = mean / alpha.
/// Requires at least 10 strictly positive samples with nonzero spread.
GammaDist gamma_fit(std::span<const double> samples);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Monte Carlo fit from literature data: each round pools the points with
/// `per_range` uniform draws from every range, fits, and the returned
/// (alpha, theta) are the averages over all rounds.
GammaDist fit_from_ranges(std::span<const double> points, std::span<const Interval> ranges, int mc_rounds, Rng& rng,
                          int per_range = 100);

enum class Parameter { density, youngs_modulus, poisson_ratio, shear_modulus };
std::string_view to_string(Parameter p);
Parameter parse_parameter(std::string_view name);

/// Converts a value from prior units (g/cm^3, GPa, 1, GPa) to SI.
double to_si(Parameter p, double value);

struct MaterialPrior {
  std::string name;
  std::array<GammaDist, 4> marginals;  // indexed by Parameter

  const GammaDist& marginal(Parameter p) const { return marginals[static_cast<std::size_t>(p)]; }
};

/// Embedded priors for PEEK, PA6 and PP.
const std::vector<MaterialPrior>& builtin_priors();
const MaterialPrior& builtin_prior(std::string_view name);

/// Prior table as CSV: material,parameter,alpha,theta.
std::string priors_to_text(std::span<const MaterialPrior> priors);
std::vector<MaterialPrior> parse_priors(std::string_view text);
std::string prior_checksum(const MaterialPrior& prior);

struct LhsDesign {
  Eigen::MatrixXd points;  // n x m in (0, 1)
  double score = 0.0;      // minimum pairwise distance
};

Eigen::MatrixXd lhs_candidate(std::size_t n, std::size_t m, Rng& rng);
double maximin_score(const Eigen::MatrixXd& points);
/// Best of `restarts` random Latin hypercubes under the maximin criterion.
LhsDesign lhs_sample(std::size_t n, std::size_t m, std::uint64_t seed, int restarts = 100);

/// Unit samples above this value in the Poisson column are redrawn.
inline constexpr double kPoissonUnitLimit = 0.99974;

struct RedrawEvent {
  std::size_t row = 0;
  std::size_t column = 0;
  double old_unit = 0.0;
  double new_unit = 0.0;
};

struct SampleSet {
  Eigen::MatrixXd values;  // prior units
  std::vector<Parameter> columns;
  std::string prior_name;
  std::string prior_checksum;
  std::uint64_t seed = 0;
  int restarts = 0;
  std::vector<RedrawEvent> redraws;
};

/// Maps unit samples through the inverse CDFs of the selected marginals.
/// Poisson cells with unit > kPoissonUnitLimit or a mapped value >= 0.5 are
/// redrawn inside their stratum and logged.
SampleSet apply_marginals(const Eigen::MatrixXd& unit, const MaterialPrior& prior, std::span<const Parameter> which,
                          Rng& rng);

/// CSV with a provenance comment header.
std::string sample_set_to_csv(const SampleSet& set);

}  // namespace waveinv
