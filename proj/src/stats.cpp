#include "waveinv/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "waveinv/io.hpp"
#include "waveinv/signal.hpp"

namespace waveinv {

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double GammaDist::stddev() const { return std::sqrt(alpha) * theta; }

void GammaDist::validate() const {
  if (!valid()) throw std::invalid_argument("gamma distribution needs alpha > 0 and theta > 0");
}

double gamma_pdf(const GammaDist& d, double x) {
  d.validate();
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (d.alpha == 1.0) return 1.0 / d.theta;
    return d.alpha < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  const double log_pdf =
      (d.alpha - 1.0) * std::log(x) - std::lgamma(d.alpha) - d.alpha * std::log(d.theta) - x / d.theta;
  return std::exp(log_pdf);
}

double gamma_cdf(const GammaDist& d, double x) {
  d.validate();
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(d.alpha, x / d.theta);
}

double gamma_inv_cdf(const GammaDist& d, double p) {
  d.validate();
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("gamma_inv_cdf: probability must lie in (0, 1)");
  return d.theta * boost::math::gamma_p_inv(d.alpha, p);
}

GammaDist gamma_fit(std::span<const double> samples) {
  if (samples.size() < 10) throw std::invalid_argument("gamma_fit: needs at least 10 samples");
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("gamma_fit: samples must be positive");
  }
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  // s = log(mean) - mean(log x), accumulated relative to the mean for accuracy.
  double s = 0.0;
  for (double x : samples) s -= std::log(x / mean);
  s /= n;
  if (!(s > 0.0)) throw NumericalError("gamma_fit: samples have no spread; shape diverges");

  double alpha = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
  for (int it = 0; it < 200; ++it) {
    const double f = std::log(alpha) - boost::math::digamma(alpha) - s;
    const double df = 1.0 / alpha - boost::math::trigamma(alpha);
    double next = alpha - f / df;
    if (!(next > 0.0)) next = 0.5 * alpha;
    const double change = std::abs(next - alpha);
    alpha = next;
    if (change <= 1e-12 * alpha) return GammaDist{alpha, mean / alpha};
  }
  throw NumericalError("gamma_fit: Newton iteration did not converge");
}

GammaDist fit_from_ranges(std::span<const double> points, std::span<const Interval> ranges, int mc_rounds, Rng& rng,
                          int per_range) {
  if (points.empty() && ranges.empty()) throw std::invalid_argument("fit_from_ranges: no data");
  if (mc_rounds < 1) throw std::invalid_argument("fit_from_ranges: needs at least one round");
  double alpha_sum = 0.0, theta_sum = 0.0;
  std::vector<double> pool;
  for (int round = 0; round < mc_rounds; ++round) {
    pool.assign(points.begin(), points.end());
    for (const auto& r : ranges) {
      for (int i = 0; i < per_range; ++i) pool.push_back(r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi));
    }
    const auto fit = gamma_fit(pool);
    alpha_sum += fit.alpha;
    theta_sum += fit.theta;
  }
  return GammaDist{alpha_sum / mc_rounds, theta_sum / mc_rounds};
}

std::string_view to_string(Parameter p) {
  switch (p) {
    case Parameter::density: return "rho";
    case Parameter::youngs_modulus: return "E";
    case Parameter::poisson_ratio: return "nu";
    case Parameter::shear_modulus: return "G";
  }
  return "unknown";
}

Parameter parse_parameter(std::string_view name) {
  if (name == "rho") return Parameter::density;
  if (name == "E") return Parameter::youngs_modulus;
  if (name == "nu") return Parameter::poisson_ratio;
  if (name == "G") return Parameter::shear_modulus;
  throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

double to_si(Parameter p, double value) {
  switch (p) {
    case Parameter::density: return value * 1e3;
    case Parameter::youngs_modulus:
    case Parameter::shear_modulus: return value * 1e9;
    case Parameter::poisson_ratio: return value;
  }
  return value;
}

const std::vector<MaterialPrior>& builtin_priors() {
  // (alpha, theta) per material for rho [g/cm^3], E [GPa], nu [1], G [GPa].
  static const std::vector<MaterialPrior> priors{
      {"PEEK", {GammaDist{1.3145e2, 1.0653e-2}, GammaDist{1.063e2, 3.7214e-2}, GammaDist{3.2965e3, 1.2158e-4},
                GammaDist{4.7092e2, 2.9832e-3}}},
      {"PA6", {GammaDist{8.3079e1, 1.4188e-2}, GammaDist{6.0458, 0.29571}, GammaDist{8.1998e1, 4.268e-3},
               GammaDist{1.5379e1, 3.3895e-2}}},
      {"PP", {GammaDist{2.5313e2, 3.605e-3}, GammaDist{1.0516e1, 0.15586}, GammaDist{5.4154e3, 7.46e-5},
              GammaDist{5.8031e1, 9.7743e-3}}},
  };
  return priors;
}

const MaterialPrior& builtin_prior(std::string_view name) {
  for (const auto& p : builtin_priors()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown material '" + std::string(name) + "'");
}

std::string priors_to_text(std::span<const MaterialPrior> priors) {
  std::ostringstream os;
  os << "material,parameter,alpha,theta\n";
  for (const auto& prior : priors) {
    for (std::size_t i = 0; i < 4; ++i) {
      os << prior.name << ',' << to_string(static_cast<Parameter>(i)) << ',' << io::format_double(prior.marginals[i].alpha)
         << ',' << io::format_double(prior.marginals[i].theta) << '\n';
    }
  }
  return os.str();
}

std::vector<MaterialPrior> parse_priors(std::string_view text) {
  std::vector<MaterialPrior> out;
  std::vector<std::array<bool, 4>> seen;
  std::istringstream is{std::string(text)};
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "material,parameter,alpha,theta") throw std::invalid_argument("priors: unexpected header");
      header = true;
      continue;
    }
    std::array<std::string, 4> f;
    std::istringstream ls(line);
    for (auto& field : f) {
      if (!std::getline(ls, field, ',')) throw std::invalid_argument("priors: malformed row '" + line + "'");
    }
    const Parameter p = parse_parameter(f[1]);
    GammaDist d{std::stod(f[2]), std::stod(f[3])};
    d.validate();
    auto it = std::find_if(out.begin(), out.end(), [&](const MaterialPrior& m) { return m.name == f[0]; });
    if (it == out.end()) {
      out.push_back(MaterialPrior{f[0], {}});
      seen.push_back({false, false, false, false});
      it = out.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - out.begin());
    it->marginals[static_cast<std::size_t>(p)] = d;
    seen[idx][static_cast<std::size_t>(p)] = true;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::all_of(seen[i].begin(), seen[i].end(), [](bool b) { return b; })) {
      throw std::invalid_argument("priors: material " + out[i].name + " lacks a marginal");
    }
  }
  return out;
}

std::string prior_checksum(const MaterialPrior& prior) {
  return io::checksum_hex(priors_to_text(std::span<const MaterialPrior>(&prior, 1)));
}

Eigen::MatrixXd lhs_candidate(std::size_t n, std::size_t m, Rng& rng) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<std::size_t> perm(n);
  for (std::size_t c = 0; c < m; ++c) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t r = 0; r < n; ++r) {
      pts(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          (static_cast<double>(perm[r]) + rng.uniform()) / static_cast<double>(n);
    }
  }
  return pts;
}

double maximin_score(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      best = std::min(best, (points.row(i) - points.row(j)).norm());
    }
  }
  return best;
}

LhsDesign lhs_sample(std::size_t n, std::size_t m, std::uint64_t seed, int restarts) {
  if (n < 2 || m < 1) throw std::invalid_argument("lhs_sample: needs n >= 2 and m >= 1");
  Rng rng(seed);
  LhsDesign best{lhs_candidate(n, m, rng), 0.0};
  best.score = maximin_score(best.points);
  for (int r = 1; r < restarts; ++r) {
    auto cand = lhs_candidate(n, m, rng);
    const double score = maximin_score(cand);
    if (score > best.score) best = LhsDesign{std::move(cand), score};
  }
  return best;
}

SampleSet apply_marginals(const Eigen::MatrixXd& unit, const MaterialPrior& prior, std::span<const Parameter> which,
                          Rng& rng) {
  if (static_cast<std::size_t>(unit.cols()) != which.size()) {
    throw std::invalid_argument("apply_marginals: column count does not match the parameter subset");
  }
  SampleSet set;
  set.columns.assign(which.begin(), which.end());
  set.prior_name = prior.name;
  set.prior_checksum = prior_checksum(prior);
  set.values.resize(unit.rows(), unit.cols());
  const auto n = static_cast<double>(unit.rows());

  for (Eigen::Index c = 0; c < unit.cols(); ++c) {
    const Parameter p = which[static_cast<std::size_t>(c)];
    const GammaDist& d = prior.marginal(p);
    for (Eigen::Index r = 0; r < unit.rows(); ++r) {
      double u = unit(r, c);
      double v = gamma_inv_cdf(d, u);
      if (p == Parameter::poisson_ratio) {
        const double lo = std::floor(u * n) / n;
        const double hi = std::min((std::floor(u * n) + 1.0) / n, kPoissonUnitLimit);
        for (int attempt = 0; (u > kPoissonUnitLimit || v >= 0.5) && attempt < 1000; ++attempt) {
          const double redrawn = lo < hi ? rng.uniform(lo, hi) : rng.uniform(0.0, kPoissonUnitLimit);
          set.redraws.push_back(RedrawEvent{static_cast<std::size_t>(r), static_cast<std::size_t>(c), u, redrawn});
          u = redrawn;
          v = gamma_inv_cdf(d, u);
        }
        if (v >= 0.5) throw NumericalError("apply_marginals: Poisson ratio prior puts no mass below 0.5");
      }
      set.values(r, c) = v;
    }
  }
  return set;
}

std::string sample_set_to_csv(const SampleSet& set) {
  std::ostringstream os;
  os << "# prior: " << set.prior_name << "\n";
  os << "# prior_checksum: " << set.prior_checksum << "\n";
  os << "# seed: " << set.seed << "\n";
  os << "# restarts: " << set.restarts << "\n";
  os << "# redraws: " << set.redraws.size() << "\n";
  for (std::size_t c = 0; c < set.columns.size(); ++c) os << (c ? "," : "") << to_string(set.columns[c]);
  os << "\n";
  for (Eigen::Index r = 0; r < set.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < set.values.cols(); ++c) os << (c ? "," : "") << io::format_double(set.values(r, c));
    os << "\n";
  }
  return os.str();
}

}  // namespace waveinv
