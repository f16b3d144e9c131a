#include "waveinv/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "waveinv/inversion.hpp"

namespace waveinv::harness {
namespace fs = std::filesystem;
using io::format_double;

namespace {

constexpr std::array<Parameter, 2> kInverted{Parameter::youngs_modulus, Parameter::poisson_ratio};

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("config: '" + key + "' expects an integer, got '" + value + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || !std::isfinite(out)) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

// Decimal rendering that always shows a fractional part ("0.0", "1.0").
std::string format_rate(double v) {
  auto s = format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string file_stem(const std::string& material, const std::string& optimizer) {
  return material + "_" + optimizer;
}

std::string three_digits(std::size_t i) {
  std::string s = std::to_string(i);
  return std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw BatchError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw BatchError("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Vector material_x(const MaterialParams& m) { return Vector{{m.youngs_modulus, m.poisson_ratio}}; }

double value_at(const OptTrace& trace, std::uint64_t eval, bool rel1) {
  double v = kNaN;
  for (const auto& r : trace.records) {
    if (r.eval_count > eval) break;
    v = rel1 ? r.rel1 : r.rel2;
  }
  return v;
}

ErrorCurve make_curve(const std::vector<RunResult>& runs, bool rel1) {
  ErrorCurve c;
  std::uint64_t last = 0;
  for (const auto& r : runs) last = std::max(last, r.trace.evaluations());
  constexpr double floor = std::numeric_limits<double>::min();
  for (std::uint64_t e = 1; e <= last; ++e) {
    double log_sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    int count = 0;
    for (const auto& r : runs) {
      const double v = value_at(r.trace, e, rel1);
      if (!std::isfinite(v)) continue;
      log_sum += std::log(std::max(v, floor));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ++count;
    }
    if (count == 0) continue;
    c.eval.push_back(e);
    c.log_mean.push_back(std::exp(log_sum / count));
    c.min.push_back(lo);
    c.max.push_back(hi);
  }
  return c;
}

std::string series_name(const BenchSummary& s) { return s.material + "/" + s.optimizer; }

}  // namespace

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  try {
    (void)builtin_prior(material);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(cutoff > 0.0)) throw ConfigError("config: cutoff must be positive");
  if (n_refs < 1) throw ConfigError("config: n_refs must be at least 1");
  if (eval_budget < 1) throw ConfigError("config: eval_budget must be at least 1");
  if (lhs_restarts < 1) throw ConfigError("config: lhs_restarts must be at least 1");
  if (!(start_sigma > 0.0)) throw ConfigError("config: start_sigma must be positive");
  if (!(damping_c >= 1.0 && damping_c <= 10.0)) throw ConfigError("config: damping_c must lie in [1, 10]");
  if (grid_size < 3) throw ConfigError("config: grid_size must be at least 3");
  if (!(grid_sigma > 0.0)) throw ConfigError("config: grid_sigma must be positive");
  if (manifold_dim < 1) throw ConfigError("config: manifold_dim must be at least 1");
  if (manifold_size < 2 || manifold_size * manifold_size < manifold_dim + 1) {
    throw ConfigError("config: manifold grid too small for the target dimension");
  }
  try {
    forward.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

ObjectiveConfig ExperimentConfig::objective_config() const { return objective_for(forward, objective, damping_c); }

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << "material = " << material << "\n"
     << "preset = " << preset << "\n"
     << "objective = " << to_string(objective) << "\n"
     << "optimizer = " << to_string(optimizer) << "\n"
     << "n_refs = " << n_refs << "\n"
     << "seed = " << seed << "\n"
     << "cutoff = " << format_double(cutoff) << "\n"
     << "eval_budget = " << eval_budget << "\n"
     << "lhs_restarts = " << lhs_restarts << "\n"
     << "start_sigma = " << format_double(start_sigma) << "\n"
     << "damping_c = " << format_double(damping_c) << "\n"
     << "grid_size = " << grid_size << "\n"
     << "grid_sigma = " << format_double(grid_sigma) << "\n"
     << "manifold_size = " << manifold_size << "\n"
     << "manifold_dim = " << manifold_dim << "\n"
     << "length = " << format_double(forward.length) << "\n"
     << "center_frequency = " << format_double(forward.center_frequency) << "\n"
     << "packet_center = " << format_double(forward.packet_center) << "\n"
     << "bandwidth = " << format_double(forward.bandwidth) << "\n"
     << "samples = " << forward.samples << "\n"
     << "dt = " << format_double(forward.dt) << "\n";
  return os.str();
}

std::string ExperimentConfig::checksum() const { return io::checksum_hex(to_text()); }

ExperimentConfig ExperimentConfig::from_key_values(const io::KeyValues& kv) {
  static const std::set<std::string> known{
      "material",     "preset",    "objective", "optimizer",     "n_refs",       "seed",
      "cutoff",       "eval_budget", "lhs_restarts", "start_sigma", "damping_c",  "grid_size",
      "grid_sigma",   "manifold_size", "manifold_dim", "length",   "center_frequency", "packet_center",
      "bandwidth",    "samples",   "dt"};
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
  }
  ExperimentConfig c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  try {
    if (auto v = get("preset")) {
      c.preset = *v;
      c.forward = ForwardConfig::preset(*v);
    }
    if (auto v = get("objective")) c.objective = parse_objective_kind(*v);
    if (auto v = get("optimizer")) c.optimizer = parse_method(*v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (auto v = get("material")) c.material = *v;
  if (auto v = get("n_refs")) c.n_refs = parse_integer<int>("n_refs", *v);
  if (auto v = get("seed")) c.seed = parse_integer<std::uint64_t>("seed", *v);
  if (auto v = get("cutoff")) c.cutoff = parse_real("cutoff", *v);
  if (auto v = get("eval_budget")) c.eval_budget = parse_integer<std::uint64_t>("eval_budget", *v);
  if (auto v = get("lhs_restarts")) c.lhs_restarts = parse_integer<int>("lhs_restarts", *v);
  if (auto v = get("start_sigma")) c.start_sigma = parse_real("start_sigma", *v);
  if (auto v = get("damping_c")) c.damping_c = parse_real("damping_c", *v);
  if (auto v = get("grid_size")) c.grid_size = parse_integer<int>("grid_size", *v);
  if (auto v = get("grid_sigma")) c.grid_sigma = parse_real("grid_sigma", *v);
  if (auto v = get("manifold_size")) c.manifold_size = parse_integer<int>("manifold_size", *v);
  if (auto v = get("manifold_dim")) c.manifold_dim = parse_integer<int>("manifold_dim", *v);
  if (auto v = get("length")) c.forward.length = parse_real("length", *v);
  if (auto v = get("center_frequency")) c.forward.center_frequency = parse_real("center_frequency", *v);
  if (auto v = get("packet_center")) c.forward.packet_center = parse_real("packet_center", *v);
  if (auto v = get("bandwidth")) c.forward.bandwidth = parse_real("bandwidth", *v);
  if (auto v = get("samples")) c.forward.samples = parse_integer<std::size_t>("samples", *v);
  if (auto v = get("dt")) c.forward.dt = parse_real("dt", *v);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_text(std::string_view text) {
  try {
    return from_key_values(io::parse_key_values(text));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return from_text(text);
}

// ---------------------------------------------------------------- references

Vector prior_mean_x(const MaterialPrior& prior) {
  return Vector{{to_si(Parameter::youngs_modulus, prior.marginal(Parameter::youngs_modulus).mean()),
                 prior.marginal(Parameter::poisson_ratio).mean()}};
}

Vector prior_std_x(const MaterialPrior& prior) {
  return Vector{{to_si(Parameter::youngs_modulus, prior.marginal(Parameter::youngs_modulus).stddev()),
                 prior.marginal(Parameter::poisson_ratio).stddev()}};
}

double prior_density(const MaterialPrior& prior) {
  return to_si(Parameter::density, prior.marginal(Parameter::density).mean());
}

std::size_t ReferenceBundle::usable() const {
  return static_cast<std::size_t>(
      std::count_if(refs.begin(), refs.end(), [](const Reference& r) { return r.signal.has_value(); }));
}

Vector draw_start(const MaterialPrior& prior, double k_sigma, Rng& rng) {
  Vector x(2);
  for (std::size_t i = 0; i < kInverted.size(); ++i) {
    const GammaDist& d = prior.marginal(kInverted[i]);
    const double lo = std::max(d.mean() - k_sigma * d.stddev(), 0.0);
    const double hi = d.mean() + k_sigma * d.stddev();
    const double p = rng.uniform(gamma_cdf(d, lo), gamma_cdf(d, hi));
    x[static_cast<Eigen::Index>(i)] = to_si(kInverted[i], gamma_inv_cdf(d, p));
  }
  return x;
}

ReferenceBundle gen_refs(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& prior = cfg.prior();
  const auto n = static_cast<std::size_t>(cfg.n_refs);

  Eigen::MatrixXd unit;
  if (n >= 2) {
    unit = lhs_sample(n, kInverted.size(), derive_seed(cfg.seed, 0), cfg.lhs_restarts).points;
  } else {
    Rng single(derive_seed(cfg.seed, 0));
    unit = lhs_candidate(1, kInverted.size(), single);
  }
  Rng redraw_rng(derive_seed(cfg.seed, 1));
  SampleSet set = apply_marginals(unit, prior, kInverted, redraw_rng);

  ReferenceBundle bundle{cfg, {}, set.redraws};
  const double rho = prior_density(prior);
  WaveguideModel model(cfg.forward);
  for (std::size_t i = 0; i < n; ++i) {
    Reference ref;
    ref.index = i;
    ref.truth = MaterialParams{to_si(Parameter::youngs_modulus, set.values(static_cast<Eigen::Index>(i), 0)),
                               set.values(static_cast<Eigen::Index>(i), 1), rho};
    Rng start_rng(derive_seed(cfg.seed, 1000 + i));
    ref.x0 = draw_start(prior, cfg.start_sigma, start_rng);
    try {
      ref.signal = model.response(ref.truth).signal;
    } catch (const std::exception& e) {
      ref.error = e.what();
    }
    bundle.refs.push_back(std::move(ref));
  }
  return bundle;
}

void write_refs(const ReferenceBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& cfg = bundle.config;
  std::ostringstream os;
  os << "# config_checksum: " << cfg.checksum() << "\n"
     << "# prior_checksum: " << prior_checksum(cfg.prior()) << "\n"
     << "# material: " << cfg.material << "\n"
     << "# seed: " << cfg.seed << "\n"
     << "# lhs_restarts: " << cfg.lhs_restarts << "\n"
     << "# redraws: " << bundle.redraws.size() << "\n";
  for (const auto& r : bundle.redraws) {
    os << "# redraw: row " << r.row << " column " << r.column << " unit " << format_double(r.old_unit) << " -> "
       << format_double(r.new_unit) << "\n";
  }
  os << "ref,E_true,nu_true,rho,E0,nu0,signal_file,signal_checksum,error\n";
  for (const auto& ref : bundle.refs) {
    std::string file, sum;
    if (ref.signal) {
      file = "signal_" + three_digits(ref.index) + ".bin";
      io::write_signal_binary(dir / file, *ref.signal);
      sum = io::checksum_hex(io::read_text(dir / file));
    }
    std::string err = ref.error;
    std::replace(err.begin(), err.end(), ',', ';');
    os << ref.index << ',' << format_double(ref.truth.youngs_modulus) << ',' << format_double(ref.truth.poisson_ratio)
       << ',' << format_double(ref.truth.density) << ',' << format_double(ref.x0[0]) << ','
       << format_double(ref.x0[1]) << ',' << file << ',' << sum << ',' << err << "\n";
  }
  write_file(dir / "refs.csv", os.str());
  write_file(dir / "experiment.cfg", cfg.to_text());
}

ReferenceBundle read_refs(const fs::path& dir, const ExperimentConfig& cfg) {
  const auto path = dir / "refs.csv";
  if (!fs::exists(path)) throw BatchError("no reference bundle at " + path.string());
  std::istringstream is(io::read_text(path));
  ReferenceBundle bundle{cfg, {}, {}};
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# material: ";
      if (line.rfind(tag, 0) == 0 && line.substr(tag.size()) != cfg.material) {
        throw ConfigError("reference bundle is for material " + line.substr(tag.size()) + ", config asks for " +
                          cfg.material);
      }
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 9) throw BatchError("malformed refs.csv row: " + line);
    Reference ref;
    ref.index = std::stoul(f[0]);
    ref.truth = MaterialParams{std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
    ref.x0 = Vector{{std::stod(f[4]), std::stod(f[5])}};
    ref.error = f[8];
    if (!f[6].empty()) {
      if (io::checksum_hex(io::read_text(dir / f[6])) != f[7]) throw BatchError("checksum mismatch for " + f[6]);
      Signal s = io::read_signal_binary(dir / f[6]);
      if (s.size() != cfg.forward.samples || s.dt() != cfg.forward.dt) {
        throw ConfigError("reference " + f[6] + " does not match the configured sampling grid");
      }
      ref.signal = std::move(s);
    }
    bundle.refs.push_back(std::move(ref));
  }
  return bundle;
}

// ---------------------------------------------------------------- batch

RunResult run_reference(const ExperimentConfig& cfg, const Reference& ref) {
  RunResult out;
  out.ref_index = ref.index;
  out.truth = material_x(ref.truth);
  out.x0 = ref.x0;
  if (!ref.signal) {
    out.trace.status = Status::error;
    out.trace.message = ref.error.empty() ? "reference signal unavailable" : ref.error;
    return out;
  }
  try {
    WaveguideInversion inv(cfg.forward, cfg.objective_config(), *ref.signal, ref.truth.density);
    OptimizerOptions opts;
    opts.method = cfg.optimizer;
    opts.max_evaluations = cfg.eval_budget;
    opts.max_iterations = static_cast<int>(std::min<std::uint64_t>(cfg.eval_budget, 1000000));
    opts.ground_truth = out.truth;
    opts.success_cutoff = cfg.cutoff;
    out.trace = optimize(inv.problem(), ref.x0, opts);
  } catch (const std::exception& e) {
    out.trace.status = Status::error;
    out.trace.message = e.what();
  }
  const auto hit = out.trace.evals_to_success(cfg.cutoff);
  if (hit && *hit <= cfg.eval_budget) out.evals_to_success = hit;
  return out;
}

BenchResult optimize_batch(const ExperimentConfig& cfg, const ReferenceBundle& refs) {
  cfg.validate();
  BenchResult result{cfg, {}};
  result.runs.reserve(refs.refs.size());
  for (const auto& ref : refs.refs) result.runs.push_back(run_reference(cfg, ref));
  return result;
}

std::size_t BenchSummary::successes() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RunSummary& r) { return r.success; }));
}

double BenchSummary::success_rate() const {
  return runs.empty() ? 0.0 : static_cast<double>(successes()) / static_cast<double>(runs.size());
}

double BenchSummary::median_evals() const {
  if (runs.empty()) return kNaN;
  std::vector<double> v;
  for (const auto& r : runs) {
    v.push_back(r.evals_to_success ? static_cast<double>(*r.evals_to_success) : std::numeric_limits<double>::infinity());
  }
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double BenchSummary::mean_evals() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.evals_to_success) {
      sum += static_cast<double>(*r.evals_to_success);
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : kNaN;
}

std::map<std::uint64_t, std::size_t> BenchSummary::histogram() const {
  std::map<std::uint64_t, std::size_t> h;
  for (const auto& r : runs) {
    if (r.evals_to_success) ++h[*r.evals_to_success];
  }
  return h;
}

BenchSummary BenchResult::summary() const {
  BenchSummary s{config.material, std::string(to_string(config.optimizer)), std::string(to_string(config.objective)),
                 {}};
  for (const auto& run : runs) {
    RunSummary r;
    r.ref_index = run.ref_index;
    r.success = run.evals_to_success.has_value();
    r.evals_to_success = run.evals_to_success;
    r.evaluations = run.trace.evaluations();
    r.status = std::string(to_string(run.trace.status));
    if (!run.trace.records.empty()) {
      r.final_rel1 = run.trace.records.back().rel1;
      r.final_rel2 = run.trace.records.back().rel2;
    }
    s.runs.push_back(std::move(r));
  }
  return s;
}

ErrorCurve BenchResult::rel1_curve() const { return make_curve(runs, true); }
ErrorCurve BenchResult::rel2_curve() const { return make_curve(runs, false); }

std::string results_to_csv(const BenchResult& result) {
  const auto& cfg = result.config;
  std::ostringstream os;
  os << "# config_checksum: " << cfg.checksum() << "\n"
     << "# material: " << cfg.material << "\n"
     << "# optimizer: " << to_string(cfg.optimizer) << "\n"
     << "# objective: " << to_string(cfg.objective) << "\n"
     << "# cutoff: " << format_double(cfg.cutoff) << "\n"
     << "# eval_budget: " << cfg.eval_budget << "\n";
  os << "ref,success,evals_to_success,evaluations,status,final_rel1,final_rel2,E_true,nu_true,E0,nu0,E_final,nu_final\n";
  for (const auto& run : result.runs) {
    const auto& t = run.trace;
    const Vector xf = t.records.empty() ? run.x0 : t.records.back().x;
    os << run.ref_index << ',' << (run.evals_to_success ? 1 : 0) << ','
       << (run.evals_to_success ? std::to_string(*run.evals_to_success) : std::string()) << ',' << t.evaluations()
       << ',' << to_string(t.status) << ',' << format_double(t.records.empty() ? kNaN : t.records.back().rel1) << ','
       << format_double(t.records.empty() ? kNaN : t.records.back().rel2) << ',' << format_double(run.truth[0]) << ','
       << format_double(run.truth[1]) << ',' << format_double(run.x0[0]) << ',' << format_double(run.x0[1]) << ','
       << format_double(xf[0]) << ',' << format_double(xf[1]) << "\n";
  }
  return os.str();
}

std::string curves_to_csv(const BenchResult& result) {
  const auto c1 = result.rel1_curve();
  const auto c2 = result.rel2_curve();
  std::ostringstream os;
  os << "# config_checksum: " << result.config.checksum() << "\n";
  os << "eval,rel1_logmean,rel1_min,rel1_max,rel2_logmean,rel2_min,rel2_max\n";
  for (std::size_t i = 0; i < c1.eval.size(); ++i) {
    os << c1.eval[i] << ',' << format_double(c1.log_mean[i]) << ',' << format_double(c1.min[i]) << ','
       << format_double(c1.max[i]);
    if (i < c2.eval.size() && c2.eval[i] == c1.eval[i]) {
      os << ',' << format_double(c2.log_mean[i]) << ',' << format_double(c2.min[i]) << ','
         << format_double(c2.max[i]);
    } else {
      os << ",nan,nan,nan";
    }
    os << "\n";
  }
  return os.str();
}

void write_batch(const BenchResult& result, const fs::path& dir) {
  const auto stem = file_stem(result.config.material, std::string(to_string(result.config.optimizer)));
  fs::create_directories(dir / "traces");
  write_file(dir / ("results_" + stem + ".csv"), results_to_csv(result));
  write_file(dir / ("curves_" + stem + ".csv"), curves_to_csv(result));
  for (const auto& run : result.runs) {
    std::string text = "# config_checksum: " + result.config.checksum() + "\n";
    if (!run.trace.message.empty()) text += "# message: " + run.trace.message + "\n";
    text += trace_to_csv(run.trace);
    write_file(dir / "traces" / (stem + "_ref" + three_digits(run.ref_index) + ".csv"), text);
  }
}

BenchSummary parse_results_csv(std::string_view text) {
  BenchSummary s;
  std::istringstream is{std::string(text)};
  std::string line;
  bool header = false;
  auto tag = [&](const char* key, std::string& dst) {
    const std::string prefix = std::string("# ") + key + ": ";
    if (line.rfind(prefix, 0) == 0) dst = line.substr(prefix.size());
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      tag("material", s.material);
      tag("optimizer", s.optimizer);
      tag("objective", s.objective);
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 13) throw BatchError("malformed results row: " + line);
    RunSummary r;
    r.ref_index = std::stoul(f[0]);
    r.success = f[1] == "1";
    if (!f[2].empty()) r.evals_to_success = std::stoull(f[2]);
    r.evaluations = std::stoull(f[3]);
    r.status = f[4];
    r.final_rel1 = std::stod(f[5]);
    r.final_rel2 = std::stod(f[6]);
    s.runs.push_back(std::move(r));
  }
  if (s.material.empty() || s.optimizer.empty()) throw BatchError("results file lacks material/optimizer tags");
  return s;
}

// ---------------------------------------------------------------- surface

int count_interior_minima(const Matrix& values, const std::vector<std::vector<bool>>& flagged) {
  auto bad = [&](Eigen::Index i, Eigen::Index j) {
    return (!flagged.empty() && flagged[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) ||
           !std::isfinite(values(i, j));
  };
  int count = 0;
  for (Eigen::Index i = 1; i + 1 < values.rows(); ++i) {
    for (Eigen::Index j = 1; j + 1 < values.cols(); ++j) {
      if (bad(i, j)) continue;
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di == 0 && dj == 0) || bad(i + di, j + dj)) continue;
          if (!(values(i, j) < values(i + di, j + dj))) {
            minimum = false;
            break;
          }
        }
      }
      count += minimum ? 1 : 0;
    }
  }
  return count;
}

SurfaceScan surface_scan(const ExperimentConfig& cfg, const Vector& truth) {
  cfg.validate();
  const auto& prior = cfg.prior();
  const double rho = prior_density(prior);
  const Vector sd = prior_std_x(prior);
  const int n = cfg.grid_size;

  SurfaceScan scan;
  scan.truth = truth;
  for (int i = 0; i < n; ++i) {
    const double t = -1.0 + 2.0 * i / (n - 1);
    scan.e_axis.push_back(truth[0] + cfg.grid_sigma * sd[0] * t);
    scan.nu_axis.push_back(truth[1] + cfg.grid_sigma * sd[1] * t);
  }
  if (n % 2 == 1) {
    scan.e_axis[static_cast<std::size_t>(n / 2)] = truth[0];
    scan.nu_axis[static_cast<std::size_t>(n / 2)] = truth[1];
  }

  WaveguideModel ref_model(cfg.forward);
  const Signal reference = ref_model.response(MaterialParams{truth[0], truth[1], rho}).signal;
  WaveguideInversion inv(cfg.forward, cfg.objective_config(), reference, rho);

  scan.values = Matrix::Constant(n, n, kNaN);
  scan.flagged.assign(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vector x{{scan.e_axis[static_cast<std::size_t>(i)], scan.nu_axis[static_cast<std::size_t>(j)]}};
      try {
        scan.values(i, j) = inv.objective(x);
      } catch (const std::exception&) {
        scan.flagged[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
      }
    }
  }
  scan.interior_minima = count_interior_minima(scan.values, scan.flagged);
  return scan;
}

std::string surface_to_csv(const SurfaceScan& scan, const ExperimentConfig& cfg) {
  std::size_t flagged = 0;
  for (const auto& row : scan.flagged) flagged += static_cast<std::size_t>(std::count(row.begin(), row.end(), true));
  std::ostringstream os;
  os << "# config_checksum: " << cfg.checksum() << "\n"
     << "# material: " << cfg.material << "\n"
     << "# objective: " << to_string(cfg.objective) << "\n"
     << "# truth_E: " << format_double(scan.truth[0]) << "\n"
     << "# truth_nu: " << format_double(scan.truth[1]) << "\n"
     << "# interior_minima: " << scan.interior_minima << "\n"
     << "# flagged_nodes: " << flagged << "\n";
  os << "E,nu,J,flagged\n";
  for (std::size_t i = 0; i < scan.e_axis.size(); ++i) {
    for (std::size_t j = 0; j < scan.nu_axis.size(); ++j) {
      os << format_double(scan.e_axis[i]) << ',' << format_double(scan.nu_axis[j]) << ','
         << format_double(scan.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << ','
         << (scan.flagged[i][j] ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------- manifold

PcaProjection pca_project(const Matrix& outputs, int target_dim) {
  if (target_dim < 1) throw std::invalid_argument("pca_project: target dimension must be positive");
  if (outputs.rows() < target_dim + 1) throw std::invalid_argument("pca_project: needs at least target_dim + 1 points");
  const Matrix centered = outputs.rowwise() - outputs.colwise().mean();
  const Matrix gram = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("pca_project: eigen decomposition failed");

  const Vector evals = eig.eigenvalues().reverse();
  const Matrix evecs = eig.eigenvectors().rowwise().reverse();
  const double top = std::max(evals[0], 0.0);
  int usable = 0;
  while (usable < target_dim && usable < evals.size() && evals[usable] > 1e-12 * top && top > 0.0) ++usable;

  PcaProjection p;
  p.components = usable;
  p.degenerate = usable < target_dim;
  p.coords = Matrix::Zero(outputs.rows(), usable);
  p.explained_variance = Vector::Zero(usable);
  Matrix directions(outputs.cols(), usable);
  const double denom = static_cast<double>(outputs.rows() - 1);
  for (int c = 0; c < usable; ++c) {
    const double s = std::sqrt(evals[c]);
    p.coords.col(c) = evecs.col(c) * s;
    p.explained_variance[c] = evals[c] / denom;
    directions.col(c) = centered.transpose() * evecs.col(c) / s;
  }
  const double total = centered.norm();
  p.reconstruction_error = total > 0.0 ? (centered - p.coords * directions.transpose()).norm() / total : 0.0;
  return p;
}

ManifoldExport manifold_export(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& prior = cfg.prior();
  const double rho = prior_density(prior);
  const Vector mean = prior_mean_x(prior);
  const Vector sd = prior_std_x(prior);
  const int n = cfg.manifold_size;
  const auto obj = cfg.objective_config();

  ManifoldExport m;
  std::vector<std::vector<double>> rows;
  WaveguideModel model(cfg.forward);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double e = mean[0] + cfg.grid_sigma * sd[0] * (-1.0 + 2.0 * i / (n - 1));
      const double nu = mean[1] + cfg.grid_sigma * sd[1] * (-1.0 + 2.0 * j / (n - 1));
      try {
        rows.push_back(transform_pipeline(model.response(MaterialParams{e, nu, rho}).signal, obj));
      } catch (const std::exception&) {
        continue;
      }
      m.e.push_back(e);
      m.nu.push_back(nu);
      m.e_index.push_back(i);
      m.nu_index.push_back(j);
    }
  }
  if (rows.empty()) throw BatchError("manifold_export: every grid node failed");
  Matrix data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    data.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Vector>(rows[r].data(), static_cast<Eigen::Index>(rows[r].size())).transpose();
  }
  m.projection = pca_project(data, cfg.manifold_dim);
  return m;
}

std::string manifold_to_csv(const ManifoldExport& m, const ExperimentConfig& cfg) {
  const auto& p = m.projection;
  std::ostringstream os;
  os << "# config_checksum: " << cfg.checksum() << "\n"
     << "# material: " << cfg.material << "\n"
     << "# objective: " << to_string(cfg.objective) << "\n"
     << "# components: " << p.components << "\n"
     << "# degenerate: " << (p.degenerate ? "true" : "false") << "\n"
     << "# reconstruction_error: " << format_double(p.reconstruction_error) << "\n"
     << "# explained_variance:";
  for (Eigen::Index c = 0; c < p.explained_variance.size(); ++c) os << ' ' << format_double(p.explained_variance[c]);
  os << "\n";
  os << "e_line,nu_line,E,nu";
  for (int c = 0; c < cfg.manifold_dim; ++c) os << ",pc" << (c + 1);
  os << "\n";
  for (std::size_t r = 0; r < m.e.size(); ++r) {
    os << m.e_index[r] << ',' << m.nu_index[r] << ',' << format_double(m.e[r]) << ',' << format_double(m.nu[r]);
    for (int c = 0; c < cfg.manifold_dim; ++c) {
      os << ',' << (c < p.components ? format_double(p.coords(static_cast<Eigen::Index>(r), c)) : std::string("0"));
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- report

std::string histogram_csv(const std::vector<BenchSummary>& results) {
  std::set<std::uint64_t> bins;
  std::vector<std::map<std::uint64_t, std::size_t>> hists;
  for (const auto& s : results) {
    hists.push_back(s.histogram());
    for (const auto& [k, v] : hists.back()) bins.insert(k);
  }
  std::ostringstream os;
  os << "evals";
  for (const auto& s : results) os << ',' << series_name(s);
  os << "\n";
  for (auto b : bins) {
    os << b;
    for (const auto& h : hists) {
      auto it = h.find(b);
      os << ',' << (it == h.end() ? 0 : it->second);
    }
    os << "\n";
  }
  return os.str();
}

std::string success_table_csv(const std::vector<BenchSummary>& results) {
  std::ostringstream os;
  os << "material,optimizer,objective,n_refs,successes,failures,success_rate,median_evals,mean_evals\n";
  for (const auto& s : results) {
    os << s.material << ',' << s.optimizer << ',' << s.objective << ',' << s.runs.size() << ',' << s.successes()
       << ',' << s.runs.size() - s.successes() << ',' << format_rate(s.success_rate()) << ','
       << format_double(s.median_evals()) << ',' << format_double(s.mean_evals()) << "\n";
  }
  return os.str();
}

std::string summary_text(const std::vector<BenchSummary>& results) {
  std::ostringstream os;
  std::size_t runs = 0, successes = 0;
  for (const auto& s : results) {
    const std::string key = s.material + "." + s.optimizer;
    std::size_t hist_total = 0;
    for (const auto& [k, v] : s.histogram()) hist_total += v;
    os << key << ".objective: " << s.objective << "\n"
       << key << ".n_refs: " << s.runs.size() << "\n"
       << key << ".successes: " << s.successes() << "\n"
       << key << ".failures: " << s.runs.size() - s.successes() << "\n"
       << key << ".success_rate: " << format_rate(s.success_rate()) << "\n"
       << key << ".histogram_total: " << hist_total << "\n"
       << key << ".median_evals_to_success: " << format_double(s.median_evals()) << "\n"
       << key << ".mean_evals_to_success: " << format_double(s.mean_evals()) << "\n";
    runs += s.runs.size();
    successes += s.successes();
  }
  os << "series: " << results.size() << "\n"
     << "total_runs: " << runs << "\n"
     << "total_successes: " << successes << "\n"
     << "success_rate: " << format_rate(runs ? static_cast<double>(successes) / static_cast<double>(runs) : 0.0)
     << "\n";
  return os.str();
}

void write_report(const std::vector<BenchSummary>& results, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "histogram.csv", histogram_csv(results));
  write_file(dir / "success_table.csv", success_table_csv(results));
  write_file(dir / "summary.txt", summary_text(results));
}

}  // namespace waveinv::harness
