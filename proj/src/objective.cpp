#include "waveinv/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "waveinv/fft.hpp"

namespace waveinv {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Complex> analytic_from_samples(std::span<const double> samples) {
  const std::size_t n = samples.size();
  std::vector<Complex> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = Complex(samples[i], 0.0);
  fft_inplace(buf, false);
  // Zeroing the DC bin is the mean subtraction.
  buf[0] = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) buf[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = 0.0;
  fft_inplace(buf, true);
  return buf;
}

}  // namespace

std::vector<Complex> analytic_signal(const Signal& s) { return analytic_from_samples(s.samples()); }

Signal envelope(const Signal& s) {
  const auto a = analytic_signal(s);
  std::vector<double> e(a.size());
  std::transform(a.begin(), a.end(), e.begin(), [](const Complex& z) { return std::abs(z); });
  return Signal(std::move(e), s.dt());
}

std::vector<Complex> autocorr_spectrum(std::span<const Complex> u) {
  if (u.empty()) throw std::invalid_argument("autocorr_spectrum: empty input");
  const std::size_t m = u.size();
  std::vector<Complex> e(m);
  for (std::size_t k = 0; k < m; ++k) {
    Complex acc = 0.0;
    for (std::size_t i = k; i < m; ++i) acc += u[i] * std::conj(u[i - k]);
    e[k] = acc;
  }
  return e;
}

std::vector<Complex> autocorr_spectrum_fast(std::span<const Complex> u) {
  if (u.empty()) throw std::invalid_argument("autocorr_spectrum: empty input");
  auto e = correlate(u, u);
  double e0 = 0.0;
  for (const auto& z : u) e0 += std::norm(z);
  e[0] = Complex(e0, 0.0);
  return e;
}

std::vector<double> unwrap(std::span<const double> phases) {
  std::vector<double> out(phases.begin(), phases.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    double d = phases[i] - phases[i - 1];
    d -= 2.0 * kPi * std::ceil((d - kPi) / (2.0 * kPi));
    out[i] = out[i - 1] + d;
  }
  return out;
}

std::vector<double> damping_weights(std::size_t count, double bandwidth, double duration, double c) {
  const double bt = bandwidth * duration;
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double kk = static_cast<double>(k);
    g[k] = std::exp(-c * kk * kk / (bt * bt));
  }
  return g;
}

PhaseFeature stable_arg(std::span<const Complex> e, double bandwidth, double duration, double c) {
  if (e.empty()) throw std::invalid_argument("stable_arg: empty spectrum");
  if (!(bandwidth > 0.0) || !(duration > 0.0)) {
    throw std::invalid_argument("stable_arg: bandwidth and duration must be positive");
  }
  if (!(c >= 1.0 && c <= 10.0)) throw std::invalid_argument("stable_arg: damping constant must lie in [1, 10]");
  if (std::none_of(e.begin(), e.end(), [](const Complex& z) { return z != 0.0; })) {
    throw NumericalError("stable_arg: all coefficients are zero");
  }

  const std::size_t m = e.size();
  std::vector<double> raw(m);
  for (std::size_t k = 0; k < m; ++k) {
    // E_k / Y_k with Y_k = (-1)^k
    const Complex z = (k % 2 == 0) ? e[k] : -e[k];
    raw[k] = (e[k] == 0.0) ? 0.0 : std::atan2(z.imag(), z.real());
  }

  PhaseFeature f;
  f.values = unwrap(raw);
  f.gamma = damping_weights(m, bandwidth, duration, c);
  for (std::size_t k = 0; k < m; ++k) {
    f.values[k] = f.gamma[k] * (f.values[k] - kPi * static_cast<double>(k));
  }
  return f;
}

std::vector<double> phase_residual(const PhaseFeature& ref, const PhaseFeature& sim) {
  if (ref.values.size() != sim.values.size() || ref.gamma != sim.gamma) {
    throw std::invalid_argument("phase_residual: features built with different lengths or damping");
  }
  std::vector<double> r(ref.values.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = ref.values[k] - sim.values[k];
  return r;
}

std::vector<double> residual_signal(const Signal& ref, const Signal& sim) {
  require_same_grid(ref, sim);
  std::vector<double> r(ref.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ref[i] - sim[i];
  return r;
}

std::vector<double> residual_envelope(const Signal& ref, const Signal& sim) {
  require_same_grid(ref, sim);
  return residual_signal(envelope(ref), envelope(sim));
}

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::signal: return "signal";
    case ObjectiveKind::envelope: return "envelope";
    case ObjectiveKind::autocorr_phase: return "autocorr-phase";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "signal") return ObjectiveKind::signal;
  if (name == "envelope") return ObjectiveKind::envelope;
  if (name == "autocorr-phase") return ObjectiveKind::autocorr_phase;
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

double ObjectiveConfig::clamped_c() const { return std::clamp(damping_c, 1.0, 10.0); }

std::vector<Complex> positive_coefficients(const Spectrum& spec) {
  if (spec.size() < 2) throw std::invalid_argument("spectrum has no positive frequencies");
  return {spec.coeffs.begin() + 1, spec.coeffs.end()};
}

PhaseFeature phase_feature(const Signal& s, double bandwidth, double c) {
  const auto u = positive_coefficients(dft_forward(s));
  const auto e = autocorr_spectrum_fast(u);
  if (!(e[0].real() > 0.0)) {
    throw NumericalError("autocorrelated spectrum vanishes; phases are undefined");
  }
  return stable_arg(e, bandwidth, s.duration(), c);
}

std::vector<double> transform_pipeline(const Signal& s, const ObjectiveConfig& cfg) {
  switch (cfg.kind) {
    case ObjectiveKind::signal: return {s.samples().begin(), s.samples().end()};
    case ObjectiveKind::envelope: {
      const auto e = envelope(s);
      return {e.samples().begin(), e.samples().end()};
    }
    case ObjectiveKind::autocorr_phase: return phase_feature(s, cfg.bandwidth, cfg.clamped_c()).values;
  }
  throw std::invalid_argument("unknown objective kind");
}

std::vector<double> transform_derivative(const Signal& s, const Signal& ds, const ObjectiveConfig& cfg) {
  return transform_derivatives(s, std::span<const Signal>(&ds, 1), cfg).front();
}

std::vector<std::vector<double>> transform_derivatives(const Signal& s, std::span<const Signal> directions,
                                                       const ObjectiveConfig& cfg) {
  for (const auto& d : directions) require_same_grid(s, d);
  std::vector<std::vector<double>> out;
  out.reserve(directions.size());

  switch (cfg.kind) {
    case ObjectiveKind::signal:
      for (const auto& d : directions) out.emplace_back(d.samples().begin(), d.samples().end());
      return out;

    case ObjectiveKind::envelope: {
      const auto a = analytic_signal(s);
      for (const auto& d : directions) {
        const auto da = analytic_signal(d);
        std::vector<double> de(a.size(), 0.0);
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double mag = std::abs(a[i]);
          if (mag > 0.0) de[i] = (std::conj(a[i]) * da[i]).real() / mag;
        }
        out.push_back(std::move(de));
      }
      return out;
    }

    case ObjectiveKind::autocorr_phase: {
      const auto u = positive_coefficients(dft_forward(s));
      const auto e = autocorr_spectrum_fast(u);
      if (!(e[0].real() > 0.0)) {
        throw NumericalError("autocorrelated spectrum vanishes; phases are undefined");
      }
      const auto gamma = damping_weights(e.size(), cfg.bandwidth, s.duration(), cfg.clamped_c());
      for (const auto& d : directions) {
        const auto du = positive_coefficients(dft_forward(d));
        const auto left = correlate(du, u);
        const auto right = correlate(u, du);
        std::vector<double> dphi(e.size(), 0.0);
        for (std::size_t k = 0; k < e.size(); ++k) {
          // Below machine epsilon the weighted phase is lost to roundoff anyway.
          if (gamma[k] < std::numeric_limits<double>::epsilon()) continue;
          if (e[k] == 0.0) {
            throw NumericalError("phase derivative undefined: zero autocorrelation coefficient at k = " +
                                 std::to_string(k));
          }
          // d arg(z) = Im(dz / z); the pseudo-phase terms are constant.
          dphi[k] = gamma[k] * ((left[k] + right[k]) / e[k]).imag();
        }
        out.push_back(std::move(dphi));
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown objective kind");
}

}  // namespace waveinv
