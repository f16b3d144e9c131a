#include "waveinv/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "waveinv/fft.hpp"

namespace waveinv {
namespace {

constexpr double kPi = std::numbers::pi;

struct SpectralTerms {
  std::vector<Complex> y;
  std::vector<Complex> dy_dE;
  std::vector<Complex> dy_dnu;
};

SpectralTerms synthesize(const Spectrum& excitation, const MaterialParams& m, const ForwardConfig& cfg,
                         bool with_derivatives) {
  const auto tau = arrival_times(m, cfg);
  const auto sens = with_derivatives ? arrival_sensitivity(m, cfg) : ArrivalSensitivity{};
  const std::size_t count = excitation.size();
  SpectralTerms out;
  out.y.resize(count);
  if (with_derivatives) {
    out.dy_dE.resize(count);
    out.dy_dnu.resize(count);
  }
  for (std::size_t k = 0; k < count; ++k) {
    const double w = excitation.omega(k);
    Complex sum = 0.0, dE = 0.0, dnu = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      const Complex term = cfg.amplitudes[j] * std::polar(1.0, -w * tau[j]);
      sum += term;
      if (with_derivatives) {
        const Complex dterm = Complex(0.0, -w) * term;
        dE += dterm * sens.d_youngs[j];
        dnu += dterm * sens.d_poisson[j];
      }
    }
    const Complex p = excitation.coeffs[k];
    out.y[k] = p * sum;
    if (with_derivatives) {
      out.dy_dE[k] = p * dE;
      out.dy_dnu[k] = p * dnu;
    }
  }
  // Real signal: the Nyquist bin carries no imaginary part.
  out.y.back().imag(0.0);
  if (with_derivatives) {
    out.dy_dE.back().imag(0.0);
    out.dy_dnu.back().imag(0.0);
  }
  return out;
}

void require_window(const MaterialParams& m, const ForwardConfig& cfg) {
  m.validate();
  if (!fits_window(m, cfg)) {
    const auto tau = arrival_times(m, cfg);
    throw ModelError("wave packet truncated: last arrival " + std::to_string(cfg.packet_center + tau[2]) +
                     " s plus 4 sigma exceeds window " + std::to_string(cfg.duration()) + " s");
  }
}

Spectrum excitation_spectrum(const ForwardConfig& cfg) { return dft_forward(excitation(cfg)); }

ModelOutput make_output(std::vector<Complex> coeffs, double df, double dt) {
  Spectrum spec{std::move(coeffs), df};
  Signal sig = dft_inverse(spec, dt);
  return ModelOutput{std::move(sig), std::move(spec), 1};
}

}  // namespace

bool MaterialParams::valid() const {
  return youngs_modulus > 0.0 && poisson_ratio > 0.0 && poisson_ratio < 0.5 && density > 0.0 &&
         std::isfinite(youngs_modulus) && std::isfinite(density);
}

void MaterialParams::validate() const {
  if (!valid()) {
    throw std::invalid_argument("invalid material: requires E > 0, 0 < nu < 0.5, rho > 0 (E=" +
                                std::to_string(youngs_modulus) + ", nu=" + std::to_string(poisson_ratio) +
                                ", rho=" + std::to_string(density) + ")");
  }
}

ForwardConfig ForwardConfig::desk_preset() { return ForwardConfig{}; }

ForwardConfig ForwardConfig::mhz1_preset() {
  ForwardConfig c;
  c.center_frequency = 1.0e6;
  c.bandwidth = 0.65 * c.center_frequency;
  c.dt = 62.5e-9;
  return c;
}

ForwardConfig ForwardConfig::ghz_preset() {
  ForwardConfig c;
  c.center_frequency = 1.0e9;
  c.bandwidth = 0.65 * c.center_frequency;
  c.dt = 62.5e-12;
  c.samples = std::size_t{1} << 20;
  return c;
}

ForwardConfig ForwardConfig::preset(std::string_view name) {
  if (name == "desk") return desk_preset();
  if (name == "mhz1") return mhz1_preset();
  if (name == "ghz") return ghz_preset();
  throw std::invalid_argument("unknown forward preset '" + std::string(name) + "'");
}

double ForwardConfig::sigma() const { return 1.0 / (kPi * bandwidth); }

void ForwardConfig::validate() const {
  if (!(length > 0.0 && center_frequency > 0.0 && bandwidth > 0.0 && dt > 0.0 && packet_center >= 0.0)) {
    throw std::invalid_argument("forward config: length, frequencies and dt must be positive");
  }
  if (samples < 2 || !is_power_of_two(samples)) {
    throw std::invalid_argument("forward config: sample count must be a power of two");
  }
  if (packet_center + 4.0 * sigma() > duration()) {
    throw std::invalid_argument("forward config: excitation does not fit the window");
  }
}

WaveSpeeds wave_speeds(const MaterialParams& m) {
  m.validate();
  const double cl = std::sqrt(m.youngs_modulus / m.density);
  return {cl, cl / std::sqrt(2.0 * (1.0 + m.poisson_ratio))};
}

std::array<double, 3> arrival_times(const MaterialParams& m, const ForwardConfig& cfg) {
  const auto c = wave_speeds(m);
  const double t1 = cfg.length / c.longitudinal;
  const double t3 = cfg.length / c.transverse;
  return {t1, 0.5 * (t1 + t3), t3};
}

ArrivalSensitivity arrival_sensitivity(const MaterialParams& m, const ForwardConfig& cfg) {
  const auto tau = arrival_times(m, cfg);
  ArrivalSensitivity s;
  s.d_youngs[0] = -tau[0] / (2.0 * m.youngs_modulus);
  s.d_youngs[2] = -tau[2] / (2.0 * m.youngs_modulus);
  s.d_youngs[1] = 0.5 * (s.d_youngs[0] + s.d_youngs[2]);
  s.d_poisson[0] = 0.0;
  s.d_poisson[2] = tau[2] / (2.0 * (1.0 + m.poisson_ratio));
  s.d_poisson[1] = 0.5 * s.d_poisson[2];
  return s;
}

bool fits_window(const MaterialParams& m, const ForwardConfig& cfg) {
  if (!m.valid()) return false;
  const auto tau = arrival_times(m, cfg);
  return cfg.packet_center + tau[2] + 4.0 * cfg.sigma() <= cfg.duration();
}

Signal excitation(const ForwardConfig& cfg) {
  cfg.validate();
  const double sigma = cfg.sigma();
  std::vector<double> p(cfg.samples);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    const double d = t - cfg.packet_center;
    p[i] = std::sin(2.0 * kPi * cfg.center_frequency * t) * std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return Signal(std::move(p), cfg.dt);
}

ModelOutput forward_response(const MaterialParams& m, const ForwardConfig& cfg) {
  WaveguideModel model(cfg);
  return model.response(m);
}

ForwardJacobian forward_jacobian(const MaterialParams& m, const ForwardConfig& cfg) {
  WaveguideModel model(cfg);
  return model.jacobian(m);
}

WaveguideModel::WaveguideModel(ForwardConfig cfg) : cfg_(cfg), excitation_(waveinv::excitation_spectrum(cfg_)) {}

ModelOutput WaveguideModel::response(const MaterialParams& m) {
  require_window(m, cfg_);
  ++evaluations_;
  auto terms = synthesize(excitation_, m, cfg_, false);
  return make_output(std::move(terms.y), excitation_.df, cfg_.dt);
}

ForwardJacobian WaveguideModel::jacobian(const MaterialParams& m) {
  require_window(m, cfg_);
  ++evaluations_;
  auto terms = synthesize(excitation_, m, cfg_, true);
  Signal dE = dft_inverse(Spectrum{std::move(terms.dy_dE), excitation_.df}, cfg_.dt);
  Signal dnu = dft_inverse(Spectrum{std::move(terms.dy_dnu), excitation_.df}, cfg_.dt);
  return ForwardJacobian{make_output(std::move(terms.y), excitation_.df, cfg_.dt), std::move(dE), std::move(dnu)};
}

}  // namespace waveinv
