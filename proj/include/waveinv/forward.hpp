#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "waveinv/signal.hpp"

namespace waveinv {

/// Raised when the forward model cannot represent a response, e.g. when a
/// wave packet would arrive after the end of the sampling window.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Isotropic material. SI units: pascals, dimensionless, kg/m^3.
struct MaterialParams {
  double youngs_modulus = 0.0;
  double poisson_ratio = 0.0;
  double density = 0.0;

  bool valid() const;
  void validate() const;
  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
};

struct ForwardConfig {
  double length = 0.02;             // m
  double center_frequency = 3.0e6;  // Hz
  double packet_center = 3.0e-6;    // s
  double bandwidth = 0.65 * 3.0e6;  // Hz
  std::size_t samples = 4096;
  double dt = 20.0e-9;              // s
  std::array<double, 3> amplitudes{1.0, 0.4, 0.2};

  /// Default desk-scale setup: 20 mm sample, 3 MHz carrier, 4096 samples at 20 ns.
  static ForwardConfig desk_preset();
  /// 1 MHz carrier at 62.5 ns (16 samples per period), same window length rules.
  static ForwardConfig mhz1_preset();
  /// Literal 1 GHz carrier with a 3 us packet center; needs 2^20 samples.
  static ForwardConfig ghz_preset();
  static ForwardConfig preset(std::string_view name);

  /// sigma = 1 / (pi b)
  double sigma() const;
  double duration() const { return static_cast<double>(samples) * dt; }
  void validate() const;
};

struct WaveSpeeds {
  double longitudinal = 0.0;  // bar wave speed sqrt(E / rho)
  double transverse = 0.0;    // sqrt(G / rho)
};

WaveSpeeds wave_speeds(const MaterialParams& m);

/// Packet delays tau_1 = L/c_L, tau_2 = (L/2)(1/c_L + 1/c_T), tau_3 = L/c_T.
std::array<double, 3> arrival_times(const MaterialParams& m, const ForwardConfig& cfg);

/// d tau_j / dE and d tau_j / d nu.
struct ArrivalSensitivity {
  std::array<double, 3> d_youngs{};
  std::array<double, 3> d_poisson{};
};
ArrivalSensitivity arrival_sensitivity(const MaterialParams& m, const ForwardConfig& cfg);

/// True when every packet, including a 4 sigma tail, fits in the window.
bool fits_window(const MaterialParams& m, const ForwardConfig& cfg);

/// p(t) = sin(2 pi f t) exp(-(t - t_c)^2 / (2 sigma^2)).
Signal excitation(const ForwardConfig& cfg);

struct ModelOutput {
  Signal signal;
  Spectrum spectrum;
  int eval_count_delta = 1;
};

struct ForwardJacobian {
  ModelOutput output;
  Signal d_youngs;   // dy/dE, per pascal
  Signal d_poisson;  // dy/dnu
};

/// Y(w_k) = P(w_k) sum_j A_j exp(-i w_k tau_j), time signal by inverse DFT.
/// Throws ModelError when the last packet would be truncated.
ModelOutput forward_response(const MaterialParams& m, const ForwardConfig& cfg);
ForwardJacobian forward_jacobian(const MaterialParams& m, const ForwardConfig& cfg);

/// Forward model bound to one configuration with a cached excitation
/// spectrum and its own evaluation counter. One instance per optimization
/// run; not meant to be shared between threads.
class WaveguideModel {
 public:
  explicit WaveguideModel(ForwardConfig cfg);

  const ForwardConfig& config() const { return cfg_; }
  const Spectrum& excitation_spectrum() const { return excitation_; }

  ModelOutput response(const MaterialParams& m);
  /// Shares the forward pass; counts as a single evaluation.
  ForwardJacobian jacobian(const MaterialParams& m);

  std::uint64_t evaluations() const { return evaluations_; }
  void reset_evaluations() { evaluations_ = 0; }

 private:
  ForwardConfig cfg_;
  Spectrum excitation_;
  std::uint64_t evaluations_ = 0;
};

}  // namespace waveinv
