#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "waveinv/signal.hpp"

namespace waveinv {

/// a(t) = u(t) + i H(u)(t) of the mean-removed input, built in the
/// frequency domain with H(U) = -i sgn(omega) U.
std::vector<Complex> analytic_signal(const Signal& s);

/// e(t) = |a(t)|.
Signal envelope(const Signal& s);

/// Positive-frequency autocorrelation E_k = sum_{i=k}^{m-1} U_{i+1} conj(U_{i-k+1})
/// evaluated literally (O(m^2)); `u` holds U_1 .. U_m. This is the reference
/// definition; autocorr_spectrum_fast gives the same values in O(m log m).
std::vector<Complex> autocorr_spectrum(std::span<const Complex> u);
std::vector<Complex> autocorr_spectrum_fast(std::span<const Complex> u);

/// Removes 2 pi jumps so that successive differences lie in (-pi, pi].
std::vector<double> unwrap(std::span<const double> phases);

/// gamma_k = exp(-C k^2 / (b T)^2), k = 0 .. count-1.
std::vector<double> damping_weights(std::size_t count, double bandwidth, double duration, double c);

/// Normalizes each E_k by the pseudo-coefficient (-1)^k, unwraps, removes
/// the pseudo-phase pi*k and damps with gamma_k. Zero coefficients are
/// assigned phase 0 before unwrapping.
PhaseFeature stable_arg(std::span<const Complex> e, double bandwidth, double duration, double c);

std::vector<double> phase_residual(const PhaseFeature& ref, const PhaseFeature& sim);
std::vector<double> residual_signal(const Signal& ref, const Signal& sim);
std::vector<double> residual_envelope(const Signal& ref, const Signal& sim);

enum class ObjectiveKind { signal, envelope, autocorr_phase };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::autocorr_phase;
  double bandwidth = 0.0;  // hertz; only used by autocorr_phase
  double damping_c = 1.0;  // clamped to [1, 10] on use

  double clamped_c() const;
};

/// Positive-frequency half of the one-sided spectrum with U_0 dropped.
std::vector<Complex> positive_coefficients(const Spectrum& spec);

/// Autocorrelated phase feature of a signal (DFT -> autocorrelation -> stable arg).
/// Throws NumericalError for signals whose autocorrelation vanishes.
PhaseFeature phase_feature(const Signal& s, double bandwidth, double c);

/// Feature vector compared by the selected objective: raw samples,
/// envelope samples, or damped autocorrelated phases.
std::vector<double> transform_pipeline(const Signal& s, const ObjectiveConfig& cfg);

/// Directional derivative of transform_pipeline at `s` along `ds`.
/// For the phase objective, throws NumericalError when an autocorrelation
/// coefficient is exactly zero at an index whose weight gamma_k is at least
/// machine epsilon; indices damped below that get derivative 0.
std::vector<double> transform_derivative(const Signal& s, const Signal& ds, const ObjectiveConfig& cfg);

/// Batched form: derivatives for several directions sharing one base pass.
std::vector<std::vector<double>> transform_derivatives(const Signal& s, std::span<const Signal> directions,
                                                       const ObjectiveConfig& cfg);

}  // namespace waveinv
