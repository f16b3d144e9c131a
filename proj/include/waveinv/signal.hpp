#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace waveinv {

using Complex = std::complex<double>;

/// Raised when a numerical operation has no well-defined result
/// (singular systems, undefined phases, degenerate samples).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Uniformly sampled real time series. The sample count is a power of two
/// and at least 2; the sample interval is strictly positive.
class Signal {
 public:
  Signal(std::vector<double> samples, double dt);

  static Signal zeros(std::size_t n, double dt) { return Signal(std::vector<double>(n, 0.0), dt); }

  std::span<const double> samples() const { return samples_; }
  std::vector<double>& mutable_samples() { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double dt() const { return dt_; }
  double duration() const { return static_cast<double>(samples_.size()) * dt_; }
  double time(std::size_t i) const { return static_cast<double>(i) * dt_; }
  double operator[](std::size_t i) const { return samples_[i]; }

 private:
  std::vector<double> samples_;
  double dt_;
};

/// One-sided spectrum: coefficients at the non-negative frequencies
/// k * df, k = 0 .. n/2 when produced from a real signal of length n.
struct Spectrum {
  std::vector<Complex> coeffs;
  double df = 0.0;

  std::size_t size() const { return coeffs.size(); }
  double omega(std::size_t k) const;
};

/// Damped, normalized, unwrapped phase angles of an autocorrelated spectrum.
struct PhaseFeature {
  std::vector<double> values;
  std::vector<double> gamma;
};

void require_same_grid(const Signal& a, const Signal& b);

}  // namespace waveinv
