#include "waveinv/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace waveinv {

void fft_inplace(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw std::invalid_argument("fft length must be a power of two");
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles evaluated directly per index; recurrence drift would break
    // the 1e-12 round-trip requirement at n = 2^20.
    std::vector<Complex> tw(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      tw[k] = Complex(std::cos(a), std::sin(a));
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = data[start + k];
        const Complex v = data[start + k + half] * tw[k];
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& c : data) c *= scale;
  }
}

std::vector<Complex> fft(std::span<const Complex> data) {
  std::vector<Complex> out(data.begin(), data.end());
  fft_inplace(out, false);
  return out;
}

std::vector<Complex> ifft(std::span<const Complex> data) {
  std::vector<Complex> out(data.begin(), data.end());
  fft_inplace(out, true);
  return out;
}

Spectrum dft_forward(const Signal& s) {
  const std::size_t n = s.size();
  std::vector<Complex> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = Complex(s[i], 0.0);
  fft_inplace(buf, false);
  Spectrum spec;
  spec.coeffs.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(n / 2 + 1));
  spec.coeffs.front().imag(0.0);
  spec.coeffs.back().imag(0.0);
  spec.df = 1.0 / s.duration();
  return spec;
}

Signal dft_inverse(const Spectrum& spec, double dt) {
  if (spec.size() < 2) throw std::invalid_argument("spectrum needs at least two coefficients");
  const std::size_t n = 2 * (spec.size() - 1);
  if (!is_power_of_two(n)) throw std::invalid_argument("spectrum does not describe a power-of-two signal");
  std::vector<Complex> buf(n);
  buf[0] = Complex(spec.coeffs[0].real(), 0.0);
  buf[n / 2] = Complex(spec.coeffs[n / 2].real(), 0.0);
  for (std::size_t k = 1; k < n / 2; ++k) {
    buf[k] = spec.coeffs[k];
    buf[n - k] = std::conj(spec.coeffs[k]);
  }
  fft_inplace(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return Signal(std::move(out), dt);
}

std::vector<Complex> correlate(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw std::invalid_argument("correlate: length mismatch");
  const std::size_t m = a.size();
  if (m == 0) return {};
  std::size_t len = 1;
  while (len < 2 * m) len <<= 1;
  std::vector<Complex> fa(len), fb(len);
  std::copy(a.begin(), a.end(), fa.begin());
  std::copy(b.begin(), b.end(), fb.begin());
  fft_inplace(fa, false);
  fft_inplace(fb, false);
  for (std::size_t i = 0; i < len; ++i) fa[i] *= std::conj(fb[i]);
  fft_inplace(fa, true);
  fa.resize(m);
  return fa;
}

}  // namespace waveinv
