#pragma once

#include <span>
#include <vector>

#include "waveinv/signal.hpp"

namespace waveinv {

/// In-place iterative radix-2 FFT. Forward uses exp(-i 2 pi k j / n); the
/// inverse applies the conjugate kernel and the 1/n normalization.
void fft_inplace(std::span<Complex> data, bool inverse = false);

std::vector<Complex> fft(std::span<const Complex> data);
std::vector<Complex> ifft(std::span<const Complex> data);

/// One-sided DFT of a real signal: n/2 + 1 coefficients, df = 1/T.
Spectrum dft_forward(const Signal& s);

/// Inverse of dft_forward. Imaginary parts at k = 0 and k = n/2 are ignored.
Signal dft_inverse(const Spectrum& spec, double dt);

/// Cross-correlation c_k = sum_i a_{i+k} conj(b_i), k = 0 .. m-1, for equal
/// length inputs, computed through a zero-padded FFT.
std::vector<Complex> correlate(std::span<const Complex> a, std::span<const Complex> b);

}  // namespace waveinv
