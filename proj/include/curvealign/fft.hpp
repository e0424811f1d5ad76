#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace curvealign::fft {

using cplx = std::complex<double>;

/// Unnormalized forward DFT of a real signal, bins 0..n/2:
/// X_k = sum_i x_i exp(-2 pi i i k / n).
std::vector<cplx> rfft(std::span<const double> x);

/// Inverse of rfft (normalized by 1/n).
std::vector<double> irfft(std::span<const cplx> half_spectrum, std::size_t n);

/// Band-limited circular shift: returns y with y(t) = x(t - theta), t in [0, 2 pi).
/// The Nyquist bin (even n) is scaled by cos(n theta / 2) to keep y real.
std::vector<double> shift_signal(std::span<const double> x, double theta);

/// Applies the same band-limited shift to a half spectrum in place.
void shift_half_spectrum(std::span<cplx> half_spectrum, std::size_t n, double theta);

/// r[d] = sum_i a[i] * b[(i + d) mod n].
std::vector<double> circular_xcorr(std::span<const double> a, std::span<const double> b);

}  // namespace curvealign::fft
