// Iterative radix-2 FFT, power-of-two sizes only.

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace aed {

// In-place forward transform; v.size() must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& v);

// Zero-pads the real frame to fft_size and returns |X_k|^2 for
// k = 0 .. fft_size/2.
std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t fft_size);

}  // namespace aed
