#include "aed/fft.hpp"

#include <cmath>
#include <numbers>

#include "aed/error.hpp"

namespace aed {

void fft_inplace(std::vector<std::complex<double>>& v) {
  const std::size_t n = v.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw InvalidArgument("fft: size must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(v[i], v[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = v[i + k];
        const std::complex<double> t = v[i + k + len / 2] * w;
        v[i + k] = u + t;
        v[i + k + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame,
                                   std::size_t fft_size) {
  if (frame.size() > fft_size)
    throw InvalidArgument("power_spectrum: frame longer than fft size");
  std::vector<std::complex<double>> buf(fft_size, {0.0, 0.0});
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = {frame[i], 0.0};
  fft_inplace(buf);
  std::vector<double> power(fft_size / 2 + 1);
  for (std::size_t k = 0; k <= fft_size / 2; ++k) power[k] = std::norm(buf[k]);
  return power;
}

}  // namespace aed
