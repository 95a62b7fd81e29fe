#include "aed/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "aed/error.hpp"

namespace aed {

namespace {

// 4-term Blackman-Harris over [-1, 1].
double bh_window(double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  const double t = std::numbers::pi * x;
  return 0.35875 + 0.48829 * std::cos(t) + 0.14128 * std::cos(2.0 * t) +
         0.01168 * std::cos(3.0 * t);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double t = std::numbers::pi * x;
  return std::sin(t) / t;
}

}  // namespace

std::vector<double> resample(std::span<const double> in, int in_rate,
                             int out_rate) {
  if (in_rate <= 0 || out_rate <= 0)
    throw InvalidArgument("resample: rates must be positive");
  if (in.empty()) return {};
  if (in_rate == out_rate) return {in.begin(), in.end()};

  const long g = std::gcd(in_rate, out_rate);
  const long up = out_rate / g;    // L
  const long down = in_rate / g;   // M

  // Anti-alias/anti-image cutoff in cycles per input sample, with a little
  // rolloff headroom below the theoretical limit.
  const double cutoff =
      0.475 * std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  // Half-width grows as the cutoff narrows so the sinc keeps 32 zero
  // crossings per side; taps per phase = 2*half + 1 >= 64 always.
  const long half = static_cast<long>(std::ceil(32.0 / (2.0 * cutoff)));
  const double support = static_cast<double>(half) + 1.0;

  // One tap row per output phase, each normalized to unit DC gain so a
  // constant signal resamples to itself.
  const std::size_t taps_per_phase = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> taps(static_cast<std::size_t>(up) * taps_per_phase);
  for (long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / static_cast<double>(up);
    double sum = 0.0;
    double* row = taps.data() + static_cast<std::size_t>(p) * taps_per_phase;
    for (long k = -half; k <= half; ++k) {
      const double tau = static_cast<double>(k) + frac;
      const double v =
          2.0 * cutoff * sinc(2.0 * cutoff * tau) * bh_window(tau / support);
      row[k + half] = v;
      sum += v;
    }
    for (std::size_t i = 0; i < taps_per_phase; ++i) row[i] /= sum;
  }

  const long n_in = static_cast<long>(in.size());
  const long n_out =
      static_cast<long>((static_cast<long long>(n_in) * up + down / 2) / down);

  std::vector<double> out(static_cast<std::size_t>(n_out));
  for (long n = 0; n < n_out; ++n) {
    const long long pos = static_cast<long long>(n) * down;  // units of 1/up
    const long base = static_cast<long>(pos / up);
    const long phase = static_cast<long>(pos % up);
    const double* row =
        taps.data() + static_cast<std::size_t>(phase) * taps_per_phase;
    // y(t) = sum_k x[base - k] * K(k + phase/up), zeros outside the input
    const long k_lo = std::max(-half, base - (n_in - 1));
    const long k_hi = std::min(half, base);
    double acc = 0.0;
    for (long k = k_lo; k <= k_hi; ++k)
      acc += row[k + half] * in[static_cast<std::size_t>(base - k)];
    out[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace aed
