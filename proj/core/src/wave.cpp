#include "aed/wave.hpp"

#include "aed/error.hpp"
#include "aed/resample.hpp"

namespace aed {

std::vector<double> mix_to_mono(
    const std::vector<std::vector<double>>& channels) {
  if (channels.empty()) throw InvalidArgument("mix_to_mono: no channels");
  const std::size_t n = channels.front().size();
  for (const auto& ch : channels)
    if (ch.size() != n)
      throw InvalidArgument("mix_to_mono: channel length mismatch");
  if (channels.size() == 1) return channels.front();

  std::vector<double> mono(n, 0.0);
  for (const auto& ch : channels)
    for (std::size_t i = 0; i < n; ++i) mono[i] += ch[i];
  const double inv = 1.0 / static_cast<double>(channels.size());
  for (double& v : mono) v *= inv;
  return mono;
}

Waveform canonicalize(const Waveform& w) {
  if (w.sample_rate <= 0)
    throw InvalidArgument("canonicalize: waveform has no sample rate");
  if (w.sample_rate == kCanonicalRate) return w;
  return Waveform{resample(w.samples, w.sample_rate, kCanonicalRate),
                  kCanonicalRate};
}

}  // namespace aed
