// Waveform type and canonicalization. All downstream processing assumes
// mono audio at the canonical 44100 Hz rate with amplitudes in [-1, 1].

#pragma once

#include <span>
#include <vector>

namespace aed {

constexpr int kCanonicalRate = 44100;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// Unweighted per-sample mean across channels. Channels must share a length.
std::vector<double> mix_to_mono(
    const std::vector<std::vector<double>>& channels);

// Resamples to kCanonicalRate. A waveform already at the canonical rate is
// passed through unchanged.
Waveform canonicalize(const Waveform& w);

}  // namespace aed
