// RIFF/WAVE decoding and encoding.
//
// Reading accepts PCM at 8/16/24/32-bit integer or 32-bit float depth, any
// channel count. Samples are scaled to [-1, 1] by the format's full-scale
// value. Writing emits 16-bit PCM.

#pragma once

#include <filesystem>
#include <vector>

#include "aed/wave.hpp"

namespace aed {

struct DecodedWav {
  std::vector<std::vector<double>> channels;  // one vector per channel
  int sample_rate = 0;
};

// Throws IoError (unreadable), FormatError (unsupported encoding or broken
// structure) or EmptyAudioError (zero decoded frames).
DecodedWav read_wav(const std::filesystem::path& path);

// Decode, mix to mono by channel mean, resample to the canonical rate.
Waveform load_clip(const std::filesystem::path& path);

// 16-bit PCM writer; samples are clamped to [-1, 1].
void write_wav16(const std::filesystem::path& path, const Waveform& w);

}  // namespace aed
