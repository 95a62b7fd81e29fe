// Synthetic labeled corpus generator: small tone / noise-band / chirp
// datasets for end-to-end runs without external audio.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aed/wave.hpp"

namespace aed {

struct SynthClass {
  enum class Kind { tone, noise_band, chirp };

  std::string label;
  Kind kind = Kind::tone;
  double freq_hz = 440.0;         // harmonic-stack fundamental
  double band_low_hz = 3000.0;    // noise band edges
  double band_high_hz = 6000.0;
  double chirp_start_hz = 500.0;  // linear sweep endpoints
  double chirp_end_hz = 4000.0;
};

struct SynthConfig {
  std::vector<SynthClass> classes;  // empty -> default_synth_classes()
  int clips_per_class = 20;
  double clip_seconds = 3.0;
  std::uint64_t seed = 1;
  int fold_count = 10;
};

// The three well-separated classes used by the bundled benchmark.
std::vector<SynthClass> default_synth_classes();

// Deterministic per-clip signal at the canonical rate.
Waveform synth_clip(const SynthClass& cls, double seconds,
                    std::uint64_t clip_seed);

// Writes <out_dir>/clips/*.wav plus <out_dir>/manifest.csv (schema
// clip_id,path,label,fold with paths relative to the manifest). Clips of each
// class are dealt round-robin over folds 1..fold_count. Fixed seed gives
// byte-identical output. Returns the manifest path.
std::filesystem::path synth_dataset(const SynthConfig& cfg,
                                    const std::filesystem::path& out_dir);

}  // namespace aed
