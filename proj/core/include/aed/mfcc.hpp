// MFCC front-end: Hamming window, power spectrum, triangular mel filterbank,
// log with floor, orthonormal DCT-II. One row per frame, n_coeffs columns
// (c0 included).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "aed/matrix.hpp"
#include "aed/wave.hpp"

namespace aed {

struct MfccConfig {
  double window_ms = 30.0;
  double hop_ms = 15.0;
  int n_coeffs = 20;
  int n_mel_filters = 40;
  int fft_size = 2048;
  double fmin_hz = 0.0;
  double fmax_hz = 22050.0;
  double log_floor = 1e-10;

  int window_samples(int rate) const;  // round(window_ms/1000 * rate)
  int hop_samples(int rate) const;
  std::uint64_t hash() const;
};

// frames = floor((n - win) / hop) + 1 for n >= win, else 0.
std::size_t frame_count(std::size_t n_samples, std::size_t win,
                        std::size_t hop);

// Windowed power spectrum pushed through the mel filterbank; energies before
// the log. Exposed so the filterbank can be checked against a direct-DFT
// reference.
std::vector<double> mel_filter_energies(std::span<const double> frame,
                                        int sample_rate,
                                        const MfccConfig& cfg);

// Throws ShortClipError when the clip holds less than one window; callers
// that want a result anyway zero-pad first (see pad_to_window).
Matrix extract_mfcc(const Waveform& w, const MfccConfig& cfg);

Waveform pad_to_window(const Waveform& w, const MfccConfig& cfg);

// Per-clip feature cache: little-endian binary, header magic "AEDMFCC1",
// u32 rows, u32 cols, u64 config hash, then rows*cols float64 row-major.
void write_mfcc_cache(const std::filesystem::path& path, const Matrix& m,
                      std::uint64_t config_hash);
// Empty when the file is absent, malformed, or carries another config hash.
std::optional<Matrix> read_mfcc_cache(const std::filesystem::path& path,
                                      std::uint64_t config_hash);

}  // namespace aed
