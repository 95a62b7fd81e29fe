#include "aed/mfcc.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "aed/error.hpp"
#include "aed/fft.hpp"
#include "aed/hashing.hpp"

namespace aed {

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

void validate(const MfccConfig& cfg, int sample_rate) {
  if (sample_rate <= 0) throw InvalidArgument("mfcc: bad sample rate");
  if (!(cfg.window_ms > cfg.hop_ms && cfg.hop_ms > 0.0))
    throw InvalidArgument("mfcc: need window_ms > hop_ms > 0");
  if (cfg.n_coeffs < 1 || cfg.n_coeffs > cfg.n_mel_filters)
    throw InvalidArgument("mfcc: need 1 <= n_coeffs <= n_mel_filters");
  if (cfg.fft_size < cfg.window_samples(sample_rate))
    throw InvalidArgument("mfcc: fft_size smaller than the window");
  if ((cfg.fft_size & (cfg.fft_size - 1)) != 0)
    throw InvalidArgument("mfcc: fft_size must be a power of two");
}

std::vector<double> hamming(int len) {
  std::vector<double> w(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i)
    w[static_cast<std::size_t>(i)] =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (len - 1));
  return w;
}

// Triangular filters with centers equally spaced on the mel scale,
// evaluated at FFT bin centers. Stored as (first bin, weights) per filter.
struct MelBank {
  std::vector<std::size_t> first_bin;
  std::vector<std::vector<double>> weights;
};

MelBank build_mel_bank(int sample_rate, const MfccConfig& cfg) {
  const std::size_t n_bins = static_cast<std::size_t>(cfg.fft_size) / 2 + 1;
  const double fmax = std::min(cfg.fmax_hz, sample_rate / 2.0);
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(fmax);
  const int n = cfg.n_mel_filters;

  std::vector<double> edge_hz(static_cast<std::size_t>(n) + 2);
  for (int j = 0; j < n + 2; ++j)
    edge_hz[static_cast<std::size_t>(j)] =
        mel_to_hz(mel_lo + (mel_hi - mel_lo) * j / (n + 1));

  const double bin_hz = static_cast<double>(sample_rate) / cfg.fft_size;
  MelBank bank;
  bank.first_bin.resize(static_cast<std::size_t>(n));
  bank.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double left = edge_hz[static_cast<std::size_t>(i)];
    const double center = edge_hz[static_cast<std::size_t>(i) + 1];
    const double right = edge_hz[static_cast<std::size_t>(i) + 2];
    std::size_t lo = n_bins, hi = 0;
    std::vector<double> w;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > left && f < center)
        v = (f - left) / (center - left);
      else if (f >= center && f < right)
        v = (right - f) / (right - center);
      if (v > 0.0) {
        if (lo == n_bins) lo = k;
        hi = k;
      }
    }
    if (lo == n_bins) lo = 0;  // degenerate filter with no bins
    w.assign(hi >= lo ? hi - lo + 1 : 0, 0.0);
    for (std::size_t k = lo; k <= hi && !w.empty(); ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > left && f < center)
        v = (f - left) / (center - left);
      else if (f >= center && f < right)
        v = (right - f) / (right - center);
      w[k - lo] = v;
    }
    bank.first_bin[static_cast<std::size_t>(i)] = lo;
    bank.weights[static_cast<std::size_t>(i)] = std::move(w);
  }
  return bank;
}

std::vector<double> apply_bank(const MelBank& bank,
                               const std::vector<double>& power) {
  std::vector<double> energies(bank.weights.size(), 0.0);
  for (std::size_t i = 0; i < bank.weights.size(); ++i) {
    const auto& w = bank.weights[i];
    const std::size_t lo = bank.first_bin[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * power[lo + k];
    energies[i] = acc;
  }
  return energies;
}

// Orthonormal DCT-II rows (n_coeffs x n_mel).
Matrix dct_matrix(int n_coeffs, int n_mel) {
  Matrix d(static_cast<std::size_t>(n_coeffs), static_cast<std::size_t>(n_mel));
  const double norm0 = std::sqrt(1.0 / n_mel);
  const double norm = std::sqrt(2.0 / n_mel);
  for (int i = 0; i < n_coeffs; ++i)
    for (int j = 0; j < n_mel; ++j)
      d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          (i == 0 ? norm0 : norm) *
          std::cos(std::numbers::pi * i * (2.0 * j + 1.0) / (2.0 * n_mel));
  return d;
}

}  // namespace

int MfccConfig::window_samples(int rate) const {
  return static_cast<int>(std::lround(window_ms / 1000.0 * rate));
}

int MfccConfig::hop_samples(int rate) const {
  return static_cast<int>(std::lround(hop_ms / 1000.0 * rate));
}

std::uint64_t MfccConfig::hash() const {
  return hash_of(std::string_view("mfcc"), window_ms, hop_ms, n_coeffs,
                 n_mel_filters, fft_size, fmin_hz, fmax_hz, log_floor);
}

std::size_t frame_count(std::size_t n_samples, std::size_t win,
                        std::size_t hop) {
  if (n_samples < win) return 0;
  return (n_samples - win) / hop + 1;
}

std::vector<double> mel_filter_energies(std::span<const double> frame,
                                        int sample_rate,
                                        const MfccConfig& cfg) {
  validate(cfg, sample_rate);
  const auto window = hamming(static_cast<int>(frame.size()));
  std::vector<double> windowed(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i)
    windowed[i] = frame[i] * window[i];
  const auto power =
      power_spectrum(windowed, static_cast<std::size_t>(cfg.fft_size));
  return apply_bank(build_mel_bank(sample_rate, cfg), power);
}

Matrix extract_mfcc(const Waveform& w, const MfccConfig& cfg) {
  validate(cfg, w.sample_rate);
  const std::size_t win =
      static_cast<std::size_t>(cfg.window_samples(w.sample_rate));
  const std::size_t hop =
      static_cast<std::size_t>(cfg.hop_samples(w.sample_rate));
  const std::size_t T = frame_count(w.samples.size(), win, hop);
  if (T == 0)
    throw ShortClipError("mfcc: clip shorter than one window (" +
                         std::to_string(w.samples.size()) + " < " +
                         std::to_string(win) + " samples)");

  const auto window = hamming(static_cast<int>(win));
  const MelBank bank = build_mel_bank(w.sample_rate, cfg);
  const Matrix dct = dct_matrix(cfg.n_coeffs, cfg.n_mel_filters);

  Matrix out(T, static_cast<std::size_t>(cfg.n_coeffs));
  std::vector<double> windowed(win);
  std::vector<double> log_energy(static_cast<std::size_t>(cfg.n_mel_filters));
  for (std::size_t t = 0; t < T; ++t) {
    const double* src = w.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) windowed[i] = src[i] * window[i];
    const auto power =
        power_spectrum(windowed, static_cast<std::size_t>(cfg.fft_size));
    const auto energies = apply_bank(bank, power);
    for (std::size_t j = 0; j < energies.size(); ++j)
      log_energy[j] = std::log(std::max(energies[j], cfg.log_floor));
    auto row = out.row(t);
    for (int i = 0; i < cfg.n_coeffs; ++i) {
      double acc = 0.0;
      for (int j = 0; j < cfg.n_mel_filters; ++j)
        acc += dct(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) *
               log_energy[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(i)] = acc;
    }
  }
  return out;
}

Waveform pad_to_window(const Waveform& w, const MfccConfig& cfg) {
  const std::size_t win =
      static_cast<std::size_t>(cfg.window_samples(w.sample_rate));
  if (w.samples.size() >= win) return w;
  Waveform padded = w;
  padded.samples.resize(win, 0.0);
  return padded;
}

namespace {
constexpr char kMfccMagic[8] = {'A', 'E', 'D', 'M', 'F', 'C', 'C', '1'};
}

void write_mfcc_cache(const std::filesystem::path& path, const Matrix& m,
                      std::uint64_t config_hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("mfcc cache: cannot write " + path.string());
  f.write(kMfccMagic, sizeof(kMfccMagic));
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  f.write(reinterpret_cast<const char*>(&config_hash), sizeof(config_hash));
  f.write(reinterpret_cast<const char*>(m.data().data()),
          static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  if (!f) throw IoError("mfcc cache: write failure on " + path.string());
}

std::optional<Matrix> read_mfcc_cache(const std::filesystem::path& path,
                                      std::uint64_t config_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  char magic[8];
  std::uint32_t rows = 0, cols = 0;
  std::uint64_t hash = 0;
  f.read(magic, sizeof(magic));
  f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  f.read(reinterpret_cast<char*>(&hash), sizeof(hash));
  if (!f || std::memcmp(magic, kMfccMagic, sizeof(magic)) != 0 ||
      hash != config_hash)
    return std::nullopt;
  Matrix m(rows, cols);
  f.read(reinterpret_cast<char*>(m.data().data()),
         static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  if (!f) return std::nullopt;
  return m;
}

}  // namespace aed
