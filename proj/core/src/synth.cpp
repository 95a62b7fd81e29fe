#include "aed/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "aed/error.hpp"
#include "aed/hashing.hpp"
#include "aed/wav_io.hpp"

namespace aed {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Noise bed with a gentle comb ripple (y[i] = x[i] + g * x[i - lag]) and a
// gentle spectral tilt (z[i] = y[i] + a * z[i - 1]), power-normalized. The
// lag sets the ripple period across the spectrum; the tilt warms or
// brightens the broadband slope.
void add_bed_noise(std::vector<double>& s, double sigma, std::size_t lag,
                   double g, double a, std::mt19937_64& rng) {
  const double scale = sigma * std::sqrt((1.0 - a * a) / (1.0 + g * g));
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> x(s.size());
  for (double& v : x) v = dist(rng);
  double prev = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double y = x[i] + (i >= lag ? g * x[i - lag] : 0.0);
    prev = y + a * prev;
    s[i] += prev;
  }
}

}  // namespace

std::vector<SynthClass> default_synth_classes() {
  SynthClass tone;
  tone.label = "tone";
  tone.kind = SynthClass::Kind::tone;
  tone.freq_hz = 440.0;

  SynthClass noise;
  noise.label = "noiseband";
  noise.kind = SynthClass::Kind::noise_band;
  noise.band_low_hz = 3000.0;
  noise.band_high_hz = 6000.0;

  SynthClass chirp;
  chirp.label = "chirp";
  chirp.kind = SynthClass::Kind::chirp;
  chirp.chirp_start_hz = 500.0;
  chirp.chirp_end_hz = 4000.0;

  return {tone, noise, chirp};
}

Waveform synth_clip(const SynthClass& cls, double seconds,
                    std::uint64_t clip_seed) {
  if (seconds <= 0.0) throw InvalidArgument("synth_clip: seconds must be > 0");
  const std::size_t n =
      static_cast<std::size_t>(std::lround(seconds * kCanonicalRate));
  std::vector<double> s(n, 0.0);
  std::mt19937_64 rng(clip_seed);
  std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
  const double dt = 1.0 / kCanonicalRate;

  // A clip is a sequence of short windowed bursts drawn from the same three
  // element types for every class: harmonic stack, band-limited noise, and
  // a fast sweep. The class sets how often its own element appears and the
  // typical coloration of the noise bed (comb ripple depth and spectral
  // tilt), with the coloration ranges deliberately overlapping between
  // classes. Classes therefore share one set of spectral states and differ
  // in how often they visit each state and in a small, consistent shift
  // inside it, rather than in disjoint frequency supports.
  std::uniform_real_distribution<double> ubed(0.115, 0.125);
  std::uniform_real_distribution<double> udetune(-0.0005, 0.0005);
  std::uniform_real_distribution<double> ugain(0.28, 0.32);
  std::uniform_real_distribution<double> ulen(0.15, 0.22);
  const double bed_sigma = ubed(rng);
  const int class_rank = cls.kind == SynthClass::Kind::tone ? 0
                         : cls.kind == SynthClass::Kind::noise_band ? 1
                                                                    : 2;
  std::uniform_real_distribution<double> uripple(0.20 + 0.18 * class_rank - 0.15,
                                                 0.20 + 0.18 * class_rank + 0.15);
  std::uniform_real_distribution<double> utilt(0.10 + 0.15 * class_rank - 0.10,
                                               0.10 + 0.15 * class_rank + 0.10);
  const double bed_ripple = uripple(rng);
  const double bed_tilt = utilt(rng);
  const double gain = ugain(rng);
  const double f0 = cls.freq_hz * (1.0 + udetune(rng));

  const auto window = [](std::size_t j, std::size_t m) {
    return 0.5 * (1.0 - std::cos(kTwoPi * (j + 0.5) / m));
  };
  const auto emit_tone = [&](std::size_t start, std::size_t m) {
    constexpr int kHarmonics = 8;
    for (int h = 1; h <= kHarmonics; ++h) {
      const double f = f0 * h;
      const double amp = gain / h;
      const double phi = uphase(rng);
      for (std::size_t j = 0; j < m; ++j)
        s[start + j] +=
            window(j, m) * amp * std::sin(kTwoPi * f * (start + j) * dt + phi);
    }
  };
  const auto emit_band = [&](std::size_t start, std::size_t m) {
    // Dense fixed comb across the band with random phases: the same spectral
    // envelope every burst, a fresh waveform every burst.
    constexpr int kPartials = 64;
    const double step = (cls.band_high_hz - cls.band_low_hz) / kPartials;
    const double amp = gain / std::sqrt(kPartials / 2.0);
    for (int p = 0; p < kPartials; ++p) {
      const double f = cls.band_low_hz + (p + 0.5) * step;
      const double phi = uphase(rng);
      for (std::size_t j = 0; j < m; ++j)
        s[start + j] +=
            window(j, m) * amp * std::sin(kTwoPi * f * (start + j) * dt + phi);
    }
  };
  const auto emit_sweep = [&](std::size_t start, std::size_t m) {
    // One pass over the range per burst, fast enough that a single analysis
    // window sees a broad smear rather than a distinct narrowband state.
    const double span = m * dt;
    const double rate = (cls.chirp_end_hz - cls.chirp_start_hz) / span;
    const double phi = uphase(rng);
    for (std::size_t j = 0; j < m; ++j) {
      const double tau = j * dt;
      s[start + j] +=
          window(j, m) * gain *
          std::sin(kTwoPi * (cls.chirp_start_hz * tau + 0.5 * rate * tau * tau) +
                   phi);
    }
  };

  const std::array<SynthClass::Kind, 2> others =
      cls.kind == SynthClass::Kind::tone
          ? std::array{SynthClass::Kind::noise_band, SynthClass::Kind::chirp}
      : cls.kind == SynthClass::Kind::noise_band
          ? std::array{SynthClass::Kind::tone, SynthClass::Kind::chirp}
          : std::array{SynthClass::Kind::tone, SynthClass::Kind::noise_band};
  // Exact composition, shuffled order: four own-element bursts for every one
  // of each other element, so usage rates carry no clip-to-clip noise.
  std::vector<SynthClass::Kind> schedule;
  for (int rep = 0; rep < 4; ++rep) {
    schedule.insert(schedule.end(), 4, cls.kind);
    schedule.push_back(others[0]);
    schedule.push_back(others[1]);
  }
  std::shuffle(schedule.begin(), schedule.end(), rng);

  std::size_t cursor = 0;
  for (std::size_t b = 0; cursor < n; ++b) {
    const std::size_t m = std::min<std::size_t>(
        n - cursor,
        static_cast<std::size_t>(std::lround(ulen(rng) * kCanonicalRate)));
    switch (schedule[b % schedule.size()]) {
      case SynthClass::Kind::tone: emit_tone(cursor, m); break;
      case SynthClass::Kind::noise_band: emit_band(cursor, m); break;
      case SynthClass::Kind::chirp: emit_sweep(cursor, m); break;
    }
    cursor += m;
  }
  add_bed_noise(s, bed_sigma, 11, bed_ripple, bed_tilt, rng);

  // Keep a safety margin below full scale.
  double peak = 0.0;
  for (double v : s) peak = std::max(peak, std::abs(v));
  if (peak > 0.9)
    for (double& v : s) v *= 0.9 / peak;

  return Waveform{std::move(s), kCanonicalRate};
}

std::filesystem::path synth_dataset(const SynthConfig& cfg,
                                    const std::filesystem::path& out_dir) {
  if (cfg.clips_per_class < 1)
    throw InvalidArgument("synth_dataset: clips_per_class must be >= 1");
  if (cfg.fold_count < 1)
    throw InvalidArgument("synth_dataset: fold_count must be >= 1");
  const std::vector<SynthClass> classes =
      cfg.classes.empty() ? default_synth_classes() : cfg.classes;

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clips", ec);
  if (ec)
    throw IoError("synth_dataset: cannot create " + out_dir.string() + ": " +
                  ec.message());

  const std::filesystem::path manifest_path = out_dir / "manifest.csv";
  std::ofstream manifest(manifest_path);
  if (!manifest)
    throw IoError("synth_dataset: cannot write " + manifest_path.string());
  manifest << "clip_id,path,label,fold\n";

  for (const SynthClass& cls : classes) {
    for (int i = 0; i < cfg.clips_per_class; ++i) {
      const std::uint64_t clip_seed = derive_seed(cfg.seed, cls.label, i);
      const Waveform w = synth_clip(cls, cfg.clip_seconds, clip_seed);
      char idbuf[16];
      std::snprintf(idbuf, sizeof(idbuf), "%03d", i);
      const std::string clip_id = cls.label + "_" + idbuf;
      const std::string rel = "clips/" + clip_id + ".wav";
      write_wav16(out_dir / rel, w);
      const int fold = (i % cfg.fold_count) + 1;
      manifest << clip_id << "," << rel << "," << cls.label << "," << fold
               << "\n";
    }
  }
  manifest.close();
  if (!manifest) throw IoError("synth_dataset: write failure on manifest");
  return manifest_path;
}

}  // namespace aed
