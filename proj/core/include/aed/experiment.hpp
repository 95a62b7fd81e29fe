// End-to-end benchmark orchestration: per-rotation GMM training, feature
// extraction, detector training and held-out scoring under the 10-fold
// protocol, with transparent caching and deterministic result bundles.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aed/eval.hpp"
#include "aed/features.hpp"
#include "aed/gmm.hpp"
#include "aed/kernels.hpp"
#include "aed/manifest.hpp"
#include "aed/mfcc.hpp"
#include "aed/svm.hpp"

namespace aed {

std::string_view library_version();

struct ExperimentConfig {
  FeatureVariant variant = FeatureVariant::alpha;
  KernelKind kernel = KernelKind::linear;
  int components = 64;     // background GMM size M
  double relevance = 20.0; // MAP adaptation r
  SigmaEncoding sigma_encoding = SigmaEncoding::std_dev;
  MfccConfig mfcc;
  GmmTrainConfig gmm;      // components and seed are overridden per run
  CvGrid grid = default_cv_grid();
  std::uint64_t seed = 1;
  std::filesystem::path cache_dir;  // empty disables caching

  void validate() const;
  std::uint64_t hash() const;  // covers everything that affects results
};

// Emitted before each pipeline stage with the clips whose data feeds it;
// tests assert held-out folds never reach a training stage.
struct LineageEvent {
  int held_out_fold = 0;
  std::string stage;  // "gmm-frames", "detector-train", "score"
  std::string event;  // detector stages only
  std::vector<std::string> clip_ids;
};
using LineageHook = std::function<void(const LineageEvent&)>;

struct EventResult {
  std::string event;
  double ap = 0.0;
  double det_auc = 0.0;
  ScoredSet scores;  // every manifest clip exactly once, sorted by clip id
};

struct ExperimentResult {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<EventResult> events;  // sorted by event name
  double map = 0.0;                 // mean AP over events
  double mean_det_auc = 0.0;
  // Mean AP per category; filled when every event carries a category.
  std::map<std::string, double> category_ap;
};

// One full 10-rotation pass: per rotation the GMM is trained on the nine
// training folds, one detector per event is trained there and the held-out
// fold is scored; scores concatenate across rotations.
ExperimentResult run_experiment(const Manifest& manifest,
                                const ExperimentConfig& cfg,
                                const LineageHook& hook = {});

// MFCC matrix for one clip, read from or written to the cache when a cache
// directory is given. Shares the key scheme with run_experiment.
Matrix cached_clip_frames(const ManifestRow& row, const MfccConfig& mfcc,
                          const std::filesystem::path& cache_dir);

// Feature vector for one clip against a trained background model, cached
// the same way.
std::vector<double> cached_clip_feature(const Matrix& frames,
                                        const DiagGmm& g,
                                        FeatureVariant variant,
                                        double relevance, SigmaEncoding enc,
                                        const std::filesystem::path& cache_dir);

// Deterministic JSON: sorted keys, shortest round-trip float encoding,
// byte-identical between cached and uncached runs.
std::string result_bundle_json(const ExperimentResult& r);
void write_result_bundle(const std::filesystem::path& path,
                         const ExperimentResult& r);
ExperimentResult read_result_bundle(const std::filesystem::path& path);

struct SweepCell {
  FeatureVariant variant = FeatureVariant::alpha;
  KernelKind kernel = KernelKind::linear;
  int components = 0;
};

// Benchmark table columns per component count: alpha with all three
// kernels, each beta variant with linear and RBF.
std::vector<SweepCell> table_cells(const std::vector<int>& component_counts);

struct SweepCellResult {
  SweepCell cell;
  double map = 0.0;
  double mean_det_auc = 0.0;
};

struct SweepResult {
  std::vector<SweepCellResult> cells;
};

// run_experiment per cell; a failing cell rethrows with its identity.
SweepResult sweep(const Manifest& manifest, const std::vector<SweepCell>& cells,
                  const ExperimentConfig& base, const LineageHook& hook = {});

// CSV with one row per (metric, component count) and one column per
// feature-kernel pair in table order; metrics are map and mauc.
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& r);

}  // namespace aed
