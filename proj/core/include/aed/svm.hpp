// Soft-margin binary SVM on precomputed Gram matrices: SMO solver,
// cross-validated hyperparameter search and one-vs-rest event detectors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aed/features.hpp"
#include "aed/kernels.hpp"
#include "aed/matrix.hpp"

namespace aed {

// Per-dimension z-scoring. Constant dimensions keep scale 1 and map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_scale;
};

Standardizer fit_standardizer(const FeatureRows& rows);
std::vector<double> standardize(const Standardizer& s,
                                std::span<const double> row);
FeatureRows standardize(const Standardizer& s, const FeatureRows& rows);

struct SmoReport {
  std::size_t iterations = 0;
  double objective = 0.0;
  double kkt_gap = 0.0;  // final maximal KKT violation
  bool converged = false;
};

// C-SVC dual solution; indices refer to the training set the Gram came from.
struct CsvcSolution {
  std::vector<std::size_t> support;
  std::vector<double> dual_coefs;  // alpha_i * y_i, aligned with support
  double bias = 0.0;
  double c = 0.0;
  SmoReport report;
};

// Sequential minimal optimization with maximal-violating-pair selection,
// ties broken by lowest index. Stops once the KKT gap drops below epsilon.
CsvcSolution train_csvc(const GramMatrix& k, const std::vector<int>& y,
                        double c, double epsilon = 1e-3);

// f(t) = sum_i coef_i * k_test_support(t, i) + bias. The matrix columns must
// align with the solution's support set.
std::vector<double> decision_scores(const CsvcSolution& sol,
                                    const Matrix& k_test_support);

struct CvGrid {
  std::vector<double> c_values;
  std::vector<double> gamma_values;
  int folds = 3;

  void validate() const;
};

// C in 2^-5..2^15 (step 2^2), gamma in 2^-15..2^3 (step 2^2), 3 folds.
CvGrid default_cv_grid();

struct GridSearchResult {
  double best_c = 0.0;
  double best_gamma = 0.0;
  double best_mean_ap = 0.0;
  std::vector<double> c_values;      // ascending
  std::vector<double> gamma_values;  // ascending
  Matrix mean_ap;                    // c_values x gamma_values
};

// Stratified inner folds (seeded shuffle, round-robin), one SMO solve per
// grid cell per fold, selection by highest mean validation AP with ties
// broken by smaller C then smaller gamma. Linear kernels search C only.
GridSearchResult grid_search_cv(const FeatureRows& rows,
                                const std::vector<int>& y, KernelKind kind,
                                const CvGrid& grid, std::uint64_t seed);

// One-vs-rest detector for a single event.
struct SvmModel {
  KernelSpec kernel;
  FeatureVariant variant = FeatureVariant::alpha;
  double c = 0.0;
  double bias = 0.0;
  std::vector<std::string> support_ids;
  FeatureRows support_features;  // stored post-standardization
  std::vector<double> dual_coefs;
  std::optional<Standardizer> standardizer;
};

struct DetectorConfig {
  KernelKind kernel = KernelKind::linear;
  CvGrid grid = default_cv_grid();
  double epsilon = 1e-3;
  std::uint64_t seed = 1;
};

// Labels clips of `event` +1 and the rest -1, z-scores beta features with
// training statistics, picks (C, gamma) by grid_search_cv and trains the
// final model on all training rows. Chi-square kernels pair only with alpha
// features (supervector entries are signed).
SvmModel train_event_detector(const std::string& event,
                              const std::vector<std::string>& clip_ids,
                              const std::vector<std::string>& labels,
                              const FeatureRows& rows, FeatureVariant variant,
                              const DetectorConfig& cfg,
                              GridSearchResult* search = nullptr);

// Raw margins for unstandardized test rows.
std::vector<double> score_features(const SvmModel& m, const FeatureRows& rows);

// Binary persistence with exact round-trip.
void save_svm(const std::filesystem::path& path, const SvmModel& m);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace aed
