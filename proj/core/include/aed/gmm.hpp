// Diagonal-covariance background GMM: seeded k-means++ / EM training,
// per-frame posteriors, likelihood diagnostics and flat-file persistence.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aed/matrix.hpp"

namespace aed {

struct DiagGmm {
  std::vector<double> weights;  // M, nonnegative, sums to 1
  Matrix means;                 // M x D
  Matrix vars;                  // M x D, positive
  std::vector<double> var_floor;  // per-dim floor used in training; may be empty

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }

  // Checks the type invariants; throws InvalidArgument on violation.
  void validate() const;
};

struct GmmTrainConfig {
  int components = 32;
  int max_iterations = 100;
  double tolerance = 1e-5;              // on mean log-likelihood change
  double variance_floor_factor = 1e-3;  // times per-dim global variance
  int kmeans_iterations = 10;
  std::uint64_t seed = 1;
};

struct GmmTrainReport {
  std::vector<double> log_likelihood;  // mean per-frame, one entry per EM step
  int iterations = 0;
  bool converged = false;
  bool degenerate_data = false;  // frames (nearly) identical; floor kicked in
};

// k-means++ initialization followed by EM. Deterministic given cfg.seed and
// independent of the worker count. Throws when frames < components.
DiagGmm train_gmm(const Matrix& frames, const GmmTrainConfig& cfg,
                  GmmTrainReport* report = nullptr);

// Pr(k | x): log-space evaluation with max subtraction; sums to one.
std::vector<double> posterior(const DiagGmm& g, std::span<const double> x);

// Row t = posterior(g, frame t). T x M.
Matrix posterior_matrix(const DiagGmm& g, const Matrix& frames);

// Mean per-frame log density; training diagnostic.
double log_likelihood(const DiagGmm& g, const Matrix& frames);

// Flat binary format: magic "AEDGMM1\0", u32 M, u32 D, u32 floor length,
// then float64 weights[M], means[M*D], vars[M*D], floor — exact round-trip.
void save_gmm(const std::filesystem::path& path, const DiagGmm& g);
DiagGmm load_gmm(const std::filesystem::path& path);

// Fingerprint over all parameters (bit patterns); used for cache keys.
std::uint64_t gmm_hash(const DiagGmm& g);

}  // namespace aed
