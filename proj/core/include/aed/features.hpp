// Per-clip feature representations over a background GMM: the soft-count
// histogram (alpha) and the four MAP-adapted supervector variants (beta).

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "aed/gmm.hpp"
#include "aed/matrix.hpp"

namespace aed {

enum class FeatureVariant { alpha, beta_m, beta_s, beta_sigma, beta_s_sigma };

std::string_view variant_name(FeatureVariant v);
FeatureVariant variant_from_name(std::string_view name);

// alpha: M; beta_m / beta_s: M*D; beta_sigma / beta_s_sigma: 2*M*D.
std::size_t feature_length(FeatureVariant v, int components, int dim);

struct FeatureVector {
  FeatureVariant variant = FeatureVariant::alpha;
  int components = 0;
  std::vector<double> values;
};

// Per-component soft counts and weighted first/second moments of the frames.
// Components with vanishing count fall back to the background parameters so
// adaptation degrades to the prior.
struct SuffStats {
  std::vector<double> counts;  // n_k
  Matrix mean_acc;             // E_k(x),  M x D
  Matrix sq_acc;               // E_k(x^2), M x D
};

struct AdaptedGmm {
  Matrix means;  // M x D
  Matrix vars;   // M x D
  double relevance = 0.0;
};

// Mean posterior mass per component, L1-normalized (a mathematical no-op,
// applied anyway to pin the contract).
FeatureVector alpha_feature(const DiagGmm& g, const Matrix& frames);

SuffStats sufficient_stats(const DiagGmm& g, const Matrix& frames);

// Relevance-factor blend of clip statistics and background parameters.
// Adapted variances are floored at the background model's floor.
AdaptedGmm map_adapt(const DiagGmm& g, const SuffStats& s, double relevance);

// How adapted variances enter the sigma variants: as standard deviations
// (default) or left as variances.
enum class SigmaEncoding { std_dev, variance };

// beta_m: adapted means concatenated in component order. beta_s: means
// scaled per dimension by sqrt(w_k)/sigma_k (background parameters) first.
// beta_sigma / beta_s_sigma append the adapted sigmas, always unscaled.
FeatureVector beta_feature(const AdaptedGmm& adapted, const DiagGmm& g,
                           FeatureVariant variant,
                           SigmaEncoding enc = SigmaEncoding::std_dev);

// Full per-clip pipeline for any variant.
FeatureVector clip_feature(const DiagGmm& g, const Matrix& frames,
                           FeatureVariant variant, double relevance,
                           SigmaEncoding enc = SigmaEncoding::std_dev);

}  // namespace aed
