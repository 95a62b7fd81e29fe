#include "aed/features.hpp"

#include <cmath>

#include "aed/error.hpp"

namespace aed {

namespace {
constexpr double kTinyCount = 1e-10;
}

std::string_view variant_name(FeatureVariant v) {
  switch (v) {
    case FeatureVariant::alpha: return "alpha";
    case FeatureVariant::beta_m: return "beta_m";
    case FeatureVariant::beta_s: return "beta_s";
    case FeatureVariant::beta_sigma: return "beta_sigma";
    case FeatureVariant::beta_s_sigma: return "beta_s_sigma";
  }
  return "?";
}

FeatureVariant variant_from_name(std::string_view name) {
  if (name == "alpha") return FeatureVariant::alpha;
  if (name == "beta_m" || name == "beta-m") return FeatureVariant::beta_m;
  if (name == "beta_s" || name == "beta-s") return FeatureVariant::beta_s;
  if (name == "beta_sigma" || name == "beta-sigma")
    return FeatureVariant::beta_sigma;
  if (name == "beta_s_sigma" || name == "beta-s-sigma")
    return FeatureVariant::beta_s_sigma;
  throw InvalidArgument("unknown feature variant: " + std::string(name));
}

std::size_t feature_length(FeatureVariant v, int components, int dim) {
  const auto m = static_cast<std::size_t>(components);
  const auto d = static_cast<std::size_t>(dim);
  switch (v) {
    case FeatureVariant::alpha: return m;
    case FeatureVariant::beta_m:
    case FeatureVariant::beta_s: return m * d;
    case FeatureVariant::beta_sigma:
    case FeatureVariant::beta_s_sigma: return 2 * m * d;
  }
  return 0;
}

FeatureVector alpha_feature(const DiagGmm& g, const Matrix& frames) {
  if (frames.rows() == 0) throw InvalidArgument("alpha_feature: no frames");
  const Matrix post = posterior_matrix(g, frames);
  const std::size_t m = post.cols();
  const std::size_t t = post.rows();

  FeatureVector f;
  f.variant = FeatureVariant::alpha;
  f.components = g.components();
  f.values.assign(m, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    auto row = post.row(i);
    for (std::size_t k = 0; k < m; ++k) f.values[k] += row[k];
  }
  const double inv_t = 1.0 / static_cast<double>(t);
  double sum = 0.0;
  for (double& v : f.values) {
    v *= inv_t;
    sum += v;
  }
  for (double& v : f.values) v /= sum;  // idempotent up to rounding
  return f;
}

SuffStats sufficient_stats(const DiagGmm& g, const Matrix& frames) {
  if (frames.rows() == 0) throw InvalidArgument("sufficient_stats: no frames");
  const Matrix post = posterior_matrix(g, frames);
  const std::size_t m = post.cols();
  const std::size_t d = frames.cols();
  const std::size_t t = frames.rows();

  SuffStats s;
  s.counts.assign(m, 0.0);
  s.mean_acc = Matrix(m, d);
  s.sq_acc = Matrix(m, d);
  for (std::size_t i = 0; i < t; ++i) {
    auto frame = frames.row(i);
    auto gamma = post.row(i);
    for (std::size_t k = 0; k < m; ++k) {
      const double gk = gamma[k];
      s.counts[k] += gk;
      auto sx = s.mean_acc.row(k);
      auto sx2 = s.sq_acc.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        const double x = frame[j];
        sx[j] += gk * x;
        sx2[j] += gk * x * x;
      }
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    auto sx = s.mean_acc.row(k);
    auto sx2 = s.sq_acc.row(k);
    if (s.counts[k] < kTinyCount) {
      // no data mass: stats fall back to the background parameters
      auto mu = g.means.row(k);
      auto var = g.vars.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        sx[j] = mu[j];
        sx2[j] = var[j] + mu[j] * mu[j];
      }
    } else {
      const double inv = 1.0 / s.counts[k];
      for (std::size_t j = 0; j < d; ++j) {
        sx[j] *= inv;
        sx2[j] *= inv;
      }
    }
  }
  return s;
}

AdaptedGmm map_adapt(const DiagGmm& g, const SuffStats& s, double relevance) {
  if (!(relevance > 0.0)) throw InvalidArgument("map_adapt: relevance <= 0");
  const std::size_t m = static_cast<std::size_t>(g.components());
  const std::size_t d = static_cast<std::size_t>(g.dim());
  if (s.counts.size() != m || s.mean_acc.rows() != m || s.mean_acc.cols() != d)
    throw InvalidArgument("map_adapt: stats shape mismatch");

  AdaptedGmm a;
  a.relevance = relevance;
  a.means = Matrix(m, d);
  a.vars = Matrix(m, d);
  for (std::size_t k = 0; k < m; ++k) {
    const double n = s.counts[k];
    const double data_w = n / (n + relevance);
    const double prior_w = relevance / (n + relevance);
    auto mu = g.means.row(k);
    auto var = g.vars.row(k);
    auto ex = s.mean_acc.row(k);
    auto ex2 = s.sq_acc.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      const double mean = data_w * ex[j] + prior_w * mu[j];
      double v = data_w * ex2[j] + prior_w * (var[j] + mu[j] * mu[j]) -
                 mean * mean;
      const double floor =
          g.var_floor.size() == d ? g.var_floor[j] : 1e-10;
      a.means(k, j) = mean;
      a.vars(k, j) = std::max(v, floor);
    }
  }
  return a;
}

FeatureVector beta_feature(const AdaptedGmm& adapted, const DiagGmm& g,
                           FeatureVariant variant, SigmaEncoding enc) {
  if (variant == FeatureVariant::alpha)
    throw InvalidArgument("beta_feature: alpha is not a beta variant");
  const std::size_t m = static_cast<std::size_t>(g.components());
  const std::size_t d = static_cast<std::size_t>(g.dim());
  if (adapted.means.rows() != m || adapted.means.cols() != d)
    throw InvalidArgument("beta_feature: adapted/background shape mismatch");

  const bool scaled = variant == FeatureVariant::beta_s ||
                      variant == FeatureVariant::beta_s_sigma;
  const bool with_sigma = variant == FeatureVariant::beta_sigma ||
                          variant == FeatureVariant::beta_s_sigma;

  FeatureVector f;
  f.variant = variant;
  f.components = g.components();
  f.values.reserve(feature_length(variant, g.components(), g.dim()));
  for (std::size_t k = 0; k < m; ++k) {
    const double sw = std::sqrt(g.weights[k]);
    auto mu = adapted.means.row(k);
    auto bg_var = g.vars.row(k);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = scaled ? sw * mu[j] / std::sqrt(bg_var[j]) : mu[j];
      f.values.push_back(v);
    }
  }
  if (with_sigma) {
    for (std::size_t k = 0; k < m; ++k) {
      auto var = adapted.vars.row(k);
      for (std::size_t j = 0; j < d; ++j)
        f.values.push_back(enc == SigmaEncoding::std_dev ? std::sqrt(var[j])
                                                         : var[j]);
    }
  }
  return f;
}

FeatureVector clip_feature(const DiagGmm& g, const Matrix& frames,
                           FeatureVariant variant, double relevance,
                           SigmaEncoding enc) {
  if (variant == FeatureVariant::alpha) return alpha_feature(g, frames);
  const SuffStats s = sufficient_stats(g, frames);
  const AdaptedGmm a = map_adapt(g, s, relevance);
  return beta_feature(a, g, variant, enc);
}

}  // namespace aed
