// Linear, RBF and exponential chi-square kernels plus Gram matrix assembly.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "aed/matrix.hpp"

namespace aed {

enum class KernelKind { linear, rbf, exp_chi2 };

std::string_view kernel_name(KernelKind k);
KernelKind kernel_from_name(std::string_view name);

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double gamma = 1.0;  // ignored for linear

  void validate() const;
  std::uint64_t hash() const;
};

// linear: <f, g>. rbf: exp(-gamma ||f-g||^2).
// exp_chi2: exp(-gamma * sum_i (f_i-g_i)^2 / (f_i+g_i)), zero-denominator
// terms contribute 0; requires nonnegative entries.
double kernel_eval(const KernelSpec& spec, std::span<const double> f,
                   std::span<const double> g);

struct GramMatrix {
  Matrix values;
  std::uint64_t row_set_hash = 0;
  std::uint64_t col_set_hash = 0;
};

using FeatureRows = std::vector<std::vector<double>>;

std::uint64_t feature_set_hash(const FeatureRows& rows);

// Entry (i, j) = kernel_eval(spec, rows[i], cols[j]). The square case with
// identical row/col sets fills the upper triangle and mirrors it.
GramMatrix gram(const KernelSpec& spec, const FeatureRows& rows,
                const FeatureRows& cols);
GramMatrix gram(const KernelSpec& spec, const FeatureRows& rows);  // symmetric

// Gamma-independent pairwise base values: dot products for linear, squared
// euclidean distances for rbf, chi-square distances for exp_chi2. A gamma
// sweep reuses one base via gram_from_base.
Matrix pairwise_base(KernelKind kind, const FeatureRows& rows,
                     const FeatureRows& cols);
Matrix gram_from_base(KernelKind kind, double gamma, const Matrix& base);

}  // namespace aed
