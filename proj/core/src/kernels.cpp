#include "aed/kernels.hpp"

#include <cmath>

#include "aed/error.hpp"
#include "aed/hashing.hpp"
#include "aed/parallel.hpp"

namespace aed {

namespace {

constexpr std::size_t kTile = 64;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double chi2_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double s = a[i] + b[i];
    if (s > 0.0) {
      const double d = a[i] - b[i];
      acc += d * d / s;
    }
    // s == 0 forces a_i = b_i = 0 on nonnegative inputs: term is 0
  }
  return acc;
}

void check_nonnegative(const FeatureRows& rows, const char* which) {
  for (const auto& r : rows)
    for (double v : r)
      if (v < 0.0)
        throw InvalidArgument(std::string("exp_chi2 kernel requires ") +
                              "nonnegative entries (" + which + ")");
}

double base_eval(KernelKind kind, std::span<const double> f,
                 std::span<const double> g) {
  switch (kind) {
    case KernelKind::linear: return dot(f, g);
    case KernelKind::rbf: return sq_dist(f, g);
    case KernelKind::exp_chi2: return chi2_dist(f, g);
  }
  return 0.0;
}

}  // namespace

std::string_view kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "lk";
    case KernelKind::rbf: return "rk";
    case KernelKind::exp_chi2: return "ck";
  }
  return "?";
}

KernelKind kernel_from_name(std::string_view name) {
  if (name == "lk" || name == "linear") return KernelKind::linear;
  if (name == "rk" || name == "rbf") return KernelKind::rbf;
  if (name == "ck" || name == "expchi2" || name == "exp_chi2")
    return KernelKind::exp_chi2;
  throw InvalidArgument("unknown kernel: " + std::string(name));
}

void KernelSpec::validate() const {
  if (kind != KernelKind::linear && !(gamma > 0.0))
    throw InvalidArgument("kernel: gamma must be > 0");
}

std::uint64_t KernelSpec::hash() const {
  return hash_of(std::string_view("kernel"), static_cast<int>(kind),
                 kind == KernelKind::linear ? 0.0 : gamma);
}

double kernel_eval(const KernelSpec& spec, std::span<const double> f,
                   std::span<const double> g) {
  spec.validate();
  if (f.size() != g.size())
    throw InvalidArgument("kernel_eval: dimension mismatch");
  if (spec.kind == KernelKind::exp_chi2) {
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i] < 0.0 || g[i] < 0.0)
        throw InvalidArgument("exp_chi2 kernel requires nonnegative entries");
  }
  const double base = base_eval(spec.kind, f, g);
  return spec.kind == KernelKind::linear ? base
                                         : std::exp(-spec.gamma * base);
}

std::uint64_t feature_set_hash(const FeatureRows& rows) {
  std::uint64_t h = hash_of(std::string_view("features"),
                            static_cast<std::int64_t>(rows.size()));
  for (const auto& r : rows)
    h = fnv1a(r.data(), r.size() * sizeof(double), h);
  return h;
}

Matrix pairwise_base(KernelKind kind, const FeatureRows& rows,
                     const FeatureRows& cols) {
  const std::size_t n = rows.size();
  const std::size_t mcols = cols.size();
  if (n == 0 || mcols == 0)
    throw InvalidArgument("pairwise_base: empty feature set");
  const std::size_t dim = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != dim)
      throw InvalidArgument("pairwise_base: ragged row feature set");
  for (const auto& c : cols)
    if (c.size() != dim)
      throw InvalidArgument("pairwise_base: row/col dimension mismatch");
  if (kind == KernelKind::exp_chi2) {
    check_nonnegative(rows, "rows");
    check_nonnegative(cols, "cols");
  }

  const bool square = &rows == &cols;
  Matrix out(n, mcols);
  const std::size_t row_tiles = (n + kTile - 1) / kTile;
  const std::size_t col_tiles = (mcols + kTile - 1) / kTile;
  // disjoint output tiles; any worker count produces the same entries
  parallel_blocks(row_tiles * col_tiles, 1,
                  [&](std::size_t, std::size_t tile, std::size_t) {
    const std::size_t tr = tile / col_tiles;
    const std::size_t tc = tile % col_tiles;
    if (square && tc < tr) return;  // mirrored later
    const std::size_t r_end = std::min(n, (tr + 1) * kTile);
    const std::size_t c_end = std::min(mcols, (tc + 1) * kTile);
    for (std::size_t i = tr * kTile; i < r_end; ++i) {
      const std::size_t j0 = (square && tr == tc) ? i : tc * kTile;
      for (std::size_t j = j0; j < c_end; ++j)
        out(i, j) = base_eval(kind, rows[i], cols[j]);
    }
  });
  if (square) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
  }
  return out;
}

Matrix gram_from_base(KernelKind kind, double gamma, const Matrix& base) {
  if (kind == KernelKind::linear) return base;
  if (!(gamma > 0.0)) throw InvalidArgument("gram_from_base: gamma <= 0");
  Matrix out(base.rows(), base.cols());
  for (std::size_t i = 0; i < base.data().size(); ++i)
    out.data()[i] = std::exp(-gamma * base.data()[i]);
  return out;
}

GramMatrix gram(const KernelSpec& spec, const FeatureRows& rows,
                const FeatureRows& cols) {
  spec.validate();
  GramMatrix g;
  g.values = gram_from_base(spec.kind, spec.gamma,
                            pairwise_base(spec.kind, rows, cols));
  g.row_set_hash = feature_set_hash(rows);
  g.col_set_hash = &rows == &cols ? g.row_set_hash : feature_set_hash(cols);
  return g;
}

GramMatrix gram(const KernelSpec& spec, const FeatureRows& rows) {
  return gram(spec, rows, rows);
}

}  // namespace aed
