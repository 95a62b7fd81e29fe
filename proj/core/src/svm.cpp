#include "aed/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "aed/error.hpp"
#include "aed/eval.hpp"
#include "aed/hashing.hpp"

namespace aed {

namespace {

constexpr double kQuadFloor = 1e-12;

void check_rows_rectangular(const FeatureRows& rows) {
  if (rows.empty()) throw InvalidArgument("standardizer: empty feature set");
  for (const auto& r : rows)
    if (r.size() != rows.front().size())
      throw InvalidArgument("standardizer: ragged feature rows");
}

}  // namespace

Standardizer fit_standardizer(const FeatureRows& rows) {
  check_rows_rectangular(rows);
  const std::size_t d = rows.front().size();
  const double n = static_cast<double>(rows.size());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.inv_scale.assign(d, 1.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r[j] - s.mean[j];
      var[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    if (sd > 1e-12) s.inv_scale[j] = 1.0 / sd;
  }
  return s;
}

std::vector<double> standardize(const Standardizer& s,
                                std::span<const double> row) {
  if (row.size() != s.mean.size())
    throw InvalidArgument("standardizer: dimension mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    out[j] = (row[j] - s.mean[j]) * s.inv_scale[j];
  return out;
}

FeatureRows standardize(const Standardizer& s, const FeatureRows& rows) {
  FeatureRows out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(standardize(s, r));
  return out;
}

CsvcSolution train_csvc(const GramMatrix& gm, const std::vector<int>& y,
                        double c, double epsilon) {
  const Matrix& k = gm.values;
  const std::size_t n = y.size();
  if (k.rows() != k.cols() || k.rows() != n)
    throw InvalidArgument("train_csvc: Gram matrix does not match labels");
  if (!(c > 0.0)) throw InvalidArgument("train_csvc: C must be positive");
  if (!(epsilon > 0.0)) throw InvalidArgument("train_csvc: bad tolerance");
  std::size_t pos = 0, neg = 0;
  for (int v : y) {
    if (v == 1)
      ++pos;
    else if (v == -1)
      ++neg;
    else
      throw InvalidArgument("train_csvc: labels must be +1 or -1");
  }
  if (pos == 0 || neg == 0)
    throw InvalidArgument("train_csvc: both classes required");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(k(i, j) - k(j, i)) >
          1e-9 * std::max(1.0, std::abs(k(i, j))))
        throw InvalidArgument("train_csvc: Gram matrix not symmetric");

  // Dual: min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0, with Q_ij = y_i y_j K_ij.
  // Gradient G = Qa - e starts at -e; the pair update moves a_i by y_i*t and
  // a_j by -y_j*t, which keeps y'a fixed.
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  const auto yd = [&](std::size_t i) { return static_cast<double>(y[i]); };

  SmoReport rep;
  const std::size_t max_iter =
      std::max<std::size_t>(10'000'000, 100 * n);
  double m_up = 0.0, m_low = 0.0;
  while (rep.iterations < max_iter) {
    // Maximal violating pair: i maximizes -y_i G_i over the up set,
    // j minimizes it over the low set. First hit wins on ties.
    std::size_t i = n, j = n;
    m_up = -std::numeric_limits<double>::infinity();
    m_low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -yd(t) * grad[t];
      const bool up = y[t] == 1 ? alpha[t] < c : alpha[t] > 0.0;
      const bool low = y[t] == 1 ? alpha[t] > 0.0 : alpha[t] < c;
      if (up && v > m_up) {
        m_up = v;
        i = t;
      }
      if (low && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    if (i == n || j == n || m_up - m_low < epsilon) {
      rep.converged = i != n && j != n;
      break;
    }
    ++rep.iterations;

    double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
    if (quad <= 0.0) quad = kQuadFloor;
    double t = (m_up - m_low) / quad;
    t = std::min(t, y[i] == 1 ? c - alpha[i] : alpha[i]);
    t = std::min(t, y[j] == 1 ? alpha[j] : c - alpha[j]);

    const double old_ai = alpha[i], old_aj = alpha[j];
    alpha[i] = std::clamp(alpha[i] + yd(i) * t, 0.0, c);
    alpha[j] = std::clamp(alpha[j] - yd(j) * t, 0.0, c);
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t a = 0; a < n; ++a)
      grad[a] += yd(a) * (yd(i) * k(a, i) * dai + yd(j) * k(a, j) * daj);
  }
  rep.kkt_gap = m_up - m_low;

  CsvcSolution sol;
  sol.c = c;
  sol.report = rep;
  double free_bias = 0.0;
  std::size_t free_count = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (alpha[a] > 0.0) {
      sol.support.push_back(a);
      sol.dual_coefs.push_back(alpha[a] * yd(a));
    }
    if (alpha[a] > 0.0 && alpha[a] < c) {
      free_bias += -yd(a) * grad[a];
      ++free_count;
    }
    sol.report.objective += 0.5 * alpha[a] * (grad[a] - 1.0);
  }
  sol.bias = free_count > 0 ? free_bias / static_cast<double>(free_count)
                            : 0.5 * (m_up + m_low);
  return sol;
}

std::vector<double> decision_scores(const CsvcSolution& sol,
                                    const Matrix& k_test_support) {
  if (k_test_support.cols() != sol.support.size())
    throw InvalidArgument("decision_scores: columns do not match support set");
  std::vector<double> scores(k_test_support.rows());
  for (std::size_t t = 0; t < k_test_support.rows(); ++t) {
    double f = sol.bias;
    const auto row = k_test_support.row(t);
    for (std::size_t s = 0; s < sol.dual_coefs.size(); ++s)
      f += sol.dual_coefs[s] * row[s];
    scores[t] = f;
  }
  return scores;
}

void CvGrid::validate() const {
  if (c_values.empty() || gamma_values.empty())
    throw InvalidArgument("cv grid: empty candidate list");
  if (folds < 2) throw InvalidArgument("cv grid: need at least 2 folds");
  for (double v : c_values)
    if (!(v > 0.0)) throw InvalidArgument("cv grid: C must be positive");
  for (double v : gamma_values)
    if (!(v > 0.0)) throw InvalidArgument("cv grid: gamma must be positive");
}

CvGrid default_cv_grid() {
  CvGrid g;
  for (int e = -5; e <= 15; e += 2) g.c_values.push_back(std::ldexp(1.0, e));
  for (int e = -15; e <= 3; e += 2)
    g.gamma_values.push_back(std::ldexp(1.0, e));
  g.folds = 3;
  return g;
}

namespace {

Matrix slice(const Matrix& m, const std::vector<std::size_t>& rows,
             const std::vector<std::size_t>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c)
      out(r, c) = m(rows[r], cols[c]);
  return out;
}

Matrix pick_columns(const Matrix& m, const std::vector<std::size_t>& cols) {
  Matrix out(m.rows(), cols.size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(r, cols[c]);
  return out;
}

}  // namespace

GridSearchResult grid_search_cv(const FeatureRows& rows,
                                const std::vector<int>& y, KernelKind kind,
                                const CvGrid& grid, std::uint64_t seed) {
  grid.validate();
  const std::size_t n = rows.size();
  if (y.size() != n)
    throw InvalidArgument("grid_search_cv: labels do not match rows");
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < n; ++i) (y[i] == 1 ? pos_idx : neg_idx).push_back(i);
  const auto folds = static_cast<std::size_t>(grid.folds);
  if (pos_idx.size() < folds || neg_idx.size() < folds)
    throw InvalidArgument("grid_search_cv: class too small to stratify");

  GridSearchResult res;
  res.c_values = grid.c_values;
  std::sort(res.c_values.begin(), res.c_values.end());
  res.gamma_values =
      kind == KernelKind::linear ? std::vector<double>{1.0} : grid.gamma_values;
  std::sort(res.gamma_values.begin(), res.gamma_values.end());
  res.mean_ap = Matrix(res.c_values.size(), res.gamma_values.size());

  // Round-robin over per-class shuffles keeps every inner fold stratified.
  std::vector<std::size_t> fold_of(n, 0);
  {
    std::mt19937_64 rng_pos(derive_seed(seed, "cv-pos", 0));
    std::mt19937_64 rng_neg(derive_seed(seed, "cv-neg", 0));
    std::shuffle(pos_idx.begin(), pos_idx.end(), rng_pos);
    std::shuffle(neg_idx.begin(), neg_idx.end(), rng_neg);
    for (std::size_t i = 0; i < pos_idx.size(); ++i)
      fold_of[pos_idx[i]] = i % folds;
    for (std::size_t i = 0; i < neg_idx.size(); ++i)
      fold_of[neg_idx[i]] = i % folds;
  }

  const Matrix base = pairwise_base(kind, rows, rows);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < n; ++i)
      (fold_of[i] == f ? val_idx : train_idx).push_back(i);
    const Matrix base_tr = slice(base, train_idx, train_idx);
    const Matrix base_val = slice(base, val_idx, train_idx);
    std::vector<int> y_tr(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) y_tr[i] = y[train_idx[i]];

    for (std::size_t gi = 0; gi < res.gamma_values.size(); ++gi) {
      const double gamma = res.gamma_values[gi];
      GramMatrix k_tr{gram_from_base(kind, gamma, base_tr), 0, 0};
      const Matrix k_val = gram_from_base(kind, gamma, base_val);
      for (std::size_t ci = 0; ci < res.c_values.size(); ++ci) {
        const CsvcSolution sol = train_csvc(k_tr, y_tr, res.c_values[ci]);
        const auto scores = decision_scores(sol, pick_columns(k_val, sol.support));
        ScoredSet val_set;
        for (std::size_t v = 0; v < val_idx.size(); ++v)
          val_set.clips.push_back({std::to_string(val_idx[v]), scores[v],
                                   y[val_idx[v]] == 1});
        res.mean_ap(ci, gi) += average_precision(val_set);
      }
    }
  }
  for (double& v : res.mean_ap.data()) v /= static_cast<double>(folds);

  res.best_mean_ap = -1.0;
  for (std::size_t ci = 0; ci < res.c_values.size(); ++ci)
    for (std::size_t gi = 0; gi < res.gamma_values.size(); ++gi)
      if (res.mean_ap(ci, gi) > res.best_mean_ap) {
        res.best_mean_ap = res.mean_ap(ci, gi);
        res.best_c = res.c_values[ci];
        res.best_gamma = res.gamma_values[gi];
      }
  return res;
}

SvmModel train_event_detector(const std::string& event,
                              const std::vector<std::string>& clip_ids,
                              const std::vector<std::string>& labels,
                              const FeatureRows& rows, FeatureVariant variant,
                              const DetectorConfig& cfg,
                              GridSearchResult* search) {
  const std::size_t n = rows.size();
  if (clip_ids.size() != n || labels.size() != n)
    throw InvalidArgument("train_event_detector: ids/labels/rows mismatch");
  if (cfg.kernel == KernelKind::exp_chi2 && variant != FeatureVariant::alpha)
    throw InvalidArgument(
        "train_event_detector: chi-square kernel needs nonnegative features; "
        "use the alpha variant");

  std::vector<int> y(n);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i] == event ? 1 : -1;
    pos += y[i] == 1 ? 1 : 0;
  }
  if (pos == 0)
    throw InvalidArgument("train_event_detector: event absent from training "
                          "folds: " + event);
  if (pos == n)
    throw InvalidArgument("train_event_detector: no negative clips for " +
                          event);

  SvmModel model;
  model.variant = variant;
  model.kernel.kind = cfg.kernel;
  const FeatureRows* train = &rows;
  FeatureRows scaled;
  if (variant != FeatureVariant::alpha) {
    model.standardizer = fit_standardizer(rows);
    scaled = standardize(*model.standardizer, rows);
    train = &scaled;
  }

  GridSearchResult found =
      grid_search_cv(*train, y, cfg.kernel, cfg.grid, cfg.seed);
  model.c = found.best_c;
  model.kernel.gamma = found.best_gamma;

  const GramMatrix k = gram(model.kernel, *train);
  const CsvcSolution sol = train_csvc(k, y, model.c, cfg.epsilon);
  model.bias = sol.bias;
  model.dual_coefs = sol.dual_coefs;
  for (std::size_t s : sol.support) {
    model.support_ids.push_back(clip_ids[s]);
    model.support_features.push_back((*train)[s]);
  }
  if (search != nullptr) *search = std::move(found);
  return model;
}

std::vector<double> score_features(const SvmModel& m, const FeatureRows& rows) {
  if (rows.empty()) return {};
  const FeatureRows* test = &rows;
  FeatureRows scaled;
  if (m.standardizer) {
    scaled = standardize(*m.standardizer, rows);
    test = &scaled;
  }
  const GramMatrix k = gram(m.kernel, *test, m.support_features);
  std::vector<double> scores(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    double f = m.bias;
    for (std::size_t s = 0; s < m.dual_coefs.size(); ++s)
      f += m.dual_coefs[s] * k.values(t, s);
    scores[t] = f;
  }
  return scores;
}

namespace {

constexpr char kSvmMagic[8] = {'A', 'E', 'D', 'S', 'V', 'M', '0', '1'};

void put_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_f64(std::ofstream& f, double v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_doubles(std::ofstream& f, const std::vector<double>& v) {
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t get_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

double get_f64(std::ifstream& f) {
  double v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void get_doubles(std::ifstream& f, std::vector<double>& v) {
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_svm(const std::filesystem::path& path, const SvmModel& m) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("svm: cannot write " + path.string());
  f.write(kSvmMagic, sizeof(kSvmMagic));
  put_u32(f, static_cast<std::uint32_t>(m.kernel.kind));
  put_f64(f, m.kernel.gamma);
  put_u32(f, static_cast<std::uint32_t>(m.variant));
  put_f64(f, m.c);
  put_f64(f, m.bias);
  const auto n = static_cast<std::uint32_t>(m.support_ids.size());
  const auto dim = static_cast<std::uint32_t>(
      m.support_features.empty() ? 0 : m.support_features.front().size());
  put_u32(f, n);
  put_u32(f, dim);
  put_u32(f, m.standardizer ? 1 : 0);
  for (const std::string& id : m.support_ids) {
    put_u32(f, static_cast<std::uint32_t>(id.size()));
    f.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  put_doubles(f, m.dual_coefs);
  for (const auto& row : m.support_features) put_doubles(f, row);
  if (m.standardizer) {
    put_doubles(f, m.standardizer->mean);
    put_doubles(f, m.standardizer->inv_scale);
  }
  if (!f) throw IoError("svm: write failure on " + path.string());
}

SvmModel load_svm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("svm: cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kSvmMagic, sizeof(magic)) != 0)
    throw FormatError("svm: bad magic in " + path.string());
  SvmModel m;
  m.kernel.kind = static_cast<KernelKind>(get_u32(f));
  m.kernel.gamma = get_f64(f);
  m.variant = static_cast<FeatureVariant>(get_u32(f));
  m.c = get_f64(f);
  m.bias = get_f64(f);
  const std::uint32_t n = get_u32(f);
  const std::uint32_t dim = get_u32(f);
  const std::uint32_t has_std = get_u32(f);
  if (!f) throw FormatError("svm: bad header in " + path.string());
  m.support_ids.resize(n);
  for (std::string& id : m.support_ids) {
    const std::uint32_t len = get_u32(f);
    if (!f || len > (1u << 20)) throw FormatError("svm: bad id length");
    id.resize(len);
    f.read(id.data(), static_cast<std::streamsize>(len));
  }
  m.dual_coefs.resize(n);
  get_doubles(f, m.dual_coefs);
  m.support_features.assign(n, std::vector<double>(dim));
  for (auto& row : m.support_features) get_doubles(f, row);
  if (has_std != 0) {
    Standardizer s;
    s.mean.resize(dim);
    s.inv_scale.resize(dim);
    get_doubles(f, s.mean);
    get_doubles(f, s.inv_scale);
    m.standardizer = std::move(s);
  }
  if (!f) throw FormatError("svm: truncated file " + path.string());
  m.kernel.validate();
  return m;
}

}  // namespace aed
