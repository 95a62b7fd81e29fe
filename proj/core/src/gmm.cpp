#include "aed/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "aed/error.hpp"
#include "aed/hashing.hpp"
#include "aed/parallel.hpp"

namespace aed {

namespace {

constexpr double kTinyCount = 1e-10;
constexpr double kAbsoluteVarFloor = 1e-10;
constexpr std::size_t kEStepBlock = 4096;

// Per-component constants for log N(x; mu_k, sigma_k^2) + log w_k.
struct ScoreTable {
  std::vector<double> log_w_norm;  // log w_k - 0.5 sum_d log(2 pi var_kd)
  Matrix inv_var;                  // M x D

  explicit ScoreTable(const DiagGmm& g)
      : inv_var(g.means.rows(), g.means.cols()) {
    const int m = g.components();
    const int d = g.dim();
    log_w_norm.resize(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
      double log_det = 0.0;
      for (int j = 0; j < d; ++j) {
        const double v = g.vars(static_cast<std::size_t>(k),
                                static_cast<std::size_t>(j));
        log_det += std::log(2.0 * std::numbers::pi * v);
        inv_var(static_cast<std::size_t>(k), static_cast<std::size_t>(j)) =
            1.0 / v;
      }
      const double w = g.weights[static_cast<std::size_t>(k)];
      log_w_norm[static_cast<std::size_t>(k)] =
          (w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity()) -
          0.5 * log_det;
    }
  }

  // Fills log joint densities; returns their max.
  double log_joint(const DiagGmm& g, std::span<const double> x,
                   std::span<double> out) const {
    const int m = g.components();
    const int d = g.dim();
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
      const double* mu = g.means.row(static_cast<std::size_t>(k)).data();
      const double* iv = inv_var.row(static_cast<std::size_t>(k)).data();
      double q = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = x[static_cast<std::size_t>(j)] - mu[j];
        q += diff * diff * iv[j];
      }
      const double v = log_w_norm[static_cast<std::size_t>(k)] - 0.5 * q;
      out[static_cast<std::size_t>(k)] = v;
      best = std::max(best, v);
    }
    return best;
  }
};

void check_frames(const Matrix& frames) {
  for (double v : frames.data())
    if (!std::isfinite(v))
      throw InvalidArgument("gmm: frames contain non-finite values");
}

// Seeded k-means++ centers followed by Lloyd iterations.
Matrix kmeans_init(const Matrix& frames, int m, int lloyd_iters,
                   std::mt19937_64& rng) {
  const std::size_t t = frames.rows();
  const std::size_t d = frames.cols();
  Matrix centers(static_cast<std::size_t>(m), d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto sq_dist = [&](std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      const double diff = a[j] - b[j];
      acc += diff * diff;
    }
    return acc;
  };

  const std::size_t first =
      std::min(t - 1, static_cast<std::size_t>(unit(rng) * t));
  std::copy_n(frames.row(first).begin(), d, centers.row(0).begin());

  std::vector<double> best(t);
  for (std::size_t i = 0; i < t; ++i)
    best[i] = sq_dist(frames.row(i), centers.row(0));

  for (int k = 1; k < m; ++k) {
    double total = 0.0;
    for (double v : best) total += v;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < t; ++i) {
        acc += best[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      // all mass collapsed; spread deterministically
      pick = (static_cast<std::size_t>(k) * t) / static_cast<std::size_t>(m);
    }
    std::copy_n(frames.row(pick).begin(), d,
                centers.row(static_cast<std::size_t>(k)).begin());
    for (std::size_t i = 0; i < t; ++i)
      best[i] = std::min(best[i],
                         sq_dist(frames.row(i),
                                 centers.row(static_cast<std::size_t>(k))));
  }

  std::vector<int> assign(t, 0);
  for (int iter = 0; iter < lloyd_iters; ++iter) {
    for (std::size_t i = 0; i < t; ++i) {
      double bd = std::numeric_limits<double>::infinity();
      int bk = 0;
      for (int k = 0; k < m; ++k) {
        const double dist =
            sq_dist(frames.row(i), centers.row(static_cast<std::size_t>(k)));
        if (dist < bd) {
          bd = dist;
          bk = k;
        }
      }
      assign[i] = bk;
    }
    Matrix sums(static_cast<std::size_t>(m), d);
    std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
    for (std::size_t i = 0; i < t; ++i) {
      auto dst = sums.row(static_cast<std::size_t>(assign[i]));
      auto src = frames.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    for (int k = 0; k < m; ++k) {
      if (counts[static_cast<std::size_t>(k)] == 0) continue;  // keep center
      auto dst = centers.row(static_cast<std::size_t>(k));
      auto src = sums.row(static_cast<std::size_t>(k));
      const double inv = 1.0 / static_cast<double>(
                                   counts[static_cast<std::size_t>(k)]);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] * inv;
    }
  }
  return centers;
}

struct Accumulator {
  double log_lik = 0.0;
  std::vector<double> counts;
  Matrix sum_x;   // M x D
  Matrix sum_x2;  // M x D

  Accumulator(int m, std::size_t d)
      : counts(static_cast<std::size_t>(m), 0.0),
        sum_x(static_cast<std::size_t>(m), d),
        sum_x2(static_cast<std::size_t>(m), d) {}
};

}  // namespace

void DiagGmm::validate() const {
  const int m = components();
  if (m < 1) throw InvalidArgument("gmm: no components");
  if (means.rows() != static_cast<std::size_t>(m) ||
      vars.rows() != static_cast<std::size_t>(m) ||
      means.cols() != vars.cols())
    throw InvalidArgument("gmm: parameter shape mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InvalidArgument("gmm: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidArgument("gmm: weights sum to " + std::to_string(sum));
  for (double v : vars.data())
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidArgument("gmm: non-positive variance");
}

std::vector<double> posterior(const DiagGmm& g, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(g.dim()))
    throw InvalidArgument("posterior: dimension mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("posterior: non-finite input");
  const ScoreTable table(g);
  const std::size_t m = static_cast<std::size_t>(g.components());
  std::vector<double> out(m);
  const double best = table.log_joint(g, x, out);
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - best);
    sum += v;
  }
  for (double& v : out) v /= sum;
  return out;
}

Matrix posterior_matrix(const DiagGmm& g, const Matrix& frames) {
  if (frames.rows() == 0) throw InvalidArgument("posterior_matrix: no frames");
  if (frames.cols() != static_cast<std::size_t>(g.dim()))
    throw InvalidArgument("posterior_matrix: dimension mismatch");
  const ScoreTable table(g);
  const std::size_t m = static_cast<std::size_t>(g.components());
  Matrix out(frames.rows(), m);
  parallel_blocks(frames.rows(), kEStepBlock,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t t = begin; t < end; ++t) {
                      auto row = out.row(t);
                      const double best = table.log_joint(g, frames.row(t), row);
                      double sum = 0.0;
                      for (double& v : row) {
                        v = std::exp(v - best);
                        sum += v;
                      }
                      for (double& v : row) v /= sum;
                    }
                  });
  return out;
}

double log_likelihood(const DiagGmm& g, const Matrix& frames) {
  if (frames.rows() == 0) throw InvalidArgument("log_likelihood: no frames");
  if (frames.cols() != static_cast<std::size_t>(g.dim()))
    throw InvalidArgument("log_likelihood: dimension mismatch");
  const ScoreTable table(g);
  const std::size_t m = static_cast<std::size_t>(g.components());
  std::vector<double> buf(m);
  double total = 0.0;
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const double best = table.log_joint(g, frames.row(t), buf);
    double sum = 0.0;
    for (double v : buf) sum += std::exp(v - best);
    total += best + std::log(sum);
  }
  return total / static_cast<double>(frames.rows());
}

DiagGmm train_gmm(const Matrix& frames, const GmmTrainConfig& cfg,
                  GmmTrainReport* report) {
  if (cfg.components < 1) throw InvalidArgument("train_gmm: components < 1");
  if (cfg.tolerance <= 0.0) throw InvalidArgument("train_gmm: tolerance <= 0");
  const std::size_t t = frames.rows();
  const std::size_t d = frames.cols();
  if (t < static_cast<std::size_t>(cfg.components))
    throw InvalidArgument("train_gmm: fewer frames (" + std::to_string(t) +
                          ") than components (" +
                          std::to_string(cfg.components) + ")");
  check_frames(frames);

  GmmTrainReport local;
  GmmTrainReport& rep = report ? *report : local;
  rep = GmmTrainReport{};

  // Global per-dimension variance sets the floor.
  std::vector<double> gmean(d, 0.0), gvar(d, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    auto row = frames.row(i);
    for (std::size_t j = 0; j < d; ++j) gmean[j] += row[j];
  }
  for (double& v : gmean) v /= static_cast<double>(t);
  for (std::size_t i = 0; i < t; ++i) {
    auto row = frames.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - gmean[j];
      gvar[j] += diff * diff;
    }
  }
  for (double& v : gvar) v /= static_cast<double>(t);

  std::vector<double> floor(d);
  double max_gvar = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    floor[j] = std::max(cfg.variance_floor_factor * gvar[j], kAbsoluteVarFloor);
    max_gvar = std::max(max_gvar, gvar[j]);
  }
  if (max_gvar < 1e-12) rep.degenerate_data = true;

  const int m = cfg.components;
  std::mt19937_64 rng(cfg.seed);
  DiagGmm g;
  g.var_floor = floor;
  g.weights.assign(static_cast<std::size_t>(m), 0.0);
  g.means = kmeans_init(frames, m, cfg.kmeans_iterations, rng);
  g.vars = Matrix(static_cast<std::size_t>(m), d);

  // Initial weights/variances from the hard k-means assignment.
  {
    std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
    Matrix sums(static_cast<std::size_t>(m), d), sq(static_cast<std::size_t>(m), d);
    for (std::size_t i = 0; i < t; ++i) {
      auto row = frames.row(i);
      double bd = std::numeric_limits<double>::infinity();
      int bk = 0;
      for (int k = 0; k < m; ++k) {
        auto c = g.means.row(static_cast<std::size_t>(k));
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = row[j] - c[j];
          dist += diff * diff;
        }
        if (dist < bd) {
          bd = dist;
          bk = k;
        }
      }
      ++counts[static_cast<std::size_t>(bk)];
      auto s = sums.row(static_cast<std::size_t>(bk));
      auto s2 = sq.row(static_cast<std::size_t>(bk));
      for (std::size_t j = 0; j < d; ++j) {
        s[j] += row[j];
        s2[j] += row[j] * row[j];
      }
    }
    for (int k = 0; k < m; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const std::size_t n = counts[ks];
      g.weights[ks] = std::max<double>(static_cast<double>(n), 1.0);
      for (std::size_t j = 0; j < d; ++j) {
        if (n > 0) {
          const double mean = sums(ks, j) / static_cast<double>(n);
          g.means(ks, j) = mean;
          g.vars(ks, j) =
              std::max(sq(ks, j) / static_cast<double>(n) - mean * mean,
                       floor[j]);
        } else {
          g.vars(ks, j) = std::max(gvar[j], floor[j]);
        }
      }
    }
    double wsum = 0.0;
    for (double w : g.weights) wsum += w;
    for (double& w : g.weights) w /= wsum;
  }

  // EM. The per-iteration likelihood is evaluated with the pre-update
  // parameters, which is the quantity EM guarantees non-decreasing.
  const std::size_t n_blocks = (t + kEStepBlock - 1) / kEStepBlock;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const ScoreTable table(g);
    std::vector<Accumulator> partials(n_blocks, Accumulator(m, d));
    parallel_blocks(t, kEStepBlock, [&](std::size_t b, std::size_t begin,
                                        std::size_t end) {
      Accumulator& acc = partials[b];
      std::vector<double> lj(static_cast<std::size_t>(m));
      for (std::size_t i = begin; i < end; ++i) {
        auto row = frames.row(i);
        const double best = table.log_joint(g, row, lj);
        double sum = 0.0;
        for (double& v : lj) {
          v = std::exp(v - best);
          sum += v;
        }
        acc.log_lik += best + std::log(sum);
        const double inv = 1.0 / sum;
        for (int k = 0; k < m; ++k) {
          const auto ks = static_cast<std::size_t>(k);
          const double gamma = lj[ks] * inv;
          acc.counts[ks] += gamma;
          auto sx = acc.sum_x.row(ks);
          auto sx2 = acc.sum_x2.row(ks);
          for (std::size_t j = 0; j < d; ++j) {
            const double x = row[j];
            sx[j] += gamma * x;
            sx2[j] += gamma * x * x;
          }
        }
      }
    });

    // Ordered reduction keeps the result independent of the worker count.
    Accumulator total(m, d);
    for (const Accumulator& p : partials) {
      total.log_lik += p.log_lik;
      for (int k = 0; k < m; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        total.counts[ks] += p.counts[ks];
        auto dx = total.sum_x.row(ks);
        auto dx2 = total.sum_x2.row(ks);
        auto px = p.sum_x.row(ks);
        auto px2 = p.sum_x2.row(ks);
        for (std::size_t j = 0; j < d; ++j) {
          dx[j] += px[j];
          dx2[j] += px2[j];
        }
      }
    }

    const double mean_ll = total.log_lik / static_cast<double>(t);
    rep.log_likelihood.push_back(mean_ll);
    rep.iterations = iter + 1;

    double wsum = 0.0;
    for (int k = 0; k < m; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const double n = total.counts[ks];
      if (n < kTinyCount) continue;  // starved component keeps its parameters
      for (std::size_t j = 0; j < d; ++j) {
        const double mean = total.sum_x(ks, j) / n;
        g.means(ks, j) = mean;
        g.vars(ks, j) =
            std::max(total.sum_x2(ks, j) / n - mean * mean, floor[j]);
      }
    }
    for (int k = 0; k < m; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      g.weights[ks] = total.counts[ks] / static_cast<double>(t);
      wsum += g.weights[ks];
    }
    for (double& w : g.weights) w /= wsum;

    if (std::abs(mean_ll - prev_ll) < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    prev_ll = mean_ll;
  }

  g.validate();
  return g;
}

namespace {
constexpr char kGmmMagic[8] = {'A', 'E', 'D', 'G', 'M', 'M', '1', '\0'};
}

void save_gmm(const std::filesystem::path& path, const DiagGmm& g) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("gmm: cannot write " + path.string());
  f.write(kGmmMagic, sizeof(kGmmMagic));
  const std::uint32_t m = static_cast<std::uint32_t>(g.components());
  const std::uint32_t d = static_cast<std::uint32_t>(g.dim());
  const std::uint32_t fl = static_cast<std::uint32_t>(g.var_floor.size());
  f.write(reinterpret_cast<const char*>(&m), sizeof(m));
  f.write(reinterpret_cast<const char*>(&d), sizeof(d));
  f.write(reinterpret_cast<const char*>(&fl), sizeof(fl));
  auto put = [&](const std::vector<double>& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  put(g.weights);
  put(g.means.data());
  put(g.vars.data());
  put(g.var_floor);
  if (!f) throw IoError("gmm: write failure on " + path.string());
}

DiagGmm load_gmm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("gmm: cannot open " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kGmmMagic, sizeof(magic)) != 0)
    throw FormatError("gmm: bad magic in " + path.string());
  std::uint32_t m = 0, d = 0, fl = 0;
  f.read(reinterpret_cast<char*>(&m), sizeof(m));
  f.read(reinterpret_cast<char*>(&d), sizeof(d));
  f.read(reinterpret_cast<char*>(&fl), sizeof(fl));
  if (!f || m == 0 || d == 0) throw FormatError("gmm: bad header");
  DiagGmm g;
  g.weights.resize(m);
  g.means = Matrix(m, d);
  g.vars = Matrix(m, d);
  g.var_floor.resize(fl);
  auto get = [&](std::vector<double>& v) {
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  get(g.weights);
  get(g.means.data());
  get(g.vars.data());
  get(g.var_floor);
  if (!f) throw FormatError("gmm: truncated file " + path.string());
  g.validate();
  return g;
}

std::uint64_t gmm_hash(const DiagGmm& g) {
  std::uint64_t h = hash_of(std::string_view("gmm"), g.components(), g.dim());
  h = fnv1a(g.weights.data(), g.weights.size() * sizeof(double), h);
  h = fnv1a(g.means.data().data(), g.means.data().size() * sizeof(double), h);
  h = fnv1a(g.vars.data().data(), g.vars.data().size() * sizeof(double), h);
  return h;
}

}  // namespace aed
