#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <doctest.h>

#include "aed/error.hpp"
#include "aed/gmm.hpp"
#include "aed/parallel.hpp"
#include "test_util.hpp"

using namespace aed;

namespace {

Matrix gaussian_frames(std::size_t t, std::size_t d, double mean,
                       double stddev, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(mean, stddev);
  Matrix m(t, d);
  for (double& v : m.data()) v = n(rng);
  return m;
}

// Linear-space mixture density; reference for posteriors and likelihoods.
double direct_density(const DiagGmm& g, std::span<const double> x) {
  double total = 0.0;
  for (int k = 0; k < g.components(); ++k) {
    double q = 0.0, logdet = 0.0;
    for (int j = 0; j < g.dim(); ++j) {
      const double diff = x[j] - g.means(k, j);
      q += diff * diff / g.vars(k, j);
      logdet += std::log(g.vars(k, j));
    }
    total += g.weights[k] *
             std::exp(-0.5 * (q + logdet +
                              g.dim() * std::log(2.0 * std::numbers::pi)));
  }
  return total;
}

DiagGmm toy_gmm(unsigned seed, int m = 4, int d = 3) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  DiagGmm g;
  g.weights.assign(m, 0.0);
  g.means = Matrix(m, d);
  g.vars = Matrix(m, d);
  double sum = 0.0;
  for (int k = 0; k < m; ++k) {
    g.weights[k] = u(rng);
    sum += g.weights[k];
    for (int j = 0; j < d; ++j) {
      g.means(k, j) = u(rng) * 3.0 - 3.0;
      g.vars(k, j) = u(rng);
    }
  }
  for (double& w : g.weights) w /= sum;
  return g;
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("single component recovers the sample moments") {
  const Matrix frames = gaussian_frames(500, 3, 1.5, 0.8, 11);
  GmmTrainConfig cfg;
  cfg.components = 1;
  const DiagGmm g = train_gmm(frames, cfg);
  REQUIRE(g.components() == 1);
  REQUIRE(g.dim() == 3);
  CHECK(g.weights[0] == doctest::Approx(1.0).epsilon(1e-12));

  for (int j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < frames.rows(); ++t) mean += frames(t, j);
    mean /= static_cast<double>(frames.rows());
    double var = 0.0;
    for (std::size_t t = 0; t < frames.rows(); ++t)
      var += (frames(t, j) - mean) * (frames(t, j) - mean);
    var /= static_cast<double>(frames.rows());
    CHECK(g.means(0, j) == doctest::Approx(mean).epsilon(1e-9));
    CHECK(g.vars(0, j) ==
          doctest::Approx(std::max(var, g.var_floor[j])).epsilon(1e-9));
  }
}

TEST_CASE("two separated clusters are recovered") {
  Matrix a = gaussian_frames(300, 2, -5.0, 0.3, 21);
  const Matrix b = gaussian_frames(300, 2, 5.0, 0.3, 22);
  const Matrix frames = vstack({&a, &b});
  GmmTrainConfig cfg;
  cfg.components = 2;
  const DiagGmm g = train_gmm(frames, cfg);

  const int neg = g.means(0, 0) < 0.0 ? 0 : 1;
  const int pos = 1 - neg;
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(g.means(neg, j) - (-5.0)) < 0.2);
    CHECK(std::abs(g.means(pos, j) - 5.0) < 0.2);
  }
  CHECK(g.weights[0] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(g.weights[1] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("EM log-likelihood never decreases") {
  const Matrix lo = gaussian_frames(200, 4, -2.0, 1.0, 31);
  const Matrix hi = gaussian_frames(200, 4, 2.0, 0.5, 32);
  const Matrix frames = vstack({&lo, &hi});
  GmmTrainConfig cfg;
  cfg.components = 8;
  // 8 components over two clusters converge slowly; a looser stop keeps the
  // converged flag checkable without hundreds of iterations
  cfg.tolerance = 1e-4;
  GmmTrainReport report;
  train_gmm(frames, cfg, &report);
  REQUIRE(report.log_likelihood.size() >= 2);
  CHECK(report.iterations ==
        static_cast<int>(report.log_likelihood.size()));
  for (std::size_t i = 1; i < report.log_likelihood.size(); ++i)
    CHECK(report.log_likelihood[i] >= report.log_likelihood[i - 1] - 1e-8);
  CHECK(report.converged);
}

TEST_CASE("posterior of a single component is exactly one") {
  DiagGmm g;
  g.weights = {1.0};
  g.means = Matrix(1, 2);
  g.vars = Matrix(1, 2);
  g.vars(0, 0) = g.vars(0, 1) = 1.0;
  const auto p = posterior(g, std::vector<double>{10.0, -3.0});
  REQUIRE(p.size() == 1);
  CHECK(p[0] == 1.0);
}

TEST_CASE("posterior splits evenly at the symmetric midpoint") {
  DiagGmm g;
  g.weights = {0.5, 0.5};
  g.means = Matrix(2, 1);
  g.means(0, 0) = -2.0;
  g.means(1, 0) = 2.0;
  g.vars = Matrix(2, 1);
  g.vars(0, 0) = g.vars(1, 0) = 0.7;
  const auto p = posterior(g, std::vector<double>{0.0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("posterior matches a direct-density reference and sums to one") {
  const DiagGmm g = toy_gmm(5);
  std::mt19937 rng(99);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(g.dim()));
    for (double& v : x) v = n(rng);
    const auto p = posterior(g, x);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-9);

    const double total = direct_density(g, x);
    for (int k = 0; k < g.components(); ++k) {
      DiagGmm only;
      only.weights = {1.0};
      only.means = Matrix(1, static_cast<std::size_t>(g.dim()));
      only.vars = Matrix(1, static_cast<std::size_t>(g.dim()));
      for (int j = 0; j < g.dim(); ++j) {
        only.means(0, j) = g.means(k, j);
        only.vars(0, j) = g.vars(k, j);
      }
      const double expected =
          g.weights[static_cast<std::size_t>(k)] * direct_density(only, x) /
          total;
      CHECK(std::abs(p[static_cast<std::size_t>(k)] - expected) <= 1e-9);
    }
  }
}

TEST_CASE("permuting components permutes the posterior") {
  const DiagGmm g = toy_gmm(8);
  DiagGmm rev;
  const int m = g.components(), d = g.dim();
  rev.weights.assign(static_cast<std::size_t>(m), 0.0);
  rev.means = Matrix(m, d);
  rev.vars = Matrix(m, d);
  for (int k = 0; k < m; ++k) {
    rev.weights[static_cast<std::size_t>(m - 1 - k)] =
        g.weights[static_cast<std::size_t>(k)];
    for (int j = 0; j < d; ++j) {
      rev.means(m - 1 - k, j) = g.means(k, j);
      rev.vars(m - 1 - k, j) = g.vars(k, j);
    }
  }
  const std::vector<double> x{0.3, -1.2, 0.8};
  const auto p = posterior(g, x);
  const auto q = posterior(rev, x);
  for (int k = 0; k < m; ++k)
    CHECK(p[static_cast<std::size_t>(k)] ==
          doctest::Approx(q[static_cast<std::size_t>(m - 1 - k)])
              .epsilon(1e-12));
}

TEST_CASE("posterior_matrix rows equal per-frame posteriors") {
  const DiagGmm g = toy_gmm(13);
  const Matrix frames = gaussian_frames(50, 3, 0.0, 1.5, 14);
  const Matrix p = posterior_matrix(g, frames);
  REQUIRE(p.rows() == 50);
  REQUIRE(p.cols() == static_cast<std::size_t>(g.components()));
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto row = posterior(g, frames.row(t));
    for (std::size_t k = 0; k < row.size(); ++k) CHECK(p(t, k) == row[k]);
  }
}

TEST_CASE("log_likelihood is the mean log density") {
  DiagGmm unit;
  unit.weights = {1.0};
  unit.means = Matrix(1, 4);
  unit.vars = Matrix(1, 4);
  for (int j = 0; j < 4; ++j) unit.vars(0, j) = 1.0;
  Matrix at_mean(1, 4);
  CHECK(log_likelihood(unit, at_mean) ==
        doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi))
            .epsilon(1e-12));

  const DiagGmm g = toy_gmm(17);
  const Matrix frames = gaussian_frames(40, 3, 0.0, 1.0, 18);
  double direct = 0.0;
  for (std::size_t t = 0; t < frames.rows(); ++t)
    direct += std::log(direct_density(g, frames.row(t)));
  direct /= static_cast<double>(frames.rows());
  CHECK(log_likelihood(g, frames) == doctest::Approx(direct).epsilon(1e-9));

  // duplicating every frame leaves the mean untouched
  const Matrix doubled = vstack({&frames, &frames});
  CHECK(log_likelihood(g, doubled) ==
        doctest::Approx(log_likelihood(g, frames)).epsilon(1e-12));
}

TEST_CASE("training is deterministic in the seed") {
  const Matrix frames = gaussian_frames(300, 3, 0.0, 1.0, 41);
  GmmTrainConfig cfg;
  cfg.components = 4;
  const DiagGmm a = train_gmm(frames, cfg);
  const DiagGmm b = train_gmm(frames, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.means.data() == b.means.data());
  CHECK(a.vars.data() == b.vars.data());

  cfg.seed = 2;
  const DiagGmm c = train_gmm(frames, cfg);
  CHECK(c.means.data() != a.means.data());
}

TEST_CASE("training result does not depend on the worker count") {
  const Matrix lo = gaussian_frames(150, 3, -1.0, 0.7, 51);
  const Matrix hi = gaussian_frames(150, 3, 1.0, 0.7, 52);
  const Matrix frames = vstack({&lo, &hi});
  GmmTrainConfig cfg;
  cfg.components = 6;
  set_worker_count(1);
  const DiagGmm a = train_gmm(frames, cfg);
  set_worker_count(4);
  const DiagGmm b = train_gmm(frames, cfg);
  set_worker_count(0);  // back to the default
  CHECK(a.weights == b.weights);
  CHECK(a.means.data() == b.means.data());
  CHECK(a.vars.data() == b.vars.data());
}

TEST_CASE("fewer frames than components is an error") {
  const Matrix frames = gaussian_frames(5, 2, 0.0, 1.0, 61);
  GmmTrainConfig cfg;
  cfg.components = 8;
  CHECK_THROWS_AS(train_gmm(frames, cfg), InvalidArgument);
}

TEST_CASE("identical frames trip the degenerate-data flag and the floor") {
  Matrix frames(64, 2);
  for (double& v : frames.data()) v = 0.5;
  GmmTrainConfig cfg;
  cfg.components = 2;
  GmmTrainReport report;
  const DiagGmm g = train_gmm(frames, cfg, &report);
  CHECK(report.degenerate_data);
  g.validate();
  for (int k = 0; k < g.components(); ++k)
    for (int j = 0; j < g.dim(); ++j) CHECK(g.vars(k, j) > 0.0);
}

TEST_CASE("trained variances respect the global floor") {
  const Matrix lo = gaussian_frames(200, 2, -3.0, 0.01, 71);
  const Matrix hi = gaussian_frames(200, 2, 3.0, 0.01, 72);
  const Matrix frames = vstack({&lo, &hi});
  GmmTrainConfig cfg;
  cfg.components = 4;
  const DiagGmm g = train_gmm(frames, cfg);
  REQUIRE(g.var_floor.size() == 2);
  for (int j = 0; j < 2; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < frames.rows(); ++t) mean += frames(t, j);
    mean /= static_cast<double>(frames.rows());
    double gvar = 0.0;
    for (std::size_t t = 0; t < frames.rows(); ++t)
      gvar += (frames(t, j) - mean) * (frames(t, j) - mean);
    gvar /= static_cast<double>(frames.rows());
    CHECK(g.var_floor[j] == doctest::Approx(1e-3 * gvar).epsilon(1e-9));
    for (int k = 0; k < g.components(); ++k)
      CHECK(g.vars(k, j) >= g.var_floor[j] * (1.0 - 1e-12));
  }
}

TEST_CASE("save/load round-trips every bit and the hash") {
  testutil::ScopedTempDir tmp;
  const Matrix frames = gaussian_frames(200, 3, 0.0, 1.0, 81);
  GmmTrainConfig cfg;
  cfg.components = 3;
  const DiagGmm g = train_gmm(frames, cfg);
  save_gmm(tmp.file("g.bin"), g);
  const DiagGmm back = load_gmm(tmp.file("g.bin"));
  CHECK(back.weights == g.weights);
  CHECK(back.means.data() == g.means.data());
  CHECK(back.vars.data() == g.vars.data());
  CHECK(back.var_floor == g.var_floor);
  CHECK(gmm_hash(back) == gmm_hash(g));

  DiagGmm other = g;
  other.means(0, 0) += 1e-9;
  CHECK(gmm_hash(other) != gmm_hash(g));

  testutil::write_text(tmp.file("bad.bin"), "AEDGMM1 but not really");
  CHECK_THROWS_AS(load_gmm(tmp.file("bad.bin")), FormatError);
  CHECK_THROWS_AS(load_gmm(tmp.file("missing.bin")), IoError);
}

TEST_CASE("validate rejects malformed parameter sets") {
  DiagGmm g = toy_gmm(91);
  g.validate();

  DiagGmm bad = g;
  bad.weights[0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = g;
  bad.weights[0] += 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = g;
  bad.vars(1, 1) = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);

  bad = g;
  bad.means = Matrix(bad.components(), bad.dim() + 1);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

}  // TEST_SUITE
