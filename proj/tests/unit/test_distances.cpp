#include <cmath>
#include <random>

#include "doctest.h"

#include "advstat/distances.hpp"
#include "test_util.hpp"

using advstat::KernelSpec;
using advstat::SampleSet;

namespace {

// Brute-force evaluations with explicit loops, kept free of the library's
// accumulation strategy so they stay an independent check.

double naive_euclidean(const SampleSet& a, Eigen::Index i, const SampleSet& b,
                       Eigen::Index j) {
  double ss = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double d = a(i, k) - b(j, k);
    ss += d * d;
  }
  return std::sqrt(ss);
}

double naive_energy_distance(const SampleSet& x, const SampleSet& y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cross += naive_euclidean(x, i, y, j);
  double xx = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) xx += naive_euclidean(x, i, x, j);
  double yy = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) yy += naive_euclidean(y, i, y, j);
  const double stat = 2.0 * cross / double(n * m) - xx / double(n * n) -
                      yy / double(m * m);
  return std::sqrt(std::max(0.0, stat));
}

double naive_kernel(const SampleSet& a, Eigen::Index i, const SampleSet& b,
                    Eigen::Index j, double sigma) {
  const double d = naive_euclidean(a, i, b, j);
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

double naive_mmd(const SampleSet& x, const SampleSet& y, double sigma) {
  const Eigen::Index n = x.rows();
  const Eigen::Index m = y.rows();
  double xx = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) xx += naive_kernel(x, i, x, j, sigma);
  double yy = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) yy += naive_kernel(y, i, y, j, sigma);
  double xy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) xy += naive_kernel(x, i, y, j, sigma);
  const double stat =
      xx / double(n * n) + yy / double(m * m) - 2.0 * xy / double(n * m);
  return std::sqrt(std::max(0.0, stat));
}

SampleSet single_point(std::initializer_list<double> values) {
  SampleSet s(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) s(0, j++) = v;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("distances");

TEST_CASE("softmax of a constant vector is uniform") {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(4);
  const Eigen::VectorXd p = advstat::softmax(v);
  for (int i = 0; i < 4; ++i) CHECK(p(i) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax shift invariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v(i) = u(rng);
    const double c = u(rng);
    const Eigen::VectorXd a = advstat::softmax(v);
    const Eigen::VectorXd b = advstat::softmax(v.array() + c);
    CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-15);
  }
}

TEST_CASE("softmax of [0, ln 3] is [0.25, 0.75]") {
  Eigen::VectorXd v(2);
  v << 0.0, std::log(3.0);
  const Eigen::VectorXd p = advstat::softmax(v);
  CHECK(p(0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("energy distance of identical multisets is zero") {
  std::mt19937_64 rng(3);
  const SampleSet x = test_util::random_matrix(5, 3, rng);
  CHECK(advstat::energy_distance(x, x) == 0.0);
}

TEST_CASE("energy distance of {0} vs {1} is sqrt(2)") {
  CHECK(advstat::energy_distance(single_point({0.0}), single_point({1.0})) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("energy distance matches the brute-force oracle") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_int_distribution<int> dims(1, 5);
  for (int t = 0; t < 50; ++t) {
    const int d = dims(rng);
    const SampleSet x = test_util::random_matrix(size(rng), d, rng, 2.0);
    const SampleSet y = test_util::random_matrix(size(rng), d, rng, 2.0);
    CHECK(std::fabs(advstat::energy_distance(x, y) -
                    naive_energy_distance(x, y)) <= 1e-12);
  }
}

TEST_CASE("energy distance is bitwise symmetric and nonnegative") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    const SampleSet x = test_util::random_matrix(4, 2, rng);
    const SampleSet y = test_util::random_matrix(6, 2, rng);
    const double ab = advstat::energy_distance(x, y);
    const double ba = advstat::energy_distance(y, x);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("energy distance is translation invariant") {
  std::mt19937_64 rng(29);
  const SampleSet x = test_util::random_matrix(5, 3, rng);
  const SampleSet y = test_util::random_matrix(4, 3, rng);
  Eigen::RowVectorXd shift(3);
  shift << 2.5, -1.25, 10.0;
  const SampleSet xs = x.rowwise() + shift;
  const SampleSet ys = y.rowwise() + shift;
  CHECK(std::fabs(advstat::energy_distance(xs, ys) -
                  advstat::energy_distance(x, y)) <= 1e-12);
}

TEST_CASE("energy distance rejects dimension mismatches") {
  CHECK_THROWS_AS(advstat::energy_distance(SampleSet::Zero(2, 2),
                                           SampleSet::Zero(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("gaussian kernel basics") {
  Eigen::VectorXd u(2), v(2);
  u << 1.0, 2.0;
  v << 1.0, 2.0;
  CHECK(advstat::gaussian_kernel(u, v, 0.7) == 1.0);
  v << -0.5, 3.0;
  CHECK(advstat::gaussian_kernel(u, v, 0.7) ==
        advstat::gaussian_kernel(v, u, 0.7));
  // |u - v| = sigma * sqrt(2)  ->  exp(-1)
  const double sigma = 1.3;
  v = u;
  v(0) += sigma * std::sqrt(2.0);
  CHECK(advstat::gaussian_kernel(u, v, sigma) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("median heuristic on {0,1,2} gives 1") {
  SampleSet pool(3, 1);
  pool << 0.0, 1.0, 2.0;
  CHECK(advstat::median_heuristic(pool.topRows(2), pool.bottomRows(1)) == 1.0);
}

TEST_CASE("median heuristic falls back to 1 when all points coincide") {
  const SampleSet x = SampleSet::Constant(3, 2, 0.75);
  CHECK(advstat::median_heuristic(x, x) == 1.0);
}

TEST_CASE("median heuristic scales homogeneously") {
  std::mt19937_64 rng(31);
  const SampleSet x = test_util::random_matrix(4, 3, rng);
  const SampleSet y = test_util::random_matrix(5, 3, rng);
  const double base = advstat::median_heuristic(x, y);
  const double c = 3.75;
  CHECK(advstat::median_heuristic(SampleSet(c * x), SampleSet(c * y)) ==
        doctest::Approx(c * base).epsilon(1e-12));
}

TEST_CASE("median heuristic of softmax rows stays in (0, sqrt(2)]") {
  std::mt19937_64 rng(37);
  SampleSet x(20, 4), y(10, 4);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x.row(i) = advstat::softmax(test_util::random_matrix(4, 1, rng, 3.0))
                   .transpose();
  }
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    y.row(i) = advstat::softmax(test_util::random_matrix(4, 1, rng, 3.0))
                   .transpose();
  }
  const double sigma = advstat::median_heuristic(x, y);
  CHECK(sigma > 0.0);
  CHECK(sigma <= std::sqrt(2.0));
}

TEST_CASE("mmd of identical multisets is zero") {
  std::mt19937_64 rng(41);
  const SampleSet x = test_util::random_matrix(5, 3, rng);
  CHECK(advstat::mmd_biased(x, x, {1.0}) == 0.0);
}

TEST_CASE("mmd of singletons matches the closed form") {
  const SampleSet x = single_point({0.0, 0.0});
  const SampleSet y = single_point({1.0, 2.0});
  const double sigma = 1.7;
  const double k = std::exp(-5.0 / (2.0 * sigma * sigma));
  CHECK(advstat::mmd_biased(x, y, {sigma}) ==
        doctest::Approx(std::sqrt(2.0 - 2.0 * k)).epsilon(1e-14));
}

TEST_CASE("mmd matches the brute-force oracle") {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_int_distribution<int> dims(1, 5);
  std::uniform_real_distribution<double> bw(0.3, 3.0);
  for (int t = 0; t < 50; ++t) {
    const int d = dims(rng);
    const SampleSet x = test_util::random_matrix(size(rng), d, rng, 2.0);
    const SampleSet y = test_util::random_matrix(size(rng), d, rng, 2.0);
    const double sigma = bw(rng);
    CHECK(std::fabs(advstat::mmd_biased(x, y, {sigma}) -
                    naive_mmd(x, y, sigma)) <= 1e-12);
  }
}

TEST_CASE("mmd is bitwise symmetric and translation invariant") {
  std::mt19937_64 rng(47);
  const SampleSet x = test_util::random_matrix(4, 3, rng);
  const SampleSet y = test_util::random_matrix(6, 3, rng);
  const KernelSpec kernel{0.9};
  CHECK(advstat::mmd_biased(x, y, kernel) == advstat::mmd_biased(y, x, kernel));
  Eigen::RowVectorXd shift(3);
  shift << -4.0, 0.5, 2.0;
  CHECK(std::fabs(advstat::mmd_biased(SampleSet(x.rowwise() + shift),
                                       SampleSet(y.rowwise() + shift),
                                       kernel) -
                  advstat::mmd_biased(x, y, kernel)) <= 1e-12);
}

TEST_CASE("both estimators grow with mean separation in expectation") {
  // Statistical check: averaged over seeds, larger mean separation gives a
  // larger estimate, with a small one-sided slack.
  const int kSeeds = 20;
  const double separations[] = {0.0, 1.0, 2.0, 4.0};
  double ed_means[4] = {};
  double mmd_means[4] = {};
  for (int s = 0; s < kSeeds; ++s) {
    std::mt19937_64 rng(1000 + s);
    const SampleSet x = test_util::random_matrix(30, 2, rng);
    SampleSet base = test_util::random_matrix(30, 2, rng);
    for (int k = 0; k < 4; ++k) {
      SampleSet y = base;
      y.col(0).array() += separations[k];
      ed_means[k] += advstat::energy_distance(x, y) / kSeeds;
      mmd_means[k] += advstat::mmd_biased(x, y, {1.0}) / kSeeds;
    }
  }
  for (int k = 0; k + 1 < 4; ++k) {
    CHECK(ed_means[k + 1] > ed_means[k] - 0.01);
    CHECK(mmd_means[k + 1] > mmd_means[k] - 0.01);
  }
}

TEST_SUITE_END();
