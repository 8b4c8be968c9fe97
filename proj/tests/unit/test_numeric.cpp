#include "rflab/errors.hpp"
#include "rflab/numeric.hpp"
#include "support.hpp"

#include <array>
#include <cmath>

using namespace rflab;
using rflab::testing::vec;

TEST_SUITE("numeric") {

TEST_CASE("normal draws are reproducible from the seed") {
  RngState rng(7);
  const LatentVector first = sample_standard_normal(rng, 2);
  const LatentVector second = sample_standard_normal(rng, 2);
  CHECK(first != second);

  RngState again(7);
  CHECK(sample_standard_normal(again, 2) == first);
  CHECK(sample_standard_normal(again, 2) == second);
}

TEST_CASE("forked streams are independent of the parent's position") {
  RngState a(3);
  RngState b(3);
  b.next_u64();
  CHECK(a.fork(5).next_u64() == b.fork(5).next_u64());
  CHECK(a.fork(5).next_u64() != a.fork(6).next_u64());
  CHECK(a.fork(0).next_u64() != a.next_u64());
}

TEST_CASE("zero dimension is rejected") {
  RngState rng(1);
  CHECK_THROWS_AS(sample_standard_normal(rng, 0), InvalidDimension);
}

TEST_CASE("moments of 1e5 draws") {
  RngState rng(11);
  const std::size_t n = 100000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Vector2d sum_sq = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const LatentVector z = sample_standard_normal(rng, 2);
    sum += z;
    sum_sq += z.cwiseProduct(z);
  }
  const Eigen::Vector2d mean = sum / static_cast<double>(n);
  const Eigen::Vector2d var = sum_sq / static_cast<double>(n) - mean.cwiseProduct(mean);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(mean[k]) < 0.02);
    CHECK(std::abs(var[k] - 1.0) < 0.03);
  }
}

TEST_CASE("chi-squared goodness of fit over 20 quantile bins") {
  // Bin by the standard normal CDF so every bin has probability 1/20.
  constexpr int kBins = 20;
  constexpr std::size_t kDraws = 100000;
  constexpr double kCritical = 43.82;  // chi-squared, 19 dof, upper 0.001 tail
  RngState rng(2024);
  std::array<std::size_t, kBins> counts{};
  for (std::size_t i = 0; i < kDraws; ++i) {
    const double x = sample_standard_normal(rng, 1)[0];
    const double u = 0.5 * std::erfc(-x / std::sqrt(2.0));
    counts[static_cast<std::size_t>(std::min(kBins - 1, static_cast<int>(u * kBins)))]++;
  }
  const double expected = static_cast<double>(kDraws) / kBins;
  double chi2 = 0.0;
  for (std::size_t c : counts) chi2 += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  CHECK(chi2 < kCritical);
}

TEST_CASE("uniform draws stay inside the open interval") {
  RngState rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_uniform();
    CHECK_UNARY(u > 0.0);
    CHECK_UNARY(u < 1.0);
  }
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(vec({1, 0}), vec({2, 0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(vec({1, 0}), vec({0, 3})) == doctest::Approx(0.0));
  CHECK(std::abs(cosine_similarity(vec({1, 0}), vec({1, 1})) - 0.70711) < 1e-5);

  RngState rng(9);
  for (int i = 0; i < 100; ++i) {
    const LatentVector a = sample_standard_normal(rng, 5);
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(a, -a) == doctest::Approx(-1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 0})), UndefinedDirection);
  CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({0, 0})), UndefinedDirection);
}

TEST_CASE("gaussian fit") {
  SUBCASE("square corners") {
    const std::vector<LatentVector> s{vec({0, 0}), vec({2, 0}), vec({0, 2}), vec({2, 2})};
    const GaussianSummary g = gaussian_fit(s);
    CHECK(g.mean[0] == 1.0);
    CHECK(g.mean[1] == 1.0);
    // Unbiased: each coordinate has squared deviations summing to 4 over 3 dof.
    CHECK(g.covariance(0, 0) == doctest::Approx(4.0 / 3.0));
    CHECK(g.covariance(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("identical samples give zero covariance") {
    const std::vector<LatentVector> s(5, vec({1.5, -2.0}));
    CHECK(gaussian_fit(s).covariance.isZero(0.0));
  }
  SUBCASE("standard normal covariance") {
    RngState rng(13);
    Matrix cols(2, 100000);
    for (Eigen::Index i = 0; i < cols.cols(); ++i) cols.col(i) = sample_standard_normal(rng, 2);
    const Matrix cov = gaussian_fit(cols).covariance;
    CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.03);
  }
  SUBCASE("too few samples") {
    const std::vector<LatentVector> s{vec({0, 0}), vec({1, 1})};
    CHECK_THROWS_AS(gaussian_fit(s), InsufficientData);
  }
  SUBCASE("column and vector forms agree") {
    RngState rng(17);
    std::vector<LatentVector> s;
    for (int i = 0; i < 10; ++i) s.push_back(sample_standard_normal(rng, 3));
    const GaussianSummary a = gaussian_fit(s);
    const GaussianSummary b = gaussian_fit(to_columns(s));
    CHECK(a.mean == b.mean);
    CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-15);
  }
}

}  // TEST_SUITE
