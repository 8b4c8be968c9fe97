#include "rflab/errors.hpp"
#include "rflab/metrics.hpp"
#include "support.hpp"

#include <cmath>

using namespace rflab;
using rflab::testing::vec;

namespace {

Matrix random_spd(RngState& rng, Eigen::Index d) {
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.next_normal();
  return a * a.transpose() + 0.1 * Matrix::Identity(d, d);
}

GaussianSummary summary(LatentVector mean, Matrix cov) { return {std::move(mean), std::move(cov)}; }

Matrix rotation2(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("matrix square root") {
  CHECK(matrix_sqrt_psd(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-15));
  Matrix diag = Matrix::Zero(2, 2);
  diag.diagonal() << 4.0, 9.0;
  const Matrix r = matrix_sqrt_psd(diag);
  CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  RngState rng(5);
  for (int i = 0; i < 20; ++i) {
    const Matrix a = random_spd(rng, 1 + i % 8);
    const Matrix root = matrix_sqrt_psd(a);
    CHECK((root * root - a).norm() / a.norm() < 1e-8);
  }

  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-6;
  CHECK_THROWS_AS(matrix_sqrt_psd(asym), InvalidArgument);

  Matrix tiny_negative = Matrix::Identity(2, 2);
  tiny_negative(1, 1) = -1e-12;
  CHECK(matrix_sqrt_psd(tiny_negative)(1, 1) == 0.0);
}

TEST_CASE("Frechet distance") {
  RngState rng(8);
  const GaussianSummary p = summary(vec({1.0, -2.0, 0.5}), random_spd(rng, 3));
  CHECK(std::abs(frechet_distance(p, p)) < 1e-10);

  const LatentVector delta = vec({0.3, 0.4, -1.2});
  const GaussianSummary shifted = summary(p.mean + delta, p.covariance);
  CHECK(frechet_distance(p, shifted) == doctest::Approx(delta.squaredNorm()).epsilon(1e-10));

  Matrix one(1, 1), four(1, 1);
  one << 1.0;
  four << 4.0;
  CHECK(frechet_distance(summary(vec({0.0}), one), summary(vec({0.0}), four)) == doctest::Approx(1.0).epsilon(1e-14));

  for (int i = 0; i < 20; ++i) {
    const GaussianSummary a = summary(sample_standard_normal(rng, 4), random_spd(rng, 4));
    const GaussianSummary b = summary(sample_standard_normal(rng, 4), random_spd(rng, 4));
    const double ab = frechet_distance(a, b);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - frechet_distance(b, a)) < 1e-10);
  }

  CHECK_THROWS_AS(frechet_distance(p, summary(vec({0.0}), one)), InvalidDimension);
}

TEST_CASE("Frechet distance of a sample set to itself") {
  RngState rng(3);
  Matrix s(2, 500);
  for (Eigen::Index i = 0; i < s.cols(); ++i) s.col(i) = sample_standard_normal(rng, 2);
  CHECK(std::abs(frechet_between_samples(s, s)) < 1e-10);
}

TEST_CASE("structure score") {
  RngState rng(19);
  Matrix in(2, 40);
  for (Eigen::Index i = 0; i < in.cols(); ++i) in.col(i) = sample_standard_normal(rng, 2);
  CHECK(structure_score(in, in) == 0.0);

  Matrix unit(2, 40);
  for (Eigen::Index i = 0; i < unit.cols(); ++i) unit.col(i) = in.col(i).normalized();
  const LatentVector c = vec({0.3, -0.4});
  const Matrix shifted = unit.colwise() + c;
  CHECK(structure_score(unit, shifted) == doctest::Approx(c.norm()).epsilon(1e-12));

  Matrix out = in;
  for (Eigen::Index i = 0; i < out.cols(); ++i) out.col(i) += 0.3 * sample_standard_normal(rng, 2);
  const Matrix r = rotation2(0.7);
  CHECK(structure_score(r * in, r * out) == doctest::Approx(structure_score(in, out)).epsilon(1e-12));

  CHECK_THROWS_AS(structure_score(in, in.leftCols(10)), InvalidArgument);
}

}  // TEST_SUITE
