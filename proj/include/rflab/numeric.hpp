#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace rflab {

/// A point in the d-dimensional latent space.
using LatentVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Counter-based generator: output i is a pure function of (seed, i).
///
/// There is no hidden global state. Two states with equal seed and counter
/// produce identical streams, and `fork` derives statistically independent
/// child streams for per-run or per-thread use.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double next_uniform();
  double next_normal();
  /// Uniform integer in [0, n).
  std::size_t next_index(std::size_t n);

  /// Independent stream keyed by (seed, stream_id). Does not advance *this.
  [[nodiscard]] RngState fork(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const RngState&, const RngState&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

LatentVector sample_standard_normal(RngState& rng, std::size_t d);

/// Cosine of the angle between a and b, clamped to [-1, 1].
double cosine_similarity(const LatentVector& a, const LatentVector& b);

struct GaussianSummary {
  LatentVector mean;
  Matrix covariance;
};

/// Sample mean and unbiased (N-1) covariance. Needs at least d+1 samples.
GaussianSummary gaussian_fit(std::span<const LatentVector> samples);
/// Same, with samples stored as the columns of a d x N matrix.
GaussianSummary gaussian_fit(const Matrix& columns);

/// Stack vectors as columns of a d x N matrix.
Matrix to_columns(std::span<const LatentVector> samples);
std::vector<LatentVector> from_columns(const Matrix& columns);

bool all_finite(const LatentVector& v);

}  // namespace rflab
