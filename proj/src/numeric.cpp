#include "rflab/numeric.hpp"

#include "rflab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rflab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

std::uint64_t RngState::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double RngState::next_uniform() {
  // 53 random bits, shifted by half an ulp so 0 is never produced.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngState::next_normal() {
  // Box-Muller, cosine branch only: one normal per two uniforms keeps the
  // stream position a simple function of the number of draws.
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngState::next_index(std::size_t n) {
  if (n == 0) throw InvalidArgument("next_index: empty range");
  return static_cast<std::size_t>(next_uniform() * static_cast<double>(n)) % n;
}

RngState RngState::fork(std::uint64_t stream_id) const {
  return RngState(mix64(seed_ ^ mix64(stream_id + kGolden)) + stream_id);
}

LatentVector sample_standard_normal(RngState& rng, std::size_t d) {
  if (d == 0) throw InvalidDimension("sample_standard_normal: dimension must be >= 1");
  LatentVector out(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = rng.next_normal();
  return out;
}

double cosine_similarity(const LatentVector& a, const LatentVector& b) {
  if (a.size() != b.size()) throw InvalidDimension("cosine_similarity: dimension mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw UndefinedDirection("cosine_similarity: zero-norm input");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

GaussianSummary gaussian_fit(const Matrix& columns) {
  const auto d = columns.rows();
  const auto n = columns.cols();
  if (d == 0) throw InvalidDimension("gaussian_fit: dimension must be >= 1");
  if (n < d + 1) {
    throw InsufficientData("gaussian_fit: need at least d+1 = " + std::to_string(d + 1) +
                           " samples, got " + std::to_string(n));
  }
  GaussianSummary out;
  out.mean = columns.rowwise().mean();
  const Matrix centered = columns.colwise() - out.mean;
  out.covariance = (centered * centered.transpose()) / static_cast<double>(n - 1);
  return out;
}

GaussianSummary gaussian_fit(std::span<const LatentVector> samples) {
  return gaussian_fit(to_columns(samples));
}

Matrix to_columns(std::span<const LatentVector> samples) {
  if (samples.empty()) return Matrix();
  const auto d = samples.front().size();
  Matrix out(d, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != d) throw InvalidDimension("to_columns: mixed dimensions");
    out.col(static_cast<Eigen::Index>(i)) = samples[i];
  }
  return out;
}

std::vector<LatentVector> from_columns(const Matrix& columns) {
  std::vector<LatentVector> out;
  out.reserve(static_cast<std::size_t>(columns.cols()));
  for (Eigen::Index j = 0; j < columns.cols(); ++j) out.emplace_back(columns.col(j));
  return out;
}

bool all_finite(const LatentVector& v) { return v.allFinite(); }

}  // namespace rflab
