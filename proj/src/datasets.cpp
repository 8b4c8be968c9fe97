#include "rflab/datasets.hpp"

#include "rflab/errors.hpp"

#include <cmath>
#include <numbers>

namespace rflab {

Matrix DomainDataset::batch(RngState& rng, std::size_t n) const {
  Matrix out(samples.rows(), static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) = samples.col(static_cast<Eigen::Index>(rng.next_index(size())));
  }
  return out;
}

DomainDataset make_dataset(const std::string& name, const DatasetSpec& spec) {
  if (spec.count == 0) throw InvalidArgument("make_dataset: count must be positive");
  if (spec.generator != "gaussian" && spec.d != 2) {
    throw InvalidDimension("make_dataset: generator '" + spec.generator + "' is two-dimensional");
  }
  if (spec.d == 0) throw InvalidDimension("make_dataset: d must be >= 1");
  const auto n = static_cast<Eigen::Index>(spec.count);
  const auto d = static_cast<Eigen::Index>(spec.d);
  Matrix x(d, n);
  RngState rng(spec.seed);
  constexpr double pi = std::numbers::pi;

  for (Eigen::Index j = 0; j < n; ++j) {
    if (spec.generator == "gaussians8") {
      const double angle = 2.0 * pi * static_cast<double>(rng.next_index(8)) / 8.0;
      x(0, j) = spec.radius * std::cos(angle);
      x(1, j) = spec.radius * std::sin(angle);
    } else if (spec.generator == "ring") {
      const double angle = 2.0 * pi * rng.next_uniform();
      x(0, j) = spec.radius * std::cos(angle);
      x(1, j) = spec.radius * std::sin(angle);
    } else if (spec.generator == "two_moons") {
      const double angle = pi * rng.next_uniform();
      if (rng.next_uniform() < 0.5) {
        x(0, j) = std::cos(angle);
        x(1, j) = std::sin(angle);
      } else {
        x(0, j) = 1.0 - std::cos(angle);
        x(1, j) = 0.5 - std::sin(angle);
      }
      x.col(j) *= spec.radius;
    } else if (spec.generator == "gaussian") {
      x.col(j).setZero();
    } else {
      throw InvalidArgument("make_dataset: unknown generator '" + spec.generator + "'");
    }
    for (Eigen::Index i = 0; i < d; ++i) x(i, j) += spec.noise * rng.next_normal();
  }

  x *= spec.scale;
  x.row(0).array() += spec.shift_x;
  if (d > 1) x.row(1).array() += spec.shift_y;
  return DomainDataset{name, spec, std::move(x)};
}

}  // namespace rflab
