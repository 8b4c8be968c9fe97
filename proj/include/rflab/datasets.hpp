#pragma once

#include "rflab/numeric.hpp"

#include <string>

namespace rflab {

/// Recipe for a synthetic domain. Every sample set is reproducible from
/// (generator, count, seed) and the shape parameters.
struct DatasetSpec {
  std::string generator = "gaussians8";  ///< gaussians8 | ring | two_moons | gaussian
  std::size_t count = 4096;
  std::uint64_t seed = 0;
  std::size_t d = 2;       ///< only `gaussian` supports d != 2
  double radius = 2.0;     ///< gaussians8 / ring radius, two_moons scale
  double noise = 0.1;      ///< per-coordinate std of the additive noise
  double scale = 1.0;      ///< applied after generation
  double shift_x = 0.0;
  double shift_y = 0.0;
};

struct DomainDataset {
  std::string name;
  DatasetSpec spec;
  Matrix samples;  ///< d x count, one sample per column

  std::size_t dimension() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(samples.cols()); }
  LatentVector sample(RngState& rng) const { return samples.col(static_cast<Eigen::Index>(rng.next_index(size()))); }
  /// `n` columns drawn with replacement.
  Matrix batch(RngState& rng, std::size_t n) const;
};

DomainDataset make_dataset(const std::string& name, const DatasetSpec& spec);

}  // namespace rflab
