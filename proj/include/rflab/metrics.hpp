#pragma once

#include "rflab/numeric.hpp"

#include <span>

namespace rflab {

/// Symmetric PSD square root by eigendecomposition. Eigenvalues down to
/// -1e-10 are clamped to zero; asymmetry beyond 1e-8 is rejected.
Matrix matrix_sqrt_psd(const Matrix& m);

struct FrechetResult {
  double value;
  bool clamped;  ///< an eigenvalue below -1e-10 had to be clamped
};

/// ||mu_p - mu_q||^2 + tr(S_p + S_q - 2 (S_p S_q)^{1/2}).
///
/// The cross term is computed as tr(sqrt(sqrt(S_p) S_q sqrt(S_p))), which
/// shares its spectrum with (S_p S_q)^{1/2} but stays symmetric.
FrechetResult frechet_distance_checked(const GaussianSummary& p, const GaussianSummary& q);
double frechet_distance(const GaussianSummary& p, const GaussianSummary& q);

/// Frechet distance between Gaussian fits of two sample sets (columns).
double frechet_between_samples(const Matrix& a, const Matrix& b);

/// mean_i ||out_i - in_i|| / mean_i ||in_i||.
double structure_score(const Matrix& inputs, const Matrix& outputs);
double structure_score(std::span<const LatentVector> inputs, std::span<const LatentVector> outputs);

}  // namespace rflab
