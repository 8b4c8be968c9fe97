#include "rflab/metrics.hpp"

#include "rflab/errors.hpp"

#include <cmath>
#include <iostream>

namespace rflab {

namespace {

constexpr double kEigFloor = -1e-10;
constexpr double kSymTol = 1e-8;

struct SqrtResult {
  Matrix root;
  bool clamped = false;
};

SqrtResult sqrt_clamped(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("matrix_sqrt_psd: matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale) {
    throw InvalidArgument("matrix_sqrt_psd: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw InvalidArgument("matrix_sqrt_psd: eigendecomposition failed");
  Eigen::VectorXd ev = eig.eigenvalues();
  SqrtResult out;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < kEigFloor * scale) out.clamped = true;
    ev[i] = ev[i] > 0.0 ? std::sqrt(ev[i]) : 0.0;
  }
  out.root = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  return out;
}

}  // namespace

Matrix matrix_sqrt_psd(const Matrix& m) { return sqrt_clamped(m).root; }

FrechetResult frechet_distance_checked(const GaussianSummary& p, const GaussianSummary& q) {
  if (p.mean.size() != q.mean.size() || p.covariance.rows() != q.covariance.rows()) {
    throw InvalidDimension("frechet_distance: dimension mismatch");
  }
  const auto sp = sqrt_clamped(p.covariance);
  const Matrix inner = sp.root * q.covariance * sp.root;
  const auto cross = sqrt_clamped(0.5 * (inner + inner.transpose()));
  const double value = (p.mean - q.mean).squaredNorm() + p.covariance.trace() + q.covariance.trace() -
                       2.0 * cross.root.trace();
  FrechetResult out{value < 0.0 ? 0.0 : value, sp.clamped || cross.clamped};
  if (out.clamped) std::cerr << "warning: frechet_distance clamped negative eigenvalues\n";
  return out;
}

double frechet_distance(const GaussianSummary& p, const GaussianSummary& q) {
  return frechet_distance_checked(p, q).value;
}

double frechet_between_samples(const Matrix& a, const Matrix& b) {
  return frechet_distance(gaussian_fit(a), gaussian_fit(b));
}

double structure_score(const Matrix& inputs, const Matrix& outputs) {
  if (inputs.cols() != outputs.cols() || inputs.rows() != outputs.rows()) {
    throw InvalidArgument("structure_score: input and output batches differ in shape");
  }
  if (inputs.cols() == 0) throw InvalidArgument("structure_score: empty batch");
  const double in_norm = inputs.colwise().norm().mean();
  if (!(in_norm > 0.0)) throw UndefinedDirection("structure_score: inputs have zero mean norm");
  return (outputs - inputs).colwise().norm().mean() / in_norm;
}

double structure_score(std::span<const LatentVector> inputs, std::span<const LatentVector> outputs) {
  if (inputs.size() != outputs.size()) throw InvalidArgument("structure_score: batch length mismatch");
  return structure_score(to_columns(inputs), to_columns(outputs));
}

}  // namespace rflab
