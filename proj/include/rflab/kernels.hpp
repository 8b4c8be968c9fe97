#pragma once

// Data-parallel Monte-Carlo kernels. Each has a serial twin in
// rflab::reference used by the tests and the benchmark. Parallel loops write
// per-item slots and reduce them in item order, so outputs are identical for
// any thread count.

#include "rflab/neural_velocity.hpp"
#include "rflab/sampler.hpp"

#include <span>
#include <vector>

namespace rflab {

struct KernelRegressionResult {
  Matrix estimate;          ///< one column per probe
  std::vector<double> ess;  ///< Kish effective sample size per probe
};

/// Nadaraya-Watson estimate of E[y | x = probe] with a Gaussian kernel of
/// bandwidth h. `x`, `y` and `probes` hold one point per column.
KernelRegressionResult kernel_regression(const Matrix& x, const Matrix& y, const Matrix& probes, double bandwidth);

struct CurveBatch {
  AveragedCurves mean;
  /// Per-run curves for the first `keep_runs` runs.
  std::vector<std::vector<CurveRow>> runs;
};

/// Runs `runs` Euler trajectories from z_init ~ N(0, I) (run i uses
/// rng stream fork(i) of `seed`) and averages their curves.
CurveBatch sample_curves(const VelocityField& field, const Schedule& schedule, std::size_t runs, std::uint64_t seed,
                         DomainTag tag, std::size_t keep_runs = 0);

/// For each timestep t, draws z_t = t z1 + (1 - t) z0 with z1 ~ data and
/// z0 ~ N(0, I), applies one-step inversion with the field's velocity and
/// returns the RMS of ||z0_hat|| over `samples` draws.
std::vector<double> marginal_z0_norm_rms(const VelocityField& field, const CleanSampler& data,
                                         std::span<const double> timesteps, std::size_t samples, std::uint64_t seed);

namespace reference {

KernelRegressionResult kernel_regression(const Matrix& x, const Matrix& y, const Matrix& probes, double bandwidth);

CurveBatch sample_curves(const VelocityField& field, const Schedule& schedule, std::size_t runs, std::uint64_t seed,
                         DomainTag tag, std::size_t keep_runs = 0);

std::vector<double> marginal_z0_norm_rms(const VelocityField& field, const CleanSampler& data,
                                         std::span<const double> timesteps, std::size_t samples, std::uint64_t seed);

}  // namespace reference

}  // namespace rflab
