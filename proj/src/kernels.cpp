#include "rflab/kernels.hpp"

#include "rflab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rflab {

namespace {

constexpr std::size_t kBlock = 4096;

void check_regression_inputs(const Matrix& x, const Matrix& y, const Matrix& probes, double bandwidth) {
  if (x.cols() != y.cols()) throw InvalidArgument("kernel_regression: x and y sample counts differ");
  if (x.rows() != probes.rows()) throw InvalidDimension("kernel_regression: probe dimension mismatch");
  if (x.cols() == 0) throw InsufficientData("kernel_regression: no samples");
  if (!(bandwidth > 0.0)) throw InvalidArgument("kernel_regression: bandwidth must be positive");
}

// Running sums for one timestep of the averaged curves.
struct CurveAccumulator {
  std::vector<double> cos_sum;
  std::vector<std::size_t> cos_count;
  std::vector<double> norm_sum;
  std::vector<double> norm_sq_sum;

  explicit CurveAccumulator(std::size_t n) : cos_sum(n, 0.0), cos_count(n, 0), norm_sum(n, 0.0), norm_sq_sum(n, 0.0) {}

  void add(const std::vector<CurveRow>& rows) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].cos_sim) {
        cos_sum[k] += *rows[k].cos_sim;
        ++cos_count[k];
      }
      norm_sum[k] += rows[k].z0_norm;
      norm_sq_sum[k] += rows[k].z0_norm * rows[k].z0_norm;
    }
  }

  AveragedCurves finish(const Schedule& schedule, std::size_t runs) const {
    AveragedCurves out;
    out.t = schedule.timesteps();
    const double n = static_cast<double>(runs);
    for (std::size_t k = 0; k < out.t.size(); ++k) {
      out.cos_sim_mean.push_back(cos_count[k] ? cos_sum[k] / static_cast<double>(cos_count[k])
                                              : std::numeric_limits<double>::quiet_NaN());
      out.z0_norm_mean.push_back(norm_sum[k] / n);
      out.z0_norm_rms.push_back(std::sqrt(norm_sq_sum[k] / n));
      out.cos_count.push_back(cos_count[k]);
    }
    return out;
  }
};

std::vector<CurveRow> one_run(const VelocityField& field, const Schedule& schedule, std::uint64_t seed,
                              std::size_t run, DomainTag tag) {
  RngState rng = RngState(seed).fork(run);
  const LatentVector z_init = sample_standard_normal(rng, field.dimension());
  const Trajectory traj = euler_sample(field, z_init, schedule, tag);
  return trajectory_curves(traj, traj.final_z());
}

double z0_hat_sq(const VelocityField& field, const CleanSampler& data, double t, std::uint64_t seed, std::size_t i) {
  // Same (z0, z1) for sample i at every timestep: common random numbers
  // keep the curve smooth in t.
  RngState rng = RngState(seed).fork(i);
  const LatentVector z1 = data(rng);
  const LatentVector z0 = sample_standard_normal(rng, static_cast<std::size_t>(z1.size()));
  const LatentVector zt = t * z1 + (1.0 - t) * z0;
  return one_step_inversion(zt, t, field.evaluate(zt, t, DomainTag::none)).squaredNorm();
}

void rethrow_first(const std::vector<std::string>& errors) {
  for (const auto& e : errors) {
    if (!e.empty()) throw Divergence(e);
  }
}

}  // namespace

KernelRegressionResult kernel_regression(const Matrix& x, const Matrix& y, const Matrix& probes, double bandwidth) {
  check_regression_inputs(x, y, probes, bandwidth);
  const auto n = x.cols();
  const auto d = x.rows();
  const auto dy = y.rows();
  const double inv_2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  KernelRegressionResult out{Matrix::Zero(dy, probes.cols()), std::vector<double>(static_cast<std::size_t>(probes.cols()))};
  const double* xs = x.data();
  const double* ys = y.data();

#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index p = 0; p < probes.cols(); ++p) {
    const double* pr = probes.data() + p * d;
    std::vector<double> sq(static_cast<std::size_t>(n));
    double min_sq = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = xs[i * d + k] - pr[k];
        acc += diff * diff;
      }
      sq[static_cast<std::size_t>(i)] = acc;
      min_sq = std::min(min_sq, acc);
    }
    std::vector<double> num(static_cast<std::size_t>(dy), 0.0);
    double w_sum = 0.0;
    double w_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::exp(-(sq[static_cast<std::size_t>(i)] - min_sq) * inv_2h2);
      w_sum += w;
      w_sq += w * w;
      for (Eigen::Index k = 0; k < dy; ++k) num[static_cast<std::size_t>(k)] += w * ys[i * dy + k];
    }
    for (Eigen::Index k = 0; k < dy; ++k) out.estimate(k, p) = num[static_cast<std::size_t>(k)] / w_sum;
    out.ess[static_cast<std::size_t>(p)] = w_sum * w_sum / w_sq;
  }
  return out;
}

CurveBatch sample_curves(const VelocityField& field, const Schedule& schedule, std::size_t runs, std::uint64_t seed,
                         DomainTag tag, std::size_t keep_runs) {
  if (runs == 0) throw InvalidArgument("sample_curves: runs must be positive");
  CurveAccumulator acc(schedule.size());
  CurveBatch out;
  std::vector<std::vector<CurveRow>> slot(kBlock);
  std::vector<std::string> errors(kBlock);
  for (std::size_t begin = 0; begin < runs; begin += kBlock) {
    const std::size_t count = std::min(kBlock, runs - begin);
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < count; ++j) {
      try {
        slot[j] = one_run(field, schedule, seed, begin + j, tag);
      } catch (const std::exception& e) {
        errors[j] = "run " + std::to_string(begin + j) + ": " + e.what();
      }
    }
    rethrow_first(errors);
    for (std::size_t j = 0; j < count; ++j) {
      acc.add(slot[j]);
      if (begin + j < keep_runs) out.runs.push_back(slot[j]);
    }
  }
  out.mean = acc.finish(schedule, runs);
  return out;
}

std::vector<double> marginal_z0_norm_rms(const VelocityField& field, const CleanSampler& data,
                                         std::span<const double> timesteps, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("marginal_z0_norm_rms: samples must be positive");
  const std::size_t nt = timesteps.size();
  std::vector<double> sums(nt, 0.0);
  std::vector<double> slot(kBlock * nt);
  std::vector<std::string> errors(kBlock);
  for (std::size_t begin = 0; begin < samples; begin += kBlock) {
    const std::size_t count = std::min(kBlock, samples - begin);
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < count; ++j) {
      try {
        for (std::size_t k = 0; k < nt; ++k) slot[j * nt + k] = z0_hat_sq(field, data, timesteps[k], seed, begin + j);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
    rethrow_first(errors);
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t k = 0; k < nt; ++k) sums[k] += slot[j * nt + k];
    }
  }
  for (auto& s : sums) s = std::sqrt(s / static_cast<double>(samples));
  return sums;
}

namespace reference {

KernelRegressionResult kernel_regression(const Matrix& x, const Matrix& y, const Matrix& probes, double bandwidth) {
  check_regression_inputs(x, y, probes, bandwidth);
  KernelRegressionResult out{Matrix::Zero(y.rows(), probes.cols()), {}};
  for (Eigen::Index p = 0; p < probes.cols(); ++p) {
    const LatentVector probe = probes.col(p);
    Eigen::VectorXd sq(x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) sq[i] = (x.col(i) - probe).squaredNorm();
    const Eigen::VectorXd w = (-(sq.array() - sq.minCoeff()) / (2.0 * bandwidth * bandwidth)).exp().matrix();
    out.estimate.col(p) = y * w / w.sum();
    out.ess.push_back(w.sum() * w.sum() / w.squaredNorm());
  }
  return out;
}

CurveBatch sample_curves(const VelocityField& field, const Schedule& schedule, std::size_t runs, std::uint64_t seed,
                         DomainTag tag, std::size_t keep_runs) {
  if (runs == 0) throw InvalidArgument("sample_curves: runs must be positive");
  CurveAccumulator acc(schedule.size());
  CurveBatch out;
  for (std::size_t i = 0; i < runs; ++i) {
    auto rows = one_run(field, schedule, seed, i, tag);
    acc.add(rows);
    if (i < keep_runs) out.runs.push_back(std::move(rows));
  }
  out.mean = acc.finish(schedule, runs);
  return out;
}

std::vector<double> marginal_z0_norm_rms(const VelocityField& field, const CleanSampler& data,
                                         std::span<const double> timesteps, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw InvalidArgument("marginal_z0_norm_rms: samples must be positive");
  std::vector<double> out;
  for (double t : timesteps) {
    double sum = 0.0;
    for (std::size_t i = 0; i < samples; ++i) sum += z0_hat_sq(field, data, t, seed, i);
    out.push_back(std::sqrt(sum / static_cast<double>(samples)));
  }
  return out;
}

}  // namespace reference

}  // namespace rflab
