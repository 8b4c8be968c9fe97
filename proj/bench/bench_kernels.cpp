// Wall-clock comparison of the OpenMP kernels against their serial
// reference implementations, with an equality check on every result.

#include "rflab/kernels.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

using namespace rflab;

namespace {

double seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-24s serial %8.3f s  parallel %8.3f s  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
  std::printf("threads: %d\n", omp_get_max_threads());
  bool all_same = true;

  {
    GaussianSpec spec(LatentVector::Unit(2, 0) * 512.0, 0.03);
    GaussianField field(spec);
    const Schedule schedule = Schedule::uniform(50);
    const auto runs = static_cast<std::size_t>(20000 * scale);
    CurveBatch ser, par;
    const double ts = seconds([&] { ser = reference::sample_curves(field, schedule, runs, 1, DomainTag::none); });
    const double tp = seconds([&] { par = sample_curves(field, schedule, runs, 1, DomainTag::none); });
    const bool same = ser.mean.z0_norm_rms == par.mean.z0_norm_rms && ser.mean.cos_sim_mean == par.mean.cos_sim_mean;
    all_same = all_same && same;
    report("sample_curves", ts, tp, same);

    const CleanSampler data = [&](RngState& rng) -> LatentVector {
      return spec.mu() + std::sqrt(spec.sigma_sq()) * sample_standard_normal(rng, 2);
    };
    const auto samples = static_cast<std::size_t>(200000 * scale);
    std::vector<double> a, b;
    const double ms = seconds([&] { a = reference::marginal_z0_norm_rms(field, data, schedule.timesteps(), samples, 2); });
    const double mp = seconds([&] { b = marginal_z0_norm_rms(field, data, schedule.timesteps(), samples, 2); });
    all_same = all_same && a == b;
    report("marginal_z0_norm_rms", ms, mp, a == b);
  }

  {
    RngState rng(3);
    const auto n = static_cast<Eigen::Index>(100000 * scale);
    Matrix x(2, n), y(2, n), probes(2, 64);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.col(i) = sample_standard_normal(rng, 2);
      y.col(i) = sample_standard_normal(rng, 2);
    }
    for (Eigen::Index p = 0; p < probes.cols(); ++p) probes.col(p) = sample_standard_normal(rng, 2);
    KernelRegressionResult ser, par;
    const double ts = seconds([&] { ser = reference::kernel_regression(x, y, probes, 0.05); });
    const double tp = seconds([&] { par = kernel_regression(x, y, probes, 0.05); });
    // Different expression order in the distance sums allows last-bit drift.
    const bool close = (ser.estimate - par.estimate).cwiseAbs().maxCoeff() < 1e-12;
    all_same = all_same && close;
    report("kernel_regression", ts, tp, close);
  }
  return all_same ? EXIT_SUCCESS : EXIT_FAILURE;
}
