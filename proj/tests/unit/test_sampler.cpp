#include "rflab/errors.hpp"
#include "rflab/kernels.hpp"
#include "rflab/sampler.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace rflab;
using rflab::testing::vec;

namespace {

const GaussianSpec kPaperSpec(vec({512.0, 0.0}), 0.03);

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("schedule validation") {
  CHECK_THROWS_AS(Schedule({0.5}), InvalidArgument);
  CHECK_THROWS_AS(Schedule({0.0, 0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(Schedule({0.0, 1.2}), InvalidArgument);
  CHECK_THROWS_AS(Schedule({-0.1, 1.0}), InvalidArgument);
  const Schedule u = Schedule::uniform(4);
  CHECK(u.size() == 5);
  CHECK(u.timesteps().front() == 0.0);
  CHECK(u.timesteps().back() == 1.0);
}

TEST_CASE("Euler examples") {
  const FunctionField constant(2, [](const LatentVector&, double, DomainTag) { return vec({0.5, -3.0}); });
  const LatentVector z = vec({1.0, 1.0});
  CHECK(euler_sample(constant, z, Schedule({0.0, 1.0}), DomainTag::none).final_z() == vec({1.5, -2.0}));

  const FunctionField linear(1, [](const LatentVector& x, double, DomainTag) { return x; });
  const Trajectory traj = euler_sample(linear, vec({1.0}), Schedule({0.0, 0.5, 1.0}), DomainTag::none);
  REQUIRE(traj.records.size() == 3);
  CHECK(traj.records[1].z[0] == 1.5);
  CHECK(traj.records[2].z[0] == 2.25);
  CHECK(traj.records[2].v[0] == 2.25);
}

TEST_CASE("records chain by the Euler rule bit for bit") {
  const GaussianField field(GaussianSpec(vec({3.0, -1.0}), 0.25));
  RngState rng(4);
  const Schedule schedule = Schedule::uniform(37);
  const Trajectory traj = euler_sample(field, sample_standard_normal(rng, 2), schedule, DomainTag::none);
  REQUIRE(traj.records.size() == schedule.size());
  for (std::size_t i = 0; i + 1 < traj.records.size(); ++i) {
    const auto& a = traj.records[i];
    const auto& b = traj.records[i + 1];
    CHECK(b.t == schedule.timesteps()[i + 1]);
    const LatentVector step = a.z + (b.t - a.t) * a.v;
    CHECK(step == b.z);
  }
}

TEST_CASE("divergence is reported") {
  const FunctionField bad(1, [](const LatentVector&, double t, DomainTag) {
    return vec({t > 0.4 ? std::numeric_limits<double>::infinity() : 1.0});
  });
  CHECK_THROWS_AS(euler_sample(bad, vec({0.0}), Schedule::uniform(10), DomainTag::none), Divergence);
  const ZeroField zero(1);
  CHECK_THROWS_AS(euler_sample(zero, vec({std::nan("")}), Schedule::uniform(2), DomainTag::none), InvalidArgument);
}

TEST_CASE("analytic sampler mean") {
  const GaussianSpec spec(vec({3.0, -1.0}), 0.25);
  const GaussianField field(spec);
  const Schedule schedule = Schedule::uniform(50);
  RngState root(31);
  LatentVector sum = LatentVector::Zero(2);
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    RngState rng = root.fork(i);
    sum += euler_sample(field, sample_standard_normal(rng, 2), schedule, DomainTag::none).final_z();
  }
  const LatentVector mean = sum / static_cast<double>(n);
  CHECK((mean - spec.mu()).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("endpoint error shrinks as the step count doubles") {
  const GaussianField field(GaussianSpec(vec({3.0, -1.0}), 0.25));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RngState rng(seed);
    const LatentVector z = sample_standard_normal(rng, 2);
    auto endpoint = [&](std::size_t steps) {
      return euler_sample(field, z, Schedule::uniform(steps), DomainTag::none).final_z();
    };
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k : {5u, 10u, 20u, 40u, 80u}) {
      const double err = (endpoint(2 * k) - endpoint(k)).norm();
      CAPTURE(k);
      CHECK(err < prev);
      prev = err;
    }
  }
}

TEST_CASE("trajectory curves") {
  const GaussianField field(kPaperSpec);
  RngState rng(6);
  const LatentVector z_init = sample_standard_normal(rng, 2);
  const Trajectory traj = euler_sample(field, z_init, Schedule::uniform(50), DomainTag::none);
  const auto rows = trajectory_curves(traj, traj.final_z());
  REQUIRE(rows.size() == 51);
  CHECK(rows.front().z0_norm == z_init.norm());
  REQUIRE(rows.back().cos_sim.has_value());
  CHECK(*rows.back().cos_sim >= 1.0 - 1e-6);

  const Trajectory flat = euler_sample(ZeroField(2), z_init, Schedule::uniform(3), DomainTag::none);
  for (const auto& row : trajectory_curves(flat, flat.final_z())) CHECK_FALSE(row.cos_sim.has_value());
  CHECK_THROWS_AS(trajectory_curves(flat, LatentVector::Zero(2)), UndefinedDirection);
}

TEST_CASE("averaged curves have the expected shape over 1000 runs") {
  const GaussianField field(kPaperSpec);
  const CurveBatch batch = sample_curves(field, Schedule::uniform(50), 1000, 77, DomainTag::none);
  const AveragedCurves& c = batch.mean;
  for (std::size_t k = 1; k < c.t.size(); ++k) {
    CAPTURE(k);
    CHECK(c.z0_norm_mean[k] < c.z0_norm_mean[k - 1]);
    CHECK(c.cos_sim_mean[k] > c.cos_sim_mean[k - 1]);
  }
  CHECK(c.cos_sim_mean.back() >= 1.0 - 1e-6);
}

}  // TEST_SUITE
