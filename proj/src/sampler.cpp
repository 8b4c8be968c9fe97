#include "rflab/sampler.hpp"

#include "rflab/errors.hpp"

#include <cmath>
#include <string>

namespace rflab {

std::string_view to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::none: return "none";
    case DomainTag::a2b: return "a2b";
    case DomainTag::b2a: return "b2a";
  }
  return "none";
}

DomainTag parse_domain_tag(std::string_view text) {
  if (text == "none") return DomainTag::none;
  if (text == "a2b") return DomainTag::a2b;
  if (text == "b2a") return DomainTag::b2a;
  throw InvalidArgument("unknown domain tag: " + std::string(text));
}

LatentVector MixtureField::evaluate(const LatentVector& z, double t, DomainTag) const {
  constexpr double kMaxT = 1.0 - 1e-9;
  return expected_velocity_mixture(z, t > kMaxT ? kMaxT : t, spec_);
}

Schedule::Schedule(std::vector<double> timesteps) : ts_(std::move(timesteps)) {
  if (ts_.size() < 2) throw InvalidArgument("Schedule: need at least two timesteps");
  if (ts_.front() < 0.0 || ts_.back() > 1.0) throw InvalidArgument("Schedule: timesteps must lie in [0, 1]");
  for (std::size_t i = 1; i < ts_.size(); ++i) {
    if (!(ts_[i] > ts_[i - 1])) throw InvalidArgument("Schedule: timesteps must be strictly increasing");
  }
}

Schedule Schedule::uniform(std::size_t steps) {
  if (steps == 0) throw InvalidArgument("Schedule::uniform: steps must be >= 1");
  std::vector<double> ts(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) ts[i] = static_cast<double>(i) / static_cast<double>(steps);
  return Schedule(std::move(ts));
}

Trajectory euler_sample(const VelocityField& field, const LatentVector& z_init, const Schedule& schedule,
                        DomainTag tag) {
  if (!z_init.allFinite()) throw InvalidArgument("euler_sample: non-finite initial state");
  const auto& ts = schedule.timesteps();
  Trajectory traj;
  traj.records.reserve(ts.size());
  LatentVector z = z_init;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    LatentVector v = field.evaluate(z, ts[i], tag);
    if (!v.allFinite()) {
      throw Divergence("euler_sample: non-finite velocity at t=" + std::to_string(ts[i]));
    }
    LatentVector next;
    if (i + 1 < ts.size()) next = z + (ts[i + 1] - ts[i]) * v;
    traj.records.push_back({ts[i], std::move(z), std::move(v)});
    z = std::move(next);
  }
  return traj;
}

std::vector<CurveRow> trajectory_curves(const Trajectory& traj, const LatentVector& z_final) {
  if (!(z_final.norm() > 0.0)) throw UndefinedDirection("trajectory_curves: zero final sample");
  std::vector<CurveRow> rows;
  rows.reserve(traj.records.size());
  for (const auto& rec : traj.records) {
    CurveRow row{rec.t, std::nullopt, one_step_inversion(rec.z, rec.t, rec.v).norm()};
    if (rec.v.norm() > 0.0) row.cos_sim = cosine_similarity(rec.v, z_final);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rflab
