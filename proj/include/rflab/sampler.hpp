#pragma once

#include "rflab/field.hpp"

#include <optional>
#include <vector>

namespace rflab {

/// Strictly increasing timesteps t_0 < ... < t_N inside [0, 1].
class Schedule {
 public:
  explicit Schedule(std::vector<double> timesteps);
  /// steps + 1 equally spaced points from 0 to 1.
  static Schedule uniform(std::size_t steps);

  const std::vector<double>& timesteps() const { return ts_; }
  std::size_t size() const { return ts_.size(); }

 private:
  std::vector<double> ts_;
};

struct TrajectoryRecord {
  double t;
  LatentVector z;
  LatentVector v;
};

/// One record per schedule entry; the last record's z is the sample.
struct Trajectory {
  std::vector<TrajectoryRecord> records;
  const LatentVector& final_z() const { return records.back().z; }
};

/// Forward explicit Euler: z_{i+1} = z_i + (t_{i+1} - t_i) v(z_i, t_i).
/// The velocity at the final timestep is also evaluated and recorded.
Trajectory euler_sample(const VelocityField& field, const LatentVector& z_init, const Schedule& schedule,
                        DomainTag tag);

struct CurveRow {
  double t;
  std::optional<double> cos_sim;  ///< empty when v is zero at this record
  double z0_norm;
};

/// Per record: cos(v, z_final) and ||z - t v||.
std::vector<CurveRow> trajectory_curves(const Trajectory& traj, const LatentVector& z_final);

/// Curves averaged over many runs, reduced in fixed run order.
struct AveragedCurves {
  std::vector<double> t;
  std::vector<double> cos_sim_mean;  ///< mean over runs with a defined cosine
  std::vector<double> z0_norm_mean;
  std::vector<double> z0_norm_rms;
  std::vector<std::size_t> cos_count;
};

}  // namespace rflab
