#pragma once

#include "rflab/field.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rflab {

enum class Strategy { vanilla, inversion, treft };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

struct InversionConfig {
  double t_inv = 0.5;
  void validate() const;
};

/// One denoising step from t = 0: z + v(z, 0).
LatentVector vanilla_translate(const VelocityField& field, const LatentVector& z, DomainTag tag);

/// Backward step of size t_inv followed by a forward step, evaluated as
///   z - t_inv v(z, 1) + t_inv v(z_mid, t_inv),  z_mid = z - t_inv v(z, 1).
/// The second evaluation happens at timestep t_inv (not 1 - t_inv).
LatentVector inversion_translate(const VelocityField& field, const LatentVector& z, const InversionConfig& cfg,
                                 DomainTag tag);

/// The velocity at t = 1 is the translated sample: v(z, 1).
LatentVector treft_translate(const VelocityField& field, const LatentVector& z, DomainTag tag);

LatentVector translate(Strategy strategy, const VelocityField& field, const LatentVector& z,
                       const InversionConfig& cfg, DomainTag tag);

struct FlowAngleStats {
  std::vector<double> cos_treft;    ///< cos(z_a, z_b)
  /// cos(v(z_a, 0), z_b - z_a); empty when either flow is zero.
  std::vector<std::optional<double>> cos_vanilla;
  std::vector<std::size_t> pair_ids;
  std::size_t skipped = 0;  ///< pairs with a zero-norm member
};

/// Per pair, the alignment TReFT relies on and the pretrained-vs-target
/// flow angle Vanilla has to overcome.
FlowAngleStats flow_angle_stats(const VelocityField& pretrained,
                                std::span<const std::pair<LatentVector, LatentVector>> pairs);

double median(std::vector<double> values);
/// Median of |x| over the defined entries.
double median_abs(std::span<const std::optional<double>> values);

}  // namespace rflab
