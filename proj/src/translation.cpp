#include "rflab/translation.hpp"

#include "rflab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rflab {

namespace {

LatentVector checked(LatentVector v, const char* stage) {
  if (!v.allFinite()) throw Divergence(std::string("translation: non-finite value at stage '") + stage + "'");
  return v;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::vanilla: return "vanilla";
    case Strategy::inversion: return "inversion";
    case Strategy::treft: return "treft";
  }
  return "treft";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "vanilla") return Strategy::vanilla;
  if (text == "inversion") return Strategy::inversion;
  if (text == "treft") return Strategy::treft;
  throw InvalidArgument("unknown strategy: " + std::string(text));
}

void InversionConfig::validate() const {
  if (!(t_inv > 0.0 && t_inv < 1.0)) throw InvalidArgument("InversionConfig: t_inv must lie in (0, 1)");
}

LatentVector vanilla_translate(const VelocityField& field, const LatentVector& z, DomainTag tag) {
  return checked(z + field.evaluate(z, 0.0, tag), "vanilla");
}

LatentVector inversion_translate(const VelocityField& field, const LatentVector& z, const InversionConfig& cfg,
                                 DomainTag tag) {
  cfg.validate();
  const LatentVector v_back = checked(field.evaluate(z, 1.0, tag), "inversion/backward");
  const LatentVector z_mid = z - cfg.t_inv * v_back;
  const LatentVector v_fwd = checked(field.evaluate(z_mid, cfg.t_inv, tag), "inversion/forward");
  return checked(z_mid + cfg.t_inv * v_fwd, "inversion/output");
}

LatentVector treft_translate(const VelocityField& field, const LatentVector& z, DomainTag tag) {
  return checked(field.evaluate(z, 1.0, tag), "treft");
}

LatentVector translate(Strategy strategy, const VelocityField& field, const LatentVector& z,
                       const InversionConfig& cfg, DomainTag tag) {
  switch (strategy) {
    case Strategy::vanilla: return vanilla_translate(field, z, tag);
    case Strategy::inversion: return inversion_translate(field, z, cfg, tag);
    case Strategy::treft: return treft_translate(field, z, tag);
  }
  throw InvalidArgument("translate: unknown strategy");
}

FlowAngleStats flow_angle_stats(const VelocityField& pretrained,
                                std::span<const std::pair<LatentVector, LatentVector>> pairs) {
  FlowAngleStats out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [za, zb] = pairs[i];
    if (!(za.norm() > 0.0) || !(zb.norm() > 0.0)) {
      ++out.skipped;
      continue;
    }
    const LatentVector v = pretrained.evaluate(za, 0.0, DomainTag::none);
    const LatentVector target_flow = zb - za;
    out.cos_treft.push_back(cosine_similarity(za, zb));
    if (v.norm() > 0.0 && target_flow.norm() > 0.0) {
      out.cos_vanilla.push_back(cosine_similarity(v, target_flow));
    } else {
      out.cos_vanilla.push_back(std::nullopt);
    }
    out.pair_ids.push_back(i);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InsufficientData("median: empty input");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double median_abs(std::span<const std::optional<double>> values) {
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(std::abs(*v));
  }
  return median(std::move(defined));
}

}  // namespace rflab
