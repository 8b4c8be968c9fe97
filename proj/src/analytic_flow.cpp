#include "rflab/analytic_flow.hpp"

#include "rflab/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace rflab {

namespace {

// 1 / (t^2 sigma^2 + (1 - t)^2); strictly positive for sigma^2 > 0.
double lambda_of(double t, double sigma_sq) {
  const double s = 1.0 - t;
  return 1.0 / (t * t * sigma_sq + s * s);
}

}  // namespace

GaussianSpec::GaussianSpec(LatentVector mu, double sigma_sq) : mu_(std::move(mu)), sigma_sq_(sigma_sq) {
  if (mu_.size() == 0) throw InvalidDimension("GaussianSpec: empty mean");
  if (!(sigma_sq_ > 0.0) || !std::isfinite(sigma_sq_)) {
    throw InvalidArgument("GaussianSpec: sigma_sq must be positive and finite");
  }
  if (!mu_.allFinite()) throw InvalidArgument("GaussianSpec: non-finite mean");
}

MixtureSpec::MixtureSpec(std::vector<MixtureComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("MixtureSpec: no components");
  const auto d = components_.front().gaussian.dimension();
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw InvalidArgument("MixtureSpec: weights must be positive");
    if (c.gaussian.dimension() != d) throw InvalidDimension("MixtureSpec: mixed component dimensions");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("MixtureSpec: weights must sum to 1");
}

LatentVector MixtureSpec::sample(RngState& rng) const {
  const double u = rng.next_uniform();
  double acc = 0.0;
  const MixtureComponent* chosen = &components_.back();
  for (const auto& c : components_) {
    acc += c.weight;
    if (u < acc) {
      chosen = &c;
      break;
    }
  }
  const auto& g = chosen->gaussian;
  return g.mu() + std::sqrt(g.sigma_sq()) * sample_standard_normal(rng, g.dimension());
}

void check_timestep(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("timestep must lie in [0, 1]");
}

LatentVector posterior_mean_z1(const LatentVector& z_t, double t, const GaussianSpec& spec) {
  check_timestep(t);
  const double lam = lambda_of(t, spec.sigma_sq());
  return spec.mu() + (t * spec.sigma_sq() * lam) * (z_t - t * spec.mu());
}

LatentVector posterior_mean_z0(const LatentVector& z_t, double t, const GaussianSpec& spec) {
  check_timestep(t);
  const double lam = lambda_of(t, spec.sigma_sq());
  return ((1.0 - t) * lam) * (z_t - t * spec.mu());
}

LatentVector expected_velocity(const LatentVector& z_t, double t, const GaussianSpec& spec) {
  check_timestep(t);
  if (z_t.size() != spec.mu().size()) throw InvalidDimension("expected_velocity: dimension mismatch");
  const double lam = lambda_of(t, spec.sigma_sq());
  const double coef_z = (t * spec.sigma_sq() - (1.0 - t)) * lam;
  const double coef_mu = (1.0 - t) * lam;
  return coef_z * z_t + coef_mu * spec.mu();
}

std::vector<double> mixture_responsibilities(const LatentVector& z_t, double t, const MixtureSpec& spec) {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidArgument("expected_velocity_mixture: t must lie in [0, 1)");
  const auto& comps = spec.components();
  const double d = static_cast<double>(z_t.size());
  std::vector<double> log_r(comps.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& g = comps[k].gaussian;
    const double var = t * t * g.sigma_sq() + (1.0 - t) * (1.0 - t);
    const double sq = (z_t - t * g.mu()).squaredNorm();
    log_r[k] = std::log(comps[k].weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
    if (log_r[k] > max_log) max_log = log_r[k];
  }
  if (!std::isfinite(max_log)) {
    std::ostringstream msg;
    msg << "mixture responsibilities degenerate at t=" << t << ", z_t=" << z_t.transpose();
    throw NumericalDegeneracy(msg.str());
  }
  double total = 0.0;
  for (auto& lr : log_r) {
    lr = std::exp(lr - max_log);
    total += lr;
  }
  for (auto& lr : log_r) lr /= total;
  return log_r;
}

LatentVector expected_velocity_mixture(const LatentVector& z_t, double t, const MixtureSpec& spec) {
  if (z_t.size() != static_cast<Eigen::Index>(spec.dimension())) {
    throw InvalidDimension("expected_velocity_mixture: dimension mismatch");
  }
  const auto r = mixture_responsibilities(z_t, t, spec);
  LatentVector out = LatentVector::Zero(z_t.size());
  const auto& comps = spec.components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (r[k] == 0.0) continue;
    out += r[k] * expected_velocity(z_t, t, comps[k].gaussian);
  }
  return out;
}

FlowCoefficients flow_coefficients(double t, double sigma_sq) {
  check_timestep(t);
  if (!(sigma_sq > 0.0)) throw InvalidArgument("flow_coefficients: sigma_sq must be positive");
  const double lam = lambda_of(t, sigma_sq);
  return {lam, 1.0 - lam * t * t * sigma_sq + lam * t * (1.0 - t), lam * t * (t - 1.0)};
}

double expected_z0_norm_sq(double t, const GaussianSpec& spec) {
  const auto c = flow_coefficients(t, spec.sigma_sq());
  const double d = static_cast<double>(spec.dimension());
  const double mu_sq = spec.mu().squaredNorm();
  const double s = 1.0 - t;
  const double zt_sq = t * t * (mu_sq + d * spec.sigma_sq()) + s * s * d;
  const double zt_dot_mu = t * mu_sq;
  const double value = c.alpha * c.alpha * zt_sq + 2.0 * c.alpha * c.beta * zt_dot_mu + c.beta * c.beta * mu_sq;
  // The three terms cancel to a small number when ||mu|| is large; rounding
  // must not produce a negative expectation.
  return value < 0.0 ? 0.0 : value;
}

LatentVector one_step_inversion(const LatentVector& z_t, double t, const LatentVector& v) {
  if (z_t.size() != v.size()) throw InvalidDimension("one_step_inversion: dimension mismatch");
  return z_t - t * v;
}

}  // namespace rflab
