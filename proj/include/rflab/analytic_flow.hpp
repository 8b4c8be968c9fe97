#pragma once

#include "rflab/numeric.hpp"

#include <vector>

namespace rflab {

/// Isotropic Gaussian model N(mu, sigma_sq * I) of the clean-data distribution.
class GaussianSpec {
 public:
  GaussianSpec(LatentVector mu, double sigma_sq);

  const LatentVector& mu() const { return mu_; }
  double sigma_sq() const { return sigma_sq_; }
  std::size_t dimension() const { return static_cast<std::size_t>(mu_.size()); }

 private:
  LatentVector mu_;
  double sigma_sq_;
};

struct MixtureComponent {
  double weight;
  GaussianSpec gaussian;
};

/// Weighted isotropic Gaussian mixture; weights must sum to 1 within 1e-12.
class MixtureSpec {
 public:
  explicit MixtureSpec(std::vector<MixtureComponent> components);

  const std::vector<MixtureComponent>& components() const { return components_; }
  std::size_t dimension() const { return components_.front().gaussian.dimension(); }

  LatentVector sample(RngState& rng) const;

 private:
  std::vector<MixtureComponent> components_;
};

struct FlowCoefficients {
  double lambda;
  double alpha;
  double beta;
};

// Closed-form posterior quantities under z0 ~ N(0, I), z1 ~ spec and
// z_t = t z1 + (1 - t) z0. Timesteps follow t=0 noise, t=1 clean.

LatentVector posterior_mean_z1(const LatentVector& z_t, double t, const GaussianSpec& spec);
LatentVector posterior_mean_z0(const LatentVector& z_t, double t, const GaussianSpec& spec);

/// E[z1 - z0 | z_t]: the optimal flow-matching velocity.
LatentVector expected_velocity(const LatentVector& z_t, double t, const GaussianSpec& spec);

/// E[z1 - z0 | z_t] under a mixture prior. Requires t in [0, 1).
///
/// Responsibilities are r_k ∝ w_k N(z_t; t mu_k, (t^2 sigma_k^2 + (1-t)^2) I),
/// evaluated with log-sum-exp; the result is the responsibility-weighted sum
/// of the per-component Gaussian velocities.
LatentVector expected_velocity_mixture(const LatentVector& z_t, double t, const MixtureSpec& spec);

/// Posterior component weights for the mixture at (z_t, t).
std::vector<double> mixture_responsibilities(const LatentVector& z_t, double t,
                                             const MixtureSpec& spec);

FlowCoefficients flow_coefficients(double t, double sigma_sq);

/// E||z0_hat||^2 where z0_hat = z_t - t E[z1 - z0 | z_t] and z_t is drawn
/// from the interpolant marginal.
double expected_z0_norm_sq(double t, const GaussianSpec& spec);

/// z0_hat = z_t - t v.
LatentVector one_step_inversion(const LatentVector& z_t, double t, const LatentVector& v);

/// Throws InvalidArgument when t is outside [0, 1].
void check_timestep(double t);

}  // namespace rflab
