#pragma once

// Central finite-difference checks of the hand-written gradients.

#include "rflab/adversarial.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rflab {

/// |a - n| / max(|a|, |n|, floor). The floor keeps components whose true
/// gradient is zero from turning round-off into a huge ratio.
double gradient_relative_error(double analytic, double numeric, double floor = 1e-6);

struct GradCheckResult {
  std::string name;
  std::size_t checked = 0;
  /// ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2).
  double rel_err = 0.0;
  /// Worst gradient_relative_error over single components. Components with
  /// tiny true gradients are dominated by the O(eps^2) truncation error of
  /// the central difference, so this is informational.
  double max_component_rel_err = 0.0;
};

/// Compares `analytic` against central differences of `loss` over every
/// entry of `x` (restored afterwards).
GradCheckResult check_gradient(const std::string& name, Eigen::Ref<Eigen::VectorXd> x,
                               const std::function<double()>& loss, const Eigen::VectorXd& analytic, double eps);

/// One random configuration of the gradient suite. Configuration `index`
/// varies the dimension, network widths, strategy, inversion step and batch.
struct GradSuiteConfig {
  std::size_t index = 0;
  std::size_t d = 2;
  std::vector<std::size_t> hidden;
  Strategy strategy = Strategy::treft;
  double t_inv = 0.5;
  std::size_t batch = 8;
  std::uint64_t seed = 0;

  static GradSuiteConfig make(std::size_t index);
};

/// Checks flow-matching, discriminator, generator-side GAN (with respect to
/// the fake samples and, through the translator, the network weights), cycle
/// and identity gradients for one configuration.
std::vector<GradCheckResult> gradient_suite(const GradSuiteConfig& cfg, double eps = 1e-4);

}  // namespace rflab
