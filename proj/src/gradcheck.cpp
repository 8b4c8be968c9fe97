#include "rflab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace rflab {

namespace {

Matrix normal_matrix(RngState& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * rng.next_normal();
  }
  return m;
}

}  // namespace

double gradient_relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult check_gradient(const std::string& name, Eigen::Ref<Eigen::VectorXd> x,
                               const std::function<double()>& loss, const Eigen::VectorXd& analytic, double eps) {
  GradCheckResult res{name, 0, 0.0, 0.0};
  Eigen::VectorXd numeric_grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = loss();
    x[i] = saved - eps;
    const double down = loss();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    numeric_grad[i] = numeric;
    res.max_component_rel_err = std::max(res.max_component_rel_err, gradient_relative_error(analytic[i], numeric));
    ++res.checked;
  }
  const double scale = std::max(analytic.norm(), numeric_grad.norm());
  res.rel_err = scale > 0.0 ? (analytic - numeric_grad).norm() / scale : 0.0;
  return res;
}

GradSuiteConfig GradSuiteConfig::make(std::size_t index) {
  GradSuiteConfig c;
  c.index = index;
  c.d = 1 + index % 3;
  c.hidden = {4 + 4 * (index % 3), 6 + 2 * (index % 2)};
  c.strategy = static_cast<Strategy>(index % 3);
  c.t_inv = 0.3 + 0.1 * static_cast<double>(index % 4);
  c.batch = 6 + index % 4;
  c.seed = 1000 + index;
  return c;
}

std::vector<GradCheckResult> gradient_suite(const GradSuiteConfig& cfg, double eps) {
  RngState rng(cfg.seed);
  NetParams net = NetParams::init(cfg.d, cfg.hidden, Activation::tanh, rng.next_u64());
  // Non-zero tag embeddings so every tag path carries gradient.
  for (std::size_t k = net.layout().num_params(); k < net.num_params(); ++k) {
    net.theta()[static_cast<Eigen::Index>(k)] = 0.5 * rng.next_normal();
  }
  DiscParams disc = DiscParams::init(cfg.d, std::vector<std::size_t>{8, 8}, rng.next_u64());
  const auto proj = FeatureProjection::make(cfg.d, rng.next_u64());
  const InversionConfig inv{cfg.t_inv};
  const Matrix real = normal_matrix(rng, cfg.d, cfg.batch);
  const Matrix fake = normal_matrix(rng, cfg.d, cfg.batch);
  const Matrix za = normal_matrix(rng, cfg.d, cfg.batch);
  const Matrix zb = normal_matrix(rng, cfg.d, cfg.batch);

  std::vector<GradCheckResult> out;

  // Flow-matching loss with respect to every network parameter.
  {
    std::vector<FlowSample> batch;
    for (std::size_t i = 0; i < cfg.batch; ++i) {
      batch.push_back({sample_standard_normal(rng, cfg.d), sample_standard_normal(rng, cfg.d), rng.next_uniform(),
                       static_cast<DomainTag>(rng.next_index(kDomainTagCount))});
    }
    const auto lg = flow_matching_loss(net, batch);
    out.push_back(check_gradient("flow_matching", net.theta(), [&] { return flow_matching_loss(net, batch).loss; },
                                 lg.grad.values, eps));
  }

  // Discriminator loss with respect to the discriminator parameters.
  {
    const auto l = gan_losses(disc, real, fake);
    out.push_back(check_gradient("gan_disc", disc.theta, [&] { return gan_losses(disc, real, fake).d_loss; },
                                 l.d_grad.values, eps));
  }

  // Generator loss with respect to the fake samples.
  {
    Matrix f = fake;
    const auto l = gan_losses(disc, real, f);
    Eigen::Map<Eigen::VectorXd> flat(f.data(), f.size());
    const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(l.g_grad_fake.data(), l.g_grad_fake.size());
    out.push_back(check_gradient("gan_gen_fake", flat, [&] { return gan_losses(disc, real, f).g_loss; }, analytic,
                                 eps));
  }

  // Generator loss through the translator, with respect to network weights.
  {
    GradAccum grad = GradAccum::zeros_like(net);
    const Generator g = strategy_generator(net, cfg.strategy, inv, DomainTag::a2b, &grad);
    GenPass pass = g(za);
    pass.backward(gan_losses(disc, real, pass.out).g_grad_fake);
    out.push_back(check_gradient(
        "gan_gen_params", net.theta(),
        [&] { return gan_losses(disc, real, translate_batch(net, cfg.strategy, inv, DomainTag::a2b, za)).g_loss; },
        grad.values, eps));
  }

  // Cycle loss a -> b -> a.
  {
    GradAccum grad = GradAccum::zeros_like(net);
    const Generator g_ab = strategy_generator(net, cfg.strategy, inv, DomainTag::a2b, &grad);
    const Generator g_ba = strategy_generator(net, cfg.strategy, inv, DomainTag::b2a, &grad);
    latent_cycle_loss(g_ab, g_ba, za, proj);
    const Generator f_ab = strategy_generator(net, cfg.strategy, inv, DomainTag::a2b, nullptr);
    const Generator f_ba = strategy_generator(net, cfg.strategy, inv, DomainTag::b2a, nullptr);
    out.push_back(check_gradient(
        "cycle", net.theta(), [&] { return latent_cycle_loss(f_ab, f_ba, za, proj).total(); }, grad.values, eps));
  }

  // Identity loss: G_ab applied to samples already in domain b.
  {
    GradAccum grad = GradAccum::zeros_like(net);
    const Generator g_ab = strategy_generator(net, cfg.strategy, inv, DomainTag::a2b, &grad);
    latent_identity_loss(g_ab, zb, proj);
    const Generator f_ab = strategy_generator(net, cfg.strategy, inv, DomainTag::a2b, nullptr);
    out.push_back(check_gradient(
        "identity", net.theta(), [&] { return latent_identity_loss(f_ab, zb, proj).total(); }, grad.values, eps));
  }
  return out;
}

}  // namespace rflab
