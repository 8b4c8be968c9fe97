#include "rflab/adversarial.hpp"

#include "rflab/errors.hpp"
#include "rflab/metrics.hpp"

#include <cmath>
#include <string>

namespace rflab {

namespace {

constexpr double kCollapseLoss = 1e-6;
constexpr std::size_t kCollapseSteps = 500;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> filled(std::size_t n, double t) { return std::vector<double>(n, t); }

struct NetEval {
  Matrix v;
  VelocityTape tape;
};

NetEval eval_net(const NetParams& params, const Matrix& z, double t, DomainTag tag, bool keep_tape) {
  const auto n = static_cast<std::size_t>(z.cols());
  const auto ts = filled(n, t);
  const std::vector<DomainTag> tags(n, tag);
  NetEval out;
  out.v = velocity_forward(params, z, ts, tags, keep_tape ? &out.tape : nullptr);
  return out;
}

}  // namespace

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

DiscParams DiscParams::init(std::size_t d, std::span<const std::size_t> hidden, std::uint64_t seed) {
  DiscParams out{MlpLayout::chain(d, hidden, 1), {}};
  out.theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out.layout.num_params()));
  RngState rng(seed);
  mlp_init(out.layout, {out.theta.data(), out.layout.num_params()}, rng);
  return out;
}

Matrix disc_logits(const DiscParams& disc, const Matrix& x, MlpCache* cache) {
  return mlp_forward(disc.layout, disc.span(), x, cache);
}

GanLosses gan_losses(const DiscParams& disc, const Matrix& real, const Matrix& fake) {
  if (real.cols() == 0 || fake.cols() == 0) throw InvalidArgument("gan_losses: empty batch");
  MlpCache real_cache;
  MlpCache fake_cache;
  const Matrix lr = disc_logits(disc, real, &real_cache);
  const Matrix lf = disc_logits(disc, fake, &fake_cache);
  const double nr = static_cast<double>(real.cols());
  const double nf = static_cast<double>(fake.cols());

  GanLosses out{0.0, 0.0, GradAccum::zeros(disc.layout.num_params()), Matrix()};
  Matrix d_real(1, real.cols());
  Matrix d_fake(1, fake.cols());
  Matrix g_fake(1, fake.cols());
  for (Eigen::Index j = 0; j < real.cols(); ++j) {
    out.d_loss += softplus(-lr(0, j)) / nr;
    d_real(0, j) = -sigmoid(-lr(0, j)) / nr;
  }
  for (Eigen::Index j = 0; j < fake.cols(); ++j) {
    out.d_loss += softplus(lf(0, j)) / nf;
    out.g_loss += softplus(-lf(0, j)) / nf;
    d_fake(0, j) = sigmoid(lf(0, j)) / nf;
    g_fake(0, j) = -sigmoid(-lf(0, j)) / nf;
  }
  const auto grad = out.d_grad.span();
  mlp_backward(disc.layout, disc.span(), real_cache, d_real, grad);
  mlp_backward(disc.layout, disc.span(), fake_cache, d_fake, grad);
  // Input gradient only; the scratch buffer absorbs the parameter part.
  std::vector<double> scratch(disc.layout.num_params(), 0.0);
  out.g_grad_fake = mlp_backward(disc.layout, disc.span(), fake_cache, g_fake, scratch);
  return out;
}

FeatureProjection FeatureProjection::make(std::size_t d, std::uint64_t seed) {
  if (d == 0) throw InvalidDimension("FeatureProjection: d must be >= 1");
  FeatureProjection out{Matrix(static_cast<Eigen::Index>(4 * d), static_cast<Eigen::Index>(d)), seed};
  RngState rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(4 * d));
  for (Eigen::Index j = 0; j < out.p.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.p.rows(); ++i) out.p(i, j) = scale * rng.next_normal();
  }
  return out;
}

Generator strategy_generator(const NetParams& params, Strategy strategy, InversionConfig inv, DomainTag tag,
                             GradAccum* grad) {
  inv.validate();
  return [&params, strategy, inv, tag, grad](const Matrix& z) -> GenPass {
    auto accumulate = [&params, grad](const VelocityTape& tape, const Matrix& dv) -> Matrix {
      if (grad) return velocity_backward(params, tape, dv, *grad);
      GradAccum scratch = GradAccum::zeros_like(params);
      return velocity_backward(params, tape, dv, scratch);
    };
    switch (strategy) {
      case Strategy::vanilla: {
        auto e = std::make_shared<NetEval>(eval_net(params, z, 0.0, tag, true));
        Matrix out = z + e->v;
        return {std::move(out), [e, accumulate](const Matrix& d_out) -> Matrix {
                  return d_out + accumulate(e->tape, d_out);
                }};
      }
      case Strategy::treft: {
        auto e = std::make_shared<NetEval>(eval_net(params, z, 1.0, tag, true));
        Matrix out = e->v;
        return {std::move(out), [e, accumulate](const Matrix& d_out) -> Matrix {
                  return accumulate(e->tape, d_out);
                }};
      }
      case Strategy::inversion: {
        const double t = inv.t_inv;
        auto back = std::make_shared<NetEval>(eval_net(params, z, 1.0, tag, true));
        const Matrix mid = z - t * back->v;
        auto fwd = std::make_shared<NetEval>(eval_net(params, mid, t, tag, true));
        Matrix out = mid + t * fwd->v;
        return {std::move(out), [back, fwd, t, accumulate](const Matrix& d_out) -> Matrix {
                  const Matrix d_mid = d_out + accumulate(fwd->tape, t * d_out);
                  return d_mid + accumulate(back->tape, -t * d_mid);
                }};
      }
    }
    throw InvalidArgument("strategy_generator: unknown strategy");
  };
}

Matrix translate_batch(const NetParams& params, Strategy strategy, InversionConfig inv, DomainTag tag,
                       const Matrix& z) {
  switch (strategy) {
    case Strategy::vanilla: return z + eval_net(params, z, 0.0, tag, false).v;
    case Strategy::treft: return eval_net(params, z, 1.0, tag, false).v;
    case Strategy::inversion: {
      inv.validate();
      const Matrix mid = z - inv.t_inv * eval_net(params, z, 1.0, tag, false).v;
      return mid + inv.t_inv * eval_net(params, mid, inv.t_inv, tag, false).v;
    }
  }
  throw InvalidArgument("translate_batch: unknown strategy");
}

ReconstructionLoss reconstruction_loss(const Matrix& out, const Matrix& target, const FeatureProjection& proj,
                                       double weight, Matrix* grad_out) {
  if (out.rows() != target.rows() || out.cols() != target.cols()) {
    throw InvalidArgument("reconstruction_loss: shape mismatch");
  }
  if (out.cols() == 0) throw InvalidArgument("reconstruction_loss: empty batch");
  if (proj.p.cols() != out.rows()) throw InvalidDimension("reconstruction_loss: projection dimension mismatch");
  const double n = static_cast<double>(out.cols());
  const Matrix diff = out - target;
  const Matrix feat = proj.p * diff;
  ReconstructionLoss loss;
  Matrix d_feat(feat.rows(), feat.cols());
  for (Eigen::Index j = 0; j < diff.cols(); ++j) {
    loss.l1 += diff.col(j).lpNorm<1>() / n;
    const double fn = feat.col(j).norm();
    loss.surrogate += fn / n;
    if (fn > 0.0) {
      d_feat.col(j) = feat.col(j) / (fn * n);
    } else {
      d_feat.col(j).setZero();
    }
  }
  if (grad_out) {
    const Matrix sign = diff.unaryExpr([](double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); });
    *grad_out = weight * (sign / n + proj.p.transpose() * d_feat);
  }
  return loss;
}

ReconstructionLoss latent_cycle_loss(const Generator& g_ab, const Generator& g_ba, const Matrix& z,
                                     const FeatureProjection& proj, double weight) {
  if (z.cols() == 0) throw InvalidArgument("latent_cycle_loss: empty batch");
  GenPass forward = g_ab(z);
  GenPass back = g_ba(forward.out);
  if (!back.out.allFinite()) throw Divergence("latent_cycle_loss: non-finite reconstruction");
  Matrix d_rec;
  const auto loss = reconstruction_loss(back.out, z, proj, weight, &d_rec);
  forward.backward(back.backward(d_rec));
  return loss;
}

ReconstructionLoss latent_identity_loss(const Generator& g, const Matrix& z, const FeatureProjection& proj,
                                        double weight) {
  if (z.cols() == 0) throw InvalidArgument("latent_identity_loss: empty batch");
  GenPass pass = g(z);
  if (!pass.out.allFinite()) throw Divergence("latent_identity_loss: non-finite output");
  Matrix d_out;
  const auto loss = reconstruction_loss(pass.out, z, proj, weight, &d_out);
  pass.backward(d_out);
  return loss;
}

double total_loss(const LossWeights& w, const LossComponents& c) {
  return w.cyc * c.cyc + w.idt * c.idt + w.gan * c.gan;
}

void FinetuneConfig::validate() const {
  if (weights.cyc < 0.0 || weights.idt < 0.0 || weights.gan < 0.0) {
    throw ConfigError("finetune: loss weights must be non-negative");
  }
  if (steps == 0 || batch == 0 || eval_every == 0) throw ConfigError("finetune: steps, batch and eval_every must be positive");
  if (eval_samples < 3) throw ConfigError("finetune: eval_samples too small for a covariance fit");
  if (strategy == Strategy::inversion) inversion.validate();
}

MetricRow evaluate_translation(const NetParams& params, const FinetuneConfig& cfg, const Matrix& eval_a,
                               const Matrix& eval_b) {
  const Matrix ab = translate_batch(params, cfg.strategy, cfg.inversion, DomainTag::a2b, eval_a);
  const Matrix ba = translate_batch(params, cfg.strategy, cfg.inversion, DomainTag::b2a, eval_b);
  MetricRow row{};
  row.strategy = cfg.strategy;
  if (!ab.allFinite() || !ba.allFinite()) throw Divergence("evaluate_translation: non-finite translation");
  row.frechet_a2b = frechet_between_samples(ab, eval_b);
  row.frechet_b2a = frechet_between_samples(ba, eval_a);
  row.struct_a2b = structure_score(eval_a, ab);
  row.struct_b2a = structure_score(eval_b, ba);
  return row;
}

FinetuneResult finetune(const FinetuneConfig& cfg, const NetParams& pretrained, const DomainDataset& data_a,
                        const DomainDataset& data_b, const EvalCallback& on_eval) {
  cfg.validate();
  const std::size_t d = pretrained.dimension();
  if (data_a.dimension() != d || data_b.dimension() != d) {
    throw ConfigError("finetune: dataset dimension differs from the pretrained network");
  }

  RngState root(cfg.seed);
  RngState rng = root.fork(1);
  RngState eval_rng = root.fork(2);
  const Matrix eval_a = data_a.batch(eval_rng, cfg.eval_samples);
  const Matrix eval_b = data_b.batch(eval_rng, cfg.eval_samples);
  const auto proj = FeatureProjection::make(d, root.fork(3).next_u64());

  FinetuneResult res{pretrained, {}, 0, 0, false, 0};
  NetParams& gen = res.params;
  // Both directions start from the unconditional field the network was
  // pretrained with.
  gen.copy_embedding(DomainTag::none, DomainTag::a2b);
  gen.copy_embedding(DomainTag::none, DomainTag::b2a);
  auto gen_opt = OptimizerState::for_size(gen.num_params(), cfg.lr_gen);

  // disc_b judges a->b outputs against real b; disc_a judges b->a outputs.
  DiscParams disc_b = DiscParams::init(d, cfg.disc_hidden, root.fork(4).next_u64());
  DiscParams disc_a = DiscParams::init(d, cfg.disc_hidden, root.fork(5).next_u64());
  auto opt_b = OptimizerState::for_size(disc_b.layout.num_params(), cfg.lr_disc);
  auto opt_a = OptimizerState::for_size(disc_a.layout.num_params(), cfg.lr_disc);
  const bool adversarial = cfg.weights.gan > 0.0;

  auto record = [&](std::size_t step, double d_loss, double g_loss, double cyc, double idt) {
    MetricRow row = evaluate_translation(gen, cfg, eval_a, eval_b);
    row.step = step;
    row.d_loss = d_loss;
    row.g_loss = g_loss;
    row.cyc = cyc;
    row.idt = idt;
    res.history.push_back(row);
    if (on_eval) on_eval(row, gen);
  };
  record(0, 0.0, 0.0, 0.0, 0.0);

  std::size_t low_d_run = 0;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const Matrix a = data_a.batch(rng, cfg.batch);
    const Matrix b = data_b.batch(rng, cfg.batch);

    double d_loss = 0.0;
    if (adversarial) {
      const Matrix fake_b = translate_batch(gen, cfg.strategy, cfg.inversion, DomainTag::a2b, a);
      const Matrix fake_a = translate_batch(gen, cfg.strategy, cfg.inversion, DomainTag::b2a, b);
      const auto lb = gan_losses(disc_b, b, fake_b);
      const auto la = gan_losses(disc_a, a, fake_a);
      optimizer_step(std::span<double>(disc_b.theta.data(), disc_b.layout.num_params()), lb.d_grad, opt_b);
      optimizer_step(std::span<double>(disc_a.theta.data(), disc_a.layout.num_params()), la.d_grad, opt_a);
      ++res.disc_updates;
      d_loss = 0.5 * (lb.d_loss + la.d_loss);
      low_d_run = d_loss < kCollapseLoss ? low_d_run + 1 : 0;
      if (low_d_run >= kCollapseSteps && !res.disc_collapse) {
        res.disc_collapse = true;
        res.collapse_step = step;
      }
    }

    GradAccum grad = GradAccum::zeros_like(gen);
    const Generator g_ab = strategy_generator(gen, cfg.strategy, cfg.inversion, DomainTag::a2b, &grad);
    const Generator g_ba = strategy_generator(gen, cfg.strategy, cfg.inversion, DomainTag::b2a, &grad);

    LossComponents parts;
    if (adversarial) {
      GenPass pab = g_ab(a);
      GenPass pba = g_ba(b);
      const auto gb = gan_losses(disc_b, b, pab.out);
      const auto ga = gan_losses(disc_a, a, pba.out);
      parts.gan = 0.5 * (gb.g_loss + ga.g_loss);
      pab.backward((0.5 * cfg.weights.gan) * gb.g_grad_fake);
      pba.backward((0.5 * cfg.weights.gan) * ga.g_grad_fake);
    }
    if (cfg.weights.cyc > 0.0) {
      const double w = 0.5 * cfg.weights.cyc;
      parts.cyc = 0.5 * (latent_cycle_loss(g_ab, g_ba, a, proj, w).total() +
                         latent_cycle_loss(g_ba, g_ab, b, proj, w).total());
    }
    if (cfg.weights.idt > 0.0) {
      const double w = 0.5 * cfg.weights.idt;
      parts.idt = 0.5 * (latent_identity_loss(g_ba, a, proj, w).total() +
                         latent_identity_loss(g_ab, b, proj, w).total());
    }
    const double g_total = total_loss(cfg.weights, parts);
    if (!std::isfinite(g_total) || !std::isfinite(d_loss)) {
      throw Divergence("finetune: non-finite loss at step " + std::to_string(step) + " (strategy " +
                       std::string(to_string(cfg.strategy)) + ")");
    }
    optimizer_step(gen, grad, gen_opt);
    ++res.gen_updates;

    if (step % cfg.eval_every == 0 || step == cfg.steps) record(step, d_loss, parts.gan, parts.cyc, parts.idt);
  }
  return res;
}

}  // namespace rflab
