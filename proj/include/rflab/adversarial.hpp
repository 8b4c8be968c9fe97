#pragma once

#include "rflab/datasets.hpp"
#include "rflab/mlp.hpp"
#include "rflab/neural_velocity.hpp"
#include "rflab/translation.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rflab {

/// Discriminator: MLP mapping a latent to one real logit.
struct DiscParams {
  MlpLayout layout;
  Eigen::VectorXd theta;

  static DiscParams init(std::size_t d, std::span<const std::size_t> hidden, std::uint64_t seed);
  std::span<const double> span() const { return {theta.data(), static_cast<std::size_t>(theta.size())}; }
};

/// Logits (1 x B) for a batch of latents (d x B).
Matrix disc_logits(const DiscParams& disc, const Matrix& x, MlpCache* cache = nullptr);

/// Non-saturating logistic GAN losses.
///   d_loss = mean softplus(-D(real)) + mean softplus(D(fake))
///   g_loss = mean softplus(-D(fake))
struct GanLosses {
  double d_loss;
  double g_loss;
  GradAccum d_grad;       ///< d d_loss / d disc params
  Matrix g_grad_fake;     ///< d g_loss / d fake, one column per fake sample
};

GanLosses gan_losses(const DiscParams& disc, const Matrix& real, const Matrix& fake);

double softplus(double x);

/// Frozen random projection used as the perceptual-distance surrogate:
/// d(x, y) = ||P (x - y)||_2 with P of shape 4d x d.
struct FeatureProjection {
  Matrix p;
  std::uint64_t seed = 0;

  static FeatureProjection make(std::size_t d, std::uint64_t seed);
};

/// Result of a differentiable generator application. `backward` maps
/// dL/dout to dL/dz, accumulating parameter gradients wherever the
/// generator keeps them. It may be called several times.
struct GenPass {
  Matrix out;
  std::function<Matrix(const Matrix&)> backward;
};

/// A differentiable one-direction translator: batch (d x B) -> GenPass.
using Generator = std::function<GenPass(const Matrix&)>;

/// Translator built from the velocity network under one of the three
/// strategies, accumulating parameter gradients into `grad` on backward.
Generator strategy_generator(const NetParams& params, Strategy strategy, InversionConfig inv, DomainTag tag,
                             GradAccum* grad);

/// Batched, tape-free version of the strategy translators.
Matrix translate_batch(const NetParams& params, Strategy strategy, InversionConfig inv, DomainTag tag,
                       const Matrix& z);

struct ReconstructionLoss {
  double l1 = 0.0;         ///< mean over samples of ||out - target||_1
  double surrogate = 0.0;  ///< mean over samples of ||P (out - target)||_2
  double total() const { return l1 + surrogate; }
};

/// Reconstruction terms and their gradient with respect to `out`, scaled by
/// `weight`. Subgradient 0 is used at exact zeros.
ReconstructionLoss reconstruction_loss(const Matrix& out, const Matrix& target, const FeatureProjection& proj,
                                       double weight, Matrix* grad_out);

/// ||G_ba(G_ab(z)) - z||_1 + surrogate, averaged over the batch. Gradients
/// flow through both generators with upstream scale `weight`.
ReconstructionLoss latent_cycle_loss(const Generator& g_ab, const Generator& g_ba, const Matrix& z,
                                     const FeatureProjection& proj, double weight = 1.0);

/// ||G(z) - z||_1 + surrogate, averaged over the batch.
ReconstructionLoss latent_identity_loss(const Generator& g, const Matrix& z, const FeatureProjection& proj,
                                        double weight = 1.0);

struct LossWeights {
  double cyc = 0.5;
  double idt = 1.0;
  double gan = 1.0;
};

struct LossComponents {
  double cyc = 0.0;  ///< already averaged over both directions
  double idt = 0.0;
  double gan = 0.0;
};

double total_loss(const LossWeights& w, const LossComponents& c);

struct FinetuneConfig {
  Strategy strategy = Strategy::treft;
  LossWeights weights;
  InversionConfig inversion;
  double lr_gen = 1e-3;
  double lr_disc = 1e-3;
  std::size_t steps = 3000;
  std::size_t batch = 128;
  std::uint64_t seed = 0;
  std::size_t eval_every = 250;
  std::size_t eval_samples = 2048;
  std::vector<std::size_t> disc_hidden{64, 64};

  void validate() const;
};

struct MetricRow {
  std::size_t step;
  Strategy strategy;
  double frechet_a2b;
  double frechet_b2a;
  double struct_a2b;
  double struct_b2a;
  double d_loss;
  double g_loss;
  double cyc;
  double idt;
};

struct FinetuneResult {
  NetParams params;
  std::vector<MetricRow> history;
  std::size_t disc_updates = 0;
  std::size_t gen_updates = 0;
  bool disc_collapse = false;  ///< d_loss < 1e-6 for 500 consecutive steps
  std::size_t collapse_step = 0;
};

/// Called after every recorded evaluation with the row and the current
/// generator weights (e.g. to write a checkpoint).
using EvalCallback = std::function<void(const MetricRow&, const NetParams&)>;

/// Unpaired two-domain fine-tuning. Each step performs one discriminator
/// update per direction (skipped when the GAN weight is zero) followed by
/// one generator update on the weighted total loss.
FinetuneResult finetune(const FinetuneConfig& cfg, const NetParams& pretrained, const DomainDataset& data_a,
                        const DomainDataset& data_b, const EvalCallback& on_eval = {});

/// Per-direction evaluation on fixed held-out batches.
MetricRow evaluate_translation(const NetParams& params, const FinetuneConfig& cfg, const Matrix& eval_a,
                               const Matrix& eval_b);

}  // namespace rflab
