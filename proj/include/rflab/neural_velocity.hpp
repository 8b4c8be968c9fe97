#pragma once

#include "rflab/field.hpp"
#include "rflab/mlp.hpp"

#include <functional>
#include <span>
#include <vector>

namespace rflab {

inline constexpr std::size_t kTimeFeatures = 3;  // (t, sin 2πt, cos 2πt)
inline constexpr std::size_t kTagEmbedDim = 4;

/// Weights of the velocity network v_theta(z, t, tag).
///
/// The network input is concat(z, time features, tag embedding). All
/// trainable values (MLP weights, then the 3 x 4 tag-embedding table) sit in
/// one flat vector so gradients, optimizer moments and checkpoints share a
/// single layout.
class NetParams {
 public:
  NetParams() = default;
  NetParams(std::size_t d, MlpLayout layout, std::uint64_t seed);

  /// Seeded fan-in init; tag embeddings start at zero so every tag begins
  /// as the unconditional field.
  static NetParams init(std::size_t d, std::span<const std::size_t> hidden, Activation act, std::uint64_t seed);

  std::size_t dimension() const { return d_; }
  std::uint64_t seed() const { return seed_; }
  const MlpLayout& layout() const { return layout_; }

  Eigen::VectorXd& theta() { return theta_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  std::size_t num_params() const { return static_cast<std::size_t>(theta_.size()); }

  std::span<const double> mlp_theta() const { return {theta_.data(), layout_.num_params()}; }
  std::size_t embedding_offset(DomainTag tag) const {
    return layout_.num_params() + static_cast<std::size_t>(tag) * kTagEmbedDim;
  }
  /// Overwrite the embedding of `to` with that of `from`.
  void copy_embedding(DomainTag from, DomainTag to);

 private:
  std::size_t d_ = 0;
  std::uint64_t seed_ = 0;
  MlpLayout layout_;
  Eigen::VectorXd theta_;
};

/// Gradient buffer congruent with a NetParams (or any flat parameter vector).
struct GradAccum {
  Eigen::VectorXd values;

  static GradAccum zeros_like(const NetParams& p) { return {Eigen::VectorXd::Zero(p.theta().size())}; }
  static GradAccum zeros(std::size_t n) { return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))}; }
  std::span<double> span() { return {values.data(), static_cast<std::size_t>(values.size())}; }
};

/// Intermediate state of a batched velocity evaluation, needed for backward.
struct VelocityTape {
  MlpCache cache;
  std::vector<DomainTag> tags;
};

/// Network input rows for a batch: z, then time features, then tag embedding.
Matrix velocity_inputs(const NetParams& params, const Matrix& z, std::span<const double> t,
                       std::span<const DomainTag> tags);

/// Batched v_theta. `z` holds one example per column.
Matrix velocity_forward(const NetParams& params, const Matrix& z, std::span<const double> t,
                        std::span<const DomainTag> tags, VelocityTape* tape = nullptr);

/// Accumulates parameter gradients (including tag embeddings) and returns dL/dz.
Matrix velocity_backward(const NetParams& params, const VelocityTape& tape, const Matrix& grad_v, GradAccum& grad);

/// Single-example forward pass.
LatentVector forward(const NetParams& params, const LatentVector& z, double t, DomainTag tag);

/// The trained network viewed as a VelocityField.
class NeuralField final : public VelocityField {
 public:
  explicit NeuralField(const NetParams& params) : params_(params) {}
  LatentVector evaluate(const LatentVector& z, double t, DomainTag tag) const override {
    return forward(params_, z, t, tag);
  }
  std::size_t dimension() const override { return params_.dimension(); }

 private:
  const NetParams& params_;
};

struct FlowSample {
  LatentVector z0;
  LatentVector z1;
  double t;
  DomainTag tag = DomainTag::none;
};

struct LossAndGrad {
  double loss;
  GradAccum grad;
};

/// Mean over the batch of ||(z1 - z0) - v_theta(z_t, t)||^2 with
/// z_t = t z1 + (1 - t) z0, plus its exact gradient.
///
/// Examples are processed in fixed chunks (possibly in parallel) and the
/// chunk results are summed in chunk order, so the value does not depend on
/// the thread count.
LossAndGrad flow_matching_loss(const NetParams& params, std::span<const FlowSample> batch);

namespace reference {
/// One example at a time, serial accumulation. Kept as the test oracle for
/// the chunked kernel.
LossAndGrad flow_matching_loss(const NetParams& params, std::span<const FlowSample> batch);
}  // namespace reference

struct OptimizerState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState for_size(std::size_t n, double lr);
};

/// Adam with bias-corrected moments. A gradient containing NaN/Inf is
/// rejected (throws Divergence) and leaves parameters and state untouched.
void optimizer_step(std::span<double> params, const GradAccum& grads, OptimizerState& state);
void optimizer_step(NetParams& params, const GradAccum& grads, OptimizerState& state);

struct FlowTrainConfig {
  std::size_t d = 2;
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::tanh;
  double lr = 1e-3;
  std::size_t batch = 128;
  std::size_t steps = 20000;
  std::uint64_t seed = 0;
  DomainTag tag = DomainTag::none;
};

/// Produces one clean sample z1 per call.
using CleanSampler = std::function<LatentVector(RngState&)>;

struct FlowTrainResult {
  NetParams params;
  std::vector<double> loss_history;
};

/// Flow-matching training with t ~ U[0, 1] and z0 ~ N(0, I).
FlowTrainResult train_flow_matching(const FlowTrainConfig& cfg, const CleanSampler& data, RngState& rng);
/// Continue training existing parameters.
FlowTrainResult train_flow_matching(const FlowTrainConfig& cfg, NetParams init, const CleanSampler& data,
                                    RngState& rng);

}  // namespace rflab
