#include "rflab/neural_velocity.hpp"

#include "rflab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rflab {

namespace {

constexpr std::size_t kChunk = 32;

std::size_t input_dim(std::size_t d) { return d + kTimeFeatures + kTagEmbedDim; }

void check_batch(const NetParams& params, const Matrix& z, std::size_t nt, std::size_t ntags) {
  if (static_cast<std::size_t>(z.rows()) != params.dimension()) {
    throw ConfigError("velocity net: input dimension " + std::to_string(z.rows()) + " does not match d=" +
                      std::to_string(params.dimension()));
  }
  if (nt != static_cast<std::size_t>(z.cols()) || ntags != static_cast<std::size_t>(z.cols())) {
    throw InvalidArgument("velocity net: batch size mismatch between z, t and tags");
  }
}

// Accumulates the gradient of examples [begin, end) into `grad` and returns
// their summed squared residual.
double chunk_loss(const NetParams& params, std::span<const FlowSample> batch, std::size_t begin, std::size_t end,
                  double scale, GradAccum& grad) {
  const auto d = static_cast<Eigen::Index>(params.dimension());
  const auto n = static_cast<Eigen::Index>(end - begin);
  Matrix zt(d, n);
  Matrix target(d, n);
  std::vector<double> ts(static_cast<std::size_t>(n));
  std::vector<DomainTag> tags(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& s = batch[begin + static_cast<std::size_t>(j)];
    if (s.z0.size() != d || s.z1.size() != d) throw InvalidDimension("flow_matching_loss: sample dimension mismatch");
    zt.col(j) = s.t * s.z1 + (1.0 - s.t) * s.z0;
    target.col(j) = s.z1 - s.z0;
    ts[static_cast<std::size_t>(j)] = s.t;
    tags[static_cast<std::size_t>(j)] = s.tag;
  }
  VelocityTape tape;
  const Matrix v = velocity_forward(params, zt, ts, tags, &tape);
  const Matrix resid = v - target;
  velocity_backward(params, tape, (2.0 * scale) * resid, grad);
  return resid.squaredNorm();
}

}  // namespace

NetParams::NetParams(std::size_t d, MlpLayout layout, std::uint64_t seed)
    : d_(d), seed_(seed), layout_(std::move(layout)) {
  if (d_ == 0) throw InvalidDimension("NetParams: d must be >= 1");
  if (layout_.input_dim() != input_dim(d_) || layout_.output_dim() != d_) {
    throw ConfigError("NetParams: layout does not chain from d + 7 inputs to d outputs");
  }
  theta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.num_params() + kDomainTagCount * kTagEmbedDim));
}

NetParams NetParams::init(std::size_t d, std::span<const std::size_t> hidden, Activation act, std::uint64_t seed) {
  NetParams p(d, MlpLayout::chain(input_dim(d), hidden, d, act), seed);
  RngState rng(seed);
  mlp_init(p.layout_, {p.theta_.data(), p.layout_.num_params()}, rng);
  return p;
}

void NetParams::copy_embedding(DomainTag from, DomainTag to) {
  const auto src = static_cast<Eigen::Index>(embedding_offset(from));
  const auto dst = static_cast<Eigen::Index>(embedding_offset(to));
  theta_.segment(dst, kTagEmbedDim) = theta_.segment(src, kTagEmbedDim);
}

Matrix velocity_inputs(const NetParams& params, const Matrix& z, std::span<const double> t,
                       std::span<const DomainTag> tags) {
  check_batch(params, z, t.size(), tags.size());
  const auto d = z.rows();
  Matrix x(static_cast<Eigen::Index>(input_dim(params.dimension())), z.cols());
  x.topRows(d) = z;
  const auto& theta = params.theta();
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double tj = t[static_cast<std::size_t>(j)];
    x(d, j) = tj;
    x(d + 1, j) = std::sin(2.0 * std::numbers::pi * tj);
    x(d + 2, j) = std::cos(2.0 * std::numbers::pi * tj);
    const auto off = params.embedding_offset(tags[static_cast<std::size_t>(j)]);
    for (std::size_t k = 0; k < kTagEmbedDim; ++k) {
      x(d + 3 + static_cast<Eigen::Index>(k), j) = theta[static_cast<Eigen::Index>(off + k)];
    }
  }
  return x;
}

Matrix velocity_forward(const NetParams& params, const Matrix& z, std::span<const double> t,
                        std::span<const DomainTag> tags, VelocityTape* tape) {
  const Matrix x = velocity_inputs(params, z, t, tags);
  if (tape) tape->tags.assign(tags.begin(), tags.end());
  return mlp_forward(params.layout(), params.mlp_theta(), x, tape ? &tape->cache : nullptr);
}

Matrix velocity_backward(const NetParams& params, const VelocityTape& tape, const Matrix& grad_v, GradAccum& grad) {
  if (grad.values.size() != params.theta().size()) throw ConfigError("velocity_backward: gradient buffer shape");
  std::span<double> mlp_grad{grad.values.data(), params.layout().num_params()};
  const Matrix dx = mlp_backward(params.layout(), params.mlp_theta(), tape.cache, grad_v, mlp_grad);
  const auto d = static_cast<Eigen::Index>(params.dimension());
  for (Eigen::Index j = 0; j < dx.cols(); ++j) {
    const auto off = static_cast<Eigen::Index>(params.embedding_offset(tape.tags[static_cast<std::size_t>(j)]));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(kTagEmbedDim); ++k) {
      grad.values[off + k] += dx(d + 3 + k, j);
    }
  }
  return dx.topRows(d);
}

LatentVector forward(const NetParams& params, const LatentVector& z, double t, DomainTag tag) {
  const double ts[1] = {t};
  const DomainTag tags[1] = {tag};
  return velocity_forward(params, z, ts, tags).col(0);
}

LossAndGrad flow_matching_loss(const NetParams& params, std::span<const FlowSample> batch) {
  if (batch.empty()) throw InvalidArgument("flow_matching_loss: empty batch");
  const std::size_t n = batch.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<GradAccum> grads(chunks, GradAccum::zeros_like(params));
  std::vector<double> sums(chunks, 0.0);
  std::vector<std::string> errors(chunks);

#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < chunks; ++c) {
    try {
      const std::size_t begin = c * kChunk;
      const std::size_t end = std::min(n, begin + kChunk);
      sums[c] = chunk_loss(params, batch, begin, end, scale, grads[c]);
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw InvalidArgument(e);
  }

  LossAndGrad out{0.0, std::move(grads.front())};
  out.loss = sums.front();
  for (std::size_t c = 1; c < chunks; ++c) {
    out.loss += sums[c];
    out.grad.values += grads[c].values;
  }
  out.loss *= scale;
  return out;
}

namespace reference {

LossAndGrad flow_matching_loss(const NetParams& params, std::span<const FlowSample> batch) {
  if (batch.empty()) throw InvalidArgument("flow_matching_loss: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossAndGrad out{0.0, GradAccum::zeros_like(params)};
  for (const auto& s : batch) {
    const LatentVector zt = s.t * s.z1 + (1.0 - s.t) * s.z0;
    const double ts[1] = {s.t};
    const DomainTag tags[1] = {s.tag};
    VelocityTape tape;
    const LatentVector v = velocity_forward(params, zt, ts, tags, &tape).col(0);
    const LatentVector resid = v - (s.z1 - s.z0);
    out.loss += resid.squaredNorm();
    velocity_backward(params, tape, (2.0 * scale) * Matrix(resid), out.grad);
  }
  out.loss *= scale;
  return out;
}

}  // namespace reference

OptimizerState OptimizerState::for_size(std::size_t n, double lr) {
  OptimizerState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.lr = lr;
  return s;
}

void optimizer_step(std::span<double> params, const GradAccum& grads, OptimizerState& state) {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (grads.values.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ConfigError("optimizer_step: parameter, gradient and moment shapes differ");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(grads.values[i])) {
      throw Divergence("optimizer_step: non-finite gradient at parameter " + std::to_string(i) + " (step " +
                       std::to_string(state.step + 1) + "), update rejected");
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  Eigen::Map<Eigen::VectorXd> theta(params.data(), n);
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads.values;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.values.cwiseProduct(grads.values);
  const Eigen::ArrayXd m_hat = state.m.array() / bc1;
  const Eigen::ArrayXd v_hat = state.v.array() / bc2;
  theta.array() -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
}

void optimizer_step(NetParams& params, const GradAccum& grads, OptimizerState& state) {
  optimizer_step(std::span<double>(params.theta().data(), params.num_params()), grads, state);
}

FlowTrainResult train_flow_matching(const FlowTrainConfig& cfg, const CleanSampler& data, RngState& rng) {
  return train_flow_matching(cfg, NetParams::init(cfg.d, cfg.hidden, cfg.activation, cfg.seed), data, rng);
}

FlowTrainResult train_flow_matching(const FlowTrainConfig& cfg, NetParams init, const CleanSampler& data,
                                    RngState& rng) {
  if (cfg.batch == 0 || cfg.steps == 0) throw ConfigError("train_flow_matching: batch and steps must be positive");
  if (init.dimension() != cfg.d) throw ConfigError("train_flow_matching: parameter dimension differs from config d");
  FlowTrainResult out{std::move(init), {}};
  out.loss_history.reserve(cfg.steps);
  auto opt = OptimizerState::for_size(out.params.num_params(), cfg.lr);
  std::vector<FlowSample> batch(cfg.batch);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (auto& s : batch) {
      s.z1 = data(rng);
      s.z0 = sample_standard_normal(rng, cfg.d);
      s.t = rng.next_uniform();
      s.tag = cfg.tag;
    }
    auto lg = flow_matching_loss(out.params, batch);
    if (!std::isfinite(lg.loss)) {
      throw Divergence("train_flow_matching: loss became non-finite at step " + std::to_string(step));
    }
    optimizer_step(out.params, lg.grad, opt);
    out.loss_history.push_back(lg.loss);
  }
  return out;
}

}  // namespace rflab
