#include "rflab/mlp.hpp"

#include "rflab/errors.hpp"

#include <cmath>
#include <string>

namespace rflab {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void check_theta(const MlpLayout& layout, std::size_t size) {
  if (size != layout.num_params()) {
    throw ConfigError("mlp: parameter vector has " + std::to_string(size) + " entries, layout needs " +
                      std::to_string(layout.num_params()));
  }
}

}  // namespace

std::string_view to_string(Activation act) { return act == Activation::tanh ? "tanh" : "identity"; }

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::tanh;
  if (text == "identity") return Activation::identity;
  throw ConfigError("unknown activation: " + std::string(text));
}

MlpLayout::MlpLayout(std::vector<std::size_t> widths, std::vector<Activation> activations)
    : widths_(std::move(widths)), acts_(std::move(activations)) {
  if (widths_.size() < 2) throw ConfigError("MlpLayout: need at least input and output widths");
  if (acts_.size() != widths_.size() - 1) throw ConfigError("MlpLayout: one activation per layer");
  for (auto w : widths_) {
    if (w == 0) throw ConfigError("MlpLayout: zero-width layer");
  }
  for (std::size_t l = 0; l < acts_.size(); ++l) {
    offsets_.push_back(total_);
    total_ += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
}

MlpLayout MlpLayout::chain(std::size_t in, std::span<const std::size_t> hidden, std::size_t out,
                           Activation hidden_act) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  std::vector<Activation> acts(widths.size() - 1, hidden_act);
  acts.back() = Activation::identity;
  return MlpLayout(std::move(widths), std::move(acts));
}

void mlp_init(const MlpLayout& layout, std::span<double> theta, RngState& rng) {
  check_theta(layout, theta.size());
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const auto in = layout.widths()[l];
    const auto out = layout.widths()[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    const auto begin = layout.weight_offset(l);
    const auto end = begin + in * out + out;
    for (auto i = begin; i < end; ++i) theta[i] = bound * (2.0 * rng.next_uniform() - 1.0);
  }
}

Matrix mlp_forward(const MlpLayout& layout, std::span<const double> theta, const Matrix& x, MlpCache* cache) {
  check_theta(layout, theta.size());
  if (static_cast<std::size_t>(x.rows()) != layout.input_dim()) {
    throw ConfigError("mlp_forward: input has " + std::to_string(x.rows()) + " rows, layout expects " +
                      std::to_string(layout.input_dim()));
  }
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Matrix h = x;
  for (std::size_t l = 0; l < layout.num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(layout.widths()[l]);
    const auto out = static_cast<Eigen::Index>(layout.widths()[l + 1]);
    ConstMatMap w(theta.data() + layout.weight_offset(l), out, in);
    ConstVecMap b(theta.data() + layout.bias_offset(l), out);
    Matrix next = w * h;
    next.colwise() += b;
    if (layout.activations()[l] == Activation::tanh) next = next.array().tanh().matrix();
    h = std::move(next);
    if (cache) cache->acts.push_back(h);
  }
  return h;
}

Matrix mlp_backward(const MlpLayout& layout, std::span<const double> theta, const MlpCache& cache,
                    const Matrix& grad_out, std::span<double> grad) {
  check_theta(layout, theta.size());
  check_theta(layout, grad.size());
  if (cache.acts.size() != layout.num_layers() + 1) throw ConfigError("mlp_backward: cache does not match layout");
  Matrix delta = grad_out;
  for (std::size_t li = layout.num_layers(); li-- > 0;) {
    const auto in = static_cast<Eigen::Index>(layout.widths()[li]);
    const auto out = static_cast<Eigen::Index>(layout.widths()[li + 1]);
    if (layout.activations()[li] == Activation::tanh) {
      const auto& y = cache.acts[li + 1];
      delta = (delta.array() * (1.0 - y.array().square())).matrix();
    }
    ConstMatMap w(theta.data() + layout.weight_offset(li), out, in);
    MatMap gw(grad.data() + layout.weight_offset(li), out, in);
    VecMap gb(grad.data() + layout.bias_offset(li), out);
    gw.noalias() += delta * cache.acts[li].transpose();
    gb += delta.rowwise().sum();
    delta = w.transpose() * delta;
  }
  return delta;
}

}  // namespace rflab
