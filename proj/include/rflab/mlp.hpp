#pragma once

#include "rflab/numeric.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace rflab {

enum class Activation { identity, tanh };

std::string_view to_string(Activation act);
Activation parse_activation(std::string_view text);

/// Shape of a fully-connected network. Parameters live in one flat vector:
/// for each layer, the out x in weight block in row-major order followed by
/// the bias of length out.
class MlpLayout {
 public:
  MlpLayout() = default;
  /// widths = {in, h1, ..., out}; activations has widths.size() - 1 entries.
  MlpLayout(std::vector<std::size_t> widths, std::vector<Activation> activations);

  /// Hidden layers use `hidden_act`, the output layer is linear.
  static MlpLayout chain(std::size_t in, std::span<const std::size_t> hidden, std::size_t out,
                         Activation hidden_act = Activation::tanh);

  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t num_layers() const { return acts_.size(); }
  std::size_t num_params() const { return total_; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return acts_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer] * widths_[layer + 1];
  }

  friend bool operator==(const MlpLayout& a, const MlpLayout& b) {
    return a.widths_ == b.widths_ && a.acts_ == b.acts_;
  }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Activation> acts_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

/// Post-activation outputs per layer; acts[0] is the input batch.
struct MlpCache {
  std::vector<Matrix> acts;
};

/// Uniform fan-in initialisation: W, b ~ U(-1/sqrt(in), 1/sqrt(in)).
void mlp_init(const MlpLayout& layout, std::span<double> theta, RngState& rng);

/// Batched forward pass; inputs and outputs are stored column-per-example.
Matrix mlp_forward(const MlpLayout& layout, std::span<const double> theta, const Matrix& x,
                   MlpCache* cache = nullptr);

/// Reverse pass. Accumulates dL/dtheta into `grad` and returns dL/dx.
Matrix mlp_backward(const MlpLayout& layout, std::span<const double> theta, const MlpCache& cache,
                    const Matrix& grad_out, std::span<double> grad);

}  // namespace rflab
