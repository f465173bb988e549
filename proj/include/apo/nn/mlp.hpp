#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "apo/nn/dense_matrix.hpp"

namespace apo::nn {

enum class Activation { tanh, relu, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

// Placement of one dense layer inside the flat parameter buffer. The weight
// block is `rows x cols` row-major (rows = fan-out), followed by `rows` biases.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  std::size_t end() const { return bias_offset + rows; }
};

class MlpNet;

// Intermediates of one forward pass. Bound to the (network, version) that
// produced it; any parameter mutation invalidates it.
class GradientTape {
 public:
  GradientTape() = default;

  bool bound() const { return net_id_ != 0; }
  std::span<const double> input() const;
  std::span<const double> output() const;
  std::span<const double> pre_activation(std::size_t layer) const;
  std::span<const double> activation(std::size_t layer) const;

 private:
  friend class MlpNet;
  std::uint64_t net_id_ = 0;
  std::uint64_t net_version_ = 0;
  // activations: a_0 (input) .. a_L (output); pre-activations: z_1 .. z_L
  std::vector<double> acts_;
  std::vector<double> pres_;
  std::vector<std::size_t> act_offsets_;
  std::vector<std::size_t> pre_offsets_;
};

struct ForwardResult {
  std::vector<double> output;
  GradientTape tape;
};

// Dense feed-forward network with all parameters in one contiguous buffer.
// Gradient buffers used with `backward` share the parameter layout.
class MlpNet {
 public:
  MlpNet() = default;
  // Every hidden layer uses `hidden`; the output layer is identity.
  MlpNet(std::vector<std::size_t> layer_sizes, Activation hidden = Activation::tanh);
  // One activation per layer; the last must be identity.
  MlpNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations);

  MlpNet(const MlpNet& other);
  MlpNet& operator=(const MlpNet& other);
  MlpNet(MlpNet&&) noexcept = default;
  MlpNet& operator=(MlpNet&&) noexcept = default;

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t parameter_count() const { return params_.size(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  const std::vector<Activation>& activations() const { return acts_; }
  const LayerShape& layer(std::size_t i) const { return layers_.at(i); }

  std::span<const double> parameters() const { return params_; }
  // Mutable access invalidates outstanding tapes.
  std::span<double> mutable_parameters();
  std::span<double> mutable_layer_parameters(std::size_t i);

  DenseMatrix weight(std::size_t i) const;
  std::vector<double> bias(std::size_t i) const;
  void set_weight(std::size_t i, const DenseMatrix& w);
  void set_bias(std::size_t i, std::span<const double> b);

  // Output without recording a tape. Same arithmetic as `forward`.
  std::vector<double> predict(std::span<const double> input) const;
  ForwardResult forward(std::span<const double> input) const;

  // Reverse-mode pass for the scalar <output, output_grad>. Parameter
  // gradients are *added* into `param_grad` (skipped when it is empty);
  // returns the gradient w.r.t. the input.
  std::vector<double> backward(const GradientTape& tape, std::span<const double> output_grad,
                               std::span<double> param_grad) const;

  std::uint64_t id() const { return id_; }
  std::uint64_t version() const { return version_; }

 private:
  void build(std::vector<std::size_t> sizes, std::vector<Activation> acts);
  void check_input(std::span<const double> input) const;

  std::vector<std::size_t> sizes_;
  std::vector<Activation> acts_;
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

}  // namespace apo::nn
