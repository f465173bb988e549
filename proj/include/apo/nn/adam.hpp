#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apo/nn/mlp.hpp"

namespace apo::nn {

// A contiguous run of parameters and its gradient. Adam and gradient
// clipping operate on an ordered list of blocks so that several networks
// (or a network plus a free vector such as log-std) can share one optimizer.
struct ParamBlock {
  std::span<double> values;
  std::span<double> grads;
  std::string label;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig cfg = {});

  std::size_t parameter_count() const { return m_.size(); }
  std::uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  // Bias-corrected Adam update across `blocks` in order. The whole update is
  // rejected (nothing modified) if any gradient is non-finite; the error
  // message names the offending block index and label.
  void step(std::span<const ParamBlock> blocks);

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// One block per layer, in layer order. `grads` must match the parameter layout.
std::vector<ParamBlock> layer_blocks(MlpNet& net, std::span<double> grads,
                                     const std::string& prefix = "layer");

void adam_step(MlpNet& net, AdamState& state, std::span<double> grads);

double global_grad_norm(std::span<const ParamBlock> blocks);

// Rescales gradients so their joint L2 norm is at most `max_norm`. Returns
// the norm before clipping. A non-positive `max_norm` disables clipping.
double clip_grad_norm(std::span<const ParamBlock> blocks, double max_norm);

}  // namespace apo::nn
