#include "apo/nn/adam.hpp"

#include <cmath>

#include "apo/common/error.hpp"
#include "apo/common/rng.hpp"

namespace apo::nn {

AdamState::AdamState(std::size_t parameter_count, AdamConfig cfg)
    : cfg_(cfg), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void AdamState::step(std::span<const ParamBlock> blocks) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const ParamBlock& b = blocks[i];
    require(b.values.size() == b.grads.size(), "Adam: block '" + b.label + "' grad size mismatch");
    if (!all_finite(b.grads))
      throw NonFiniteError("Adam: non-finite gradient in block " + std::to_string(i) + " (" +
                           b.label + ")");
    total += b.values.size();
  }
  require(total == m_.size(), "Adam: parameter count " + std::to_string(total) +
                                  " != optimizer size " + std::to_string(m_.size()));

  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  std::size_t k = 0;
  for (const ParamBlock& b : blocks) {
    for (std::size_t i = 0; i < b.values.size(); ++i, ++k) {
      const double g = b.grads[i];
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = m_[k] / bc1;
      const double v_hat = v_[k] / bc2;
      b.values[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

std::vector<ParamBlock> layer_blocks(MlpNet& net, std::span<double> grads,
                                     const std::string& prefix) {
  require(grads.size() == net.parameter_count(), "layer_blocks: gradient size mismatch");
  std::vector<ParamBlock> blocks;
  blocks.reserve(net.num_layers());
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const LayerShape& l = net.layer(i);
    const std::size_t n = l.end() - l.weight_offset;
    blocks.push_back({net.mutable_layer_parameters(i), grads.subspan(l.weight_offset, n),
                      prefix + std::to_string(i)});
  }
  return blocks;
}

void adam_step(MlpNet& net, AdamState& state, std::span<double> grads) {
  auto blocks = layer_blocks(net, grads);
  state.step(blocks);
}

double global_grad_norm(std::span<const ParamBlock> blocks) {
  double sq = 0.0;
  for (const ParamBlock& b : blocks)
    for (double g : b.grads) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<const ParamBlock> blocks, double max_norm) {
  const double norm = global_grad_norm(blocks);
  if (max_norm > 0.0 && std::isfinite(norm) && norm > max_norm) {
    const double scale = max_norm / (norm + 1e-6);
    for (const ParamBlock& b : blocks)
      for (double& g : b.grads) g *= scale;
  }
  return norm;
}

}  // namespace apo::nn
