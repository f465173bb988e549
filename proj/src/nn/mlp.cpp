#include "apo/nn/mlp.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "apo/common/rng.hpp"

namespace apo::nn {

namespace {

std::uint64_t next_net_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

double apply(Activation a, double z) {
  switch (a) {
    case Activation::tanh:
      return std::tanh(z);
    case Activation::relu:
      return z > 0.0 ? z : 0.0;
    case Activation::identity:
      return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output y.
double derivative(Activation a, double z, double y) {
  switch (a) {
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::relu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw RejectedInput("unknown activation '" + std::string(s) + "'");
}

std::span<const double> GradientTape::input() const { return activation(0); }

std::span<const double> GradientTape::output() const {
  return activation(act_offsets_.size() - 2);
}

std::span<const double> GradientTape::activation(std::size_t layer) const {
  require(layer + 1 < act_offsets_.size(), "GradientTape: activation index out of range");
  return std::span<const double>(acts_).subspan(act_offsets_[layer],
                                                act_offsets_[layer + 1] - act_offsets_[layer]);
}

std::span<const double> GradientTape::pre_activation(std::size_t layer) const {
  require(layer + 1 < pre_offsets_.size(), "GradientTape: layer index out of range");
  return std::span<const double>(pres_).subspan(pre_offsets_[layer],
                                                pre_offsets_[layer + 1] - pre_offsets_[layer]);
}

MlpNet::MlpNet(std::vector<std::size_t> layer_sizes, Activation hidden) {
  require(layer_sizes.size() >= 2, "MlpNet: need at least input and output sizes");
  std::vector<Activation> acts(layer_sizes.size() - 1, hidden);
  acts.back() = Activation::identity;
  build(std::move(layer_sizes), std::move(acts));
}

MlpNet::MlpNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations) {
  build(std::move(layer_sizes), std::move(activations));
}

MlpNet::MlpNet(const MlpNet& other)
    : sizes_(other.sizes_),
      acts_(other.acts_),
      layers_(other.layers_),
      params_(other.params_),
      id_(next_net_id()),
      version_(0) {}

MlpNet& MlpNet::operator=(const MlpNet& other) {
  if (this != &other) {
    sizes_ = other.sizes_;
    acts_ = other.acts_;
    layers_ = other.layers_;
    params_ = other.params_;
    ++version_;
  }
  return *this;
}

void MlpNet::build(std::vector<std::size_t> sizes, std::vector<Activation> acts) {
  require(sizes.size() >= 2, "MlpNet: need at least input and output sizes");
  require(acts.size() == sizes.size() - 1, "MlpNet: one activation per layer required");
  require(acts.back() == Activation::identity, "MlpNet: output activation must be identity");
  for (std::size_t s : sizes) require(s > 0, "MlpNet: zero-width layer");
  sizes_ = std::move(sizes);
  acts_ = std::move(acts);
  layers_.clear();
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    LayerShape l;
    l.rows = sizes_[i + 1];
    l.cols = sizes_[i];
    l.weight_offset = offset;
    l.bias_offset = offset + l.rows * l.cols;
    offset = l.end();
    layers_.push_back(l);
  }
  params_.assign(offset, 0.0);
  id_ = next_net_id();
  version_ = 0;
}

std::span<double> MlpNet::mutable_parameters() {
  ++version_;
  return params_;
}

std::span<double> MlpNet::mutable_layer_parameters(std::size_t i) {
  const LayerShape& l = layers_.at(i);
  ++version_;
  return std::span<double>(params_).subspan(l.weight_offset, l.end() - l.weight_offset);
}

DenseMatrix MlpNet::weight(std::size_t i) const {
  const LayerShape& l = layers_.at(i);
  std::vector<double> w(params_.begin() + static_cast<std::ptrdiff_t>(l.weight_offset),
                        params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset));
  return DenseMatrix(l.rows, l.cols, std::move(w));
}

std::vector<double> MlpNet::bias(std::size_t i) const {
  const LayerShape& l = layers_.at(i);
  return {params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset),
          params_.begin() + static_cast<std::ptrdiff_t>(l.end())};
}

void MlpNet::set_weight(std::size_t i, const DenseMatrix& w) {
  const LayerShape& l = layers_.at(i);
  require(w.rows() == l.rows && w.cols() == l.cols, "MlpNet::set_weight: shape mismatch");
  ++version_;
  std::copy(w.data().begin(), w.data().end(),
            params_.begin() + static_cast<std::ptrdiff_t>(l.weight_offset));
}

void MlpNet::set_bias(std::size_t i, std::span<const double> b) {
  const LayerShape& l = layers_.at(i);
  require(b.size() == l.rows, "MlpNet::set_bias: length mismatch");
  ++version_;
  std::copy(b.begin(), b.end(), params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset));
}

void MlpNet::check_input(std::span<const double> input) const {
  require(!sizes_.empty(), "MlpNet: network is empty");
  if (input.size() != input_dim())
    throw ContractViolation("MlpNet: input length " + std::to_string(input.size()) +
                            " != " + std::to_string(input_dim()));
  if (!all_finite(input)) throw RejectedInput("MlpNet: non-finite input");
}

std::vector<double> MlpNet::predict(std::span<const double> input) const {
  return forward(input).output;
}

ForwardResult MlpNet::forward(std::span<const double> input) const {
  check_input(input);
  ForwardResult res;
  GradientTape& t = res.tape;
  t.net_id_ = id_;
  t.net_version_ = version_;

  std::size_t act_total = 0;
  std::size_t pre_total = 0;
  t.act_offsets_.reserve(sizes_.size() + 1);
  t.pre_offsets_.reserve(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    t.act_offsets_.push_back(act_total);
    act_total += sizes_[i];
    if (i > 0) {
      t.pre_offsets_.push_back(pre_total);
      pre_total += sizes_[i];
    }
  }
  t.act_offsets_.push_back(act_total);
  t.pre_offsets_.push_back(pre_total);
  t.acts_.resize(act_total);
  t.pres_.resize(pre_total);
  std::copy(input.begin(), input.end(), t.acts_.begin());

  const double* p = params_.data();
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const LayerShape& l = layers_[li];
    const double* in = t.acts_.data() + t.act_offsets_[li];
    double* z = t.pres_.data() + t.pre_offsets_[li];
    double* out = t.acts_.data() + t.act_offsets_[li + 1];
    const double* w = p + l.weight_offset;
    const double* b = p + l.bias_offset;
    for (std::size_t r = 0; r < l.rows; ++r) {
      const double* wr = w + r * l.cols;
      double acc = 0.0;
      for (std::size_t c = 0; c < l.cols; ++c) acc += wr[c] * in[c];
      z[r] = acc + b[r];
      out[r] = apply(acts_[li], z[r]);
    }
  }
  auto out = res.tape.output();
  if (!all_finite(out)) throw NonFiniteError("MlpNet: non-finite output");
  res.output.assign(out.begin(), out.end());
  return res;
}

std::vector<double> MlpNet::backward(const GradientTape& tape, std::span<const double> output_grad,
                                     std::span<double> param_grad) const {
  if (!tape.bound() || tape.net_id_ != id_ || tape.net_version_ != version_)
    throw StaleTape("MlpNet::backward: tape does not belong to the current parameters");
  require(output_grad.size() == output_dim(), "MlpNet::backward: output_grad length mismatch");
  const bool want_params = !param_grad.empty();
  require(!want_params || param_grad.size() == params_.size(),
          "MlpNet::backward: param_grad length mismatch");

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> next;
  const double* p = params_.data();
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerShape& l = layers_[li];
    auto z = tape.pre_activation(li);
    auto y = tape.activation(li + 1);
    auto in = tape.activation(li);
    for (std::size_t r = 0; r < l.rows; ++r) delta[r] *= derivative(acts_[li], z[r], y[r]);

    if (want_params) {
      double* gw = param_grad.data() + l.weight_offset;
      double* gb = param_grad.data() + l.bias_offset;
      for (std::size_t r = 0; r < l.rows; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        double* gwr = gw + r * l.cols;
        for (std::size_t c = 0; c < l.cols; ++c) gwr[c] += d * in[c];
        gb[r] += d;
      }
    }

    next.assign(l.cols, 0.0);
    const double* w = p + l.weight_offset;
    for (std::size_t r = 0; r < l.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* wr = w + r * l.cols;
      for (std::size_t c = 0; c < l.cols; ++c) next[c] += wr[c] * d;
    }
    delta.swap(next);
  }
  return delta;
}

}  // namespace apo::nn
