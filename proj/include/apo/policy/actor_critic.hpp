#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apo/nn/adam.hpp"
#include "apo/nn/checkpoint.hpp"
#include "apo/nn/mlp.hpp"
#include "apo/policy/gaussian.hpp"

namespace apo::policy {

struct NetworkShape {
  std::vector<std::size_t> hidden = {64, 64};
  nn::Activation activation = nn::Activation::tanh;
  double hidden_gain = 1.4142135623730951;  // sqrt(2)
};

// Separate policy (obs -> action mean) and value (obs -> scalar) networks
// plus a state-independent log-std vector.
struct ActorCritic {
  nn::MlpNet policy_net;
  std::vector<double> log_std;
  nn::MlpNet value_net;

  ActorCritic() = default;
  // Orthogonal init: hidden gain sqrt(2), policy output 0.01, value output
  // 1.0; log_std starts at 0.
  ActorCritic(std::size_t obs_dim, std::size_t action_dim, std::uint64_t seed,
              const NetworkShape& shape = {});

  std::size_t obs_dim() const { return policy_net.input_dim(); }
  std::size_t action_dim() const { return policy_net.output_dim(); }
  std::size_t parameter_count() const;

  GaussianActionDist dist(std::span<const double> obs) const;
  double value(std::span<const double> obs) const;

  void save_to(nn::Checkpoint& ck) const;
  static ActorCritic load_from(const nn::Checkpoint& ck);
};

// Gradient buffer laid out as [policy params | log_std | value params].
class ActorCriticGrads {
 public:
  ActorCriticGrads() = default;
  explicit ActorCriticGrads(const ActorCritic& ac);

  std::span<double> all() { return data_; }
  std::span<const double> all() const { return data_; }
  std::span<double> policy() { return all().subspan(0, n_policy_); }
  std::span<const double> policy() const { return all().subspan(0, n_policy_); }
  std::span<double> log_std() { return all().subspan(n_policy_, n_log_std_); }
  std::span<const double> log_std() const { return all().subspan(n_policy_, n_log_std_); }
  std::span<double> value() { return all().subspan(n_policy_ + n_log_std_); }
  std::span<const double> value() const { return all().subspan(n_policy_ + n_log_std_); }

  void zero();
  std::size_t size() const { return data_.size(); }

  // Views of a foreign flat buffer with the same layout (kernel scratch).
  struct Views {
    std::span<double> policy;
    std::span<double> log_std;
    std::span<double> value;
  };
  Views split(std::span<double> flat) const;

 private:
  std::vector<double> data_;
  std::size_t n_policy_ = 0;
  std::size_t n_log_std_ = 0;
};

// Optimizer blocks in a fixed order: policy layers, log_std, value layers.
std::vector<nn::ParamBlock> param_blocks(ActorCritic& ac, ActorCriticGrads& grads);

// Every network here is MLP(in -> hidden... -> out) with orthogonal init.
nn::MlpNet make_mlp(std::size_t in, std::size_t out, const NetworkShape& shape, double output_gain,
                    std::uint64_t seed);

}  // namespace apo::policy
