#include "apo/policy/actor_critic.hpp"

#include "apo/common/error.hpp"
#include "apo/common/rng.hpp"
#include "apo/nn/init.hpp"

namespace apo::policy {

nn::MlpNet make_mlp(std::size_t in, std::size_t out, const NetworkShape& shape, double output_gain,
                    std::uint64_t seed) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), shape.hidden.begin(), shape.hidden.end());
  sizes.push_back(out);
  nn::MlpNet net(sizes, shape.activation);
  nn::orthogonal_init(net, shape.hidden_gain, output_gain, seed);
  return net;
}

ActorCritic::ActorCritic(std::size_t obs_dim, std::size_t action_dim, std::uint64_t seed,
                         const NetworkShape& shape)
    : policy_net(make_mlp(obs_dim, action_dim, shape, 0.01, mix_seed(seed, 1))),
      log_std(action_dim, 0.0),
      value_net(make_mlp(obs_dim, 1, shape, 1.0, mix_seed(seed, 2))) {}

std::size_t ActorCritic::parameter_count() const {
  return policy_net.parameter_count() + log_std.size() + value_net.parameter_count();
}

GaussianActionDist ActorCritic::dist(std::span<const double> obs) const {
  return GaussianActionDist{policy_net.predict(obs), log_std};
}

double ActorCritic::value(std::span<const double> obs) const { return value_net.predict(obs)[0]; }

void ActorCritic::save_to(nn::Checkpoint& ck) const {
  ck.nets.insert_or_assign("policy", policy_net);
  ck.nets.insert_or_assign("value", value_net);
  ck.vectors["log_std"] = log_std;
}

ActorCritic ActorCritic::load_from(const nn::Checkpoint& ck) {
  auto p = ck.nets.find("policy");
  auto v = ck.nets.find("value");
  auto ls = ck.vectors.find("log_std");
  if (p == ck.nets.end() || v == ck.nets.end() || ls == ck.vectors.end())
    throw RejectedInput("checkpoint: missing policy/value/log_std");
  ActorCritic ac;
  ac.policy_net = p->second;
  ac.value_net = v->second;
  ac.log_std = ls->second;
  if (ac.policy_net.input_dim() != ac.value_net.input_dim() || ac.value_net.output_dim() != 1 ||
      ac.log_std.size() != ac.policy_net.output_dim())
    throw RejectedInput("checkpoint: inconsistent actor-critic shapes");
  return ac;
}

ActorCriticGrads::ActorCriticGrads(const ActorCritic& ac)
    : data_(ac.parameter_count(), 0.0),
      n_policy_(ac.policy_net.parameter_count()),
      n_log_std_(ac.log_std.size()) {}

void ActorCriticGrads::zero() { std::fill(data_.begin(), data_.end(), 0.0); }

ActorCriticGrads::Views ActorCriticGrads::split(std::span<double> flat) const {
  require(flat.size() == data_.size(), "ActorCriticGrads::split: size mismatch");
  return {flat.subspan(0, n_policy_), flat.subspan(n_policy_, n_log_std_),
          flat.subspan(n_policy_ + n_log_std_)};
}

std::vector<nn::ParamBlock> param_blocks(ActorCritic& ac, ActorCriticGrads& grads) {
  require(grads.size() == ac.parameter_count(), "param_blocks: gradient size mismatch");
  auto blocks = nn::layer_blocks(ac.policy_net, grads.policy(), "policy.layer");
  blocks.push_back({ac.log_std, grads.log_std(), "log_std"});
  auto vb = nn::layer_blocks(ac.value_net, grads.value(), "value.layer");
  blocks.insert(blocks.end(), vb.begin(), vb.end());
  return blocks;
}

}  // namespace apo::policy
