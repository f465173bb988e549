#pragma once

#include <span>
#include <vector>

#include "apo/common/rng.hpp"

namespace apo::policy {

// Diagonal Gaussian over actions; std = exp(log_std).
struct GaussianActionDist {
  std::vector<double> mean;
  std::vector<double> log_std;

  std::size_t dim() const { return mean.size(); }
  // Throws unless mean/log_std agree in length and std is finite and > 0.
  void validate() const;
};

double log_prob(const GaussianActionDist& d, std::span<const double> action);
std::vector<double> sample(const GaussianActionDist& d, Rng& rng);
double entropy(const GaussianActionDist& d);

// KL(p || q). `p` is the reference distribution (clean observation), `q`
// the distribution at the perturbed observation.
double kl_divergence(const GaussianActionDist& p, const GaussianActionDist& q);

// Partial derivatives of log_prob w.r.t. the distribution parameters.
struct LogProbGrad {
  std::vector<double> mean;
  std::vector<double> log_std;
};
LogProbGrad log_prob_grad(const GaussianActionDist& d, std::span<const double> action);

// Partial derivatives of KL(p || q) w.r.t. both arguments' parameters.
struct KlGrad {
  std::vector<double> mean_p;
  std::vector<double> log_std_p;
  std::vector<double> mean_q;
  std::vector<double> log_std_q;
};
KlGrad kl_divergence_grad(const GaussianActionDist& p, const GaussianActionDist& q);

}  // namespace apo::policy
