#include "apo/policy/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "apo/common/error.hpp"

namespace apo::policy {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_same_dim(const GaussianActionDist& p, const GaussianActionDist& q) {
  require(p.dim() == q.dim() && p.log_std.size() == q.log_std.size(),
          "kl_divergence: dimension mismatch");
}

}  // namespace

void GaussianActionDist::validate() const {
  require(mean.size() == log_std.size(), "GaussianActionDist: mean/log_std length mismatch");
  for (double ls : log_std)
    if (!std::isfinite(ls) || !(std::exp(ls) > 0.0) || !std::isfinite(std::exp(ls)))
      throw RejectedInput("GaussianActionDist: std must be finite and positive");
  if (!all_finite(mean)) throw RejectedInput("GaussianActionDist: non-finite mean");
}

double log_prob(const GaussianActionDist& d, std::span<const double> action) {
  require(action.size() == d.dim(), "log_prob: action dimension mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < d.dim(); ++i) {
    const double sigma = std::exp(d.log_std[i]);
    const double z = (action[i] - d.mean[i]) / sigma;
    lp += -0.5 * z * z - d.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

std::vector<double> sample(const GaussianActionDist& d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) a[i] = d.mean[i] + std::exp(d.log_std[i]) * normal(rng);
  return a;
}

double entropy(const GaussianActionDist& d) {
  double h = 0.0;
  for (double ls : d.log_std) h += 0.5 + kHalfLog2Pi + ls;
  return h;
}

double kl_divergence(const GaussianActionDist& p, const GaussianActionDist& q) {
  check_same_dim(p, q);
  double kl = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double var_p = std::exp(2.0 * p.log_std[i]);
    const double var_q = std::exp(2.0 * q.log_std[i]);
    const double diff = p.mean[i] - q.mean[i];
    kl += (q.log_std[i] - p.log_std[i]) + (var_p + diff * diff) / (2.0 * var_q) - 0.5;
  }
  return kl;
}

LogProbGrad log_prob_grad(const GaussianActionDist& d, std::span<const double> action) {
  require(action.size() == d.dim(), "log_prob_grad: action dimension mismatch");
  LogProbGrad g{std::vector<double>(d.dim()), std::vector<double>(d.dim())};
  for (std::size_t i = 0; i < d.dim(); ++i) {
    const double var = std::exp(2.0 * d.log_std[i]);
    const double diff = action[i] - d.mean[i];
    g.mean[i] = diff / var;
    g.log_std[i] = diff * diff / var - 1.0;
  }
  return g;
}

KlGrad kl_divergence_grad(const GaussianActionDist& p, const GaussianActionDist& q) {
  check_same_dim(p, q);
  const std::size_t n = p.dim();
  KlGrad g{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
           std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double var_p = std::exp(2.0 * p.log_std[i]);
    const double var_q = std::exp(2.0 * q.log_std[i]);
    const double diff = p.mean[i] - q.mean[i];
    g.mean_p[i] = diff / var_q;
    g.mean_q[i] = -diff / var_q;
    g.log_std_p[i] = var_p / var_q - 1.0;
    g.log_std_q[i] = 1.0 - (var_p + diff * diff) / var_q;
  }
  return g;
}

}  // namespace apo::policy
