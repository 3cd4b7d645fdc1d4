#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tecorridor/errors.hpp"

/// Entropy, transfer entropy and policy marginalization.
///
/// Discrete quantities are in bits (log base 2). The Gaussian differential
/// entropy is in nats. Every function here is pure.
namespace tecorridor::info {

/// Probability vector over a finite action set. Construction validates that
/// entries are non-negative, finite, and sum to 1 within 1e-6.
class ActionDistribution {
 public:
  explicit ActionDistribution(std::vector<double> probs);

  static ActionDistribution uniform(std::size_t k);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const ActionDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

struct EntropyBits {
  double value = 0.0;
};

/// H(P^-) - H(P^+). Signed: negative when conditioning raises uncertainty.
struct TransferEntropyBits {
  double value = 0.0;
};

struct Nats {
  double value = 0.0;
};

struct GaussianPolicyParams {
  int dimension = 1;
  double covariance_determinant = 1.0;
};

/// exp(q_i - max q) / sum, temperature 1.
ActionDistribution softmax(std::span<const double> q_values);

EntropyBits shannon_entropy(const ActionDistribution& p);

/// Validating overload for raw vectors.
EntropyBits shannon_entropy(std::span<const double> p);

TransferEntropyBits transfer_entropy(const ActionDistribution& p_minus,
                                     const ActionDistribution& p_plus);

/// te / log2(action_count); sign preserved, result in [-1, 1].
double normalized_te(TransferEntropyBits te, int action_count);

/// D/2 (1 + ln 2pi) + 1/2 ln|sigma|, in nats.
Nats gaussian_differential_entropy(const GaussianPolicyParams& params);

/// KL(p || q) in bits. Requires q > 0 wherever p > 0.
double kl_divergence_bits(const ActionDistribution& p, const ActionDistribution& q);

/// Monte-Carlo estimate of the policy marginalized over a source variable:
/// the mean of policy(partial_obs, s_i) over n_samples draws s_i from the sampler.
template <class Policy, class Obs, class Sampler>
ActionDistribution mc_marginal_policy(Policy&& policy, const Obs& partial_obs,
                                      Sampler&& sample_source, int n_samples) {
  if (n_samples < 1) throw InvalidInput("mc_marginal_policy: n_samples must be >= 1");
  std::vector<double> acc;
  for (int i = 0; i < n_samples; ++i) {
    const ActionDistribution d = policy(partial_obs, sample_source());
    if (acc.empty()) {
      acc.assign(d.size(), 0.0);
    } else if (d.size() != acc.size()) {
      throw InvalidInput("mc_marginal_policy: policy returned inconsistent action counts");
    }
    for (std::size_t a = 0; a < acc.size(); ++a) acc[a] += d[a];
  }
  for (double& v : acc) v /= static_cast<double>(n_samples);
  return ActionDistribution(std::move(acc));
}

}  // namespace tecorridor::info
