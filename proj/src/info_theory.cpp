#include "tecorridor/info_theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tecorridor::info {

namespace {

constexpr double kSumTolerance = 1e-6;

void validate_distribution(std::span<const double> p) {
  if (p.empty()) throw InvalidInput("distribution must be non-empty");
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidInput("distribution entries must be finite and non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidInput("distribution sums to " + std::to_string(sum) + ", expected 1");
  }
}

double entropy_unchecked(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

}  // namespace

ActionDistribution::ActionDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  validate_distribution(probs_);
}

ActionDistribution ActionDistribution::uniform(std::size_t k) {
  if (k == 0) throw InvalidInput("uniform distribution needs at least one outcome");
  return ActionDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ActionDistribution softmax(std::span<const double> q_values) {
  if (q_values.empty()) throw InvalidInput("softmax of an empty vector");
  for (double q : q_values) {
    if (!std::isfinite(q)) throw InvalidInput("softmax input must be finite");
  }
  const double top = *std::max_element(q_values.begin(), q_values.end());
  std::vector<double> out(q_values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q_values.size(); ++i) {
    out[i] = std::exp(q_values[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return ActionDistribution(std::move(out));
}

EntropyBits shannon_entropy(const ActionDistribution& p) { return {entropy_unchecked(p.probs())}; }

EntropyBits shannon_entropy(std::span<const double> p) {
  validate_distribution(p);
  return {entropy_unchecked(p)};
}

TransferEntropyBits transfer_entropy(const ActionDistribution& p_minus,
                                     const ActionDistribution& p_plus) {
  if (p_minus.size() != p_plus.size()) {
    throw InvalidInput("transfer_entropy: distributions over different action sets");
  }
  return {shannon_entropy(p_minus).value - shannon_entropy(p_plus).value};
}

double normalized_te(TransferEntropyBits te, int action_count) {
  if (action_count < 2) throw InvalidInput("normalized_te: action_count must be >= 2");
  return te.value / std::log2(static_cast<double>(action_count));
}

Nats gaussian_differential_entropy(const GaussianPolicyParams& params) {
  if (params.dimension < 1) throw InvalidInput("gaussian entropy: dimension must be >= 1");
  if (!(params.covariance_determinant > 0.0) || !std::isfinite(params.covariance_determinant)) {
    throw InvalidInput("gaussian entropy: covariance determinant must be positive");
  }
  const double d = params.dimension;
  return {d / 2.0 * (1.0 + std::log(2.0 * std::numbers::pi)) +
          0.5 * std::log(params.covariance_determinant)};
}

double kl_divergence_bits(const ActionDistribution& p, const ActionDistribution& q) {
  if (p.size() != q.size()) throw InvalidInput("kl_divergence: mismatched supports");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw InvalidInput("kl_divergence: q has zero mass where p does not");
    kl += p[i] * std::log2(p[i] / q[i]);
  }
  return kl;
}

}  // namespace tecorridor::info
