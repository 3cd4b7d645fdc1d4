#include "tecorridor/q_agent.hpp"

#include <algorithm>
#include <cmath>

#include "tecorridor/errors.hpp"

namespace tecorridor::qlearn {

info::ActionDistribution policy_full(const SparseQTable& table, const JointHistoryKey& key) {
  const QValues q = table.q_values(key);
  return info::softmax(q);
}

info::ActionDistribution policy_marginal(const SparseQTable& table, const EgoHistoryKey& ego) {
  const QValues q = table.marginal_q(ego);
  return info::softmax(q);
}

InfluenceMeasures influence_measures(const SparseQTable& table, const JointHistoryKey& key) {
  const auto plus = policy_full(table, key);
  const auto minus = policy_marginal(table, key.ego());
  return {info::transfer_entropy(minus, plus), info::shannon_entropy(plus),
          info::shannon_entropy(minus)};
}

info::TransferEntropyBits step_te(const SparseQTable& table, const JointHistoryKey& key) {
  return influence_measures(table, key).te;
}

double shaped_reward(const SparseQTable& table, const InfluenceMeasures& measures,
                     double env_reward) {
  switch (table.mode()) {
    case RewardMode::TE:
      return table.phi() * info::normalized_te(measures.te, env::kActionCount) + env_reward;
    case RewardMode::EntropyOnly:
      return -table.phi() * measures.h_plus.value / std::log2(double{env::kActionCount}) +
             env_reward;
    case RewardMode::None:
      return env_reward;
  }
  throw ContractViolation("shaped_reward: unknown reward mode");
}

double shaped_reward(const SparseQTable& table, const JointHistoryKey& key, double env_reward) {
  if (table.mode() == RewardMode::None) return env_reward;
  return shaped_reward(table, influence_measures(table, key), env_reward);
}

void td_update(SparseQTable& table, const JointHistoryKey& key, env::Action action, double reward,
               const std::optional<JointHistoryKey>& next, double alpha, double gamma) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("td_update: alpha must be in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("td_update: gamma must be in [0, 1]");
  double bootstrap = 0.0;
  if (next) {
    const QValues nq = table.q_values(*next);
    bootstrap = *std::max_element(nq.begin(), nq.end());
  }
  const double old = table.q(key, action);
  table.set_q(key, action, (1.0 - alpha) * old + alpha * (reward + gamma * bootstrap));
}

env::Action sample_action(const info::ActionDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
    cumulative += dist[i];
    if (u < cumulative) return static_cast<env::Action>(i);
  }
  return static_cast<env::Action>(dist.size() - 1);
}

env::Action select_action(const SparseQTable& table, const JointHistoryKey& key, double epsilon,
                          Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("epsilon must be in [0, 1]");
  if (rng.uniform() < epsilon) return static_cast<env::Action>(rng.index(env::kActionCount));
  return sample_action(policy_full(table, key), rng);
}

}  // namespace tecorridor::qlearn
