#pragma once

#include <optional>

#include "tecorridor/info_theory.hpp"
#include "tecorridor/q_table.hpp"
#include "tecorridor/rng.hpp"

namespace tecorridor::qlearn {

inline constexpr double kDefaultAlpha = 0.8;
inline constexpr double kDefaultGamma = 0.8;

/// P^+ : softmax of the stored Q-values for the full joint history.
info::ActionDistribution policy_full(const SparseQTable& table, const JointHistoryKey& key);

/// P^- : softmax of the Q-values averaged over opponent histories.
info::ActionDistribution policy_marginal(const SparseQTable& table, const EgoHistoryKey& ego);

/// Both entropies and their difference, evaluated at one key.
struct InfluenceMeasures {
  info::TransferEntropyBits te;
  info::EntropyBits h_plus;
  info::EntropyBits h_minus;
};

InfluenceMeasures influence_measures(const SparseQTable& table, const JointHistoryKey& key);

/// H(P^-) - H(P^+) at `key`.
info::TransferEntropyBits step_te(const SparseQTable& table, const JointHistoryKey& key);

/// Environment reward plus the table's shaping term:
///   TE          phi * te / log2(3)
///   EntropyOnly -phi * h_plus / log2(3)
///   None        0
double shaped_reward(const SparseQTable& table, const JointHistoryKey& key, double env_reward);
double shaped_reward(const SparseQTable& table, const InfluenceMeasures& measures,
                     double env_reward);

/// Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')); the
/// bootstrap term is 0 when `next` is empty (terminal).
void td_update(SparseQTable& table, const JointHistoryKey& key, env::Action action, double reward,
               const std::optional<JointHistoryKey>& next, double alpha = kDefaultAlpha,
               double gamma = kDefaultGamma);

/// Draws an action index from `dist`.
env::Action sample_action(const info::ActionDistribution& dist, Rng& rng);

/// With probability epsilon a uniform action, otherwise a draw from policy_full.
/// Consumes a branch draw followed by an action draw.
env::Action select_action(const SparseQTable& table, const JointHistoryKey& key, double epsilon,
                          Rng& rng);

}  // namespace tecorridor::qlearn
