#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "tecorridor/corridor.hpp"
#include "tecorridor/rng.hpp"

/// Rule-based opponents. All of them are memoryless: they look only at the
/// current columns (and, for the predictive variants, the opponent's objective).
namespace tecorridor::baselines {

enum class BaselineKind { Random, PureSF, IPKSF, PKSF };

inline constexpr double kDefaultKnowledgeProbability = 0.8;

struct BaselineSpec {
  BaselineKind kind = BaselineKind::Random;
  /// Chance per step that IPK-SF is told the opponent's objective.
  double p_know = kDefaultKnowledgeProbability;
};

std::string_view to_string(BaselineKind k);
std::optional<BaselineKind> parse_baseline_kind(std::string_view s);

env::Action random_action(Rng& rng);

/// Meet: minimise |own_next - opp_col|; Pass: maximise it. Ties uniform.
env::Action pure_sf_action(int own_col, int opp_col, env::Objective objective, int cols, Rng& rng);

/// Weighted set of columns the opponent is expected to occupy next turn.
struct ColumnForecast {
  std::vector<int> cols;
  std::vector<double> weights;
};

/// Where a Pure-SF opponent at `opp_col` goes when facing us at `own_col`.
/// Tied opponent actions share the probability mass equally.
ColumnForecast forecast_pure_sf(int opp_col, int own_col, env::Objective opp_objective, int cols);

struct SfDecision {
  env::Action action;
  ColumnForecast forecast;
};

/// One-step predictive social force. With the opponent's objective known the
/// forecast is forecast_pure_sf; otherwise a single column drawn uniformly from
/// the opponent's reachable next columns. The action then minimises (Meet) or
/// maximises (Pass) the expected |own_next - opp_next| under the forecast.
SfDecision predictive_sf_decide(int own_col, int opp_col, env::Objective own_objective,
                                std::optional<env::Objective> opp_objective, int cols, Rng& rng);

env::Action predictive_sf_action(int own_col, int opp_col, env::Objective own_objective,
                                 std::optional<env::Objective> opp_objective, int cols, Rng& rng);

/// Dispatches on the spec. IPK-SF draws its knowledge coin only when
/// 0 < p_know < 1, so p_know = 1 consumes the same stream as PK-SF.
env::Action baseline_action(const BaselineSpec& spec, int own_col, int opp_col,
                            env::Objective own_objective, env::Objective opp_objective, int cols,
                            Rng& rng);

}  // namespace tecorridor::baselines
