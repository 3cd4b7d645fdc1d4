#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tecorridor/baselines.hpp"
#include "tecorridor/episode.hpp"
#include "tecorridor/metrics.hpp"
#include "tecorridor/q_agent.hpp"

namespace tecorridor::training {

inline constexpr double kInfluencePhi = 10.0;

/// One side of a pairing: a Q-learner with its shaping, or a rule-based agent.
struct SideSpec {
  enum class Kind { QLearner, Baseline };
  Kind kind = Kind::QLearner;
  /// Short name used in reports ("non", "pos", "neg-h", "mixed", "pk-sf", ...).
  std::string label = "non";
  double phi = 0.0;
  qlearn::RewardMode mode = qlearn::RewardMode::TE;
  /// Non-empty for Mixed learners: phi is redrawn from these every training episode.
  std::vector<double> phi_choices;
  baselines::BaselineSpec baseline;

  bool learner() const { return kind == Kind::QLearner; }
};

struct PairSpec {
  std::array<SideSpec, 2> sides;

  const SideSpec& side(env::Seat s) const { return sides[static_cast<std::size_t>(env::index_of(s))]; }
};

/// Grammar: `<side>:<side>`, side = name [ "(" key=value {"," key=value} ")" ].
/// Names: non, pos, neg, mixed, random, pure-sf, ipk-sf, pk-sf. Keys: phi,
/// mode (te|entropy|none), p_know (ipk-sf), choices (mixed, '|'-separated).
/// Throws InvalidInput on anything else.
PairSpec parse_pair_spec(std::string_view text);
SideSpec parse_side_spec(std::string_view text);
/// Canonical text that parse_pair_spec maps back to the same pair.
std::string to_string(const PairSpec& pair);
std::string to_string(const SideSpec& side);

struct ExperimentConfig {
  std::string experiment = "experiment";
  PairSpec pair = parse_pair_spec("non:non");
  long episodes = 30000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};
  double alpha = qlearn::kDefaultAlpha;
  double gamma = qlearn::kDefaultGamma;
  int history_len = 5;
  long eval_episodes = 10000;
  env::GridConfig grid;
  qlearn::MarginalDivisor divisor = qlearn::MarginalDivisor::AllPossible;
  int jobs = 1;

  /// Throws InvalidInput on out-of-range settings.
  void validate() const;
};

/// Flat `key = value` document; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

/// Throws ParseError with the line number.
KeyValues parse_key_values(std::istream& in);
/// Reads PREFIX<KEY> variables (upper-case key names) for every known key.
KeyValues environment_overrides(std::string_view prefix = "TECORRIDOR_");
/// "1,2,3" -> {1, 2, 3}; throws InvalidInput on empty or malformed lists.
std::vector<std::uint64_t> parse_seed_list(const std::string& value);
/// Applies known keys; throws InvalidInput on unknown keys or bad values.
void apply(ExperimentConfig& config, const KeyValues& values);
/// The config as a key-value document that `apply` reads back identically.
std::string to_key_values(const ExperimentConfig& config);

/// max(1 - iteration / max_iteration, 0).
double epsilon(long iteration, long max_iteration);

/// A seated participant. Learners own a table; baselines do not.
struct Participant {
  SideSpec spec;
  std::shared_ptr<qlearn::SparseQTable> table;
};

using Pair = std::array<Participant, 2>;

enum class RunMode { Train, Eval };

struct EpisodeSettings {
  env::GridConfig grid;
  double epsilon = 0.0;
  RunMode mode = RunMode::Eval;
  double alpha = qlearn::kDefaultAlpha;
  double gamma = qlearn::kDefaultGamma;
};

/// Fresh tables for the learner sides of `pair`.
Pair make_pair(const PairSpec& pair, const ExperimentConfig& config);

/// Plays one episode. Learners pick actions with select_action at the given
/// epsilon (forced to 0 in Eval mode). Influence measures and shaped rewards
/// are computed from the table before that step's update. In Train mode each
/// learner gets one TD update per step.
EpisodeRecord run_episode(Pair& pair, const EpisodeSettings& settings, Rng& rng, long round = 0);

/// Success counts over one block of training episodes.
struct TrainingWindow {
  long end_episode = 0;
  std::optional<double> srcl;
  std::optional<double> srcp_p1;
};

struct SeedRun {
  std::uint64_t seed = 0;
  Pair pair;
  std::vector<TrainingWindow> log;
};

struct TrainedPair {
  ExperimentConfig config;
  std::vector<SeedRun> runs;
};

inline constexpr long kTrainingLogWindow = 1000;

SeedRun train_seed(const ExperimentConfig& config, std::uint64_t seed);
/// Seeds run on up to config.jobs threads; results are ordered as config.seeds.
TrainedPair train_pair(const ExperimentConfig& config);

/// Frozen evaluation of one seed's pair: no updates, epsilon 0.
std::vector<EpisodeRecord> evaluate_seed(const Pair& pair, const env::GridConfig& grid,
                                         std::uint64_t seed, long episodes);

/// Evaluates every seed and aggregates. When `records` is non-null it receives
/// the per-seed episode logs (same order as the runs).
metrics::MetricsReport evaluate(const TrainedPair& trained, long eval_episodes,
                                std::vector<std::vector<EpisodeRecord>>* records = nullptr);

/// Evaluates one frozen learner against a rule-based opponent in the other seat.
metrics::MetricsReport evaluate_against_baseline(
    std::shared_ptr<const qlearn::SparseQTable> agent, const SideSpec& agent_side,
    const SideSpec& baseline_side, std::span<const std::uint64_t> seeds, long episodes,
    std::string experiment);

std::array<std::string, 2> labels(const Pair& pair);

/// "seed<k>_P1.qtable" / "seed<k>_P2.qtable".
std::string snapshot_name(std::uint64_t seed, env::Seat seat);
inline constexpr const char* kConfigFileName = "experiment.cfg";

/// Writes experiment.cfg plus one snapshot per learner side and seed.
void save_trained(const TrainedPair& trained, const std::filesystem::path& dir);
/// Reads what save_trained wrote. Throws std::runtime_error on missing files
/// and ParseError on malformed ones.
TrainedPair load_trained(const std::filesystem::path& dir);

/// Rows: experiment,seed,end_episode,srcl,srcp_p1 (one per logged window).
void write_training_log(std::ostream& out, const TrainedPair& trained, bool header = true);

enum class SweepParam { Phi, HistoryLen };

struct SweepPoint {
  double value = 0.0;
  metrics::MetricsReport report;
};

/// Phi sweeps change the P2 side's |phi| scale (sign kept); history sweeps
/// change n for both sides. One full train + evaluate per value.
std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepParam param,
                              std::span<const double> values);

}  // namespace tecorridor::training
