#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tecorridor/corridor.hpp"
#include "tecorridor/history.hpp"

namespace tecorridor::qlearn {

enum class RewardMode : std::uint8_t { TE, EntropyOnly, None };

/// How the opponent history is averaged out of the Q-table. AllPossible
/// divides by the number of feasible opponent histories (absent entries count
/// as zero) at the current history length; VisitedOnly divides by the number
/// of stored ones; FullWindow always uses the count for length n + 1.
enum class MarginalDivisor : std::uint8_t { AllPossible, VisitedOnly, FullWindow };

std::string_view to_string(RewardMode m);
std::optional<RewardMode> parse_reward_mode(std::string_view s);
std::string_view to_string(MarginalDivisor d);
std::optional<MarginalDivisor> parse_marginal_divisor(std::string_view s);

using QValues = std::array<double, env::kActionCount>;

struct TableSettings {
  env::Seat seat = env::Seat::P1;
  env::GridConfig grid;
  int history_len = 5;
  double phi = 0.0;
  RewardMode mode = RewardMode::TE;
  MarginalDivisor divisor = MarginalDivisor::AllPossible;
  /// Non-empty for a Mixed learner: phi is redrawn from these each episode.
  std::vector<double> phi_choices;

  bool operator==(const TableSettings&) const = default;
};

/// Sparse Q(a | ego history, opponent history). Entries that were never
/// written read as 0. Per (ego history, action) the table keeps the running
/// sum of stored Q-values over opponent histories, so the marginalized
/// Q-values cost one lookup.
class SparseQTable {
 public:
  explicit SparseQTable(TableSettings settings);

  const TableSettings& settings() const noexcept { return settings_; }
  env::Seat seat() const noexcept { return settings_.seat; }
  const env::GridConfig& grid() const noexcept { return settings_.grid; }
  int history_len() const noexcept { return settings_.history_len; }
  double phi() const noexcept { return settings_.phi; }
  void set_phi(double phi) noexcept { settings_.phi = phi; }
  RewardMode mode() const noexcept { return settings_.mode; }
  MarginalDivisor divisor() const noexcept { return settings_.divisor; }

  QValues q_values(const JointHistoryKey& key) const;
  double q(const JointHistoryKey& key, env::Action a) const;
  bool contains(const JointHistoryKey& key, env::Action a) const;

  /// Writes one entry and moves the marginal sum by the same delta.
  void set_q(const JointHistoryKey& key, env::Action a, double value);

  /// Stored-entry sums over opponent histories for each action.
  QValues marginal_sum(const EgoHistoryKey& ego) const;
  /// The same sums computed from scratch by scanning every entry.
  QValues recompute_marginal_sum(const EgoHistoryKey& ego) const;
  /// marginal_sum divided by the divisor configured for this table.
  QValues marginal_q(const EgoHistoryKey& ego) const;
  /// Largest |incremental - recomputed| over every ego history present.
  double max_marginal_drift() const;

  /// Feasible opponent histories for a window of `length` columns.
  std::uint64_t opponent_histories(int length) const;

  /// Number of stored (key, action) entries.
  std::size_t entry_count() const noexcept { return entry_count_; }

  struct Entry {
    JointHistoryKey key;
    env::Action action;
    double q;
  };
  /// All stored entries ordered by (turn, objective, ego cols, opp cols, action).
  std::vector<Entry> sorted_entries() const;

  /// Same settings and same stored entries with identical values.
  bool same_contents(const SparseQTable& other) const;

 private:
  struct Row {
    QValues q{};
    std::uint8_t present = 0;
  };
  struct MarginalRow {
    QValues sum{};
    std::array<std::uint32_t, env::kActionCount> count{};
  };

  std::uint64_t pack_joint(const JointHistoryKey& key) const;
  std::uint64_t pack_ego(const EgoHistoryKey& ego) const;
  JointHistoryKey unpack_joint(std::uint64_t code) const;
  void check_key(env::Seat seat, int turn, std::size_t ego_len, std::size_t opp_len) const;

  TableSettings settings_;
  int col_bits_ = 0;
  std::vector<std::uint64_t> history_counts_;
  std::unordered_map<std::uint64_t, Row> rows_;
  std::unordered_map<std::uint64_t, MarginalRow> marginals_;
  std::size_t entry_count_ = 0;
};

/// Text snapshot: one header line, then one record per stored entry in
/// sorted_entries() order. Q-values use the shortest round-trip decimal, so
/// save -> load -> save is byte-identical.
void save_table(const SparseQTable& table, std::ostream& out);
void save_table(const SparseQTable& table, const std::filesystem::path& path);
/// Throws ParseError (with line number) on malformed input or a version mismatch.
SparseQTable load_table(std::istream& in);
SparseQTable load_table(const std::filesystem::path& path);

inline constexpr std::string_view kSnapshotMagic = "tecorridor-qtable";
inline constexpr int kSnapshotVersion = 1;

}  // namespace tecorridor::qlearn
