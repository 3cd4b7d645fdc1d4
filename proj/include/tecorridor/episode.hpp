#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tecorridor/corridor.hpp"

namespace tecorridor {

/// One seat's view of a finished episode.
struct SeatTrace {
  env::Objective objective = env::Objective::Meet;
  /// Column at every turn boundary: start column first, terminal column last.
  std::vector<int> cols;
  std::vector<env::Action> actions;
  /// Per-step influence measures and shaped rewards; empty for rule-based seats.
  std::vector<double> te;
  std::vector<double> h_plus;
  std::vector<double> h_minus;
  std::vector<double> rewards;
  /// Per-step flags set when the game server moved the player on timeout.
  std::vector<bool> forced;
  double phi = 0.0;
  bool success = false;

  bool has_measures() const { return !te.empty(); }
};

struct EpisodeRecord {
  long round = 0;
  std::array<SeatTrace, 2> seats;
  env::Outcome outcome = env::Outcome::Pass;

  const SeatTrace& seat(env::Seat s) const { return seats[static_cast<std::size_t>(env::index_of(s))]; }
  SeatTrace& seat(env::Seat s) { return seats[static_cast<std::size_t>(env::index_of(s))]; }
  bool collaborative() const { return seats[0].objective == seats[1].objective; }
};

nlohmann::json to_json(const EpisodeRecord& record);
/// Throws InvalidInput on a malformed object.
EpisodeRecord episode_from_json(const nlohmann::json& j);

/// One compact JSON object per line.
void write_episode_log(std::ostream& out, std::span<const EpisodeRecord> records);
/// Throws ParseError with the offending line number.
std::vector<EpisodeRecord> read_episode_log(std::istream& in);

struct ReplayReport {
  std::size_t episodes = 0;
  std::vector<std::string> mismatches;

  bool ok() const { return mismatches.empty(); }
};

/// Re-runs every episode through the environment from its start columns and
/// action sequences, and checks the recorded columns, outcome and success flags.
ReplayReport replay(std::span<const EpisodeRecord> records, const env::GridConfig& grid);

}  // namespace tecorridor
