#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tecorridor/baselines.hpp"
#include "tecorridor/episode.hpp"
#include "tecorridor/metrics.hpp"
#include "tecorridor/q_table.hpp"

/// Turn-based sessions between a human (seat P1) and a frozen agent (seat P2).
namespace tecorridor::service {

/// Epoch milliseconds.
using Millis = std::int64_t;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Millis now_ms() const = 0;
};

class SystemClock final : public Clock {
 public:
  Millis now_ms() const override;
};

/// Test clock; starts at `start` and only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Millis start = 1'700'000'000'000) : now_(start) {}
  Millis now_ms() const override { return now_.load(); }
  void set(Millis t) { now_.store(t); }
  void advance(Millis dt) { now_.fetch_add(dt); }

 private:
  std::atomic<Millis> now_;
};

/// Error carried back to the client as `error {code, message}`.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// A frozen Q-table or a rule-based policy.
struct Opponent {
  std::shared_ptr<const qlearn::SparseQTable> table;
  std::optional<baselines::BaselineSpec> baseline;
};

/// Named opponent slots. Slot names are what clients send; the opponent's
/// kind is never echoed back.
class OpponentRegistry {
 public:
  void add_table(std::string slot, std::shared_ptr<const qlearn::SparseQTable> table);
  void add_baseline(std::string slot, baselines::BaselineSpec spec);
  const Opponent* find(const std::string& slot) const;
  std::vector<std::string> slots() const;
  bool empty() const { return slots_.empty(); }

  /// One slot per `*.qtable` file, named after the file stem.
  static OpponentRegistry from_directory(const std::filesystem::path& dir);

 private:
  std::map<std::string, Opponent> slots_;
};

struct ServiceOptions {
  env::GridConfig grid;
  int default_rounds = 100;
  int max_rounds = 10000;
  Millis turn_ms = 5000;
  /// When set, each session appends one JSON line per round to <log_dir>/<session_id>.jsonl.
  std::optional<std::filesystem::path> log_dir;
};

struct Position {
  int row = 0;
  int col = 0;
};

/// The human's view of a freshly started round.
struct RoundView {
  int round = 1;  ///< 1-based
  env::Objective your_objective = env::Objective::Meet;
  Position you;
  Position opponent;
};

struct Created {
  std::string session_id;
  env::GridConfig grid;
  int rounds_total = 0;
  RoundView round;
  Millis deadline_ms = 0;
};

struct Scores {
  int you = 0;
  int opponent = 0;
};

enum class RoundStatus { InProgress, RoundOver, Finished };

/// One resolved joint turn.
struct TurnResult {
  std::string session_id;
  int round = 1;  ///< 1-based round the turn belonged to
  int turn = 0;   ///< 0-based turn index within the round
  env::Action your_move = env::Action::Straight;
  env::Action opponent_move = env::Action::Straight;
  Position you;
  Position opponent;
  bool forced = false;
  RoundStatus status = RoundStatus::InProgress;
  std::optional<env::Outcome> outcome;
  std::optional<bool> you_succeeded;
  Scores scores;
  std::optional<RoundView> next_round;
  std::optional<Millis> deadline_ms;  ///< absent once the session is finished
};

/// Thrown by submit_action when the deadline had already passed; carries the
/// turns that were forced before the late action arrived.
class TimeoutError : public ServiceError {
 public:
  TimeoutError(const std::string& message, std::vector<TurnResult> forced)
      : ServiceError("timeout", message), forced_turns_(std::move(forced)) {}
  const std::vector<TurnResult>& forced_turns() const noexcept { return forced_turns_; }

 private:
  std::vector<TurnResult> forced_turns_;
};

struct SessionReport {
  std::string session_id;
  int rounds_completed = 0;
  int rounds_total = 0;
  long collaborative = 0;
  long competitive = 0;
  metrics::SuccessRates rates;
  Scores scores;
};

class GameService {
 public:
  GameService(OpponentRegistry opponents, const Clock& clock, ServiceOptions options = {});
  ~GameService();
  GameService(const GameService&) = delete;
  GameService& operator=(const GameService&) = delete;

  /// Throws ServiceError "not_found" for an unknown slot, "bad_request" for bad rounds.
  Created create_session(const std::string& opponent_slot, std::optional<int> rounds = std::nullopt,
                         std::optional<std::uint64_t> seed = std::nullopt);

  /// Resolves the pending turn with the human's action. When the deadline has
  /// already passed the overdue turns are forced first and TimeoutError is
  /// thrown; `expected_round`/`expected_turn`, when given, must
  /// name the pending turn or ServiceError "conflict" is thrown.
  TurnResult submit_action(const std::string& session_id, env::Action action,
                           std::optional<int> expected_round = std::nullopt,
                           std::optional<int> expected_turn = std::nullopt);

  /// Forces Straight for every turn whose deadline is at or before `now`.
  std::vector<TurnResult> tick(const std::string& session_id, Millis now);
  /// tick() for every active session at the clock's current time.
  std::vector<TurnResult> tick_all();

  SessionReport report(const std::string& session_id) const;
  /// Completed rounds in play order.
  std::vector<EpisodeRecord> session_log(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  std::vector<std::string> opponent_slots() const { return opponents_.slots(); }

  /// JSON dispatch for `create`, `act`, `report` (field "type"). Failures come
  /// back as {"type":"error","code":...,"message":...}; timeouts also carry
  /// the forced turns under "forced_turns".
  nlohmann::json handle(const nlohmann::json& request);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;

  OpponentRegistry opponents_;
  const Clock& clock_;
  ServiceOptions options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> next_id_{1};
  std::uint64_t id_salt_;
};

nlohmann::json to_json(const Created& c);
nlohmann::json to_json(const TurnResult& t);
nlohmann::json to_json(const SessionReport& r);
nlohmann::json error_json(const std::string& code, const std::string& message);
std::string_view to_string(RoundStatus s);

}  // namespace tecorridor::service
