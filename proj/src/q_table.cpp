#include "tecorridor/q_table.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>

#include "tecorridor/errors.hpp"
#include "text_util.hpp"

namespace tecorridor::qlearn {

using env::Action;
using env::kActionCount;

namespace {

// Packed key layout (low to high): turn (5 bits), objective (1), window
// length (4), ego columns, opponent columns.
constexpr int kTurnBits = 5;
constexpr int kLenBits = 4;
constexpr int kHeaderBits = kTurnBits + 1 + kLenBits;

std::uint64_t pack_header(int turn, env::Objective obj, std::size_t len) {
  return static_cast<std::uint64_t>(turn) |
         (static_cast<std::uint64_t>(obj == env::Objective::Pass) << kTurnBits) |
         (static_cast<std::uint64_t>(len) << (kTurnBits + 1));
}

}  // namespace

std::string_view to_string(RewardMode m) {
  switch (m) {
    case RewardMode::TE: return "te";
    case RewardMode::EntropyOnly: return "entropy";
    case RewardMode::None: return "none";
  }
  return "?";
}

std::optional<RewardMode> parse_reward_mode(std::string_view s) {
  if (s == "te") return RewardMode::TE;
  if (s == "entropy" || s == "h") return RewardMode::EntropyOnly;
  if (s == "none") return RewardMode::None;
  return std::nullopt;
}

std::string_view to_string(MarginalDivisor d) {
  switch (d) {
    case MarginalDivisor::AllPossible: return "all";
    case MarginalDivisor::VisitedOnly: return "visited";
    case MarginalDivisor::FullWindow: return "window";
  }
  return "all";
}

std::optional<MarginalDivisor> parse_marginal_divisor(std::string_view s) {
  if (s == "all") return MarginalDivisor::AllPossible;
  if (s == "visited") return MarginalDivisor::VisitedOnly;
  if (s == "window") return MarginalDivisor::FullWindow;
  return std::nullopt;
}

SparseQTable::SparseQTable(TableSettings settings) : settings_(std::move(settings)) {
  settings_.grid.validate();
  if (settings_.history_len < 0) throw InvalidInput("history length must be >= 0");
  if (settings_.grid.turns > (1 << kTurnBits)) throw InvalidInput("too many turns for the key encoding");
  col_bits_ = std::bit_width(static_cast<unsigned>(settings_.grid.cols - 1));
  const int max_window = history_window(settings_.grid.turns - 1, settings_.history_len);
  if (max_window >= (1 << kLenBits) || kHeaderBits + 2 * max_window * col_bits_ > 64) {
    throw InvalidInput("grid/history too large for the 64-bit key encoding");
  }
  history_counts_.resize(static_cast<std::size_t>(max_window) + 1);
  for (int len = 1; len <= max_window; ++len) {
    history_counts_[static_cast<std::size_t>(len)] = opponent_history_count(len, settings_.grid.cols);
  }
}

void SparseQTable::check_key(env::Seat seat, int turn, std::size_t ego_len,
                             std::size_t opp_len) const {
  if (seat != settings_.seat) throw InvalidInput("key seat does not match the table seat");
  if (turn < 0 || turn >= settings_.grid.turns) throw InvalidInput("key turn out of range");
  const auto window = static_cast<std::size_t>(history_window(turn, settings_.history_len));
  if (ego_len != window || opp_len != window) {
    throw InvalidInput("key history length does not match the table's history window");
  }
}

std::uint64_t SparseQTable::pack_ego(const EgoHistoryKey& ego) const {
  check_key(ego.seat, ego.turn, ego.ego_cols.size(), ego.ego_cols.size());
  std::uint64_t code = pack_header(ego.turn, ego.own_objective, ego.ego_cols.size());
  int shift = kHeaderBits;
  for (int c : ego.ego_cols) {
    if (c < 0 || c >= settings_.grid.cols) throw InvalidInput("key column out of range");
    code |= static_cast<std::uint64_t>(c) << shift;
    shift += col_bits_;
  }
  return code;
}

std::uint64_t SparseQTable::pack_joint(const JointHistoryKey& key) const {
  check_key(key.seat, key.turn, key.ego_cols.size(), key.opp_cols.size());
  std::uint64_t code = pack_header(key.turn, key.own_objective, key.ego_cols.size());
  int shift = kHeaderBits;
  for (const auto* seq : {&key.ego_cols, &key.opp_cols}) {
    for (int c : *seq) {
      if (c < 0 || c >= settings_.grid.cols) throw InvalidInput("key column out of range");
      code |= static_cast<std::uint64_t>(c) << shift;
      shift += col_bits_;
    }
  }
  return code;
}

JointHistoryKey SparseQTable::unpack_joint(std::uint64_t code) const {
  JointHistoryKey key;
  key.seat = settings_.seat;
  key.turn = static_cast<int>(code & ((1u << kTurnBits) - 1));
  key.own_objective = ((code >> kTurnBits) & 1u) ? env::Objective::Pass : env::Objective::Meet;
  const auto len = static_cast<std::size_t>((code >> (kTurnBits + 1)) & ((1u << kLenBits) - 1));
  const std::uint64_t mask = (std::uint64_t{1} << col_bits_) - 1;
  int shift = kHeaderBits;
  for (auto* seq : {&key.ego_cols, &key.opp_cols}) {
    seq->resize(len);
    for (auto& c : *seq) {
      c = static_cast<int>((code >> shift) & mask);
      shift += col_bits_;
    }
  }
  return key;
}

QValues SparseQTable::q_values(const JointHistoryKey& key) const {
  auto it = rows_.find(pack_joint(key));
  return it == rows_.end() ? QValues{} : it->second.q;
}

double SparseQTable::q(const JointHistoryKey& key, Action a) const {
  return q_values(key)[static_cast<std::size_t>(env::index_of(a))];
}

bool SparseQTable::contains(const JointHistoryKey& key, Action a) const {
  auto it = rows_.find(pack_joint(key));
  return it != rows_.end() && (it->second.present >> env::index_of(a)) & 1u;
}

void SparseQTable::set_q(const JointHistoryKey& key, Action a, double value) {
  if (!std::isfinite(value)) throw InvalidInput("Q-values must be finite");
  const auto ai = static_cast<std::size_t>(env::index_of(a));
  Row& row = rows_[pack_joint(key)];
  MarginalRow& marginal = marginals_[pack_ego(key.ego())];
  const std::uint8_t bit = static_cast<std::uint8_t>(1u << ai);
  if (!(row.present & bit)) {
    row.present |= bit;
    ++marginal.count[ai];
    ++entry_count_;
  }
  marginal.sum[ai] += value - row.q[ai];
  row.q[ai] = value;
}

QValues SparseQTable::marginal_sum(const EgoHistoryKey& ego) const {
  auto it = marginals_.find(pack_ego(ego));
  return it == marginals_.end() ? QValues{} : it->second.sum;
}

QValues SparseQTable::recompute_marginal_sum(const EgoHistoryKey& ego) const {
  const std::uint64_t target = pack_ego(ego);
  QValues sum{};
  for (const auto& [code, row] : rows_) {
    const JointHistoryKey key = unpack_joint(code);
    if (pack_ego(key.ego()) != target) continue;
    for (std::size_t a = 0; a < sum.size(); ++a) {
      if ((row.present >> a) & 1u) sum[a] += row.q[a];
    }
  }
  return sum;
}

QValues SparseQTable::marginal_q(const EgoHistoryKey& ego) const {
  auto it = marginals_.find(pack_ego(ego));
  if (it == marginals_.end()) return QValues{};
  QValues out{};
  if (settings_.divisor != MarginalDivisor::VisitedOnly) {
    const int len = settings_.divisor == MarginalDivisor::AllPossible ? static_cast<int>(ego.ego_cols.size())
                                                                      : settings_.history_len + 1;
    const auto m = static_cast<double>(opponent_histories(len));
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = it->second.sum[a] / m;
  } else {
    for (std::size_t a = 0; a < out.size(); ++a) {
      const auto n = it->second.count[a];
      out[a] = n == 0 ? 0.0 : it->second.sum[a] / static_cast<double>(n);
    }
  }
  return out;
}

double SparseQTable::max_marginal_drift() const {
  std::map<std::uint64_t, QValues> fresh;
  for (const auto& [code, row] : rows_) {
    const JointHistoryKey key = unpack_joint(code);
    QValues& sum = fresh[pack_ego(key.ego())];
    for (std::size_t a = 0; a < sum.size(); ++a) {
      if ((row.present >> a) & 1u) sum[a] += row.q[a];
    }
  }
  double worst = 0.0;
  for (const auto& [code, marginal] : marginals_) {
    auto it = fresh.find(code);
    for (std::size_t a = 0; a < marginal.sum.size(); ++a) {
      const double expected = it == fresh.end() ? 0.0 : it->second[a];
      worst = std::max(worst, std::abs(marginal.sum[a] - expected));
    }
  }
  return worst;
}

std::uint64_t SparseQTable::opponent_histories(int length) const {
  if (length < 1 || static_cast<std::size_t>(length) >= history_counts_.size()) {
    return opponent_history_count(length, settings_.grid.cols);
  }
  return history_counts_[static_cast<std::size_t>(length)];
}

std::vector<SparseQTable::Entry> SparseQTable::sorted_entries() const {
  std::vector<Entry> out;
  out.reserve(entry_count_);
  for (const auto& [code, row] : rows_) {
    const JointHistoryKey key = unpack_joint(code);
    for (Action a : env::kActions) {
      const auto ai = static_cast<std::size_t>(env::index_of(a));
      if ((row.present >> ai) & 1u) out.push_back({key, a, row.q[ai]});
    }
  }
  std::sort(out.begin(), out.end(), [](const Entry& x, const Entry& y) {
    return std::tie(x.key.turn, x.key.own_objective, x.key.ego_cols, x.key.opp_cols, x.action) <
           std::tie(y.key.turn, y.key.own_objective, y.key.ego_cols, y.key.opp_cols, y.action);
  });
  return out;
}

bool SparseQTable::same_contents(const SparseQTable& other) const {
  if (!(settings_ == other.settings_) || entry_count_ != other.entry_count_) return false;
  for (const auto& [code, row] : rows_) {
    auto it = other.rows_.find(code);
    if (it == other.rows_.end() || it->second.present != row.present) return false;
    for (std::size_t a = 0; a < row.q.size(); ++a) {
      if (((row.present >> a) & 1u) && row.q[a] != it->second.q[a]) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Snapshot IO

namespace {

char action_letter(Action a) { return "LSR"[env::index_of(a)]; }

std::string join_cols(const std::vector<int>& cols) {
  return detail::join(cols, ",", [](int c) { return std::to_string(c); });
}

std::vector<int> parse_cols(std::string_view s, std::size_t line) {
  std::vector<int> out;
  for (auto part : detail::split(s, ',')) {
    auto v = detail::parse_int<int>(part);
    if (!v) throw ParseError(line, "bad column list '" + std::string(s) + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace

void save_table(const SparseQTable& table, std::ostream& out) {
  const TableSettings& s = table.settings();
  out << kSnapshotMagic << ' ' << kSnapshotVersion << " seat=" << env::to_string(s.seat)
      << " phi=" << detail::format_double(s.phi) << " mode=" << to_string(s.mode)
      << " hist=" << s.history_len << " rows=" << s.grid.rows << " cols=" << s.grid.cols
      << " turns=" << s.grid.turns << " divisor=" << to_string(s.divisor) << " phi_choices="
      << (s.phi_choices.empty() ? std::string("-")
                                : detail::join(s.phi_choices, ",", detail::format_double))
      << " entries=" << table.entry_count() << '\n';
  for (const auto& e : table.sorted_entries()) {
    out << env::to_string(e.key.seat) << ' ' << e.key.turn << ' '
        << (e.key.own_objective == env::Objective::Meet ? 'M' : 'P') << ' '
        << join_cols(e.key.ego_cols) << ' ' << join_cols(e.key.opp_cols) << ' '
        << action_letter(e.action) << ' ' << detail::format_double(e.q) << '\n';
  }
}

void save_table(const SparseQTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_table(table, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

SparseQTable load_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty snapshot");
  const auto header = detail::split(detail::trim(line), ' ');
  if (header.size() < 2 || header[0] != kSnapshotMagic) throw ParseError(1, "not a Q-table snapshot");
  const auto version = detail::parse_int<int>(header[1]);
  if (!version || *version != kSnapshotVersion) {
    throw ParseError(1, "unsupported snapshot version '" + std::string(header[1]) + "' (expected " +
                            std::to_string(kSnapshotVersion) + ")");
  }
  std::map<std::string_view, std::string_view> fields;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const auto eq = header[i].find('=');
    if (eq == std::string_view::npos) throw ParseError(1, "header token without '='");
    fields[header[i].substr(0, eq)] = header[i].substr(eq + 1);
  }
  auto field = [&](std::string_view name) {
    auto it = fields.find(name);
    if (it == fields.end()) throw ParseError(1, "header missing '" + std::string(name) + "'");
    return it->second;
  };
  auto int_field = [&](std::string_view name) {
    auto v = detail::parse_int<int>(field(name));
    if (!v) throw ParseError(1, "header field '" + std::string(name) + "' is not an integer");
    return *v;
  };

  TableSettings s;
  auto seat = env::parse_seat(field("seat"));
  auto phi = detail::parse_double(field("phi"));
  auto mode = parse_reward_mode(field("mode"));
  auto divisor = parse_marginal_divisor(field("divisor"));
  if (!seat || !phi || !mode || !divisor) throw ParseError(1, "bad seat/phi/mode/divisor in header");
  s.seat = *seat;
  s.phi = *phi;
  s.mode = *mode;
  s.divisor = *divisor;
  s.history_len = int_field("hist");
  s.grid = {int_field("rows"), int_field("cols"), int_field("turns")};
  if (field("phi_choices") != "-") {
    for (auto part : detail::split(field("phi_choices"), ',')) {
      auto v = detail::parse_double(part);
      if (!v) throw ParseError(1, "bad phi_choices");
      s.phi_choices.push_back(*v);
    }
  }
  const auto expected = detail::parse_int<std::size_t>(field("entries"));
  if (!expected) throw ParseError(1, "bad entry count");

  SparseQTable table = [&] {
    try {
      return SparseQTable(s);
    } catch (const InvalidInput& e) {
      throw ParseError(1, e.what());
    }
  }();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const auto tok = detail::split(text, ' ');
    if (tok.size() != 7) throw ParseError(line_no, "expected 7 fields");
    JointHistoryKey key;
    auto rec_seat = env::parse_seat(tok[0]);
    auto turn = detail::parse_int<int>(tok[1]);
    auto obj = env::parse_objective(tok[2]);
    auto action = env::parse_action(tok[5]);
    auto value = detail::parse_double(tok[6]);
    if (!rec_seat || !turn || !obj || !action || !value) throw ParseError(line_no, "malformed record");
    key.seat = *rec_seat;
    key.turn = *turn;
    key.own_objective = *obj;
    key.ego_cols = parse_cols(tok[3], line_no);
    key.opp_cols = parse_cols(tok[4], line_no);
    if (!is_feasible_history(key.ego_cols, s.grid.cols) ||
        !is_feasible_history(key.opp_cols, s.grid.cols)) {
      throw ParseError(line_no, "infeasible column history");
    }
    bool duplicate = false;
    try {
      duplicate = table.contains(key, *action);
      if (!duplicate) table.set_q(key, *action, *value);
    } catch (const InvalidInput& e) {
      throw ParseError(line_no, e.what());
    }
    if (duplicate) throw ParseError(line_no, "duplicate entry");
  }
  if (table.entry_count() != *expected) {
    throw ParseError(line_no, "header declares " + std::to_string(*expected) + " entries, found " +
                                  std::to_string(table.entry_count()));
  }
  return table;
}

SparseQTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_table(in);
}

}  // namespace tecorridor::qlearn
