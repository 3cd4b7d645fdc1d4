#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tecorridor/episode.hpp"

/// Success rates, collective performance, and information aggregates over
/// episode logs. Rates whose denominator is empty are std::nullopt.
namespace tecorridor::metrics {

inline constexpr double kBaselineSuccessPass = 0.8;
inline constexpr double kBaselineSuccessMeet = 0.2;

struct SuccessRates {
  std::optional<double> srcp;  ///< competitive episodes (objectives differ)
  std::optional<double> srcl;  ///< collaborative episodes (objectives equal)
  std::optional<double> srp;   ///< episodes where this seat had to pass
  std::optional<double> srm;   ///< episodes where this seat had to meet
};

/// Throws InvalidInput on an empty log.
SuccessRates success_rates(std::span<const EpisodeRecord> records, env::Seat seat);

/// Collective Performance Score:
///   1/2 ((1-bsrp) srp1 + (1-bsrm) srm1) + 1/2 ((1-bsrp) srp2 + (1-bsrm) srm2)
double cps(double srp1, double srm1, double srp2, double srm2,
           double bsrp = kBaselineSuccessPass, double bsrm = kBaselineSuccessMeet);
std::optional<double> cps(const SuccessRates& p1, const SuccessRates& p2);

/// Means over every recorded step of the seat (not per-episode means first).
/// nullopt when the seat carries no measures.
std::optional<double> averaged_te(std::span<const EpisodeRecord> records, env::Seat seat);
std::optional<double> averaged_h_plus(std::span<const EpisodeRecord> records, env::Seat seat);
std::optional<double> averaged_h_minus(std::span<const EpisodeRecord> records, env::Seat seat);

/// Mean entropies indexed by (turn, ego column at that turn).
struct EntropyHeatmap {
  int turns = 0;
  int cols = 0;
  std::vector<std::optional<double>> h_plus;
  std::vector<std::optional<double>> h_minus;
  std::vector<long> visits;

  std::size_t index(int turn, int col) const { return static_cast<std::size_t>(turn * cols + col); }
  std::optional<double> h_plus_at(int turn, int col) const { return h_plus[index(turn, col)]; }
  std::optional<double> h_minus_at(int turn, int col) const { return h_minus[index(turn, col)]; }
  std::size_t visited_cells() const;
};

EntropyHeatmap entropy_heatmap(std::span<const EpisodeRecord> records, env::Seat seat,
                               const env::GridConfig& grid);
nlohmann::json to_json(const EntropyHeatmap& heatmap);

struct AgentMetrics {
  std::string label;
  SuccessRates rates;
  std::optional<double> avg_te;
  std::optional<double> avg_h_plus;
  std::optional<double> avg_h_minus;
};

/// Metrics for one seed's evaluation run.
struct SeedMetrics {
  std::uint64_t seed = 0;
  std::array<AgentMetrics, 2> agents;
  std::optional<double> cps;
  long episodes = 0;
  long collaborative = 0;
  long competitive = 0;
};

SeedMetrics seed_metrics(std::span<const EpisodeRecord> records, std::uint64_t seed,
                         const std::array<std::string, 2>& labels);

/// Across-seed mean and sample standard deviation (n - 1); absent values skipped.
struct Stat {
  std::optional<double> mean;
  std::optional<double> stddev;
};

Stat summarize(std::span<const std::optional<double>> values);

struct AgentSummary {
  std::string label;
  Stat srcp, srcl, srp, srm, avg_te, avg_h_plus, avg_h_minus;
};

struct MetricsReport {
  std::string experiment;
  std::vector<SeedMetrics> seeds;
  std::array<AgentSummary, 2> agents;
  Stat cps;

  const AgentSummary& agent(env::Seat s) const { return agents[static_cast<std::size_t>(env::index_of(s))]; }
};

MetricsReport aggregate(std::string experiment, std::vector<SeedMetrics> seeds);

/// experiment,seed,agent,SRCP,SRCL,SRP,SRM,CPS,avg_TE_bits,avg_H_plus,avg_H_minus
void write_csv_header(std::ostream& out);
/// One row per seed and agent, then "mean" and "std" rows. Absent values are empty cells.
void write_csv_rows(std::ostream& out, const MetricsReport& report);

/// Human-readable table for terminals.
void print_report(std::ostream& out, const MetricsReport& report);

}  // namespace tecorridor::metrics
