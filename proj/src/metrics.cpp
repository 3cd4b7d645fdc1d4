#include "tecorridor/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "tecorridor/errors.hpp"

namespace tecorridor::metrics {

namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

template <class Field>
std::optional<double> step_mean(std::span<const EpisodeRecord> records, env::Seat seat,
                                Field field) {
  double sum = 0.0;
  long n = 0;
  for (const auto& r : records) {
    for (double v : r.seat(seat).*field) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

}  // namespace

SuccessRates success_rates(std::span<const EpisodeRecord> records, env::Seat seat) {
  if (records.empty()) throw InvalidInput("success_rates: empty episode log");
  long comp = 0, comp_win = 0, coll = 0, coll_win = 0, pass = 0, pass_win = 0, meet = 0, meet_win = 0;
  for (const auto& r : records) {
    const SeatTrace& t = r.seat(seat);
    if (r.collaborative()) {
      ++coll;
      coll_win += t.success;
    } else {
      ++comp;
      comp_win += t.success;
    }
    if (t.objective == env::Objective::Pass) {
      ++pass;
      pass_win += t.success;
    } else {
      ++meet;
      meet_win += t.success;
    }
  }
  return {ratio(comp_win, comp), ratio(coll_win, coll), ratio(pass_win, pass), ratio(meet_win, meet)};
}

double cps(double srp1, double srm1, double srp2, double srm2, double bsrp, double bsrm) {
  return 0.5 * ((1.0 - bsrp) * srp1 + (1.0 - bsrm) * srm1) +
         0.5 * ((1.0 - bsrp) * srp2 + (1.0 - bsrm) * srm2);
}

std::optional<double> cps(const SuccessRates& p1, const SuccessRates& p2) {
  if (!p1.srp || !p1.srm || !p2.srp || !p2.srm) return std::nullopt;
  return cps(*p1.srp, *p1.srm, *p2.srp, *p2.srm);
}

std::optional<double> averaged_te(std::span<const EpisodeRecord> records, env::Seat seat) {
  return step_mean(records, seat, &SeatTrace::te);
}

std::optional<double> averaged_h_plus(std::span<const EpisodeRecord> records, env::Seat seat) {
  return step_mean(records, seat, &SeatTrace::h_plus);
}

std::optional<double> averaged_h_minus(std::span<const EpisodeRecord> records, env::Seat seat) {
  return step_mean(records, seat, &SeatTrace::h_minus);
}

std::size_t EntropyHeatmap::visited_cells() const {
  std::size_t n = 0;
  for (long v : visits) n += v > 0;
  return n;
}

EntropyHeatmap entropy_heatmap(std::span<const EpisodeRecord> records, env::Seat seat,
                               const env::GridConfig& grid) {
  EntropyHeatmap map;
  map.turns = grid.turns;
  map.cols = grid.cols;
  const auto cells = static_cast<std::size_t>(grid.turns * grid.cols);
  std::vector<double> plus(cells, 0.0), minus(cells, 0.0);
  map.visits.assign(cells, 0);
  for (const auto& r : records) {
    const SeatTrace& t = r.seat(seat);
    for (std::size_t step = 0; step < t.h_plus.size(); ++step) {
      const auto idx = map.index(static_cast<int>(step), t.cols.at(step));
      plus[idx] += t.h_plus[step];
      minus[idx] += t.h_minus.at(step);
      ++map.visits[idx];
    }
  }
  map.h_plus.resize(cells);
  map.h_minus.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    if (map.visits[i] == 0) continue;
    map.h_plus[i] = plus[i] / static_cast<double>(map.visits[i]);
    map.h_minus[i] = minus[i] / static_cast<double>(map.visits[i]);
  }
  return map;
}

nlohmann::json to_json(const EntropyHeatmap& heatmap) {
  auto matrix = [&](const std::vector<std::optional<double>>& cells) {
    nlohmann::json rows = nlohmann::json::array();
    for (int t = 0; t < heatmap.turns; ++t) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < heatmap.cols; ++c) {
        const auto& v = cells[heatmap.index(t, c)];
        row.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json visits = nlohmann::json::array();
  for (int t = 0; t < heatmap.turns; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < heatmap.cols; ++c) row.push_back(heatmap.visits[heatmap.index(t, c)]);
    visits.push_back(std::move(row));
  }
  return {{"rows", "turn"},           {"columns", "ego_column"},     {"units", "bits"},
          {"h_plus", matrix(heatmap.h_plus)}, {"h_minus", matrix(heatmap.h_minus)},
          {"visits", std::move(visits)}};
}

SeedMetrics seed_metrics(std::span<const EpisodeRecord> records, std::uint64_t seed,
                         const std::array<std::string, 2>& labels) {
  SeedMetrics m;
  m.seed = seed;
  m.episodes = static_cast<long>(records.size());
  for (const auto& r : records) (r.collaborative() ? m.collaborative : m.competitive)++;
  for (env::Seat s : {env::Seat::P1, env::Seat::P2}) {
    AgentMetrics& a = m.agents[static_cast<std::size_t>(env::index_of(s))];
    a.label = labels[static_cast<std::size_t>(env::index_of(s))];
    a.rates = success_rates(records, s);
    a.avg_te = averaged_te(records, s);
    a.avg_h_plus = averaged_h_plus(records, s);
    a.avg_h_minus = averaged_h_minus(records, s);
  }
  m.cps = cps(m.agents[0].rates, m.agents[1].rates);
  return m;
}

Stat summarize(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  long n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  Stat s;
  if (n == 0) return s;
  const double mean = sum / static_cast<double>(n);
  s.mean = mean;
  if (n > 1) {
    double ss = 0.0;
    for (const auto& v : values) {
      if (v) ss += (*v - mean) * (*v - mean);
    }
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

MetricsReport aggregate(std::string experiment, std::vector<SeedMetrics> seeds) {
  MetricsReport report;
  report.experiment = std::move(experiment);
  report.seeds = std::move(seeds);
  auto collect = [&](auto getter) {
    std::vector<std::optional<double>> values;
    for (const auto& s : report.seeds) values.push_back(getter(s));
    return summarize(values);
  };
  for (std::size_t i = 0; i < 2; ++i) {
    AgentSummary& a = report.agents[i];
    if (!report.seeds.empty()) a.label = report.seeds.front().agents[i].label;
    a.srcp = collect([i](const SeedMetrics& s) { return s.agents[i].rates.srcp; });
    a.srcl = collect([i](const SeedMetrics& s) { return s.agents[i].rates.srcl; });
    a.srp = collect([i](const SeedMetrics& s) { return s.agents[i].rates.srp; });
    a.srm = collect([i](const SeedMetrics& s) { return s.agents[i].rates.srm; });
    a.avg_te = collect([i](const SeedMetrics& s) { return s.agents[i].avg_te; });
    a.avg_h_plus = collect([i](const SeedMetrics& s) { return s.agents[i].avg_h_plus; });
    a.avg_h_minus = collect([i](const SeedMetrics& s) { return s.agents[i].avg_h_minus; });
  }
  report.cps = collect([](const SeedMetrics& s) { return s.cps; });
  return report;
}

void write_csv_header(std::ostream& out) {
  out << "experiment,seed,agent,SRCP,SRCL,SRP,SRM,CPS,avg_TE_bits,avg_H_plus,avg_H_minus\n";
}

void write_csv_rows(std::ostream& out, const MetricsReport& report) {
  static constexpr std::array<std::string_view, 2> kSeatNames = {"P1", "P2"};
  for (const auto& s : report.seeds) {
    for (std::size_t i = 0; i < 2; ++i) {
      const AgentMetrics& a = s.agents[i];
      out << report.experiment << ',' << s.seed << ',' << kSeatNames[i] << ':' << a.label << ','
          << cell(a.rates.srcp) << ',' << cell(a.rates.srcl) << ',' << cell(a.rates.srp) << ','
          << cell(a.rates.srm) << ',' << cell(s.cps) << ',' << cell(a.avg_te) << ','
          << cell(a.avg_h_plus) << ',' << cell(a.avg_h_minus) << '\n';
    }
  }
  for (bool want_mean : {true, false}) {
    auto pick = [&](const Stat& st) { return want_mean ? st.mean : st.stddev; };
    for (std::size_t i = 0; i < 2; ++i) {
      const AgentSummary& a = report.agents[i];
      out << report.experiment << ',' << (want_mean ? "mean" : "std") << ',' << kSeatNames[i]
          << ':' << a.label << ',' << cell(pick(a.srcp)) << ',' << cell(pick(a.srcl)) << ','
          << cell(pick(a.srp)) << ',' << cell(pick(a.srm)) << ',' << cell(pick(report.cps)) << ','
          << cell(pick(a.avg_te)) << ',' << cell(pick(a.avg_h_plus)) << ','
          << cell(pick(a.avg_h_minus)) << '\n';
    }
  }
}

void print_report(std::ostream& out, const MetricsReport& report) {
  auto pct = [](const Stat& s) {
    char buf[48];
    if (!s.mean) return std::string("      -        ");
    if (!s.stddev) {
      std::snprintf(buf, sizeof(buf), "%6.2f%%        ", 100.0 * *s.mean);
    } else {
      std::snprintf(buf, sizeof(buf), "%6.2f%% ±%5.2f", 100.0 * *s.mean, 100.0 * *s.stddev);
    }
    return std::string(buf);
  };
  auto num = [](const Stat& s) {
    char buf[32];
    if (!s.mean) return std::string("   -  ");
    std::snprintf(buf, sizeof(buf), "%6.3f", *s.mean);
    return std::string(buf);
  };
  out << report.experiment << " (" << report.seeds.size() << " seeds)\n";
  out << "  agent          SRCP             SRCL             SRP              SRM              TE     "
         "H+     H-\n";
  for (std::size_t i = 0; i < 2; ++i) {
    const AgentSummary& a = report.agents[i];
    char label[32];
    std::snprintf(label, sizeof(label), "  P%zu %-10s", i + 1, a.label.c_str());
    out << label << pct(a.srcp) << "  " << pct(a.srcl) << "  " << pct(a.srp) << "  " << pct(a.srm)
        << "  " << num(a.avg_te) << ' ' << num(a.avg_h_plus) << ' ' << num(a.avg_h_minus) << '\n';
  }
  out << "  CPS " << num(report.cps) << '\n';
}

}  // namespace tecorridor::metrics
