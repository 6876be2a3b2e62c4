#include "swarmctl/metrics.hpp"

#include "swarmctl/field.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace swarmctl {

using json = nlohmann::json;

namespace {

struct CellState {
  Tick last_visit = 0;  // 0: mission start
  double sum = 0;
  double sum_sq = 0;
  int count = 0;
  Tick max = 0;
  int visits = 0;

  void gap(Tick len) {
    if (len <= 0) return;
    sum += static_cast<double>(len);
    sum_sq += static_cast<double>(len) * static_cast<double>(len);
    ++count;
    max = std::max(max, len);
  }
};

}  // namespace

CoverageMetrics compute_metrics(const std::vector<std::string>& log) {
  if (log.empty()) throw std::invalid_argument("empty log");
  const json init = json::parse(log.front());
  if (init.value("category", "") != "Init") throw std::invalid_argument("log does not start with an Init record");
  const json& ib = init["body"];
  const int width = ib["map"]["width"].get<int>();
  const int height = ib["map"]["height"].get<int>();
  const double cell_size = ib["map"]["cell_size"].get<double>();
  const PheromoneField geometry(width, height, cell_size);  // footprints only

  std::map<int, double> radius;
  for (const auto& v : ib["vehicles"]) radius[v["id"].get<int>()] = v["sensor_radius"].get<double>();
  std::vector<char> ever_blocked(geometry.cell_count(), 0);
  for (const auto& i : ib["blocked"]) ever_blocked[i.get<std::size_t>()] = 1;

  CoverageMetrics m;
  m.target = ib["metrics"]["revisit_target"].get<Tick>();
  const Tick interval = ib["metrics"]["trace_interval"].get<Tick>();
  std::vector<CellState> cells(geometry.cell_count());
  std::vector<Tick> stamp(geometry.cell_count(), -1);

  TraceRow row;
  int row_ticks = 0;
  auto close_row = [&] {
    if (row_ticks == 0) return;
    row.mean_value /= row_ticks;
    m.trace.push_back(row);
    row = TraceRow{};
    row_ticks = 0;
  };

  for (std::size_t li = 1; li < log.size(); ++li) {
    json rec;
    try {
      rec = json::parse(log[li]);
    } catch (const json::parse_error&) {
      break;  // truncated tail
    }
    const std::string cat = rec.value("category", "");
    const Tick t = rec.value("tick", Tick{0});
    const json& body = rec["body"];
    if (cat == "FieldChange") {
      for (const auto& i : body["blocked"]) ever_blocked[i.get<std::size_t>()] = 1;
      continue;
    }
    if (cat == "MissionEvent") {
      if (body["kind"] == "Alarm") {
        ++m.alarms;
        ++row.alarms;
      } else {
        ++m.commands;
        ++row.commands;
      }
      continue;
    }
    if (cat != "Tick") continue;

    m.ticks = t;
    for (const auto& v : body["vehicles"]) {
      if (v[4].get<int>() == 0) continue;  // grounded
      const Vec2 pos{v[1].get<double>(), v[2].get<double>()};
      for (Cell c : footprint_cells(geometry, pos, radius.at(v[0].get<int>()))) {
        const std::size_t i = geometry.index(c);
        if (stamp[i] == t) continue;
        stamp[i] = t;
        CellState& s = cells[i];
        s.gap(t - s.last_visit - 1);
        s.last_visit = t;
        ++s.visits;
      }
    }

    const json& w = body["workload"];
    if (row_ticks == 0) row.start = t;
    row.end = t;
    ++row_ticks;
    const double value = w["value"].get<double>();
    row.mean_value += value;
    row.max_value = std::max(row.max_value, value);
    row.max_level = std::max(row.max_level, w["level"].get<int>());
    row.max_windowed = std::max(row.max_windowed, w["windowed"].get<int>());
    row.max_continuous = std::max(row.max_continuous, w["continuous"].get<int>());
    if (t % interval == 0) close_row();
  }
  close_row();

  double sum_means = 0, sum_gaps = 0;
  int within = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (ever_blocked[i]) continue;
    CellState& s = cells[i];
    s.gap(m.ticks - s.last_visit);  // trailing run
    CellCoverage c;
    c.cell = geometry.cell_of(i);
    c.visits = s.visits;
    c.intervals = s.count;
    c.mean_interval = s.count ? s.sum_sq / s.sum : 0.0;
    c.mean_gap = s.count ? s.sum / s.count : 0.0;
    c.max_interval = s.max;
    sum_means += c.mean_interval;
    sum_gaps += c.mean_gap;
    m.max_interval = std::max(m.max_interval, c.max_interval);
    if (c.max_interval <= m.target) ++within;
    m.cells.push_back(c);
  }
  if (!m.cells.empty()) {
    m.mean_interval = sum_means / static_cast<double>(m.cells.size());
    m.mean_gap = sum_gaps / static_cast<double>(m.cells.size());
    m.within_target = static_cast<double>(within) / static_cast<double>(m.cells.size());
  }
  return m;
}

void write_metrics_csv(std::ostream& out, const CoverageMetrics& m) {
  out << "row,col,visits,intervals,mean_interval,mean_gap,max_interval,within_target\n";
  for (const auto& c : m.cells) {
    out << c.cell.row << ',' << c.cell.col << ',' << c.visits << ',' << c.intervals << ',' << c.mean_interval << ','
        << c.mean_gap << ',' << c.max_interval << ',' << (c.max_interval <= m.target ? 1 : 0) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const CoverageMetrics& m) {
  out << "start,end,mean_value,max_value,max_level,max_windowed,max_continuous,alarms,commands\n";
  for (const auto& r : m.trace) {
    out << r.start << ',' << r.end << ',' << r.mean_value << ',' << r.max_value << ',' << r.max_level << ','
        << r.max_windowed << ',' << r.max_continuous << ',' << r.alarms << ',' << r.commands << '\n';
  }
}

std::string summary(const CoverageMetrics& m) {
  std::ostringstream os;
  os << "ticks " << m.ticks << ", cells " << m.cells.size() << ", mean revisit interval " << m.mean_interval
     << " (per-gap mean " << m.mean_gap << "), max " << m.max_interval << ", within " << m.target << ": " << m.within_target * 100.0 << "%, alarms "
     << m.alarms << ", commands " << m.commands;
  return os.str();
}

}  // namespace swarmctl
