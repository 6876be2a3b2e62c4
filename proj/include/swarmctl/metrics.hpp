#pragma once
// Coverage and workload metrics, computed from a mission log alone.
//
// A cell is visited at tick t when its centre lies inside the sensor
// footprint of an airborne vehicle's position logged for t. Its unattended
// intervals are the maximal runs of ticks in [1, T] without a visit,
// including the run before the first and after the last visit.
//
// The mean revisit interval is time-weighted: each unattended tick reports
// the length of the run it sits in, so a cell's mean is sum(L^2) / sum(L).
// A vehicle dithering over a cell produces many one-tick gaps; weighting per
// gap would count those as revisits. The per-gap mean is kept alongside.

#include "swarmctl/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace swarmctl {

struct CellCoverage {
  Cell cell;
  int visits = 0;              // ticks with the cell under a footprint
  int intervals = 0;
  double mean_interval = 0.0;  // time-weighted; 0 when never unattended
  double mean_gap = 0.0;       // plain mean over runs
  Tick max_interval = 0;
};

struct TraceRow {
  Tick start = 0;  // inclusive
  Tick end = 0;    // inclusive
  double mean_value = 0.0;
  double max_value = 0.0;
  int max_level = 1;
  int max_windowed = 1;
  int max_continuous = 1;
  int alarms = 0;
  int commands = 0;
};

struct CoverageMetrics {
  Tick ticks = 0;
  Tick target = 0;
  std::vector<CellCoverage> cells;  // cells never blocked during the mission
  double mean_interval = 0.0;       // mean of per-cell means
  double mean_gap = 0.0;            // mean of per-cell per-gap means
  Tick max_interval = 0;
  double within_target = 0.0;       // fraction of cells whose max interval <= target
  int alarms = 0;
  int commands = 0;
  std::vector<TraceRow> trace;
};

/// Throws std::invalid_argument on a log without an Init record.
CoverageMetrics compute_metrics(const std::vector<std::string>& log);

void write_metrics_csv(std::ostream& out, const CoverageMetrics& m);
void write_trace_csv(std::ostream& out, const CoverageMetrics& m);
std::string summary(const CoverageMetrics& m);

}  // namespace swarmctl
