#include "swarmctl/workload.hpp"

#include <cmath>
#include <stdexcept>

namespace swarmctl {

void WorkloadParams::validate() const {
  if (window <= 0) throw std::invalid_argument("workload window must be positive");
  if (!(command_weight > 0.0) || !(alarm_weight > 0.0)) {
    throw std::invalid_argument("workload weights must be positive");
  }
  if (!(half_life > 0.0)) throw std::invalid_argument("workload half_life must be positive");
  if (!(thresholds[0] < thresholds[1] && thresholds[1] < thresholds[2])) {
    throw std::invalid_argument("workload thresholds must be strictly ascending");
  }
}

WorkloadState classify_windowed(std::span<const MissionEvent> log, Tick now,
                                const WorkloadParams& params) {
  int alarms = 0;
  int commands = 0;
  for (const MissionEvent& e : log) {
    if (e.tick <= now - params.window || e.tick > now) continue;
    (e.kind == EventKind::Alarm ? alarms : commands) += 1;
  }
  WorkloadState s;
  s.method = WorkloadMethod::Windowed;
  s.continuous_level = 0.0;
  if (alarms >= 2) {
    s.discrete_level = 4;
  } else if (alarms == 1) {
    s.discrete_level = 3;
  } else if (commands >= 1) {
    s.discrete_level = 2;
  } else {
    s.discrete_level = 1;
  }
  return s;
}

int level_from_thresholds(double continuous, const WorkloadParams& params) {
  int level = 1;
  for (double theta : params.thresholds) {
    if (continuous >= theta) ++level;
  }
  return level;
}

WorkloadState level_continuous(std::span<const MissionEvent> log, Tick now,
                               const WorkloadParams& params) {
  double total = 0.0;
  for (const MissionEvent& e : log) {
    if (e.tick > now) continue;
    total += params.weight(e.kind) * std::exp2(-static_cast<double>(now - e.tick) / params.half_life);
  }
  return {total, level_from_thresholds(total, params), WorkloadMethod::Continuous};
}

ContinuousWorkload::ContinuousWorkload(WorkloadParams params) : params_(params) {
  params_.validate();
}

void ContinuousWorkload::append(const MissionEvent& event) {
  if (event.tick < reference_) throw std::invalid_argument("events must be appended in tick order");
  sum_ = sum_ * std::exp2(-static_cast<double>(event.tick - reference_) / params_.half_life) +
         params_.weight(event.kind);
  reference_ = event.tick;
}

double ContinuousWorkload::level_at(Tick now) const {
  if (now < reference_) throw std::invalid_argument("query precedes last appended event");
  return sum_ * std::exp2(-static_cast<double>(now - reference_) / params_.half_life);
}

WorkloadState ContinuousWorkload::state_at(Tick now) const {
  const double level = level_at(now);
  return {level, level_from_thresholds(level, params_), WorkloadMethod::Continuous};
}

AgreementReport calibrate_agreement(const WorkloadParams& params) {
  params.validate();
  const Tick now = 1000;
  struct Scenario {
    const char* name;
    std::vector<MissionEvent> events;
  };
  const std::vector<Scenario> scenarios{
      {"nothing", {}},
      {"one fresh command", {{now, EventKind::Command, 1}}},
      {"one fresh alarm", {{now, EventKind::Alarm, 1}}},
      {"two fresh alarms", {{now, EventKind::Alarm, 1}, {now, EventKind::Alarm, 2}}},
  };
  AgreementReport report;
  report.all_agree = true;
  for (const Scenario& s : scenarios) {
    AgreementCase c;
    c.scenario = s.name;
    c.windowed = classify_windowed(s.events, now, params).discrete_level;
    c.continuous = level_continuous(s.events, now, params).discrete_level;
    c.agree = c.windowed == c.continuous;
    report.all_agree = report.all_agree && c.agree;
    report.cases.push_back(std::move(c));
  }
  return report;
}

}  // namespace swarmctl
