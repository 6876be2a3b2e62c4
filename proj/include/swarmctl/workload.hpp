#pragma once
// Mission-workload estimation from the event log.
//
// Two estimators share one four-level scale:
//   windowed   - count commands and alarms in the last W ticks;
//   continuous - sum of fixed per-event weights decayed with a half-life,
//                then bucketed by three ascending thresholds.

#include "swarmctl/core.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace swarmctl {

enum class EventKind { Command, Alarm };

struct MissionEvent {
  Tick tick = 0;
  EventKind kind = EventKind::Command;
  std::int32_t subject = 0;  // vehicle id for commands, alarm id for alarms
};

struct WorkloadParams {
  Tick window = 180;
  double command_weight = 1.0;
  double alarm_weight = 2.5;
  double half_life = 120.0;
  std::array<double, 3> thresholds{0.5, 2.0, 4.5};

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
  double weight(EventKind kind) const {
    return kind == EventKind::Alarm ? alarm_weight : command_weight;
  }
};

enum class WorkloadMethod { Windowed, Continuous };

struct WorkloadState {
  double continuous_level = 0.0;
  int discrete_level = 1;
  WorkloadMethod method = WorkloadMethod::Windowed;
};

/// Level from counts in (now - window, now]: two or more alarms -> 4, one
/// alarm -> 3, otherwise any command -> 2, otherwise 1.
WorkloadState classify_windowed(std::span<const MissionEvent> log, Tick now,
                                const WorkloadParams& params);

/// Brute-force discounted sum over every event with tick <= now.
WorkloadState level_continuous(std::span<const MissionEvent> log, Tick now,
                               const WorkloadParams& params);

int level_from_thresholds(double continuous, const WorkloadParams& params);

/// Running form of level_continuous: one accumulator rescaled on each append
/// and query. Events must be appended in tick order.
class ContinuousWorkload {
 public:
  explicit ContinuousWorkload(WorkloadParams params);

  void append(const MissionEvent& event);
  double level_at(Tick now) const;
  WorkloadState state_at(Tick now) const;
  const WorkloadParams& params() const { return params_; }

 private:
  WorkloadParams params_;
  double sum_ = 0.0;
  Tick reference_ = 0;
};

struct AgreementCase {
  std::string scenario;
  int windowed = 1;
  int continuous = 1;
  bool agree = false;
};

struct AgreementReport {
  std::vector<AgreementCase> cases;
  bool all_agree = false;
};

/// Runs both estimators on the canonical single-burst scenarios (nothing,
/// one fresh command, one fresh alarm, two fresh alarms). Validates params.
AgreementReport calibrate_agreement(const WorkloadParams& params);

}  // namespace swarmctl
