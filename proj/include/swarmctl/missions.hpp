#pragma once
// Authority sharing: tasks split along Observe-Orient-Decide-Act, a set of
// operating modes per (task, stage) cell, exactly one active mode per cell,
// and a per-cell policy deciding who may change the active mode.
// Beacons (operator-placed named map points) live here as well.

#include "swarmctl/core.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace swarmctl {

enum class OodaStage { Observe, Orient, Decide, Act };
inline constexpr std::array<OodaStage, 4> kOodaStages{OodaStage::Observe, OodaStage::Orient,
                                                      OodaStage::Decide, OodaStage::Act};

enum class ModeAuthority { OperatorOnly, SystemOnly, SystemWithVeto };

/// Who may change the active mode of a cell.
enum class SelectionPolicy { OperatorSelects, SystemSelects, EitherWithOperatorPriority };

enum class Requester { Operator, System };

std::string_view to_string(OodaStage stage);
std::string_view to_string(ModeAuthority authority);
std::string_view to_string(SelectionPolicy policy);
std::string_view to_string(Requester requester);
OodaStage parse_stage(std::string_view text);
ModeAuthority parse_authority(std::string_view text);
SelectionPolicy parse_policy(std::string_view text);

struct OperatingMode {
  std::string id;
  OodaStage stage = OodaStage::Observe;
  ModeAuthority authority = ModeAuthority::SystemOnly;
  std::string description;
};

using CellKey = std::pair<std::string, OodaStage>;

struct ModeCell {
  std::vector<OperatingMode> modes;
  SelectionPolicy policy = SelectionPolicy::EitherWithOperatorPriority;
  bool operator_pinned = false;  // operator has chosen; system requests become proposals
};

struct ModeChange {
  Tick tick = 0;
  std::string task;
  OodaStage stage = OodaStage::Observe;
  std::string from;
  std::string to;
  Requester requester = Requester::Operator;
  bool applied = false;  // false: recorded as a proposal
};

struct Violation {
  std::string task;
  OodaStage stage = OodaStage::Observe;
  std::string reason;
};

enum class ActivationOutcome { Unchanged, Applied, Proposed };

class ModeTable {
 public:
  /// Adds a task with one cell per stage. Every stage must list at least one
  /// mode; the first mode of each stage starts active.
  void add_task(const std::string& task,
                const std::map<OodaStage, std::vector<OperatingMode>>& modes,
                const std::map<OodaStage, SelectionPolicy>& policies = {});

  /// Throws std::invalid_argument on unknown cell or mode (no change made).
  ActivationOutcome activate_mode(const std::string& task, OodaStage stage,
                                  const std::string& mode_id, Requester requester, Tick tick = 0);

  /// Whether `requester` may apply a change to the cell right now.
  bool may_select(const CellKey& key, Requester requester) const;

  const std::vector<std::string>& tasks() const { return tasks_; }
  const std::map<CellKey, ModeCell>& cells() const { return cells_; }
  const std::map<CellKey, std::string>& active() const { return active_; }
  std::optional<std::string> active_mode(const std::string& task, OodaStage stage) const;
  const std::vector<ModeChange>& change_log() const { return log_; }

  /// Direct access for constructing deliberately inconsistent tables in tests
  /// and for loading scenario files.
  std::map<CellKey, std::string>& mutable_active() { return active_; }

 private:
  std::vector<std::string> tasks_;
  std::map<CellKey, ModeCell> cells_;
  std::map<CellKey, std::string> active_;
  std::vector<ModeChange> log_;
};

/// Empty iff every (task, stage) cell has an active mode drawn from its own list.
std::vector<Violation> validate_table(const ModeTable& table);

/// Three tasks (Patrol, Pursuit, DisplayConfig) over the four stages. Patrol
/// has 1/2/2/3 modes per stage.
ModeTable default_mode_table();

struct Beacon {
  BeaconId id;
  Vec2 pos;
  std::string label;
};

class BeaconRegistry {
 public:
  explicit BeaconRegistry(Vec2 extent = {0, 0}) : extent_(extent) {}

  /// Labels are case-insensitive referents and must be unique. Throws
  /// std::out_of_range outside the map, std::invalid_argument on duplicates.
  const Beacon& place_beacon(Vec2 pos, const std::string& label);

  const Beacon* find(BeaconId id) const;
  const Beacon* find(std::string_view label) const;
  const std::vector<Beacon>& all() const { return beacons_; }

 private:
  Vec2 extent_;
  std::vector<Beacon> beacons_;
};

std::string lowercase(std::string_view text);

}  // namespace swarmctl
