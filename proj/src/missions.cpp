#include "swarmctl/missions.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace swarmctl {

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view to_string(OodaStage stage) {
  switch (stage) {
    case OodaStage::Observe: return "observe";
    case OodaStage::Orient: return "orient";
    case OodaStage::Decide: return "decide";
    case OodaStage::Act: return "act";
  }
  return "?";
}

std::string_view to_string(ModeAuthority authority) {
  switch (authority) {
    case ModeAuthority::OperatorOnly: return "operator_only";
    case ModeAuthority::SystemOnly: return "system_only";
    case ModeAuthority::SystemWithVeto: return "system_with_veto";
  }
  return "?";
}

std::string_view to_string(SelectionPolicy policy) {
  switch (policy) {
    case SelectionPolicy::OperatorSelects: return "operator_selects";
    case SelectionPolicy::SystemSelects: return "system_selects";
    case SelectionPolicy::EitherWithOperatorPriority: return "either_operator_priority";
  }
  return "?";
}

std::string_view to_string(Requester requester) {
  return requester == Requester::Operator ? "operator" : "system";
}

OodaStage parse_stage(std::string_view text) {
  const std::string t = lowercase(text);
  for (OodaStage s : kOodaStages) {
    if (t == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown OODA stage '" + t + "'");
}

ModeAuthority parse_authority(std::string_view text) {
  for (auto a : {ModeAuthority::OperatorOnly, ModeAuthority::SystemOnly, ModeAuthority::SystemWithVeto}) {
    if (text == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown mode authority '" + std::string(text) + "'");
}

SelectionPolicy parse_policy(std::string_view text) {
  for (auto p : {SelectionPolicy::OperatorSelects, SelectionPolicy::SystemSelects,
                 SelectionPolicy::EitherWithOperatorPriority}) {
    if (text == to_string(p)) return p;
  }
  throw std::invalid_argument("unknown selection policy '" + std::string(text) + "'");
}

void ModeTable::add_task(const std::string& task,
                         const std::map<OodaStage, std::vector<OperatingMode>>& modes,
                         const std::map<OodaStage, SelectionPolicy>& policies) {
  if (std::find(tasks_.begin(), tasks_.end(), task) != tasks_.end()) {
    throw std::invalid_argument("duplicate task '" + task + "'");
  }
  for (OodaStage stage : kOodaStages) {
    auto it = modes.find(stage);
    if (it == modes.end() || it->second.empty()) {
      throw std::invalid_argument("task '" + task + "' has no mode for stage " +
                                  std::string(to_string(stage)));
    }
    for (const auto& m : it->second) {
      if (m.stage != stage) throw std::invalid_argument("mode '" + m.id + "' listed under the wrong stage");
    }
  }
  tasks_.push_back(task);
  for (OodaStage stage : kOodaStages) {
    ModeCell cell;
    cell.modes = modes.at(stage);
    if (auto p = policies.find(stage); p != policies.end()) cell.policy = p->second;
    active_[{task, stage}] = cell.modes.front().id;
    cells_[{task, stage}] = std::move(cell);
  }
}

bool ModeTable::may_select(const CellKey& key, Requester requester) const {
  const ModeCell& cell = cells_.at(key);
  switch (cell.policy) {
    case SelectionPolicy::OperatorSelects:
      return requester == Requester::Operator;
    case SelectionPolicy::SystemSelects:
      return requester == Requester::System;
    case SelectionPolicy::EitherWithOperatorPriority:
      return requester == Requester::Operator || !cell.operator_pinned;
  }
  return false;
}

ActivationOutcome ModeTable::activate_mode(const std::string& task, OodaStage stage,
                                           const std::string& mode_id, Requester requester,
                                           Tick tick) {
  const CellKey key{task, stage};
  auto cell_it = cells_.find(key);
  if (cell_it == cells_.end()) {
    throw std::invalid_argument("unknown cell (" + task + ", " + std::string(to_string(stage)) + ")");
  }
  const auto& modes = cell_it->second.modes;
  if (std::none_of(modes.begin(), modes.end(), [&](const OperatingMode& m) { return m.id == mode_id; })) {
    throw std::invalid_argument("mode '" + mode_id + "' not available for (" + task + ", " +
                                std::string(to_string(stage)) + ")");
  }
  const std::string current = active_[key];
  if (current == mode_id) return ActivationOutcome::Unchanged;

  ModeChange change{tick, task, stage, current, mode_id, requester, false};
  if (!may_select(key, requester)) {
    log_.push_back(change);
    return ActivationOutcome::Proposed;
  }
  active_[key] = mode_id;
  if (requester == Requester::Operator) cell_it->second.operator_pinned = true;
  change.applied = true;
  log_.push_back(change);
  return ActivationOutcome::Applied;
}

std::optional<std::string> ModeTable::active_mode(const std::string& task, OodaStage stage) const {
  auto it = active_.find({task, stage});
  if (it == active_.end()) return std::nullopt;
  return it->second;
}

std::vector<Violation> validate_table(const ModeTable& table) {
  std::vector<Violation> out;
  for (const std::string& task : table.tasks()) {
    for (OodaStage stage : kOodaStages) {
      const CellKey key{task, stage};
      auto cell = table.cells().find(key);
      if (cell == table.cells().end() || cell->second.modes.empty()) {
        out.push_back({task, stage, "cell has no operating modes"});
        continue;
      }
      auto act = table.active().find(key);
      if (act == table.active().end()) {
        out.push_back({task, stage, "no active mode"});
        continue;
      }
      const auto& modes = cell->second.modes;
      if (std::none_of(modes.begin(), modes.end(),
                       [&](const OperatingMode& m) { return m.id == act->second; })) {
        out.push_back({task, stage, "active mode '" + act->second + "' not in this cell"});
      }
    }
  }
  return out;
}

ModeTable default_mode_table() {
  using S = OodaStage;
  using A = ModeAuthority;
  auto mode = [](std::string id, S s, A a, std::string d) {
    return OperatingMode{std::move(id), s, a, std::move(d)};
  };
  ModeTable t;
  t.add_task("patrol",
             {{S::Observe, {mode("sensor_sweep", S::Observe, A::SystemOnly, "vehicles scan under their footprint")}},
              {S::Orient,
               {mode("pheromone_map", S::Orient, A::SystemOnly, "urgency field drives situation picture"),
                mode("operator_review", S::Orient, A::OperatorOnly, "operator inspects heatmap")}},
              {S::Decide,
               {mode("gradient_choice", S::Decide, A::SystemOnly, "vehicles pick their own targets"),
                mode("operator_assignment", S::Decide, A::OperatorOnly, "operator sets targets")}},
              {S::Act,
               {mode("full_auto", S::Act, A::SystemOnly, "vehicles fly themselves"),
                mode("auto_with_veto", S::Act, A::SystemWithVeto, "operator may override"),
                mode("full_manual", S::Act, A::OperatorOnly, "operator tele-operates")}}},
             {{S::Decide, SelectionPolicy::EitherWithOperatorPriority},
              {S::Act, SelectionPolicy::OperatorSelects}});
  t.add_task("pursuit",
             {{S::Observe, {mode("alarm_feed", S::Observe, A::SystemOnly, "alarms from sensor contact")}},
              {S::Orient,
               {mode("link_alarms", S::Orient, A::SystemOnly, "same-intruder linking"),
                mode("operator_links", S::Orient, A::OperatorOnly, "operator groups alarms")}},
              {S::Decide,
               {mode("operator_dispatch", S::Decide, A::OperatorOnly, "operator chooses pursuers"),
                mode("nearest_dispatch", S::Decide, A::SystemWithVeto, "system proposes nearest vehicles")}},
              {S::Act,
               {mode("zone_sweep", S::Act, A::SystemOnly, "pursuers sweep the search zone"),
                mode("manual_pursuit", S::Act, A::OperatorOnly, "operator flies pursuers")}}},
             {{S::Decide, SelectionPolicy::OperatorSelects}});
  t.add_task("display_config",
             {{S::Observe, {mode("full_overlay", S::Observe, A::SystemOnly, "all overlays shown")}},
              {S::Orient, {mode("auto_contrast", S::Orient, A::SystemOnly, "heatmap scaled to max")}},
              {S::Decide,
               {mode("operator_layout", S::Decide, A::OperatorOnly, "operator picks layout"),
                mode("adaptive_layout", S::Decide, A::SystemWithVeto, "layout follows workload")}},
              {S::Act, {mode("apply_layout", S::Act, A::SystemOnly, "render chosen layout")}}},
             {{S::Decide, SelectionPolicy::EitherWithOperatorPriority}});
  return t;
}

const Beacon& BeaconRegistry::place_beacon(Vec2 pos, const std::string& label) {
  if (pos.x < 0 || pos.y < 0 || pos.x > extent_.x || pos.y > extent_.y) {
    throw std::out_of_range("beacon position outside map");
  }
  const std::string key = lowercase(label);
  if (key.empty()) throw std::invalid_argument("beacon label must not be empty");
  if (find(key)) throw std::invalid_argument("beacon label '" + key + "' already in use");
  beacons_.push_back({BeaconId{static_cast<std::int32_t>(beacons_.size() + 1)}, pos, key});
  return beacons_.back();
}

const Beacon* BeaconRegistry::find(BeaconId id) const {
  for (const auto& b : beacons_) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const Beacon* BeaconRegistry::find(std::string_view label) const {
  const std::string key = lowercase(label);
  for (const auto& b : beacons_) {
    if (b.label == key) return &b;
  }
  return nullptr;
}

}  // namespace swarmctl
