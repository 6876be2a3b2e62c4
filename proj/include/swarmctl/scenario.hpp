#pragma once
// Scenario files: map, field parameters, no-fly areas, fleet, intruders,
// zones, beacons, estimator settings and an optional operator script.
// Unknown keys are rejected so that typos do not silently fall back to defaults.

#include "swarmctl/dialogue.hpp"
#include "swarmctl/field.hpp"
#include "swarmctl/swarm.hpp"
#include "swarmctl/workload.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmctl {

using json = nlohmann::json;

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// No-fly area: a polygon (optionally with holes) and/or explicit cells,
/// active from `from_tick` on. A cell is covered when its centre lies inside
/// the polygon and outside every hole.
struct NoFlyArea {
  Tick from_tick = 0;
  std::vector<Vec2> polygon;
  std::vector<std::vector<Vec2>> holes;
  std::vector<Cell> cells;
};

struct VehicleSpec {
  int id = 0;
  std::optional<Vec2> pos;  // random open cell centre when absent
  double speed = 25.0;
  double sensor_radius = 50.0;
  std::optional<Tick> fuel;
};

struct IntruderSpec {
  int id = 0;
  Tick start_tick = 0;
  double speed = 5.0;
  std::vector<Vec2> path;
};

struct ZoneSpec {
  std::string label;
  Vec2 center;
  std::optional<double> direction_deg;
  double breadth_deg = 90.0;
  double range = 400.0;
};

struct BeaconSpec {
  std::string label;
  Vec2 pos;
};

struct ModeSetting {
  std::string task;
  std::string stage;
  std::string mode;
};

/// An inbound frame delivered at a fixed tick, as if sent by the console.
struct ScriptItem {
  Tick tick = 1;
  std::string kind;  // protocol inbound kind
  json payload;
};

struct MetricsConfig {
  Tick revisit_target = 300;
  Tick trace_interval = 60;
};

struct Scenario {
  std::string name;
  int width = 64;
  int height = 64;
  double cell_size = 25.0;
  FieldParams field;
  std::vector<NoFlyArea> no_fly;
  std::vector<VehicleSpec> vehicles;
  SwarmConfig swarm;
  std::vector<IntruderSpec> intruders;
  std::vector<FalseAlarm> false_alarms;
  std::vector<ZoneSpec> zones;
  std::vector<BeaconSpec> beacons;
  std::vector<ModeSetting> modes;
  WorkloadParams workload;
  WorkloadMethod workload_method = WorkloadMethod::Continuous;
  AnomalyTracker::Rule anomaly_rule;
  Tick anomaly_min_age = 50;
  StrategyPolicy strategy;
  InterpretConfig interpret;
  MetricsConfig metrics;
  Tick snapshot_every = 1;
  Tick keyframe_every = 10;
  std::size_t ingress_capacity = 64;
  std::vector<ScriptItem> script;

  json source;       // document as loaded
  std::string hash;  // FNV-1a of the canonical dump, 16 hex digits
};

/// Throws ScenarioError listing every offending field.
Scenario parse_scenario(const json& doc);
Scenario load_scenario(const std::filesystem::path& path);

std::string scenario_hash(const json& doc);

/// Cells covered by a no-fly area on the given grid.
std::vector<Cell> rasterize(const NoFlyArea& area, const PheromoneField& field);

/// World at tick 0: field with tick-0 no-fly areas applied, fleet placed
/// (random positions drawn from the world RNG), zones, beacons, modes.
World build_world(const Scenario& scenario, std::uint64_t seed);

/// Standalone workload parameter block (same keys as "workload", no method).
WorkloadParams parse_workload_params(const json& doc);

std::string to_hex(std::uint64_t v);

}  // namespace swarmctl
