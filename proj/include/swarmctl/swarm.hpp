#pragma once
// Vehicles, intruders, alarms, search zones, and the per-tick swarm update.

#include "swarmctl/core.hpp"
#include "swarmctl/field.hpp"
#include "swarmctl/missions.hpp"
#include "swarmctl/workload.hpp"

#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace swarmctl {

/// Angular sector swept by pursuing vehicles. Direction is radians
/// counter-clockwise from +x; breadth is the full opening angle.
struct Sector {
  Vec2 center;
  double direction = 0.0;
  double breadth = kPi / 2;
  double range = 400.0;

  bool contains(Vec2 p, double tolerance = 1e-6) const;
};

struct SearchZone {
  ZoneId id;
  std::string label;
  Vec2 center;
  std::optional<double> direction;  // a zone may be defined before its direction is known
  double breadth = kPi / 2;
  double range = 400.0;

  /// 0 < breadth <= 2*pi and range > 0; throws std::invalid_argument.
  void validate() const;
  std::optional<Sector> sector() const;
};

struct Patrol {};

struct Pursue {
  ZoneId zone;
  Sector sector;
  std::vector<Vec2> sweep;  // boustrophedon waypoints inside the sector
  std::size_t next = 0;
  int heading = 1;          // +1 forward through sweep, -1 backward
  bool reached = false;
  Tick started = 0;
};

struct Goto {
  std::vector<Vec2> waypoints;
  std::size_t next = 0;
};

using Behavior = std::variant<Patrol, Pursue, Goto>;

struct Vehicle {
  VehicleId id;
  Vec2 pos;
  double speed = 25.0;          // metres per tick
  Behavior behavior = Patrol{};
  double sensor_radius = 50.0;  // metres
  std::optional<Tick> fuel;     // ticks of flight left; unlimited when empty

  bool airborne() const { return !fuel || *fuel > 0; }
  bool patrolling() const { return std::holds_alternative<Patrol>(behavior); }
};

std::string_view behavior_name(const Behavior& b);

struct Intruder {
  IntruderId id;
  Vec2 pos;
  std::vector<Vec2> path;
  std::size_t next = 0;
  double speed = 5.0;
  Tick start_tick = 0;
  bool active = false;
  bool finished = false;
  bool in_contact = false;
};

struct Alarm {
  AlarmId id;
  Vec2 pos;
  Tick tick = 0;
  std::optional<AlarmId> linked_to;
  std::optional<IntruderId> source;  // empty for scripted false alarms

  bool recent(Tick now, Tick window) const { return now - tick <= window; }
};

struct FalseAlarm {
  Tick tick = 0;
  Vec2 pos;
};

enum class PatrolPolicy { Pheromone, RandomWalk };

struct SwarmConfig {
  PatrolPolicy policy = PatrolPolicy::Pheromone;
  int patrol_radius = 3;           // cells; just past a 50 m footprint
  double link_distance = 800.0;    // metres
  Tick link_age = 240;             // ticks
  Tick recency_window = 180;       // ticks
  std::optional<Tick> pursuit_timeout;
};

/// What the dialogue bridge hands to the swarm: fully resolved, no free variables.
struct VehicleCommand {
  enum class Kind { Goto, Pursue, Patrol };
  Kind kind = Kind::Goto;
  std::vector<VehicleId> vehicles;
  std::vector<std::vector<Vec2>> routes;  // Goto: one route per vehicle
  std::optional<ZoneId> zone;             // Pursue
  std::optional<double> direction;        // Pursue: sector direction, radians
  std::optional<BeaconId> beacon;         // Goto to a beacon (informational)
};

std::string_view to_string(VehicleCommand::Kind kind);

struct World {
  World(PheromoneField f, SwarmConfig c, std::uint64_t seed)
      : field(std::move(f)), config(c), beacons(field.extent()), rng(seed) {}

  Tick tick = 0;
  PheromoneField field;
  SwarmConfig config;
  std::vector<Vehicle> vehicles;
  std::vector<Intruder> intruders;
  std::vector<Alarm> alarms;
  std::vector<SearchZone> zones;
  std::vector<FalseAlarm> false_alarms;  // scripted, any order
  std::vector<MissionEvent> events;      // append-only, tick ordered
  BeaconRegistry beacons;
  ModeTable modes;
  std::mt19937_64 rng;

  const Vehicle* find_vehicle(VehicleId id) const;
  Vehicle* find_vehicle(VehicleId id);
  const SearchZone* find_zone(ZoneId id) const;
  const SearchZone* find_zone(std::string_view label) const;
  const Alarm* latest_recent_alarm() const;
  const SearchZone& add_zone(SearchZone zone);

  std::uint64_t digest() const;
};

/// Spatio-temporal gate: the most recent earlier alarm within `max_distance`
/// metres and `max_age` ticks. History must be sorted by tick.
std::optional<AlarmId> link_alarm(const Alarm& fresh, std::span<const Alarm> history,
                                  double max_distance, Tick max_age);

/// Deterministic angular boustrophedon over a sector: concentric arcs,
/// alternate arcs traversed in opposite angular direction.
std::vector<Vec2> sweep_pattern(const Sector& sector, double spacing);

/// Move every vehicle by its behaviour, scan footprints, advance intruders,
/// raise alarms on fresh sensor contact and scripted false alarms. Uses
/// world.tick as the current tick.
void step_swarm(World& world);

/// Validates and applies a command atomically, then logs one Command event.
/// Throws std::invalid_argument (unknown vehicle, bad zone, bad route) with
/// the world unchanged. An empty vehicle list is a no-op.
void dispatch(World& world, const VehicleCommand& command);

/// One dispatch-time check shared with the dialogue bridge. Empty when valid.
std::optional<std::string> check_command(const World& world, const VehicleCommand& command);

}  // namespace swarmctl
