#include "swarmctl/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <stdexcept>

namespace swarmctl {
namespace {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2 * kPi);
  if (a < 0) a += 2 * kPi;
  return a - kPi;
}

// Walk through `points` from index `next`, spending `budget` metres.
// Returns true once the last point has been reached.
bool walk(Vec2& pos, const std::vector<Vec2>& points, std::size_t& next, double budget) {
  while (next < points.size()) {
    const Vec2 target = points[next];
    const double d = distance(pos, target);
    if (d <= budget) {
      pos = target;
      budget -= d;
      ++next;
      continue;
    }
    pos = pos + (target - pos) * (budget / d);
    return false;
  }
  return true;
}

void move_toward(Vec2& pos, Vec2 target, double budget) {
  std::vector<Vec2> one{target};
  std::size_t i = 0;
  walk(pos, one, i, budget);
}

Cell nearest_open(const PheromoneField& f, Cell from) {
  Cell best = from;
  int best_d = -1;
  for (std::size_t i = 0; i < f.cell_count(); ++i) {
    const Cell c = f.cell_of(i);
    if (f.blocked(c)) continue;
    const int d = std::abs(c.row - from.row) + std::abs(c.col - from.col);
    if (best_d < 0 || d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void patrol_step(World& w, Vehicle& v) {
  PheromoneField& f = w.field;
  const Cell here = f.cell_at(v.pos);
  if (f.blocked(here)) {
    // Caught inside a freshly created no-fly area: leave by the nearest open cell.
    move_toward(v.pos, f.center_of(nearest_open(f, here)), v.speed);
    return;
  }
  if (w.config.policy == PatrolPolicy::RandomWalk) {
    std::vector<Cell> options;
    for (Cell nb : {Cell{here.row - 1, here.col}, Cell{here.row, here.col - 1},
                    Cell{here.row, here.col + 1}, Cell{here.row + 1, here.col}}) {
      if (f.in_bounds(nb) && !f.blocked(nb)) options.push_back(nb);
    }
    if (options.empty()) return;
    move_toward(v.pos, f.center_of(options[w.rng() % options.size()]), v.speed);
    return;
  }
  const Cell target = gradient_target(f, here, w.config.patrol_radius);
  if (target == here) return;
  const BoundedReach reach(f, here, w.config.patrol_radius);
  std::vector<Vec2> route;
  for (Cell c : reach.path_to(target)) route.push_back(f.center_of(c));
  std::size_t next = 0;
  walk(v.pos, route, next, v.speed);
}

void pursue_step(World& w, Vehicle& v, Pursue& p) {
  if (w.config.pursuit_timeout && w.tick - p.started >= *w.config.pursuit_timeout) {
    v.behavior = Patrol{};
    return;
  }
  double budget = v.speed;
  if (!p.reached) {
    const Vec2 entry = p.sweep[p.next];
    const double d = distance(v.pos, entry);
    if (d > budget) {
      move_toward(v.pos, entry, budget);
      return;
    }
    v.pos = entry;
    budget -= d;
    p.reached = true;
  }
  if (p.sweep.size() < 2) return;
  while (budget > 0) {
    if (p.next + 1 >= p.sweep.size() && p.heading > 0) p.heading = -1;
    if (p.next == 0 && p.heading < 0) p.heading = 1;
    const std::size_t to = p.next + static_cast<std::size_t>(p.heading > 0 ? 1 : -1);
    const Vec2 target = p.sweep[to];
    const double d = distance(v.pos, target);
    if (d > budget) {
      move_toward(v.pos, target, budget);
      return;
    }
    v.pos = target;
    budget -= d;
    p.next = to;
  }
}

void raise_alarm(World& w, Vec2 pos, std::optional<IntruderId> source) {
  Alarm a;
  a.id = AlarmId{static_cast<std::int32_t>(w.alarms.size() + 1)};
  a.pos = pos;
  a.tick = w.tick;
  a.source = source;
  a.linked_to = link_alarm(a, w.alarms, w.config.link_distance, w.config.link_age);
  w.alarms.push_back(a);
  w.events.push_back({w.tick, EventKind::Alarm, a.id.value});
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

struct Hasher {
  std::uint64_t h = kFnvOffset;
  template <class T>
  void add(const T& v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    for (unsigned char b : buf) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  void add_str(const std::string& s) {
    for (char c : s) add(c);
    add(static_cast<char>(0));
  }
};

}  // namespace

bool Sector::contains(Vec2 p, double tolerance) const {
  const double d = distance(center, p);
  if (d <= tolerance) return true;
  if (d > range + tolerance) return false;
  if (breadth >= 2 * kPi - 1e-12) return true;
  const double off = std::abs(wrap_angle(std::atan2(p.y - center.y, p.x - center.x) - direction));
  return off <= breadth / 2 + tolerance / std::max(d, 1.0);
}

void SearchZone::validate() const {
  if (!(breadth > 0.0) || breadth > 2 * kPi + 1e-12) {
    throw std::invalid_argument("zone breadth must be in (0, 2*pi]");
  }
  if (!(range > 0.0)) throw std::invalid_argument("zone range must be positive");
}

std::optional<Sector> SearchZone::sector() const {
  if (!direction) return std::nullopt;
  return Sector{center, *direction, breadth, range};
}

std::string_view behavior_name(const Behavior& b) {
  switch (b.index()) {
    case 0: return "patrol";
    case 1: return "pursue";
    default: return "goto";
  }
}

std::string_view to_string(VehicleCommand::Kind kind) {
  switch (kind) {
    case VehicleCommand::Kind::Goto: return "goto";
    case VehicleCommand::Kind::Pursue: return "pursue";
    case VehicleCommand::Kind::Patrol: return "patrol";
  }
  return "?";
}

const Vehicle* World::find_vehicle(VehicleId id) const {
  for (const auto& v : vehicles) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

Vehicle* World::find_vehicle(VehicleId id) {
  return const_cast<Vehicle*>(std::as_const(*this).find_vehicle(id));
}

const SearchZone* World::find_zone(ZoneId id) const {
  for (const auto& z : zones) {
    if (z.id == id) return &z;
  }
  return nullptr;
}

const SearchZone* World::find_zone(std::string_view label) const {
  const std::string key = lowercase(label);
  for (const auto& z : zones) {
    if (z.label == key) return &z;
  }
  return nullptr;
}

const Alarm* World::latest_recent_alarm() const {
  if (alarms.empty() || !alarms.back().recent(tick, config.recency_window)) return nullptr;
  return &alarms.back();
}

const SearchZone& World::add_zone(SearchZone zone) {
  zone.validate();
  zone.label = lowercase(zone.label);
  if (zone.label.empty()) throw std::invalid_argument("zone label must not be empty");
  if (find_zone(zone.label)) throw std::invalid_argument("zone label '" + zone.label + "' already in use");
  if (!field.contains(zone.center)) throw std::out_of_range("zone centre outside map");
  zone.id = ZoneId{static_cast<std::int32_t>(zones.size() + 1)};
  zones.push_back(std::move(zone));
  return zones.back();
}

std::uint64_t World::digest() const {
  Hasher h;
  h.add(tick);
  h.add(field.digest());
  for (const auto& v : vehicles) {
    h.add(v.id.value);
    h.add(v.pos.x);
    h.add(v.pos.y);
    h.add(v.behavior.index());
    if (v.fuel) h.add(*v.fuel);
    if (const auto* p = std::get_if<Pursue>(&v.behavior)) {
      h.add(p->zone.value);
      h.add(p->next);
      h.add(p->sector.direction);
    }
    if (const auto* g = std::get_if<Goto>(&v.behavior)) {
      h.add(g->next);
      h.add(g->waypoints.size());
    }
  }
  for (const auto& i : intruders) {
    h.add(i.pos.x);
    h.add(i.pos.y);
    h.add(i.active);
  }
  for (const auto& a : alarms) {
    h.add(a.id.value);
    h.add(a.tick);
    h.add(a.linked_to ? a.linked_to->value : -1);
  }
  for (const auto& z : zones) {
    h.add_str(z.label);
    h.add(z.direction.value_or(-100.0));
  }
  for (const auto& b : beacons.all()) h.add_str(b.label);
  for (const auto& [key, mode] : modes.active()) {
    h.add_str(key.first);
    h.add(static_cast<int>(key.second));
    h.add_str(mode);
  }
  h.add(events.size());
  return h.h;
}

std::optional<AlarmId> link_alarm(const Alarm& fresh, std::span<const Alarm> history,
                                  double max_distance, Tick max_age) {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->tick >= fresh.tick) continue;  // links point strictly back in time
    if (fresh.tick - it->tick > max_age) break;
    if (distance(it->pos, fresh.pos) <= max_distance) return it->id;
  }
  return std::nullopt;
}

std::vector<Vec2> sweep_pattern(const Sector& s, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("sweep spacing must be positive");
  std::vector<double> radii;
  for (int k = 0;; ++k) {
    const double r = spacing * (k + 0.5);
    if (r > s.range) break;
    radii.push_back(r);
  }
  if (radii.empty()) radii.push_back(s.range / 2);
  std::vector<Vec2> pts;
  const double a0 = s.direction - s.breadth / 2;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    const int m = std::max(2, static_cast<int>(std::ceil(s.breadth * r / spacing)) + 1);
    for (int j = 0; j < m; ++j) {
      const int jj = (k % 2 == 0) ? j : m - 1 - j;
      const double a = a0 + s.breadth * jj / (m - 1);
      pts.push_back({s.center.x + r * std::cos(a), s.center.y + r * std::sin(a)});
    }
  }
  return pts;
}

void step_swarm(World& w) {
  for (Vehicle& v : w.vehicles) {
    if (!v.airborne()) continue;
    if (std::holds_alternative<Patrol>(v.behavior)) {
      patrol_step(w, v);
    } else if (auto* p = std::get_if<Pursue>(&v.behavior)) {
      pursue_step(w, v, *p);
    } else if (auto* g = std::get_if<Goto>(&v.behavior)) {
      if (walk(v.pos, g->waypoints, g->next, v.speed)) v.behavior = Patrol{};
    }
    const auto fp = footprint_cells(w.field, v.pos, v.sensor_radius);
    w.field.scan(fp, w.field.cell_at(v.pos));
    if (v.fuel) --*v.fuel;
  }

  for (Intruder& in : w.intruders) {
    if (in.finished) continue;
    if (!in.active) {
      if (w.tick < in.start_tick || in.path.empty()) continue;
      in.active = true;
      in.pos = in.path.front();
      in.next = 1;
    } else if (walk(in.pos, in.path, in.next, in.speed)) {
      in.active = false;
      in.finished = true;
      in.in_contact = false;
      continue;
    }
    bool contact = false;
    for (const Vehicle& v : w.vehicles) {
      if (v.airborne() && distance(v.pos, in.pos) <= v.sensor_radius) {
        contact = true;
        break;
      }
    }
    if (contact && !in.in_contact) raise_alarm(w, in.pos, in.id);
    in.in_contact = contact;
  }

  for (const FalseAlarm& fa : w.false_alarms) {
    if (fa.tick == w.tick) raise_alarm(w, fa.pos, std::nullopt);
  }
}

std::optional<std::string> check_command(const World& w, const VehicleCommand& cmd) {
  std::set<VehicleId> seen;
  for (VehicleId id : cmd.vehicles) {
    if (!w.find_vehicle(id)) return "unknown vehicle uav" + std::to_string(id.value);
    if (!seen.insert(id).second) return "vehicle uav" + std::to_string(id.value) + " listed twice";
  }
  switch (cmd.kind) {
    case VehicleCommand::Kind::Goto:
      if (cmd.routes.size() != cmd.vehicles.size()) return "goto needs one route per vehicle";
      for (const auto& route : cmd.routes) {
        if (route.empty()) return "goto route is empty";
        for (Vec2 p : route) {
          if (!w.field.contains(p)) return "goto waypoint outside map";
        }
      }
      break;
    case VehicleCommand::Kind::Pursue: {
      if (!cmd.zone) return "pursue needs a zone";
      const SearchZone* z = w.find_zone(*cmd.zone);
      if (!z) return "unknown zone";
      if (!cmd.direction && !z->direction) return "pursue zone has no direction";
      break;
    }
    case VehicleCommand::Kind::Patrol:
      break;
  }
  return std::nullopt;
}

void dispatch(World& w, const VehicleCommand& cmd) {
  if (cmd.vehicles.empty()) return;
  if (auto err = check_command(w, cmd)) throw std::invalid_argument(*err);

  std::optional<Sector> sector;
  std::vector<Vec2> sweep;
  if (cmd.kind == VehicleCommand::Kind::Pursue) {
    const SearchZone* z = w.find_zone(*cmd.zone);
    sector = Sector{z->center, cmd.direction ? *cmd.direction : *z->direction, z->breadth, z->range};
    double spacing = 0;
    for (VehicleId id : cmd.vehicles) spacing = std::max(spacing, 1.5 * w.find_vehicle(id)->sensor_radius);
    for (Vec2 p : sweep_pattern(*sector, spacing)) {
      if (w.field.contains(p) && !w.field.blocked(w.field.cell_at(p))) sweep.push_back(p);
    }
    if (sweep.empty()) sweep.push_back(z->center);
  }

  for (std::size_t k = 0; k < cmd.vehicles.size(); ++k) {
    Vehicle& v = *w.find_vehicle(cmd.vehicles[k]);
    switch (cmd.kind) {
      case VehicleCommand::Kind::Goto:
        v.behavior = Goto{cmd.routes[k], 0};
        break;
      case VehicleCommand::Kind::Pursue: {
        Pursue p;
        p.zone = *cmd.zone;
        p.sector = *sector;
        p.sweep = sweep;
        p.next = k * sweep.size() / cmd.vehicles.size();  // spread pursuers along the pattern
        p.started = w.tick;
        v.behavior = std::move(p);
        break;
      }
      case VehicleCommand::Kind::Patrol:
        v.behavior = Patrol{};
        break;
    }
  }
  w.events.push_back({w.tick, EventKind::Command, cmd.vehicles.front().value});
}

}  // namespace swarmctl
