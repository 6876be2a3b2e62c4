#include "doctest.h"
#include "swarmctl/swarm.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace swarmctl;

namespace {

World make_world(int size = 32, std::uint64_t seed = 1) {
  World w(PheromoneField(size, size, 25.0, FieldParams{}), SwarmConfig{}, seed);
  return w;
}

Vehicle uav(int id, Vec2 pos) {
  Vehicle v;
  v.id = VehicleId{id};
  v.pos = pos;
  return v;
}

Alarm alarm_at(int id, Vec2 pos, Tick tick) {
  Alarm a;
  a.id = AlarmId{id};
  a.pos = pos;
  a.tick = tick;
  return a;
}

}  // namespace

TEST_CASE("a lone patroller on a flat field holds position and scans") {
  World w = make_world();
  w.vehicles.push_back(uav(1, {412.5, 412.5}));
  w.tick = 1;
  step_swarm(w);
  CHECK(w.vehicles[0].pos == Vec2{412.5, 412.5});
  const Cell here = w.field.cell_at({412.5, 412.5});
  CHECK(w.field.presence(here) == doctest::Approx(10.0));
  CHECK(w.alarms.empty());
}

TEST_CASE("patroller climbs towards neglected cells") {
  World w = make_world();
  w.vehicles.push_back(uav(1, {412.5, 412.5}));
  w.field.set_urgency({16, 19}, 50.0);
  w.tick = 1;
  step_swarm(w);
  CHECK(w.vehicles[0].pos.x > 412.5);
  CHECK(w.vehicles[0].pos.y == doctest::Approx(412.5));
}

TEST_CASE("sensor contact raises one alarm at onset") {
  World w = make_world();
  w.vehicles.push_back(uav(1, {400, 400}));
  Intruder in;
  in.id = IntruderId{1};
  in.path = {{420, 400}, {430, 400}, {440, 400}};
  in.speed = 1.0;
  w.intruders.push_back(in);
  w.tick = 1;
  step_swarm(w);
  REQUIRE(w.alarms.size() == 1);
  CHECK(w.alarms[0].source->value == 1);
  CHECK(w.events.back().kind == EventKind::Alarm);
  w.tick = 2;
  step_swarm(w);
  CHECK(w.alarms.size() == 1);  // continued contact is not a new alarm
}

TEST_CASE("scripted false alarms fire at their tick") {
  World w = make_world();
  w.false_alarms.push_back({3, {100, 100}});
  for (Tick t = 1; t <= 4; ++t) {
    w.tick = t;
    step_swarm(w);
  }
  REQUIRE(w.alarms.size() == 1);
  CHECK(w.alarms[0].tick == 3);
  CHECK_FALSE(w.alarms[0].source.has_value());
}

TEST_CASE("alarm linking rule") {
  const Alarm fresh = alarm_at(9, {100, 100}, 100);
  CHECK_FALSE(link_alarm(fresh, {}, 500, 300).has_value());
  const std::vector<Alarm> one{alarm_at(1, {110, 100}, 95)};
  CHECK(link_alarm(fresh, one, 500, 300) == AlarmId{1});
  const std::vector<Alarm> two{alarm_at(1, {110, 100}, 90), alarm_at(2, {120, 100}, 95)};
  CHECK(link_alarm(fresh, two, 500, 300) == AlarmId{2});
  CHECK_FALSE(link_alarm(fresh, two, 5, 300).has_value());
  CHECK_FALSE(link_alarm(fresh, two, 500, 4).has_value());
  const std::vector<Alarm> same_tick{alarm_at(1, {100, 100}, 100)};
  CHECK_FALSE(link_alarm(fresh, same_tick, 500, 300).has_value());
}

TEST_CASE("alarm chains are acyclic and strictly decreasing in tick") {
  std::mt19937_64 rng(12);
  World w = make_world(40);
  for (int i = 0; i < 300; ++i) {
    w.false_alarms.push_back({static_cast<Tick>(1 + rng() % 400),
                              {double(rng() % 1000), double(rng() % 1000)}});
  }
  for (Tick t = 1; t <= 400; ++t) {
    w.tick = t;
    step_swarm(w);
  }
  REQUIRE(w.alarms.size() == 300);
  for (const Alarm& a : w.alarms) {
    Tick last = a.tick;
    std::optional<AlarmId> cur = a.linked_to;
    int hops = 0;
    while (cur) {
      const Alarm& prev = w.alarms[static_cast<std::size_t>(cur->value - 1)];
      CHECK(prev.tick < last);
      last = prev.tick;
      cur = prev.linked_to;
      REQUIRE(++hops <= 300);
    }
  }
}

TEST_CASE("dispatch") {
  World w = make_world();
  w.vehicles.push_back(uav(1, {100, 100}));
  w.vehicles.push_back(uav(2, {150, 100}));
  SearchZone z;
  z.label = "north";
  z.center = {400, 600};
  z.direction = kPi / 2;
  const ZoneId zid = w.add_zone(z).id;
  w.tick = 10;

  SUBCASE("empty target set") {
    const auto d = w.digest();
    VehicleCommand cmd;
    cmd.kind = VehicleCommand::Kind::Pursue;
    cmd.zone = zid;
    dispatch(w, cmd);
    CHECK(w.digest() == d);
    CHECK(w.events.empty());
  }
  SUBCASE("two vehicles to a zone") {
    VehicleCommand cmd;
    cmd.kind = VehicleCommand::Kind::Pursue;
    cmd.vehicles = {VehicleId{1}, VehicleId{2}};
    cmd.zone = zid;
    dispatch(w, cmd);
    for (const auto& v : w.vehicles) {
      REQUIRE(std::holds_alternative<Pursue>(v.behavior));
      CHECK(std::get<Pursue>(v.behavior).zone == zid);
    }
    REQUIRE(w.events.size() == 1);
    CHECK(w.events[0].kind == EventKind::Command);
    CHECK(w.events[0].tick == 10);
  }
  SUBCASE("one bad id rejects the whole command") {
    VehicleCommand cmd;
    cmd.kind = VehicleCommand::Kind::Goto;
    cmd.vehicles = {VehicleId{1}, VehicleId{7}};
    cmd.routes = {{{200, 200}}, {{200, 200}}};
    CHECK_THROWS_AS(dispatch(w, cmd), std::invalid_argument);
    CHECK(w.vehicles[0].patrolling());
    CHECK(w.vehicles[1].patrolling());
    CHECK(w.events.empty());
  }
  SUBCASE("pursuit into a zone without direction needs one in the command") {
    SearchZone south;
    south.label = "south";
    south.center = {400, 100};
    const ZoneId sid = w.add_zone(south).id;
    VehicleCommand cmd;
    cmd.kind = VehicleCommand::Kind::Pursue;
    cmd.vehicles = {VehicleId{1}};
    cmd.zone = sid;
    CHECK(check_command(w, cmd).has_value());
    cmd.direction = 0.0;
    CHECK_FALSE(check_command(w, cmd).has_value());
  }
}

TEST_CASE("goto reverts to patrol at the final waypoint") {
  World w = make_world();
  w.vehicles.push_back(uav(1, {100, 100}));
  w.vehicles[0].speed = 50.0;
  VehicleCommand cmd;
  cmd.kind = VehicleCommand::Kind::Goto;
  cmd.vehicles = {VehicleId{1}};
  cmd.routes = {{{150, 100}, {150, 160}}};
  w.tick = 1;
  dispatch(w, cmd);
  step_swarm(w);
  CHECK(w.vehicles[0].pos == Vec2{150, 100});
  step_swarm(w);
  CHECK(std::holds_alternative<Goto>(w.vehicles[0].behavior));
  step_swarm(w);
  CHECK(w.vehicles[0].pos == Vec2{150, 160});
  CHECK(w.vehicles[0].patrolling());
}

TEST_CASE("pursuers stay inside their sector once they reach it") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    World w = make_world(64, trial);
    SearchZone z;
    z.label = "z";
    z.center = {800.0 + double(rng() % 100), 800.0 + double(rng() % 100)};
    z.direction = double(rng() % 628) / 100.0;
    z.breadth = 0.3 + double(rng() % 280) / 100.0;
    z.range = 150.0 + double(rng() % 500);
    const ZoneId zid = w.add_zone(z).id;
    const int n = 1 + static_cast<int>(rng() % 3);
    VehicleCommand cmd;
    cmd.kind = VehicleCommand::Kind::Pursue;
    cmd.zone = zid;
    for (int i = 1; i <= n; ++i) {
      w.vehicles.push_back(uav(i, {double(rng() % 1600), double(rng() % 1600)}));
      w.vehicles.back().speed = 10.0 + double(rng() % 30);
      cmd.vehicles.push_back(VehicleId{i});
    }
    dispatch(w, cmd);
    const Sector sector = *w.zones[0].sector();
    for (Tick t = 1; t <= 600; ++t) {
      w.tick = t;
      step_swarm(w);
      for (const Vehicle& v : w.vehicles) {
        const auto& p = std::get<Pursue>(v.behavior);
        if (p.reached) CHECK(sector.contains(v.pos, 1e-6));
      }
    }
    for (const Vehicle& v : w.vehicles) CHECK(std::get<Pursue>(v.behavior).reached);
  }
}

TEST_CASE("pursuit timeout returns vehicles to patrol") {
  World w = make_world();
  w.config.pursuit_timeout = 5;
  w.vehicles.push_back(uav(1, {100, 100}));
  SearchZone z;
  z.label = "north";
  z.center = {400, 400};
  z.direction = 0.0;
  VehicleCommand cmd;
  cmd.kind = VehicleCommand::Kind::Pursue;
  cmd.vehicles = {VehicleId{1}};
  cmd.zone = w.add_zone(z).id;
  w.tick = 1;
  dispatch(w, cmd);
  for (Tick t = 1; t <= 6; ++t) {
    w.tick = t;
    step_swarm(w);
  }
  CHECK(w.vehicles[0].patrolling());
}

TEST_CASE("vehicles out of fuel stop flying and sensing") {
  World w = make_world();
  w.vehicles.push_back(uav(1, {400, 400}));
  w.vehicles[0].fuel = 2;
  w.field.set_urgency({16, 20}, 50.0);
  for (Tick t = 1; t <= 5; ++t) {
    w.tick = t;
    step_swarm(w);
  }
  CHECK(w.vehicles[0].fuel == 0);
  const Vec2 parked = w.vehicles[0].pos;
  w.tick = 6;
  step_swarm(w);
  CHECK(w.vehicles[0].pos == parked);
}

TEST_CASE("same seed, same trace gives identical trajectories") {
  for (PatrolPolicy policy : {PatrolPolicy::Pheromone, PatrolPolicy::RandomWalk}) {
    auto run = [policy] {
      World w = make_world(32, 99);
      w.config.policy = policy;
      for (int i = 1; i <= 5; ++i) w.vehicles.push_back(uav(i, {i * 120.0, 300.0}));
      std::vector<std::uint64_t> digests;
      for (Tick t = 1; t <= 300; ++t) {
        w.tick = t;
        w.field.step();
        step_swarm(w);
        digests.push_back(w.digest());
      }
      return digests;
    };
    CHECK(run() == run());
  }
}

TEST_CASE("sweep pattern stays inside its sector") {
  const Sector s{{0, 0}, 1.0, 1.2, 300.0};
  const auto pts = sweep_pattern(s, 60.0);
  CHECK(pts.size() > 6);
  for (Vec2 p : pts) CHECK(s.contains(p));
  CHECK_THROWS_AS(sweep_pattern(s, 0.0), std::invalid_argument);
  SearchZone bad;
  bad.breadth = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
