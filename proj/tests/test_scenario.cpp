#include "doctest.h"

#include "swarmctl/scenario.hpp"

#include <algorithm>

using namespace swarmctl;

namespace {

json minimal() {
  return json::parse(R"({"name": "t", "map": {"width": 16, "height": 12, "cell_size": 25},
                         "vehicles": [{"id": 1, "pos": [100, 100]}]})");
}

std::vector<std::string> problems_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& ps, const std::string& needle) {
  return std::any_of(ps.begin(), ps.end(), [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("minimal document loads with defaults") {
  const Scenario s = parse_scenario(minimal());
  CHECK(s.width == 16);
  CHECK(s.height == 12);
  REQUIRE(s.vehicles.size() == 1);
  CHECK(s.vehicles[0].speed == 25.0);
  CHECK(s.workload_method == WorkloadMethod::Continuous);
  CHECK(s.metrics.revisit_target == 300);
  CHECK(s.hash.size() == 16);
}

TEST_CASE("every unknown or invalid field is reported, not just the first") {
  json doc = minimal();
  doc["mapp"] = 1;
  doc["vehicles"][0]["spd"] = 3;
  doc["vehicles"][0]["sensor_radius"] = -1;
  doc["field"] = {{"evaporation_rate", 2.0}};
  doc["zones"] = json::array({{{"label", "z"}, {"center", {9999, 0}}}});
  const auto ps = problems_of(doc);
  CHECK(mentions(ps, "mapp: unknown field"));
  CHECK(mentions(ps, "vehicles[0].spd: unknown field"));
  CHECK(mentions(ps, "vehicles[0].sensor_radius"));
  CHECK(mentions(ps, "evaporation_rate"));
  CHECK(mentions(ps, "zones[0].center"));
  CHECK(ps.size() >= 5);
}

TEST_CASE("hash ignores key order and tracks content") {
  const json a = json::parse(R"({"name": "t", "map": {"width": 8, "height": 8}})");
  const json b = json::parse(R"({"map": {"height": 8, "width": 8}, "name": "t"})");
  const json c = json::parse(R"({"map": {"height": 8, "width": 9}, "name": "t"})");
  CHECK(scenario_hash(a) == scenario_hash(b));
  CHECK(scenario_hash(a) != scenario_hash(c));
}

TEST_CASE("polygon with a hole rasterizes to the ring of cell centres") {
  const PheromoneField f(20, 20, 25.0);
  NoFlyArea area;
  area.polygon = {{50, 50}, {300, 50}, {300, 300}, {50, 300}};
  area.holes = {{{100, 100}, {200, 100}, {200, 200}, {100, 200}}};
  area.cells = {{0, 0}};
  const auto cells = rasterize(area, f);

  // oracle: centre-in-rectangle arithmetic
  std::size_t expected = 1;
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) {
      const double x = (c + 0.5) * 25, y = (r + 0.5) * 25;
      const bool outer = x > 50 && x < 300 && y > 50 && y < 300;
      const bool hole = x > 100 && x < 200 && y > 100 && y < 200;
      if (outer && !hole) ++expected;
    }
  }
  CHECK(cells.size() == expected);
  CHECK(expected == 1 + 100 - 16);
  CHECK(std::find(cells.begin(), cells.end(), Cell{0, 0}) != cells.end());
  CHECK(std::find(cells.begin(), cells.end(), Cell{5, 5}) == cells.end());
}

TEST_CASE("tick-0 areas are applied when the world is built, later ones are not") {
  json doc = minimal();
  doc["no_fly"] = json::array({{{"cells", {{0, 0}, {0, 1}}}}, {{"from_tick", 10}, {"cells", {{5, 5}}}}});
  const Scenario s = parse_scenario(doc);
  const World w = build_world(s, 1);
  CHECK(w.field.blocked({0, 0}));
  CHECK(w.field.blocked({0, 1}));
  CHECK_FALSE(w.field.blocked({5, 5}));
}

TEST_CASE("fleet placement is seeded and lands on open cell centres") {
  json doc = minimal();
  doc.erase("vehicles");
  doc["fleet"] = {{"count", 5}};
  doc["no_fly"] = json::array({{{"polygon", {{0, 0}, {200, 0}, {200, 300}, {0, 300}}}}});
  const Scenario s = parse_scenario(doc);
  const World a = build_world(s, 3), b = build_world(s, 3), c = build_world(s, 4);
  REQUIRE(a.vehicles.size() == 5);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(a.vehicles[i].pos == b.vehicles[i].pos);
    differs = differs || !(a.vehicles[i].pos == c.vehicles[i].pos);
    const Cell cell = a.field.cell_at(a.vehicles[i].pos);
    CHECK_FALSE(a.field.blocked(cell));
    CHECK(a.field.center_of(cell) == a.vehicles[i].pos);
  }
  CHECK(differs);
}

TEST_CASE("operator script must be in tick order with known kinds") {
  json doc = minimal();
  doc["operator_script"] = json::array({{{"tick", 5}, {"kind", "Utterance"}, {"payload", {{"text", "status"}}}},
                                        {{"tick", 3}, {"kind", "Shout"}, {"payload", json::object()}}});
  const auto ps = problems_of(doc);
  CHECK(mentions(ps, "operator_script[1]"));
  CHECK(ps.size() >= 2);
}

TEST_CASE("workload parameter block parses standalone and validates") {
  const WorkloadParams p = parse_workload_params(json::parse(R"({"window": 90, "thresholds": [0.5, 1, 3]})"));
  CHECK(p.window == 90);
  CHECK(p.thresholds[2] == 3.0);
  CHECK_THROWS_AS(parse_workload_params(json::parse(R"({"windw": 90})")), ScenarioError);
  CHECK_THROWS_AS(parse_workload_params(json::parse(R"({"thresholds": [3, 1, 2]})")), ScenarioError);
}

TEST_CASE("bundled scenarios load") {
  for (const char* name : {"patrol", "patrol_random_walk", "intrusion", "islet"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_scenario(std::string(SWARMCTL_SCENARIO_DIR) + "/" + name + ".json"));
  }
}
