#include "doctest.h"

#include "swarmctl/mission.hpp"
#include "swarmctl/protocol.hpp"
#include "swarmctl/scenario.hpp"

#include <cmath>

using namespace swarmctl;
using namespace swarmctl::protocol;

namespace {

Scenario small_scenario() {
  return parse_scenario(json::parse(R"({
    "name": "p", "map": {"width": 24, "height": 20, "cell_size": 25},
    "vehicles": [{"id": 1, "pos": [100, 100]}, {"id": 2, "pos": [400, 300]}],
    "zones": [{"label": "north", "center": [300, 400], "range": 100}],
    "no_fly": [{"cells": [[3, 3], [3, 4]]}, {"from_tick": 12, "cells": [[10, 10]]}]
  })"));
}

}  // namespace

TEST_CASE("frames survive a serialize/parse round trip") {
  Frame f;
  f.seq = 7;
  f.tick = 42;
  f.kind = Kind::CompletionRequest;
  f.payload = {{"id", 3}};
  f.correlation = "abc";
  const Frame g = parse_frame(to_json(f).dump());
  CHECK(g.seq == 7);
  CHECK(g.tick == 42);
  CHECK(g.kind == Kind::CompletionRequest);
  CHECK(g.payload == f.payload);
  CHECK(g.correlation == std::optional<std::string>("abc"));

  for (Kind k : {Kind::Snapshot, Kind::Event, Kind::Utterance, Kind::CompletionRequest, Kind::CompletionResponse,
                 Kind::Emission, Kind::Command, Kind::ModeChange, Kind::Error}) {
    CHECK(parse_kind(to_string(k)) == k);
  }
}

TEST_CASE("malformed frames are rejected with a reason") {
  CHECK_THROWS_AS(parse_frame("{nope"), ProtocolError);
  CHECK_THROWS_AS(parse_frame("[1,2]"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"kind": "Yell"})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"kind": "Utterance", "payload": 3})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"kind": "Utterance", "extra": 1})"), ProtocolError);
  CHECK_THROWS_AS(parse_frame(R"({"kind": "Utterance", "seq": "x"})"), ProtocolError);
  // integer correlations are accepted and normalised to strings
  CHECK(parse_frame(R"({"kind": "Utterance", "correlation": 5})").correlation == std::optional<std::string>("5"));
}

TEST_CASE("command codec round trip, with zones by label and degrees on the wire") {
  const World w = build_world(small_scenario(), 1);
  VehicleCommand c;
  c.kind = VehicleCommand::Kind::Pursue;
  c.vehicles = {VehicleId{1}, VehicleId{2}};
  c.zone = w.zones.at(0).id;
  c.direction = kPi / 2;
  const json j = encode(c);
  CHECK(j["direction_deg"].get<double>() == doctest::Approx(90.0));
  const VehicleCommand d = decode_command(j, w);
  CHECK(d.kind == c.kind);
  CHECK(d.vehicles == c.vehicles);
  CHECK(d.zone == c.zone);
  CHECK(*d.direction == doctest::Approx(kPi / 2));

  const VehicleCommand by_label =
      decode_command(json::parse(R"({"kind": "pursue", "vehicles": [1], "zone": "north"})"), w);
  CHECK(by_label.zone == c.zone);

  const VehicleCommand go = decode_command(
      json::parse(R"({"kind": "goto", "vehicles": [1, 2], "routes": [[[10, 10], [200, 20]]]})"), w);
  REQUIRE(go.routes.size() == 2);  // one route broadcast to every vehicle
  CHECK(go.routes[1][1] == Vec2{200, 20});

  CHECK_THROWS_AS(decode_command(json::parse(R"({"kind": "hover", "vehicles": [1]})"), w), ProtocolError);
  CHECK_THROWS_AS(decode_command(json::parse(R"({"kind": "patrol"})"), w), ProtocolError);
  CHECK_THROWS_AS(decode_command(json::parse(R"({"kind": "pursue", "vehicles": [1], "zone": "south"})"), w),
                  ProtocolError);
}

TEST_CASE("utterance and completion payloads") {
  const OperatorUtterance u = decode_utterance(
      json::parse(R"({"text": "send them there", "channel": "gesture",
                      "gestures": [{"kind": "click", "at": [5, 6]},
                                   {"kind": "drag", "from": [0, 0], "to": [10, 0], "breadth_deg": 30}]})"),
      9);
  CHECK(u.text == "send them there");
  CHECK(u.tick == 9);
  CHECK(u.channel == Channel::Gesture);
  REQUIRE(u.gestures.size() == 2);
  CHECK(u.gestures[0].to == Vec2{5, 6});
  CHECK(*u.gestures[1].breadth == doctest::Approx(kPi / 6));
  CHECK(decode_utterance(encode(u), 9).gestures.size() == 2);

  const CompletionAnswer a =
      decode_completion(json::parse(R"({"request": "pending", "values": {"direction": 90, "where": [1, 2]}})"));
  CHECK_FALSE(a.request.has_value());
  CHECK(*a.values.at("direction").number == 90.0);
  CHECK(*a.values.at("where").point == Vec2{1, 2});
  const CompletionAnswer b = decode_completion(encode(CompletionAnswer{4, {}, 1}));
  CHECK(b.request == 4);
  CHECK(b.choice == std::size_t{1});
  CHECK_THROWS_AS(decode_completion(json::parse(R"({"values": {}})")), ProtocolError);
}

TEST_CASE("grid scale is the next power of two") {
  CHECK(grid_scale(0.0) == 1.0);
  CHECK(grid_scale(1.0) == 1.0);
  CHECK(grid_scale(1.5) == 2.0);
  CHECK(grid_scale(99.0) == 128.0);
  CHECK(grid_scale(128.0) == 128.0);
}

TEST_CASE("snapshot deltas reconstruct the quantized grids") {
  Scenario s = small_scenario();
  s.keyframe_every = 5;
  Mission::Options opt;
  opt.keep_log = false;
  Mission m(s, 3, opt);
  SnapshotEncoder enc(5);
  SnapshotDecoder dec;
  int keys = 0, deltas = 0;
  std::size_t key_bytes = 0, delta_bytes = 0;
  for (int t = 1; t <= 40; ++t) {
    m.tick();
    if (t == 23) enc.force_keyframe();
    const json p = enc.encode(m.world(), m.snapshot_context());
    const bool key = p["key"].get<bool>();
    (key ? keys : deltas) += 1;
    (key ? key_bytes : delta_bytes) += p["grids"].dump().size();
    if (t == 23) CHECK(key);
    dec.apply(p);

    const auto& f = m.world().field;
    const auto u = f.urgency_grid();
    const double scale = dec.urgency().scale;
    double mx = 0;
    for (double x : u) mx = std::max(mx, x);
    REQUIRE(scale == grid_scale(mx));
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double back = dec.urgency().values[i] * scale / 65535.0;
      REQUIRE(std::abs(back - u[i]) <= scale / 65535.0);
      REQUIRE(dec.blocked()[i] == f.blocked(f.cell_of(i)));
    }
    const auto pr = f.presence_grid();
    for (std::size_t i = 0; i < pr.size(); ++i) {
      REQUIRE(std::abs(dec.presence().values[i] * dec.presence().scale / 65535.0 - pr[i]) <=
              dec.presence().scale / 65535.0);
    }
    CHECK(p.contains("workload"));
    CHECK(p["vehicles"].size() == 2);
  }
  CHECK(keys >= 8);
  CHECK(deltas >= 24);
  CHECK(delta_bytes / deltas <= key_bytes / keys + 16);
}

TEST_CASE("a delta with no keyframe before it is an error") {
  const World w = build_world(small_scenario(), 1);
  SnapshotEncoder enc(10);
  enc.encode(w, json::object());
  const json delta = enc.encode(w, json::object());
  REQUIRE_FALSE(delta["key"].get<bool>());
  SnapshotDecoder fresh;
  CHECK_THROWS_AS(fresh.apply(delta), ProtocolError);
}

TEST_CASE("deltas stay small when few cells change") {
  Scenario s = parse_scenario(json::parse(R"({
    "name": "quiet", "map": {"width": 32, "height": 32, "cell_size": 25},
    "field": {"urgency_growth": 0, "diffusion_rate": 0},
    "vehicles": [{"id": 1, "pos": [400, 400]}]})"));
  Mission::Options opt;
  opt.keep_log = false;
  Mission m(s, 1, opt);
  SnapshotEncoder enc(100);
  m.tick();
  const std::size_t key = enc.encode(m.world(), json::object())["grids"].dump().size();
  m.tick();
  const json d = enc.encode(m.world(), json::object());
  CHECK(d["grids"]["presence"]["encoding"] == "delta");
  CHECK(d["grids"].dump().size() * 4 < key);
}
