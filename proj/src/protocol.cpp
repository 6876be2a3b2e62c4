#include "swarmctl/protocol.hpp"

#include "swarmctl/simd/field_kernels.hpp"

#include <algorithm>
#include <cmath>

namespace swarmctl::protocol {
namespace {

constexpr double kDeg = kPi / 180.0;

constexpr std::array<std::pair<Kind, std::string_view>, 9> kKinds{{
    {Kind::Snapshot, "Snapshot"},
    {Kind::Event, "Event"},
    {Kind::Utterance, "Utterance"},
    {Kind::CompletionRequest, "CompletionRequest"},
    {Kind::CompletionResponse, "CompletionResponse"},
    {Kind::Emission, "Emission"},
    {Kind::Command, "Command"},
    {Kind::ModeChange, "ModeChange"},
    {Kind::Error, "Error"},
}};

json pt(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 get_point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ProtocolError(what + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

const json& field(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) throw ProtocolError(ctx + "." + key + " is required");
  return obj.at(key);
}

json ids(const std::vector<VehicleId>& v) {
  json a = json::array();
  for (auto id : v) a.push_back(id.value);
  return a;
}

}  // namespace

std::string_view to_string(Kind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "?";
}

std::optional<Kind> parse_kind(std::string_view text) {
  for (const auto& [k, name] : kKinds)
    if (name == text) return k;
  return std::nullopt;
}

json to_json(const Frame& f) {
  json j{{"seq", f.seq}, {"tick", f.tick}, {"kind", to_string(f.kind)}, {"payload", f.payload}};
  if (f.correlation) j["correlation"] = *f.correlation;
  return j;
}

Frame parse_frame(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw ProtocolError("frame is not valid JSON");
  }
  if (!j.is_object()) throw ProtocolError("frame must be a JSON object");
  Frame f;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "seq" && k != "tick" && k != "kind" && k != "payload" && k != "correlation") {
      throw ProtocolError("unknown frame field '" + k + "'");
    }
  }
  if (j.contains("seq")) {
    if (!j["seq"].is_number_integer()) throw ProtocolError("seq must be an integer");
    f.seq = j["seq"].get<std::int64_t>();
  }
  if (j.contains("tick")) {
    if (!j["tick"].is_number_integer()) throw ProtocolError("tick must be an integer");
    f.tick = j["tick"].get<Tick>();
  }
  if (!j.contains("kind") || !j["kind"].is_string()) throw ProtocolError("kind must be a string");
  const auto kind = parse_kind(j["kind"].get<std::string>());
  if (!kind) throw ProtocolError("unknown kind '" + j["kind"].get<std::string>() + "'");
  f.kind = *kind;
  if (j.contains("payload")) {
    if (!j["payload"].is_object()) throw ProtocolError("payload must be an object");
    f.payload = j["payload"];
  }
  if (j.contains("correlation")) {
    const json& c = j["correlation"];
    if (c.is_string()) f.correlation = c.get<std::string>();
    else if (c.is_number_integer()) f.correlation = std::to_string(c.get<std::int64_t>());
    else throw ProtocolError("correlation must be a string or integer");
  }
  return f;
}

json encode(const VehicleCommand& cmd) {
  json j{{"kind", to_string(cmd.kind)}, {"vehicles", ids(cmd.vehicles)}};
  if (cmd.kind == VehicleCommand::Kind::Goto) {
    json routes = json::array();
    for (const auto& r : cmd.routes) {
      json route = json::array();
      for (Vec2 p : r) route.push_back(pt(p));
      routes.push_back(route);
    }
    j["routes"] = routes;
    if (cmd.beacon) j["beacon"] = cmd.beacon->value;
  }
  if (cmd.zone) j["zone"] = cmd.zone->value;
  if (cmd.direction) j["direction_deg"] = *cmd.direction / kDeg;
  return j;
}

VehicleCommand decode_command(const json& p, const World& world) {
  VehicleCommand cmd;
  const std::string ctx = "Command";
  const json& kind = field(p, "kind", ctx);
  if (!kind.is_string()) throw ProtocolError("Command.kind must be a string");
  const std::string k = kind.get<std::string>();
  if (k == "goto") cmd.kind = VehicleCommand::Kind::Goto;
  else if (k == "pursue") cmd.kind = VehicleCommand::Kind::Pursue;
  else if (k == "patrol") cmd.kind = VehicleCommand::Kind::Patrol;
  else throw ProtocolError("Command.kind must be goto, pursue or patrol");

  const json& vs = field(p, "vehicles", ctx);
  if (!vs.is_array()) throw ProtocolError("Command.vehicles must be an array of ids");
  for (const auto& v : vs) {
    if (!v.is_number_integer()) throw ProtocolError("Command.vehicles must be an array of ids");
    cmd.vehicles.push_back(VehicleId{v.get<std::int32_t>()});
  }
  if (p.contains("routes")) {
    const json& rs = p["routes"];
    if (!rs.is_array()) throw ProtocolError("Command.routes must be an array of routes");
    for (const auto& r : rs) {
      if (!r.is_array()) throw ProtocolError("Command.routes must be an array of routes");
      std::vector<Vec2> route;
      for (const auto& q : r) route.push_back(get_point(q, "Command.routes point"));
      cmd.routes.push_back(std::move(route));
    }
    // A single route applies to every listed vehicle.
    if (cmd.routes.size() == 1 && cmd.vehicles.size() > 1) cmd.routes.resize(cmd.vehicles.size(), cmd.routes[0]);
  }
  if (p.contains("zone")) {
    const json& z = p["zone"];
    if (z.is_number_integer()) {
      cmd.zone = ZoneId{z.get<std::int32_t>()};
    } else if (z.is_string()) {
      const SearchZone* zone = world.find_zone(z.get<std::string>());
      if (!zone) throw ProtocolError("unknown zone '" + z.get<std::string>() + "'");
      cmd.zone = zone->id;
    } else {
      throw ProtocolError("Command.zone must be an id or label");
    }
  }
  if (p.contains("direction_deg")) {
    if (!p["direction_deg"].is_number()) throw ProtocolError("Command.direction_deg must be a number");
    cmd.direction = p["direction_deg"].get<double>() * kDeg;
  }
  if (p.contains("beacon")) {
    if (!p["beacon"].is_number_integer()) throw ProtocolError("Command.beacon must be an id");
    cmd.beacon = BeaconId{p["beacon"].get<std::int32_t>()};
  }
  return cmd;
}

OperatorUtterance decode_utterance(const json& p, Tick tick) {
  OperatorUtterance u;
  u.tick = tick;
  if (p.contains("text")) {
    if (!p["text"].is_string()) throw ProtocolError("Utterance.text must be a string");
    u.text = p["text"].get<std::string>();
  }
  if (p.contains("channel")) {
    const json& c = p["channel"];
    if (c == "console") u.channel = Channel::Console;
    else if (c == "gesture") u.channel = Channel::Gesture;
    else throw ProtocolError("Utterance.channel must be console or gesture");
  }
  if (p.contains("gestures")) {
    if (!p["gestures"].is_array()) throw ProtocolError("Utterance.gestures must be an array");
    for (const auto& g : p["gestures"]) {
      if (!g.is_object()) throw ProtocolError("gesture must be an object");
      GesturePrimitive prim;
      const json& kind = field(g, "kind", "gesture");
      if (kind == "click") prim.kind = GesturePrimitive::Kind::Click;
      else if (kind == "drag") prim.kind = GesturePrimitive::Kind::Drag;
      else throw ProtocolError("gesture.kind must be click or drag");
      prim.from = get_point(field(g, prim.kind == GesturePrimitive::Kind::Click ? "at" : "from", "gesture"),
                            "gesture point");
      prim.to = prim.kind == GesturePrimitive::Kind::Drag ? get_point(field(g, "to", "gesture"), "gesture.to") : prim.from;
      if (g.contains("breadth_deg")) {
        if (!g["breadth_deg"].is_number()) throw ProtocolError("gesture.breadth_deg must be a number");
        prim.breadth = g["breadth_deg"].get<double>() * kDeg;
      }
      u.gestures.push_back(prim);
    }
  }
  if (u.text.empty() && u.gestures.empty()) throw ProtocolError("Utterance needs text or gestures");
  return u;
}

json encode(const OperatorUtterance& u) {
  json j{{"text", u.text}, {"channel", u.channel == Channel::Console ? "console" : "gesture"}};
  if (!u.gestures.empty()) {
    json gs = json::array();
    for (const auto& g : u.gestures) {
      json o;
      if (g.kind == GesturePrimitive::Kind::Click) {
        o = {{"kind", "click"}, {"at", pt(g.from)}};
      } else {
        o = {{"kind", "drag"}, {"from", pt(g.from)}, {"to", pt(g.to)}};
        if (g.breadth) o["breadth_deg"] = *g.breadth / kDeg;
      }
      gs.push_back(o);
    }
    j["gestures"] = gs;
  }
  return j;
}

CompletionAnswer decode_completion(const json& p) {
  CompletionAnswer a;
  const json& r = field(p, "request", "CompletionResponse");
  if (r.is_number_integer()) a.request = r.get<int>();
  else if (r != "pending") throw ProtocolError("CompletionResponse.request must be an id or \"pending\"");
  if (p.contains("choice")) {
    if (!p["choice"].is_number_unsigned()) throw ProtocolError("CompletionResponse.choice must be a non-negative index");
    a.choice = p["choice"].get<std::size_t>();
  }
  if (p.contains("values")) {
    if (!p["values"].is_object()) throw ProtocolError("CompletionResponse.values must be an object");
    for (auto it = p["values"].begin(); it != p["values"].end(); ++it) {
      SlotValue v;
      const json& x = it.value();
      if (x.is_number()) v.number = x.get<double>();
      else if (x.is_string()) v.text = x.get<std::string>();
      else v.point = get_point(x, "slot '" + it.key() + "'");
      a.values[it.key()] = v;
    }
  }
  return a;
}

json encode(const CompletionAnswer& a) {
  json j{{"request", a.request ? json(*a.request) : json("pending")}};
  if (a.choice) j["choice"] = *a.choice;
  json vals = json::object();
  for (const auto& [k, v] : a.values) {
    if (v.number) vals[k] = *v.number;
    else if (v.point) vals[k] = pt(*v.point);
    else if (v.text) vals[k] = *v.text;
  }
  j["values"] = vals;
  return j;
}

namespace {
json encode_candidate(const Candidate& c) {
  json j{{"vehicles", ids(c.vehicles)}, {"score", c.score}, {"description", c.description}};
  if (c.zone) j["zone"] = c.zone->value;
  if (c.beacon) j["beacon"] = c.beacon->value;
  return j;
}
}  // namespace

json encode(const CompletionRequest& req) {
  json slots = json::array();
  for (const auto& s : req.slots) slots.push_back({{"name", s.name}, {"type", s.type}, {"prompt", s.prompt}});
  json choices = json::array();
  for (const auto& c : req.choices) choices.push_back(encode_candidate(c));
  return {{"id", req.id}, {"disambiguation", req.disambiguation}, {"prompt", req.prompt},
          {"slots", slots}, {"choices", choices}};
}

json encode(const EmissionDecision& d) {
  return {{"emit", d.emit}, {"severity", to_string(d.severity)}, {"modality", to_string(d.modality)},
          {"formulation", to_string(d.formulation)}, {"text", d.text}};
}

json encode(const StrategyPair& s) {
  return {{"interpretation", to_string(s.interpretation)}, {"generation", to_string(s.generation)}};
}

json encode(const ModeChange& c) {
  return {{"task", c.task}, {"stage", to_string(c.stage)}, {"from", c.from}, {"to", c.to},
          {"requester", to_string(c.requester)}, {"applied", c.applied}};
}

json encode(const Alarm& a) {
  return {{"id", a.id.value}, {"pos", pt(a.pos)}, {"tick", a.tick},
          {"linked_to", a.linked_to ? json(a.linked_to->value) : json(nullptr)},
          {"false_alarm", !a.source.has_value()}};
}

json encode(const AnomalyReport& r, const PheromoneField& f) {
  json cells = json::array();
  for (Cell c : r.region) cells.push_back(f.index(c));
  return {{"cells", cells}, {"severity", r.severity}, {"age", r.age}};
}

json encode(const Interpretation& I) {
  const Referents& R = I.referents;
  json ref{{"vehicles", ids(R.vehicles)}};
  if (R.zone) ref["zone"] = R.zone->value;
  if (R.beacon) ref["beacon"] = R.beacon->value;
  if (R.point) ref["point"] = pt(*R.point);
  if (!R.label.empty()) ref["label"] = R.label;
  if (R.direction) ref["direction_deg"] = *R.direction / kDeg;
  const char* conf = I.confidence == Confidence::Unique ? "Unique"
                     : I.confidence == Confidence::Ambiguous ? "Ambiguous" : "Failed";
  json j{{"intent", to_string(I.intent)}, {"confidence", conf}, {"referents", ref}, {"missing", I.missing}};
  if (I.confidence == Confidence::Ambiguous) {
    json cs = json::array();
    for (const auto& c : I.candidates) cs.push_back(encode_candidate(c));
    j["ambiguous_slot"] = I.ambiguous_slot;
    j["candidates"] = cs;
  }
  if (I.confidence == Confidence::Failed) {
    j["failure"] = I.failure == FailureKind::NonUnderstanding ? "NonUnderstanding" : "InvalidReference";
    j["reason"] = I.reason;
  }
  return j;
}

json encode(const GroundingRecord& r) {
  return {{"utterance", encode(r.utterance)}, {"interpretation", encode(r.interpretation)},
          {"resolution", to_string(r.resolution)}, {"rounds", r.rounds}, {"strategy", encode(r.strategy)}};
}

json encode(const SearchZone& z) {
  return {{"id", z.id.value}, {"label", z.label}, {"center", pt(z.center)},
          {"direction_deg", z.direction ? json(*z.direction / kDeg) : json(nullptr)},
          {"breadth_deg", z.breadth / kDeg}, {"range", z.range}};
}

json encode(const Beacon& b) { return {{"id", b.id.value}, {"label", b.label}, {"pos", pt(b.pos)}}; }

double grid_scale(double max_value) {
  double s = 1.0;
  while (s < max_value) s *= 2.0;
  return s;
}

json SnapshotEncoder::encode_grid(std::span<const double> v, Grid& prev, bool key) {
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, x);
  const double scale = grid_scale(mx);
  std::vector<std::uint16_t> q(v.size());
  simd::active_kernels().quantize(v, scale, q);
  json g{{"scale", scale}};
  if (key || scale != prev.scale || prev.values.size() != q.size()) {
    g["encoding"] = "key";
    g["values"] = q;
  } else {
    json changes = json::array();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] != prev.values[i]) {
        changes.push_back(i);
        changes.push_back(q[i]);
      }
    }
    // pairs cost twice a plain value: past half the grid, resend it whole
    if (changes.size() >= q.size()) {
      g["encoding"] = "key";
      g["values"] = q;
    } else {
      g["encoding"] = "delta";
      g["changes"] = changes;
    }
  }
  prev.scale = scale;
  prev.values = std::move(q);
  return g;
}

json SnapshotEncoder::encode(const World& w, const json& context) {
  const PheromoneField& f = w.field;
  const std::pair<int, int> dims{f.width(), f.height()};
  const bool key = since_key_ < 0 || since_key_ + 1 >= keyframe_every_ || dims != dims_;
  since_key_ = key ? 0 : since_key_ + 1;
  dims_ = dims;

  json vehicles = json::array();
  for (const auto& v : w.vehicles) {
    json o{{"id", v.id.value}, {"pos", pt(v.pos)}, {"behavior", behavior_name(v.behavior)},
           {"airborne", v.airborne()}, {"sensor_radius", v.sensor_radius}};
    if (const auto* p = std::get_if<Pursue>(&v.behavior)) o["zone"] = p->zone.value;
    if (const auto* g = std::get_if<Goto>(&v.behavior)) {
      json rest = json::array();
      for (std::size_t i = g->next; i < g->waypoints.size(); ++i) rest.push_back(pt(g->waypoints[i]));
      o["route"] = rest;
    }
    if (v.fuel) o["fuel"] = *v.fuel;
    vehicles.push_back(o);
  }
  json alarms = json::array();
  for (const auto& a : w.alarms) {
    json o = protocol::encode(a);
    o["recent"] = a.recent(w.tick, w.config.recency_window);
    alarms.push_back(o);
  }
  json zones = json::array();
  for (const auto& z : w.zones) zones.push_back(protocol::encode(z));
  json beacons = json::array();
  for (const auto& b : w.beacons.all()) beacons.push_back(protocol::encode(b));
  json modes = json::array();
  for (const auto& [k, cell] : w.modes.cells()) {
    json ids = json::array();
    for (const auto& m : cell.modes) ids.push_back(m.id);
    modes.push_back({{"task", k.first}, {"stage", to_string(k.second)},
                     {"active", w.modes.active_mode(k.first, k.second).value_or("")},
                     {"policy", to_string(cell.policy)}, {"pinned", cell.operator_pinned}, {"modes", ids}});
  }
  std::vector<std::uint32_t> words((f.cell_count() + 31) / 32, 0);
  for (std::size_t i = 0; i < f.cell_count(); ++i) {
    if (f.blocked(f.cell_of(i))) words[i / 32] |= 1u << (i % 32);
  }

  json p{{"key", key},
         {"map", {{"width", f.width()}, {"height", f.height()}, {"cell_size", f.cell_size()}}},
         {"vehicles", vehicles},
         {"alarms", alarms},
         {"zones", zones},
         {"beacons", beacons},
         {"modes", modes},
         {"grids",
          {{"urgency", encode_grid(f.urgency_grid(), urgency_, key)},
           {"presence", encode_grid(f.presence_grid(), presence_, key)},
           {"blocked", {{"words", words}}}}}};
  for (auto it = context.begin(); it != context.end(); ++it) p[it.key()] = it.value();
  return p;
}

void SnapshotDecoder::apply_grid(const json& g, GridView& view, std::size_t cells) {
  const std::string enc = g.at("encoding").get<std::string>();
  if (enc == "key") {
    view.values = g.at("values").get<std::vector<std::uint16_t>>();
    if (view.values.size() != cells) throw ProtocolError("keyframe grid has the wrong size");
  } else if (enc == "delta") {
    if (view.values.size() != cells) throw ProtocolError("delta grid without a keyframe");
    const auto& ch = g.at("changes");
    for (std::size_t i = 0; i + 1 < ch.size(); i += 2) {
      const auto idx = ch[i].get<std::size_t>();
      if (idx >= cells) throw ProtocolError("delta index out of range");
      view.values[idx] = ch[i + 1].get<std::uint16_t>();
    }
  } else {
    throw ProtocolError("unknown grid encoding '" + enc + "'");
  }
  view.scale = g.at("scale").get<double>();
}

void SnapshotDecoder::apply(const json& p) {
  const auto& m = p.at("map");
  const std::size_t cells = m.at("width").get<std::size_t>() * m.at("height").get<std::size_t>();
  const auto& grids = p.at("grids");
  apply_grid(grids.at("urgency"), urgency_, cells);
  apply_grid(grids.at("presence"), presence_, cells);
  const auto words = grids.at("blocked").at("words").get<std::vector<std::uint32_t>>();
  blocked_.assign(cells, false);
  for (std::size_t i = 0; i < cells && i / 32 < words.size(); ++i) blocked_[i] = (words[i / 32] >> (i % 32)) & 1u;
}

}  // namespace swarmctl::protocol
