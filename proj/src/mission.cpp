#include "swarmctl/mission.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace swarmctl {

using protocol::Kind;

bool is_command(Kind kind) { return kind == Kind::Command || kind == Kind::ModeChange; }

std::optional<Inbound> IngressQueue::push(Inbound frame) {
  std::lock_guard lock(mu_);
  if (q_.size() < capacity_) {
    q_.push_back(std::move(frame));
    return std::nullopt;
  }
  auto victim = std::find_if(q_.begin(), q_.end(), [](const Inbound& f) { return !is_command(f.kind); });
  if (victim != q_.end()) {
    Inbound dropped = std::move(*victim);
    q_.erase(victim);
    q_.push_back(std::move(frame));
    return dropped;
  }
  if (!is_command(frame.kind)) return frame;
  q_.push_back(std::move(frame));  // commands are admitted over capacity
  return std::nullopt;
}

std::vector<Inbound> IngressQueue::drain() {
  std::lock_guard lock(mu_);
  std::vector<Inbound> out(std::make_move_iterator(q_.begin()), std::make_move_iterator(q_.end()));
  q_.clear();
  return out;
}

std::size_t IngressQueue::size() const {
  std::lock_guard lock(mu_);
  return q_.size();
}

protocol::Frame error_frame(Tick tick, const std::string& message, std::optional<std::string> correlation) {
  protocol::Frame f;
  f.tick = tick;
  f.kind = Kind::Error;
  f.payload = {{"message", message}};
  f.correlation = std::move(correlation);
  return f;
}

namespace {

const char* method_name(WorkloadMethod m) { return m == WorkloadMethod::Windowed ? "windowed" : "continuous"; }

json vehicle_rows(const World& w) {
  json rows = json::array();
  for (const auto& v : w.vehicles) {
    rows.push_back(json::array({v.id.value, v.pos.x, v.pos.y, v.behavior.index(), v.airborne() ? 1 : 0}));
  }
  return rows;
}

bool overlaps(const AnomalyReport& a, const std::vector<AnomalyReport>& others) {
  for (const auto& o : others) {
    for (Cell c : a.region) {
      if (std::binary_search(o.region.begin(), o.region.end(), c)) return true;
    }
  }
  return false;
}

}  // namespace

Mission::Mission(Scenario scenario, std::uint64_t seed, Options options)
    : scenario_(std::move(scenario)),
      seed_(seed),
      options_(options),
      world_(build_world(scenario_, seed)),
      tracker_(world_.field.cell_count(), scenario_.anomaly_rule, scenario_.anomaly_min_age),
      continuous_(scenario_.workload),
      dialogue_(scenario_.strategy, scenario_.interpret),
      queue_(scenario_.ingress_capacity) {
  workload_ = compute_workload();

  json vehicles = json::array();
  for (const auto& v : world_.vehicles) {
    json o{{"id", v.id.value}, {"pos", json::array({v.pos.x, v.pos.y})}, {"speed", v.speed},
           {"sensor_radius", v.sensor_radius}};
    if (v.fuel) o["fuel"] = *v.fuel;
    vehicles.push_back(o);
  }
  json blocked = json::array();
  for (std::size_t i = 0; i < world_.field.cell_count(); ++i) {
    if (world_.field.blocked(world_.field.cell_of(i))) blocked.push_back(i);
  }
  const PheromoneField& f = world_.field;
  write_log("Init",
            {{"scenario", scenario_.name},
             {"hash", scenario_.hash},
             {"seed", seed_},
             {"ticks", options_.planned_ticks ? json(*options_.planned_ticks) : json(nullptr)},
             {"map", {{"width", f.width()}, {"height", f.height()}, {"cell_size", f.cell_size()}}},
             {"vehicles", vehicles},
             {"blocked", blocked},
             {"workload_method", method_name(scenario_.workload_method)},
             {"metrics",
              {{"revisit_target", scenario_.metrics.revisit_target},
               {"trace_interval", scenario_.metrics.trace_interval}}}});
}

void Mission::write_log(const std::string& category, const json& body) {
  const std::string line = json{{"tick", world_.tick}, {"category", category}, {"body", body}}.dump();
  for (unsigned char c : line) {
    log_hash_ ^= c;
    log_hash_ *= 1099511628211ULL;
  }
  log_hash_ ^= static_cast<unsigned char>('\n');
  log_hash_ *= 1099511628211ULL;
  if (options_.log_stream) *options_.log_stream << line << '\n';
  if (options_.keep_log) log_.push_back(line);
}

void Mission::emit(Kind kind, json payload, std::optional<std::string> correlation) {
  if (options_.collect_outbound) outbound_.push_back({kind, world_.tick, std::move(payload), std::move(correlation)});
}

std::vector<Outbound> Mission::take_outbound() {
  std::vector<Outbound> out;
  out.swap(outbound_);
  return out;
}

bool Mission::take_keyframe_request() {
  const bool r = keyframe_requested_;
  keyframe_requested_ = false;
  return r;
}

WorkloadState Mission::compute_workload() const {
  if (scenario_.workload_method == WorkloadMethod::Windowed) {
    return classify_windowed(world_.events, world_.tick, scenario_.workload);
  }
  return continuous_.state_at(world_.tick);
}

json Mission::snapshot_context() const {
  const WorkloadState windowed = classify_windowed(world_.events, world_.tick, scenario_.workload);
  const WorkloadState cont = continuous_.state_at(world_.tick);
  json anomalies = json::array();
  for (const auto& a : anomalies_) anomalies.push_back(protocol::encode(a, world_.field));
  const auto pending = dialogue_.pending_request();
  return {{"workload",
           {{"value", cont.continuous_level},
            {"level", workload_.discrete_level},
            {"method", method_name(scenario_.workload_method)},
            {"windowed_level", windowed.discrete_level},
            {"continuous_level", cont.discrete_level}}},
          {"strategy", protocol::encode(strategy())},
          {"anomalies", anomalies},
          {"pending_request", pending ? json(*pending) : json(nullptr)}};
}

std::string Mission::status_text(const std::vector<VehicleId>& ids) const {
  std::ostringstream os;
  bool first = true;
  for (const auto& v : world_.vehicles) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), v.id) == ids.end()) continue;
    if (!first) os << "; ";
    first = false;
    os << "uav" << v.id.value << ' ' << behavior_name(v.behavior) << " at (" << std::lround(v.pos.x) << ", "
       << std::lround(v.pos.y) << ")";
    if (const auto* p = std::get_if<Pursue>(&v.behavior)) {
      if (const SearchZone* z = world_.find_zone(p->zone)) os << " zone " << z->label;
    }
    if (!v.airborne()) os << " (grounded)";
  }
  return first ? std::string("no vehicles") : os.str();
}

void Mission::flush_mode_changes() {
  const auto& log = world_.modes.change_log();
  for (; mode_changes_seen_ < log.size(); ++mode_changes_seen_) {
    const json body = protocol::encode(log[mode_changes_seen_]);
    write_log("ModeChange", body);
  }
}

void Mission::flush_events() {
  for (; events_seen_ < world_.events.size(); ++events_seen_) {
    const MissionEvent& e = world_.events[events_seen_];
    json body{{"kind", e.kind == EventKind::Alarm ? "Alarm" : "Command"}, {"subject", e.subject}};
    json event{{"type", e.kind == EventKind::Alarm ? "alarm" : "command"}};
    if (e.kind == EventKind::Alarm) {
      const Alarm& a = world_.alarms.at(static_cast<std::size_t>(e.subject - 1));
      body["alarm"] = protocol::encode(a);
      event["alarm"] = body["alarm"];
    } else {
      event["vehicle"] = e.subject;
    }
    write_log("MissionEvent", body);
    emit(Kind::Event, event);
    continuous_.append(e);
  }
}

void Mission::apply_action(const OperatorAction& action, const std::optional<StrategyPair>& strategy,
                           const std::optional<EmissionDecision>& ack, const std::optional<std::string>& corr) {
  json st = strategy ? protocol::encode(*strategy) : json(nullptr);
  if (const auto* q = std::get_if<StatusQuery>(&action)) {
    // A reply the operator asked for is not subject to suppression.
    EmissionDecision d;
    d.emit = true;
    d.text = status_text(q->vehicles);
    d.formulation = ack ? ack->formulation : Formulation::Standard;
    json p = protocol::encode(d);
    p["strategy"] = st;
    emit(Kind::Emission, p, corr);
    return;
  }
  if (const auto* b = std::get_if<PlaceBeaconAction>(&action)) {
    const Beacon& placed = world_.beacons.place_beacon(b->pos, b->label);
    emit(Kind::Event, {{"type", "beacon"}, {"beacon", protocol::encode(placed)}});
  } else if (const auto* z = std::get_if<DefineZoneAction>(&action)) {
    const SearchZone& added = world_.add_zone(z->zone);
    emit(Kind::Event, {{"type", "zone"}, {"zone", protocol::encode(added)}});
  } else if (const auto* m = std::get_if<SetModeAction>(&action)) {
    const auto outcome = world_.modes.activate_mode(m->task, m->stage, m->mode, Requester::Operator, world_.tick);
    if (outcome != ActivationOutcome::Unchanged) emit(Kind::ModeChange, protocol::encode(world_.modes.change_log().back()));
  }
  if (ack) {
    json p = protocol::encode(*ack);
    p["strategy"] = st;
    emit(Kind::Emission, p, corr);
  }
}

void Mission::handle_dialogue(DialogueOutput out, const std::optional<std::string>& corr) {
  for (const auto& r : out.records) write_log("Grounding", protocol::encode(r));
  const json st = protocol::encode(out.strategy);
  if (out.command) {
    dispatch(world_, *out.command);
    emit(Kind::Command, {{"command", protocol::encode(*out.command)}, {"source", "dialogue"},
                         {"text", describe(*out.command, world_)}});
  }
  if (out.action) {
    apply_action(*out.action, out.strategy, out.emission, corr);
    return;
  }
  if (out.request) {
    json p = protocol::encode(*out.request);
    p["strategy"] = st;
    emit(Kind::CompletionRequest, p, corr);
  } else if (out.emission) {
    json p = protocol::encode(*out.emission);
    p["strategy"] = st;
    emit(Kind::Emission, p, corr);
  } else if (out.error) {
    emit(Kind::Error, {{"message", *out.error}}, corr);
  }
}

void Mission::process(const Inbound& in) {
  try {
    switch (in.kind) {
      case Kind::Utterance:
        handle_dialogue(dialogue_.on_utterance(protocol::decode_utterance(in.payload, world_.tick), world_, workload_),
                        in.correlation);
        break;
      case Kind::CompletionResponse: {
        const auto a = protocol::decode_completion(in.payload);
        const auto id = a.request ? a.request : dialogue_.pending_request();
        if (!id) throw protocol::ProtocolError("no completion request is open");
        handle_dialogue(dialogue_.on_completion(*id, a.values, a.choice, world_, workload_), in.correlation);
        break;
      }
      case Kind::Command: {
        const VehicleCommand cmd = protocol::decode_command(in.payload, world_);
        dispatch(world_, cmd);
        emit(Kind::Command, {{"command", protocol::encode(cmd)}, {"source", "operator"}, {"text", describe(cmd, world_)}},
             in.correlation);
        break;
      }
      case Kind::ModeChange: {
        auto str = [&](const char* k) {
          if (!in.payload.contains(k) || !in.payload[k].is_string()) {
            throw protocol::ProtocolError(std::string("ModeChange.") + k + " must be a string");
          }
          return in.payload[k].get<std::string>();
        };
        const std::string task = str("task");
        const OodaStage stage = parse_stage(str("stage"));
        const auto outcome = world_.modes.activate_mode(task, stage, str("mode"), Requester::Operator, world_.tick);
        json p{{"outcome", outcome == ActivationOutcome::Applied    ? "Applied"
                           : outcome == ActivationOutcome::Proposed ? "Proposed"
                                                                    : "Unchanged"},
               {"task", task},
               {"stage", to_string(stage)},
               {"active", world_.modes.active_mode(task, stage).value_or("")}};
        if (outcome != ActivationOutcome::Unchanged) p["change"] = protocol::encode(world_.modes.change_log().back());
        emit(Kind::ModeChange, p, in.correlation);
        break;
      }
      case Kind::Snapshot:
        keyframe_requested_ = true;
        break;
      default:
        throw protocol::ProtocolError("frames of kind " + std::string(protocol::to_string(in.kind)) +
                                      " are not accepted from clients");
    }
  } catch (const std::exception& e) {
    // invalid payloads and rejected commands leave the world untouched
    emit(Kind::Error, {{"message", e.what()}}, in.correlation);
  }
}

void Mission::tick() {
  world_.tick += 1;
  const Tick t = world_.tick;

  for (const auto& area : scenario_.no_fly) {
    if (area.from_tick != t || t == 0) continue;
    json cells = json::array();
    for (Cell c : rasterize(area, world_.field)) {
      if (world_.field.blocked(c)) continue;
      world_.field.set_blocked(c, true);
      cells.push_back(world_.field.index(c));
    }
    write_log("FieldChange", {{"blocked", cells}});
    emit(Kind::Event, {{"type", "field_change"}, {"blocked", cells}});
  }

  if (options_.run_script) {
    for (; script_next_ < scenario_.script.size() && scenario_.script[script_next_].tick <= t; ++script_next_) {
      const ScriptItem& item = scenario_.script[script_next_];
      Inbound in;
      in.kind = *protocol::parse_kind(item.kind);
      in.payload = item.payload;
      in.correlation = "script-" + std::to_string(script_next_);
      in.source = "script";
      if (auto dropped = queue_.push(std::move(in))) {
        emit(Kind::Error, {{"message", "ingress queue full; frame dropped"}}, dropped->correlation);
      }
    }
  }

  for (Inbound& in : queue_.drain()) {
    json body{{"kind", protocol::to_string(in.kind)}, {"payload", in.payload}, {"source", in.source}};
    if (in.correlation) body["correlation"] = *in.correlation;
    write_log("Input", body);
    process(in);
    flush_mode_changes();
  }

  world_.field.step();
  step_swarm(world_);

  tracker_.observe(world_.field);
  auto reports = tracker_.detect(world_.field);
  for (const auto& r : reports) {
    if (overlaps(r, anomalies_)) continue;
    const json body = protocol::encode(r, world_.field);
    write_log("AnomalyReport", body);
    emit(Kind::Event, {{"type", "anomaly"}, {"report", body}});
  }
  anomalies_ = std::move(reports);

  flush_events();
  const int before = workload_.discrete_level;
  workload_ = compute_workload();
  const WorkloadState windowed = classify_windowed(world_.events, t, scenario_.workload);
  const WorkloadState cont = continuous_.state_at(t);
  if (workload_.discrete_level != before) {
    emit(Kind::Event, {{"type", "workload"}, {"level", workload_.discrete_level},
                       {"strategy", protocol::encode(strategy())}});
  }
  write_log("Tick", {{"digest", to_hex(world_.digest())},
                     {"vehicles", vehicle_rows(world_)},
                     {"workload",
                      {{"value", cont.continuous_level},
                       {"level", workload_.discrete_level},
                       {"windowed", windowed.discrete_level},
                       {"continuous", cont.discrete_level}}}});
}

HeadlessResult run_headless(const Scenario& scenario, std::uint64_t seed, Tick ticks, std::ostream* log_stream) {
  if (ticks < 0) throw std::invalid_argument("ticks must be >= 0");
  Mission::Options opt;
  opt.collect_outbound = false;
  opt.log_stream = log_stream;
  opt.planned_ticks = ticks;
  Mission m(scenario, seed, opt);
  for (Tick t = 0; t < ticks; ++t) m.tick();
  return {m.log_lines(), m.log_digest()};
}

std::string_view to_string(ReplayReport::Status s) {
  switch (s) {
    case ReplayReport::Status::Success: return "success";
    case ReplayReport::Status::Partial: return "partial";
    case ReplayReport::Status::Diverged: return "diverged";
    case ReplayReport::Status::Refused: return "refused";
  }
  return "?";
}

ReplayReport replay(const std::vector<std::string>& log, const Scenario& scenario) {
  ReplayReport rep;
  auto refuse = [&](std::string msg) {
    rep.status = ReplayReport::Status::Refused;
    rep.message = std::move(msg);
    return rep;
  };
  if (log.empty()) return refuse("empty log");
  json init;
  try {
    init = json::parse(log.front());
  } catch (const json::parse_error&) {
    return refuse("first line is not a log record");
  }
  if (!init.is_object() || init.value("category", "") != "Init") return refuse("log does not start with an Init record");
  const json& ib = init["body"];
  const std::string hash = ib.value("hash", "");
  if (hash != scenario.hash) return refuse("scenario hash mismatch: log " + hash + ", scenario " + scenario.hash);
  const auto seed = ib.at("seed").get<std::uint64_t>();
  const Tick planned = ib["ticks"].is_null() ? -1 : ib["ticks"].get<Tick>();  // -1: open-ended session

  std::map<Tick, std::vector<Inbound>> inputs;
  std::map<Tick, std::string> digests;
  bool truncated = false;
  for (std::size_t i = 1; i < log.size(); ++i) {
    json rec;
    try {
      rec = json::parse(log[i]);
    } catch (const json::parse_error&) {
      if (i + 1 == log.size()) {
        truncated = true;  // cut mid-line
        break;
      }
      return refuse("line " + std::to_string(i + 1) + " is not a log record");
    }
    const std::string cat = rec.value("category", "");
    const Tick t = rec.value("tick", Tick{0});
    if (cat == "Tick") {
      digests[t] = rec["body"].value("digest", "");
    } else if (cat == "Input") {
      const json& b = rec["body"];
      const auto kind = protocol::parse_kind(b.value("kind", ""));
      if (!kind) return refuse("line " + std::to_string(i + 1) + ": unknown input kind");
      Inbound in;
      in.kind = *kind;
      in.payload = b.value("payload", json::object());
      if (b.contains("correlation")) in.correlation = b["correlation"].get<std::string>();
      in.source = "replay";
      inputs[t].push_back(std::move(in));
    }
  }
  const Tick last = digests.empty() ? 0 : digests.rbegin()->first;

  Mission::Options opt;
  opt.run_script = false;
  opt.collect_outbound = false;
  opt.keep_log = false;
  Mission m(scenario, seed, opt);
  for (Tick t = 1; t <= last; ++t) {
    if (auto it = inputs.find(t); it != inputs.end()) {
      for (const auto& in : it->second) m.ingress().push(in);
    }
    m.tick();
    const auto it = digests.find(t);
    const std::string actual = to_hex(m.world().digest());
    if (it == digests.end() || it->second != actual) {
      rep.status = ReplayReport::Status::Diverged;
      rep.divergence = t;
      rep.ticks_verified = t - 1;
      rep.message = it == digests.end() ? "Tick record missing" : "digest " + actual + " != logged " + it->second;
      return rep;
    }
  }
  rep.ticks_verified = last;
  if (truncated || last < planned) {
    rep.status = ReplayReport::Status::Partial;
    rep.message = "log ends at tick " + std::to_string(last) +
                  (planned >= 0 ? " of " + std::to_string(planned) : std::string());
  } else {
    rep.status = ReplayReport::Status::Success;
    rep.message = "all " + std::to_string(last) + " ticks reproduced";
  }
  return rep;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace swarmctl
