#include "swarmctl/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace swarmctl {
namespace {

constexpr double kDeg = kPi / 180.0;

// Walks one JSON object, records type/range problems under a dotted path and
// reports keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path, std::vector<std::string>& errs)
      : j_(j), path_(std::move(path)), errs_(errs) {
    if (!j_.is_object()) {
      fail("must be an object");
      ok_ = false;
    }
  }
  Reader(const Reader&) = delete;
  ~Reader() {
    if (!ok_) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) errs_.push_back(at(it.key()) + ": unknown field");
    }
  }

  bool ok() const { return ok_; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return ok_ && j_.contains(key) && !j_.at(key).is_null();
  }
  const json* raw(const std::string& key) { return has(key) ? &j_.at(key) : nullptr; }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void fail(const std::string& msg) { errs_.push_back((path_.empty() ? "<root>" : path_) + ": " + msg); }
  void fail(const std::string& key, const std::string& msg) { errs_.push_back(at(key) + ": " + msg); }

  double number(const std::string& key, double def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number()) {
      fail(key, "must be a number");
      return def;
    }
    return v->get<double>();
  }
  std::optional<double> opt_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }
  long long integer(const std::string& key, long long def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_integer()) {
      fail(key, "must be an integer");
      return def;
    }
    return v->get<long long>();
  }
  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      fail(key, "must be true or false");
      return def;
    }
    return v->get<bool>();
  }
  std::string string(const std::string& key, const std::string& def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) {
      fail(key, "must be a string");
      return def;
    }
    return v->get<std::string>();
  }
  std::optional<Vec2> point(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    auto p = as_point(*v);
    if (!p) fail(key, "must be [x, y]");
    return p;
  }
  std::vector<Vec2> points(const std::string& key) {
    std::vector<Vec2> out;
    const json* v = raw(key);
    if (!v) return out;
    if (!v->is_array()) {
      fail(key, "must be an array of [x, y]");
      return out;
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      auto p = as_point((*v)[i]);
      if (!p) fail(key, "element " + std::to_string(i) + " must be [x, y]");
      else out.push_back(*p);
    }
    return out;
  }
  const json* array(const std::string& key) {
    const json* v = raw(key);
    if (v && !v->is_array()) {
      fail(key, "must be an array");
      return nullptr;
    }
    return v;
  }

  static std::optional<Vec2> as_point(const json& v) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) return std::nullopt;
    return Vec2{v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

std::string index_path(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

bool inside(const std::vector<Vec2>& poly, Vec2 p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

void require(bool cond, std::vector<std::string>& errs, const std::string& what) {
  if (!cond) errs.push_back(what);
}


void validate_workload(const WorkloadParams& p, const std::string& path, std::vector<std::string>& errs) {
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    errs.push_back(path + ": " + e.what());
  }
}

void read_workload(const json& w, const std::string& path, std::vector<std::string>& errs, WorkloadParams& p,
                   WorkloadMethod* method) {
  {
    Reader wr(w, path, errs);
    if (method) {
      const std::string m = wr.string("method", "continuous");
      if (m == "continuous") *method = WorkloadMethod::Continuous;
      else if (m == "windowed") *method = WorkloadMethod::Windowed;
      else wr.fail("method", "must be \"continuous\" or \"windowed\"");
    }
    p.window = wr.integer("window", p.window);
    p.command_weight = wr.number("command_weight", p.command_weight);
    p.alarm_weight = wr.number("alarm_weight", p.alarm_weight);
    p.half_life = wr.number("half_life", p.half_life);
    if (const json* t = wr.raw("thresholds")) {
      if (!t->is_array() || t->size() != 3 || !std::all_of(t->begin(), t->end(), [](const json& x) { return x.is_number(); })) {
        wr.fail("thresholds", "must be three numbers");
      } else {
        for (std::size_t k = 0; k < 3; ++k) p.thresholds[k] = (*t)[k].get<double>();
      }
    }
  }
  validate_workload(p, path, errs);
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string s = "invalid scenario:";
        for (const auto& p : problems) s += "\n  " + p;
        return s;
      }()),
      problems_(std::move(problems)) {}

WorkloadParams parse_workload_params(const json& doc) {
  std::vector<std::string> errs;
  WorkloadParams p;
  read_workload(doc, "", errs, p, nullptr);
  if (!errs.empty()) throw ScenarioError(std::move(errs));
  return p;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string scenario_hash(const json& doc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return to_hex(h);
}

Scenario parse_scenario(const json& doc) {
  Scenario s;
  std::vector<std::string> errs;
  {
    Reader r(doc, "", errs);
    if (!r.ok()) throw ScenarioError(errs);
    s.name = r.string("name", "");

    if (const json* m = r.raw("map")) {
      Reader mr(*m, "map", errs);
      s.width = static_cast<int>(mr.integer("width", s.width));
      s.height = static_cast<int>(mr.integer("height", s.height));
      s.cell_size = mr.number("cell_size", s.cell_size);
    }
    require(s.width > 0 && s.height > 0 && s.width <= 4096 && s.height <= 4096, errs,
            "map: width and height must be in 1..4096");
    require(s.cell_size > 0, errs, "map.cell_size: must be positive");
    const Vec2 extent{s.width * s.cell_size, s.height * s.cell_size};
    auto in_map = [&](Vec2 p) { return p.x >= 0 && p.y >= 0 && p.x <= extent.x && p.y <= extent.y; };

    if (const json* f = r.raw("field")) {
      Reader fr(*f, "field", errs);
      s.field.urgency_growth = fr.number("urgency_growth", s.field.urgency_growth);
      s.field.evaporation_rate = fr.number("evaporation_rate", s.field.evaporation_rate);
      s.field.diffusion_rate = fr.number("diffusion_rate", s.field.diffusion_rate);
      s.field.presence_deposit = fr.number("presence_deposit", s.field.presence_deposit);
      s.field.presence_evaporation = fr.number("presence_evaporation", s.field.presence_evaporation);
    }
    try {
      s.field.validate();
    } catch (const std::invalid_argument& e) {
      errs.push_back(std::string("field: ") + e.what());
    }

    if (const json* arr = r.array("no_fly")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string p = index_path("no_fly", i);
        Reader ar((*arr)[i], p, errs);
        if (!ar.ok()) continue;
        NoFlyArea a;
        a.from_tick = ar.integer("from_tick", 0);
        a.polygon = ar.points("polygon");
        if (const json* holes = ar.array("holes")) {
          for (std::size_t k = 0; k < holes->size(); ++k) {
            std::vector<Vec2> hole;
            const json& h = (*holes)[k];
            bool good = h.is_array() && h.size() >= 3;
            if (good) {
              for (const auto& v : h) {
                auto pt = Reader::as_point(v);
                if (!pt) good = false;
                else hole.push_back(*pt);
              }
            }
            if (!good) errs.push_back(index_path(p + ".holes", k) + ": must be a polygon of >= 3 points");
            else a.holes.push_back(hole);
          }
        }
        if (const json* cells = ar.array("cells")) {
          for (std::size_t k = 0; k < cells->size(); ++k) {
            const json& c = (*cells)[k];
            if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
              errs.push_back(index_path(p + ".cells", k) + ": must be [row, col]");
              continue;
            }
            const Cell cell{c[0].get<int>(), c[1].get<int>()};
            if (cell.row < 0 || cell.col < 0 || cell.row >= s.height || cell.col >= s.width) {
              errs.push_back(index_path(p + ".cells", k) + ": outside the grid");
              continue;
            }
            a.cells.push_back(cell);
          }
        }
        if (!a.polygon.empty() && a.polygon.size() < 3) errs.push_back(p + ".polygon: needs >= 3 points");
        if (a.polygon.empty() && a.cells.empty()) errs.push_back(p + ": needs a polygon or cells");
        if (!a.holes.empty() && a.polygon.empty()) errs.push_back(p + ".holes: need a polygon");
        if (a.from_tick < 0) errs.push_back(p + ".from_tick: must be >= 0");
        s.no_fly.push_back(std::move(a));
      }
    }

    VehicleSpec defaults;
    std::set<int> ids;
    if (const json* arr = r.array("vehicles")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string p = index_path("vehicles", i);
        Reader vr((*arr)[i], p, errs);
        if (!vr.ok()) continue;
        VehicleSpec v;
        v.id = static_cast<int>(vr.integer("id", static_cast<long long>(i + 1)));
        v.pos = vr.point("pos");
        v.speed = vr.number("speed", defaults.speed);
        v.sensor_radius = vr.number("sensor_radius", defaults.sensor_radius);
        if (vr.has("fuel")) v.fuel = vr.integer("fuel", 0);
        if (v.id < 1) vr.fail("id", "must be >= 1");
        if (!ids.insert(v.id).second) vr.fail("id", "duplicate vehicle id");
        if (v.pos && !in_map(*v.pos)) vr.fail("pos", "outside the map");
        if (!(v.speed > 0)) vr.fail("speed", "must be positive");
        if (!(v.sensor_radius > 0)) vr.fail("sensor_radius", "must be positive");
        if (v.fuel && *v.fuel < 0) vr.fail("fuel", "must be >= 0");
        s.vehicles.push_back(v);
      }
    }
    if (const json* f = r.raw("fleet")) {
      Reader fr(*f, "fleet", errs);
      const long long count = fr.integer("count", 0);
      VehicleSpec v;
      v.speed = fr.number("speed", defaults.speed);
      v.sensor_radius = fr.number("sensor_radius", defaults.sensor_radius);
      if (fr.has("fuel")) v.fuel = fr.integer("fuel", 0);
      if (count < 0 || count > 10000) fr.fail("count", "must be in 0..10000");
      if (!(v.speed > 0)) fr.fail("speed", "must be positive");
      if (!(v.sensor_radius > 0)) fr.fail("sensor_radius", "must be positive");
      int next = ids.empty() ? 1 : *ids.rbegin() + 1;
      for (long long k = 0; k < count && count <= 10000; ++k) {
        v.id = next++;
        s.vehicles.push_back(v);
      }
    }

    if (const json* p = r.raw("patrol")) {
      Reader pr(*p, "patrol", errs);
      const std::string policy = pr.string("policy", "pheromone");
      if (policy == "pheromone") s.swarm.policy = PatrolPolicy::Pheromone;
      else if (policy == "random_walk") s.swarm.policy = PatrolPolicy::RandomWalk;
      else pr.fail("policy", "must be \"pheromone\" or \"random_walk\"");
      s.swarm.patrol_radius = static_cast<int>(pr.integer("radius", s.swarm.patrol_radius));
      if (s.swarm.patrol_radius < 1 || s.swarm.patrol_radius > 64) pr.fail("radius", "must be in 1..64");
    }

    if (const json* a = r.raw("alarms")) {
      Reader ar(*a, "alarms", errs);
      s.swarm.link_distance = ar.number("link_distance", s.swarm.link_distance);
      s.swarm.link_age = ar.integer("link_age", s.swarm.link_age);
      s.swarm.recency_window = ar.integer("recency_window", s.swarm.recency_window);
      if (ar.has("pursuit_timeout")) s.swarm.pursuit_timeout = ar.integer("pursuit_timeout", 0);
      if (!(s.swarm.link_distance >= 0)) ar.fail("link_distance", "must be >= 0");
      if (s.swarm.link_age < 0) ar.fail("link_age", "must be >= 0");
      if (s.swarm.recency_window < 0) ar.fail("recency_window", "must be >= 0");
      if (s.swarm.pursuit_timeout && *s.swarm.pursuit_timeout < 1) ar.fail("pursuit_timeout", "must be >= 1");
    }

    if (const json* arr = r.array("intruders")) {
      std::set<int> iids;
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Reader ir((*arr)[i], index_path("intruders", i), errs);
        if (!ir.ok()) continue;
        IntruderSpec in;
        in.id = static_cast<int>(ir.integer("id", static_cast<long long>(i + 1)));
        in.start_tick = ir.integer("start_tick", 0);
        in.speed = ir.number("speed", in.speed);
        in.path = ir.points("path");
        if (!iids.insert(in.id).second) ir.fail("id", "duplicate intruder id");
        if (in.path.empty()) ir.fail("path", "needs at least one point");
        for (Vec2 p : in.path)
          if (!in_map(p)) {
            ir.fail("path", "point outside the map");
            break;
          }
        if (!(in.speed > 0)) ir.fail("speed", "must be positive");
        s.intruders.push_back(std::move(in));
      }
    }

    if (const json* arr = r.array("false_alarms")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Reader fr((*arr)[i], index_path("false_alarms", i), errs);
        if (!fr.ok()) continue;
        FalseAlarm fa;
        fa.tick = fr.integer("tick", 1);
        fa.pos = fr.point("pos").value_or(Vec2{});
        if (!fr.has("pos")) fr.fail("pos", "required");
        if (fa.tick < 1) fr.fail("tick", "must be >= 1");
        s.false_alarms.push_back(fa);
      }
    }

    if (const json* arr = r.array("zones")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Reader zr((*arr)[i], index_path("zones", i), errs);
        if (!zr.ok()) continue;
        ZoneSpec z;
        z.label = zr.string("label", "");
        z.center = zr.point("center").value_or(Vec2{});
        z.direction_deg = zr.opt_number("direction_deg");
        z.breadth_deg = zr.number("breadth_deg", z.breadth_deg);
        z.range = zr.number("range", z.range);
        if (z.label.empty()) zr.fail("label", "required");
        if (!zr.has("center")) zr.fail("center", "required");
        else if (!in_map(z.center)) zr.fail("center", "outside the map");
        if (!(z.breadth_deg > 0 && z.breadth_deg <= 360)) zr.fail("breadth_deg", "must be in (0, 360]");
        if (!(z.range > 0)) zr.fail("range", "must be positive");
        s.zones.push_back(z);
      }
    }

    if (const json* arr = r.array("beacons")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Reader br((*arr)[i], index_path("beacons", i), errs);
        if (!br.ok()) continue;
        BeaconSpec b;
        b.label = br.string("label", "");
        b.pos = br.point("pos").value_or(Vec2{});
        if (b.label.empty()) br.fail("label", "required");
        if (!br.has("pos")) br.fail("pos", "required");
        else if (!in_map(b.pos)) br.fail("pos", "outside the map");
        s.beacons.push_back(b);
      }
    }

    if (const json* arr = r.array("modes")) {
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Reader mr((*arr)[i], index_path("modes", i), errs);
        if (!mr.ok()) continue;
        s.modes.push_back({mr.string("task", ""), mr.string("stage", ""), mr.string("mode", "")});
      }
    }

    if (const json* w = r.raw("workload")) read_workload(*w, "workload", errs, s.workload, &s.workload_method);
    else validate_workload(s.workload, "workload", errs);

    if (const json* a = r.raw("anomaly")) {
      Reader ar(*a, "anomaly", errs);
      s.anomaly_rule.value = ar.number("threshold", s.anomaly_rule.value);
      s.anomaly_rule.relative_to_mean = ar.boolean("relative_to_mean", s.anomaly_rule.relative_to_mean);
      s.anomaly_min_age = ar.integer("min_age", s.anomaly_min_age);
      if (!(s.anomaly_rule.value > 0)) ar.fail("threshold", "must be positive");
      if (s.anomaly_min_age < 1) ar.fail("min_age", "must be >= 1");
    }

    if (const json* st = r.raw("strategy")) {
      Reader sr(*st, "strategy", errs);
      if (const json* rows = sr.array("levels")) {
        if (rows->size() != 4) sr.fail("levels", "must have four rows (levels 1..4)");
        for (std::size_t i = 0; i < rows->size() && i < 4; ++i) {
          Reader rr((*rows)[i], index_path("strategy.levels", i), errs);
          if (!rr.ok()) continue;
          try {
            s.strategy.rows[i].interpretation = parse_interpretation_strategy(
                rr.string("interpretation", std::string(to_string(s.strategy.rows[i].interpretation))));
          } catch (const std::invalid_argument& e) {
            rr.fail("interpretation", e.what());
          }
          try {
            s.strategy.rows[i].generation = parse_generation_strategy(
                rr.string("generation", std::string(to_string(s.strategy.rows[i].generation))));
          } catch (const std::invalid_argument& e) {
            rr.fail("generation", e.what());
          }
        }
      }
      if (const json* ib = sr.array("interpretation_burden")) {
        if (ib->size() != 3 || !std::all_of(ib->begin(), ib->end(), [](const json& x) { return x.is_number_integer(); }))
          sr.fail("interpretation_burden", "must be three integers");
        else
          for (std::size_t k = 0; k < 3; ++k) s.strategy.interpretation_burden[k] = (*ib)[k].get<int>();
      }
      if (const json* gb = sr.array("generation_burden")) {
        if (gb->size() != 3 || !std::all_of(gb->begin(), gb->end(), [](const json& x) { return x.is_number_integer(); }))
          sr.fail("generation_burden", "must be three integers");
        else
          for (std::size_t k = 0; k < 3; ++k) s.strategy.generation_burden[k] = (*gb)[k].get<int>();
      }
      try {
        s.strategy.validate();
      } catch (const std::invalid_argument& e) {
        errs.push_back(std::string("strategy: ") + e.what());
      }
    }

    if (const json* d = r.raw("dialogue")) {
      Reader dr(*d, "dialogue", errs);
      InterpretConfig& c = s.interpret;
      c.label_weight = dr.number("label_weight", c.label_weight);
      c.proximity_weight = dr.number("proximity_weight", c.proximity_weight);
      c.recency_weight = dr.number("recency_weight", c.recency_weight);
      c.proximity_scale = dr.number("proximity_scale", c.proximity_scale);
      c.dominance_margin = dr.number("dominance_margin", c.dominance_margin);
      c.recency_decay = dr.number("recency_decay", c.recency_decay);
      if (!(c.proximity_scale > 0)) dr.fail("proximity_scale", "must be positive");
      if (!(c.recency_decay > 0 && c.recency_decay <= 1)) dr.fail("recency_decay", "must be in (0, 1]");
      if (!(c.dominance_margin >= 0 && c.dominance_margin <= 1)) dr.fail("dominance_margin", "must be in [0, 1]");
      if (c.label_weight < 0 || c.proximity_weight < 0 || c.recency_weight < 0) dr.fail("weights must be >= 0");
    }

    if (const json* m = r.raw("metrics")) {
      Reader mr(*m, "metrics", errs);
      s.metrics.revisit_target = mr.integer("revisit_target", s.metrics.revisit_target);
      s.metrics.trace_interval = mr.integer("trace_interval", s.metrics.trace_interval);
      if (s.metrics.revisit_target < 1) mr.fail("revisit_target", "must be >= 1");
      if (s.metrics.trace_interval < 1) mr.fail("trace_interval", "must be >= 1");
    }

    if (const json* g = r.raw("session")) {
      Reader gr(*g, "session", errs);
      s.snapshot_every = gr.integer("snapshot_every", s.snapshot_every);
      s.keyframe_every = gr.integer("keyframe_every", s.keyframe_every);
      s.ingress_capacity = static_cast<std::size_t>(std::max(1LL, gr.integer("ingress_capacity", 64)));
      if (s.snapshot_every < 1) gr.fail("snapshot_every", "must be >= 1");
      if (s.keyframe_every < 1) gr.fail("keyframe_every", "must be >= 1");
    }

    if (const json* arr = r.array("operator_script")) {
      Tick prev = 0;
      for (std::size_t i = 0; i < arr->size(); ++i) {
        Reader sr((*arr)[i], index_path("operator_script", i), errs);
        if (!sr.ok()) continue;
        ScriptItem item;
        item.tick = sr.integer("tick", 1);
        item.kind = sr.string("kind", "");
        if (const json* p = sr.raw("payload")) item.payload = *p;
        else sr.fail("payload", "required");
        static const std::set<std::string> kinds{"Utterance", "CompletionResponse", "Command", "ModeChange"};
        if (!kinds.count(item.kind)) sr.fail("kind", "must be Utterance, CompletionResponse, Command or ModeChange");
        if (item.tick < 1) sr.fail("tick", "must be >= 1");
        if (item.tick < prev) sr.fail("tick", "script must be in tick order");
        prev = item.tick;
        s.script.push_back(std::move(item));
      }
    }
  }
  if (!errs.empty()) throw ScenarioError(errs);
  s.source = doc;
  s.hash = scenario_hash(doc);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({path.string() + ": cannot open"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError({path.string() + ": " + e.what()});
  }
  return parse_scenario(doc);
}

std::vector<Cell> rasterize(const NoFlyArea& area, const PheromoneField& field) {
  std::set<Cell> cells(area.cells.begin(), area.cells.end());
  if (area.polygon.size() >= 3) {
    for (std::size_t i = 0; i < field.cell_count(); ++i) {
      const Cell c = field.cell_of(i);
      const Vec2 p = field.center_of(c);
      if (!inside(area.polygon, p)) continue;
      const bool in_hole = std::any_of(area.holes.begin(), area.holes.end(),
                                       [&](const std::vector<Vec2>& h) { return inside(h, p); });
      if (!in_hole) cells.insert(c);
    }
  }
  return {cells.begin(), cells.end()};
}

World build_world(const Scenario& s, std::uint64_t seed) {
  World w(PheromoneField(s.width, s.height, s.cell_size, s.field), s.swarm, seed);
  std::vector<std::string> errs;
  for (const auto& area : s.no_fly) {
    if (area.from_tick > 0) continue;
    for (Cell c : rasterize(area, w.field)) w.field.set_blocked(c, true);
  }
  if (w.field.open_count() == 0) throw ScenarioError({"no_fly: every cell is blocked"});

  std::vector<Cell> open;
  for (std::size_t i = 0; i < w.field.cell_count(); ++i) {
    if (!w.field.blocked(w.field.cell_of(i))) open.push_back(w.field.cell_of(i));
  }
  for (const auto& spec : s.vehicles) {
    Vehicle v;
    v.id = VehicleId{spec.id};
    v.speed = spec.speed;
    v.sensor_radius = spec.sensor_radius;
    v.fuel = spec.fuel;
    if (spec.pos) {
      v.pos = *spec.pos;
    } else {
      v.pos = w.field.center_of(open[static_cast<std::size_t>(w.rng() % open.size())]);
    }
    w.vehicles.push_back(v);
  }
  for (const auto& spec : s.intruders) {
    Intruder in;
    in.id = IntruderId{spec.id};
    in.path = spec.path;
    in.speed = spec.speed;
    in.start_tick = spec.start_tick;
    in.pos = spec.path.front();
    w.intruders.push_back(std::move(in));
  }
  w.false_alarms = s.false_alarms;
  for (const auto& z : s.zones) {
    SearchZone zone;
    zone.label = z.label;
    zone.center = z.center;
    if (z.direction_deg) zone.direction = *z.direction_deg * kDeg;
    zone.breadth = z.breadth_deg * kDeg;
    zone.range = z.range;
    try {
      w.add_zone(zone);
    } catch (const std::exception& e) {
      errs.push_back("zones[" + z.label + "]: " + e.what());
    }
  }
  for (const auto& b : s.beacons) {
    try {
      w.beacons.place_beacon(b.pos, b.label);
    } catch (const std::exception& e) {
      errs.push_back("beacons[" + b.label + "]: " + e.what());
    }
  }
  w.modes = default_mode_table();
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    const auto& m = s.modes[i];
    try {
      const OodaStage stage = parse_stage(m.stage);
      const auto key = CellKey{m.task, stage};
      const auto& cells = w.modes.cells();
      auto it = cells.find(key);
      if (it == cells.end()) throw std::invalid_argument("unknown task/stage");
      const bool known = std::any_of(it->second.modes.begin(), it->second.modes.end(),
                                     [&](const OperatingMode& om) { return om.id == m.mode; });
      if (!known) throw std::invalid_argument("unknown mode '" + m.mode + "'");
      w.modes.mutable_active()[key] = m.mode;  // initial configuration, not a logged change
    } catch (const std::exception& e) {
      errs.push_back("modes[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (!errs.empty()) throw ScenarioError(errs);
  return w;
}

}  // namespace swarmctl
