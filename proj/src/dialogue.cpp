#include "swarmctl/dialogue.hpp"

#include "swarmctl/planner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace swarmctl {
namespace {

constexpr double kDeg = kPi / 180.0;

// ---------------------------------------------------------------------------
// Tokens

std::optional<std::vector<std::string>> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char raw : text) {
    const auto ch = static_cast<unsigned char>(raw);
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      flush();
    } else if (ch == ',') {
      flush();
      out.emplace_back(",");
    } else if (ch >= 'A' && ch <= 'Z') {
      cur += static_cast<char>(ch - 'A' + 'a');
    } else if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '.' || ch == '_' ||
               ch == '-') {
      cur += static_cast<char>(ch);
    } else {
      return std::nullopt;  // anything else is outside the language
    }
  }
  flush();
  return out;
}

std::optional<double> as_number(const std::string& tok) {
  double v = 0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> as_vehicle(const std::string& tok) {
  if (tok.size() < 4 || tok.compare(0, 3, "uav") != 0) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data() + 3, tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || v < 0) return std::nullopt;
  return v;
}

std::optional<int> as_count(const std::string& tok) {
  static const char* words[] = {"a", "one", "two", "three", "four", "five",
                                "six", "seven", "eight", "nine", "ten"};
  for (int i = 0; i < 11; ++i) {
    if (tok == words[i]) return i == 0 ? 1 : i;
  }
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  if (tok.size() > 4) return std::nullopt;
  const int n = std::stoi(tok);
  return n >= 1 ? std::optional<int>(n) : std::nullopt;
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> words{
      "goto", "go",    "to",    "send",      "pursue", "zone",  "beacon", "place", "at",
      "here", "there", "define", "direction", "breadth", "range", "set",    "mode",  "status",
      "them", "it",    "all",   "and",       "then",   "the",   "nearest", "uav",  "uavs",
      "a",    "one",   "two",   "three",     "four",   "five",  "six",    "seven", "eight",
      "nine", "ten",   ","};
  return words;
}

bool is_label(const std::string& tok) {
  if (tok.empty() || tok[0] < 'a' || tok[0] > 'z') return false;
  return !reserved().count(tok) && !as_vehicle(tok);
}

struct Fail {};

class Parser {
 public:
  explicit Parser(std::vector<std::string> toks) : t_(std::move(toks)) {}

  bool done() const { return i_ >= t_.size(); }
  const std::string& peek(std::size_t k = 0) const {
    static const std::string none;
    return i_ + k < t_.size() ? t_[i_ + k] : none;
  }
  bool accept(std::string_view w) {
    if (peek() != w) return false;
    ++i_;
    return true;
  }
  void expect(std::string_view w) {
    if (!accept(w)) throw Fail{};
  }
  std::string take_label() {
    if (!is_label(peek())) throw Fail{};
    return t_[i_++];
  }
  std::string take_word() {
    if (done() || peek() == ",") throw Fail{};
    return t_[i_++];
  }
  double take_number() {
    auto v = as_number(peek());
    if (!v) throw Fail{};
    ++i_;
    return *v;
  }
  void finish() const {
    if (!done()) throw Fail{};
  }

  std::optional<GroupPhrase> group() {
    const std::size_t start = i_;
    GroupPhrase g;
    if (auto id = as_vehicle(peek())) {
      ++i_;
      g.kind = GroupPhrase::Kind::Ids;
      g.ids.push_back(*id);
      while ((peek() == "and" || peek() == ",") && as_vehicle(peek(1))) {
        ++i_;
        g.ids.push_back(*as_vehicle(t_[i_++]));
      }
      return g;
    }
    if (accept("them")) return GroupPhrase{GroupPhrase::Kind::Them, {}, 0, {}};
    if (accept("it")) return GroupPhrase{GroupPhrase::Kind::It, {}, 0, {}};
    if (accept("all")) {
      if (!accept("uavs")) accept("uav");
      return GroupPhrase{GroupPhrase::Kind::All, {}, 0, {}};
    }
    accept("the");
    accept("nearest");
    const auto n = as_count(peek());
    if (!n) {
      i_ = start;
      return std::nullopt;
    }
    ++i_;
    accept("nearest");
    if (!accept("uavs") && !accept("uav")) {
      i_ = start;
      return std::nullopt;
    }
    g.kind = GroupPhrase::Kind::Count;
    g.count = *n;
    if (accept("nearest")) {
      accept("to");
      g.anchor = place();
      if (!g.anchor) throw Fail{};
    }
    return g;
  }

  std::optional<PlacePhrase> place() {
    PlacePhrase p;
    if (accept("beacon")) {
      p.kind = PlacePhrase::Kind::Beacon;
      p.label = take_label();
      return p;
    }
    if (accept("zone")) {
      p.kind = PlacePhrase::Kind::Zone;
      p.label = take_label();
      return p;
    }
    if (accept("here")) return PlacePhrase{PlacePhrase::Kind::Here, {}, {}};
    if (accept("there")) return PlacePhrase{PlacePhrase::Kind::There, {}, {}};
    if (as_number(peek())) {
      p.kind = PlacePhrase::Kind::Points;
      do {
        const double x = take_number();
        const double y = take_number();
        p.points.push_back({x, y});
      } while (accept("then"));
      return p;
    }
    if (is_label(peek())) {
      p.kind = PlacePhrase::Kind::Label;
      p.label = take_label();
      return p;
    }
    return std::nullopt;
  }

  // A single location: one point, here, or there.
  PlacePhrase location() {
    auto p = place();
    if (!p) throw Fail{};
    const bool ok = p->kind == PlacePhrase::Kind::Here || p->kind == PlacePhrase::Kind::There ||
                    (p->kind == PlacePhrase::Kind::Points && p->points.size() == 1);
    if (!ok) throw Fail{};
    return *p;
  }

 private:
  std::vector<std::string> t_;
  std::size_t i_ = 0;
};

ParsedUtterance parse_tokens(Parser& ps) {
  ParsedUtterance u;
  if (ps.accept("send")) {
    u.intent = Intent::Dispatch;
    u.group = ps.group();
    if (!u.group) throw Fail{};
    ps.accept("to");
    u.place = ps.place();
    ps.finish();
    return u;
  }
  if (ps.accept("place")) {
    ps.expect("beacon");
    u.intent = Intent::PlaceBeacon;
    u.label = ps.take_label();
    if (ps.accept("at")) u.place = ps.location();
    ps.finish();
    return u;
  }
  if (ps.accept("define")) {
    ps.expect("zone");
    u.intent = Intent::DefineZone;
    u.label = ps.take_label();
    while (!ps.done()) {
      if (ps.accept("direction")) {
        if (u.direction_deg) throw Fail{};
        u.direction_deg = ps.take_number();
      } else if (ps.accept("breadth")) {
        if (u.breadth_deg) throw Fail{};
        u.breadth_deg = ps.take_number();
      } else if (ps.accept("range")) {
        if (u.range_m) throw Fail{};
        u.range_m = ps.take_number();
      } else if (ps.accept("at")) {
        if (u.place) throw Fail{};
        u.place = ps.location();
      } else {
        throw Fail{};
      }
    }
    return u;
  }
  if (ps.accept("set")) {
    ps.expect("mode");
    u.intent = Intent::SetMode;
    u.task = ps.take_word();
    u.stage = ps.take_word();
    u.mode = ps.take_word();
    ps.finish();
    return u;
  }
  if (ps.accept("status")) {
    u.intent = Intent::QueryStatus;
    if (!ps.done()) {
      u.group = ps.group();
      if (!u.group) throw Fail{};
    }
    ps.finish();
    return u;
  }

  u.group = ps.group();
  if (!u.group) throw Fail{};
  if (ps.accept("goto") || (ps.accept("go") && (ps.accept("to"), true))) {
    u.intent = Intent::Dispatch;
    u.place = ps.place();
    ps.finish();
    return u;
  }
  if (ps.accept("pursue")) {
    u.intent = Intent::Pursue;
    if (ps.accept("zone") || is_label(ps.peek())) {
      u.place = PlacePhrase{PlacePhrase::Kind::Zone, ps.take_label(), {}};
    }
    if (ps.accept("direction")) u.direction_deg = ps.take_number();
    ps.finish();
    return u;
  }
  throw Fail{};
}

// ---------------------------------------------------------------------------
// Referent resolution helpers

std::string vehicle_list(const std::vector<VehicleId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ", ";
    s += "uav" + std::to_string(ids[i].value);
  }
  return s;
}

std::optional<Vec2> last_click(const OperatorUtterance& u) {
  for (auto it = u.gestures.rbegin(); it != u.gestures.rend(); ++it) {
    if (it->kind == GesturePrimitive::Kind::Click) return it->from;
  }
  return std::nullopt;
}

const GesturePrimitive* last_drag(const OperatorUtterance& u) {
  for (auto it = u.gestures.rbegin(); it != u.gestures.rend(); ++it) {
    if (it->kind == GesturePrimitive::Kind::Drag) return &*it;
  }
  return nullptr;
}

struct Unresolved {
  FailureKind kind;
  std::string reason;
};

// Result of resolving one place phrase.
struct PlaceHit {
  std::optional<Vec2> point;
  std::vector<Vec2> waypoints;
  std::optional<BeaconId> beacon;
  std::optional<ZoneId> zone;
  std::vector<Candidate> options;  // filled when a bare label names several things
};

// Which of several ranked candidates, if any, the strategy settles on.
std::optional<std::size_t> settle(const std::vector<Candidate>& ranked, InterpretationStrategy s,
                                  double margin) {
  if (ranked.size() == 1) return 0;
  if (ranked.empty()) return std::nullopt;
  switch (s) {
    case InterpretationStrategy::StrictConfirm: return std::nullopt;
    case InterpretationStrategy::AutoResolve: return 0;
    case InterpretationStrategy::ContextRank:
      if (ranked[0].score - ranked[1].score >= margin) return 0;
      return std::nullopt;
  }
  return std::nullopt;
}

void normalise(std::vector<Candidate>& c) {
  double top = 0;
  for (const auto& x : c) top = std::max(top, x.raw);
  for (auto& x : c) x.score = top > 0 ? x.raw / top : 1.0;
}

class Resolver {
 public:
  Resolver(const OperatorUtterance& utt, const World& w, const GroundingStore& g,
           const InterpretConfig& cfg)
      : utt_(utt), w_(w), g_(g), cfg_(cfg) {}

  double proximity(Vec2 p, const std::optional<Vec2>& anchor) const {
    if (!anchor) return 0.0;
    return std::exp(-distance(p, *anchor) / cfg_.proximity_scale);
  }

  PlaceHit place(const PlacePhrase& ph, const std::optional<Vec2>& anchor) const {
    PlaceHit hit;
    switch (ph.kind) {
      case PlacePhrase::Kind::Beacon: {
        const Beacon* b = w_.beacons.find(ph.label);
        if (!b) throw Unresolved{FailureKind::InvalidReference, "unknown beacon '" + ph.label + "'"};
        hit.point = b->pos;
        hit.beacon = b->id;
        return hit;
      }
      case PlacePhrase::Kind::Zone: {
        const SearchZone* z = w_.find_zone(ph.label);
        if (!z) throw Unresolved{FailureKind::InvalidReference, "unknown zone '" + ph.label + "'"};
        hit.point = z->center;
        hit.zone = z->id;
        return hit;
      }
      case PlacePhrase::Kind::Label: {
        const Beacon* b = w_.beacons.find(ph.label);
        const SearchZone* z = w_.find_zone(ph.label);
        if (!b && !z) {
          throw Unresolved{FailureKind::InvalidReference, "no beacon or zone named '" + ph.label + "'"};
        }
        if (b && !z) return place({PlacePhrase::Kind::Beacon, ph.label, {}}, anchor);
        if (z && !b) return place({PlacePhrase::Kind::Zone, ph.label, {}}, anchor);
        Candidate cb;
        cb.beacon = b->id;
        cb.description = "beacon " + b->label;
        cb.raw = cfg_.label_weight + cfg_.proximity_weight * proximity(b->pos, anchor) +
                 cfg_.recency_weight * g_.recency_beacon(b->id, cfg_.recency_decay);
        Candidate cz;
        cz.zone = z->id;
        cz.description = "zone " + z->label;
        cz.raw = cfg_.label_weight + cfg_.proximity_weight * proximity(z->center, anchor) +
                 cfg_.recency_weight * g_.recency_zone(z->id, cfg_.recency_decay);
        hit.options = {cb, cz};
        normalise(hit.options);
        std::stable_sort(hit.options.begin(), hit.options.end(),
                         [](const Candidate& a, const Candidate& c) { return a.raw > c.raw; });
        return hit;
      }
      case PlacePhrase::Kind::Points:
        for (Vec2 p : ph.points) {
          if (!w_.field.contains(p)) throw Unresolved{FailureKind::InvalidReference, "point outside the map"};
        }
        hit.point = ph.points.back();
        hit.waypoints = ph.points;
        return hit;
      case PlacePhrase::Kind::Here:
        if (auto c = last_click(utt_)) {
          hit.point = *c;
          return hit;
        }
        throw Unresolved{FailureKind::NonUnderstanding, "'here' needs a map click"};
      case PlacePhrase::Kind::There:
        if (auto c = last_click(utt_)) {
          hit.point = *c;
        } else if (const Alarm* a = w_.latest_recent_alarm()) {
          hit.point = a->pos;
        } else if (auto loc = g_.last_location()) {
          hit.point = *loc;
        } else {
          throw Unresolved{FailureKind::NonUnderstanding, "'there' has no antecedent"};
        }
        if (!w_.field.contains(*hit.point)) {
          throw Unresolved{FailureKind::InvalidReference, "point outside the map"};
        }
        return hit;
    }
    return hit;
  }

  // Either a fixed group or a ranked list of alternatives.
  std::vector<Candidate> group(const GroupPhrase& gp, std::optional<Vec2> anchor) const {
    auto single = [](std::vector<VehicleId> ids) {
      Candidate c;
      c.vehicles = std::move(ids);
      c.description = vehicle_list(c.vehicles);
      c.score = c.raw = 1.0;
      return std::vector<Candidate>{c};
    };
    switch (gp.kind) {
      case GroupPhrase::Kind::Ids: {
        std::vector<VehicleId> ids;
        for (int id : gp.ids) {
          const VehicleId vid{id};
          if (!w_.find_vehicle(vid)) {
            throw Unresolved{FailureKind::InvalidReference, "unknown vehicle uav" + std::to_string(id)};
          }
          if (std::find(ids.begin(), ids.end(), vid) == ids.end()) ids.push_back(vid);
        }
        return single(ids);
      }
      case GroupPhrase::Kind::Them:
      case GroupPhrase::Kind::It: {
        const auto last = g_.last_vehicle_group();
        const bool it = gp.kind == GroupPhrase::Kind::It;
        if (!last || (it && last->size() != 1)) {
          throw Unresolved{FailureKind::NonUnderstanding,
                           std::string("'") + (it ? "it" : "them") + "' has no antecedent"};
        }
        for (VehicleId id : *last) {
          if (!w_.find_vehicle(id)) {
            throw Unresolved{FailureKind::InvalidReference,
                             "uav" + std::to_string(id.value) + " no longer exists"};
          }
        }
        return single(*last);
      }
      case GroupPhrase::Kind::All: {
        std::vector<VehicleId> ids;
        for (const auto& v : w_.vehicles) {
          if (v.airborne()) ids.push_back(v.id);
        }
        if (ids.empty()) throw Unresolved{FailureKind::InvalidReference, "no vehicles airborne"};
        return single(ids);
      }
      case GroupPhrase::Kind::Count:
        break;
    }

    if (gp.anchor) anchor = place(*gp.anchor, std::nullopt).point;
    if (!anchor) anchor = last_click(utt_);

    struct Scored {
      VehicleId id;
      double raw;
    };
    std::vector<Scored> pool;
    for (const auto& v : w_.vehicles) {
      if (!v.airborne()) continue;
      pool.push_back({v.id, cfg_.proximity_weight * proximity(v.pos, anchor) +
                                cfg_.recency_weight * g_.recency(v.id, cfg_.recency_decay)});
    }
    const auto n = static_cast<std::size_t>(gp.count);
    if (pool.size() < n) {
      throw Unresolved{FailureKind::InvalidReference,
                       "only " + std::to_string(pool.size()) + " vehicles available"};
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Scored& a, const Scored& b) {
      return a.raw != b.raw ? a.raw > b.raw : a.id < b.id;
    });
    pool.resize(std::min(pool.size(), n + static_cast<std::size_t>(std::max(0, cfg_.candidate_pool_extra))));

    std::vector<Candidate> out;
    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      Candidate c;
      double sum = 0;
      for (std::size_t k : pick) {
        c.vehicles.push_back(pool[k].id);
        sum += pool[k].raw;
      }
      std::sort(c.vehicles.begin(), c.vehicles.end());
      c.raw = sum / static_cast<double>(n);
      c.description = vehicle_list(c.vehicles);
      out.push_back(std::move(c));
      // next combination in lexicographic order
      std::size_t i = n;
      while (i > 0 && pick[i - 1] == pool.size() - n + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
    }
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
      return a.raw != b.raw ? a.raw > b.raw : a.vehicles < b.vehicles;
    });
    normalise(out);
    return out;
  }

 private:
  const OperatorUtterance& utt_;
  const World& w_;
  const GroundingStore& g_;
  const InterpretConfig& cfg_;
};

std::optional<Vec2> centroid(const World& w, const std::vector<VehicleId>& ids) {
  if (ids.empty()) return std::nullopt;
  Vec2 sum{0, 0};
  for (VehicleId id : ids) sum = sum + w.find_vehicle(id)->pos;
  return sum * (1.0 / static_cast<double>(ids.size()));
}

SlotSpec slot_for(const std::string& name) {
  if (name == "destination") return {name, "place", "Where should the vehicles go?"};
  if (name == "direction") return {name, "angle_deg", "Sweep direction in degrees (counter-clockwise from east)?"};
  if (name == "zone") return {name, "label", "Which zone?"};
  if (name == "location") return {name, "point", "Where on the map?"};
  return {name, "text", name + "?"};
}

std::string format_deg(double rad) {
  std::ostringstream os;
  os << std::round(rad / kDeg * 10.0) / 10.0;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Intent intent) {
  switch (intent) {
    case Intent::Dispatch: return "Dispatch";
    case Intent::Pursue: return "Pursue";
    case Intent::PlaceBeacon: return "PlaceBeacon";
    case Intent::DefineZone: return "DefineZone";
    case Intent::SetMode: return "SetMode";
    case Intent::QueryStatus: return "QueryStatus";
  }
  return "?";
}

std::optional<ParsedUtterance> parse_utterance(std::string_view text) {
  auto toks = tokenize(text);
  if (!toks || toks->empty()) return std::nullopt;
  Parser ps(std::move(*toks));
  try {
    return parse_tokens(ps);
  } catch (const Fail&) {
    return std::nullopt;
  }
}

std::string_view to_string(InterpretationStrategy s) {
  switch (s) {
    case InterpretationStrategy::StrictConfirm: return "StrictConfirm";
    case InterpretationStrategy::ContextRank: return "ContextRank";
    case InterpretationStrategy::AutoResolve: return "AutoResolve";
  }
  return "?";
}

std::string_view to_string(GenerationStrategy s) {
  switch (s) {
    case GenerationStrategy::Verbose: return "Verbose";
    case GenerationStrategy::Standard: return "Standard";
    case GenerationStrategy::TerseCritical: return "TerseCritical";
  }
  return "?";
}

InterpretationStrategy parse_interpretation_strategy(std::string_view text) {
  const std::string t = lowercase(text);
  for (auto s : {InterpretationStrategy::StrictConfirm, InterpretationStrategy::ContextRank,
                 InterpretationStrategy::AutoResolve}) {
    if (t == lowercase(to_string(s))) return s;
  }
  throw std::invalid_argument("unknown interpretation strategy '" + std::string(text) + "'");
}

GenerationStrategy parse_generation_strategy(std::string_view text) {
  const std::string t = lowercase(text);
  for (auto s : {GenerationStrategy::Verbose, GenerationStrategy::Standard, GenerationStrategy::TerseCritical}) {
    if (t == lowercase(to_string(s))) return s;
  }
  throw std::invalid_argument("unknown generation strategy '" + std::string(text) + "'");
}

void StrategyPolicy::validate() const {
  for (std::size_t lvl = 1; lvl < rows.size(); ++lvl) {
    const auto& prev = rows[lvl - 1];
    const auto& cur = rows[lvl];
    if (burden(cur.interpretation) > burden(prev.interpretation) ||
        burden(cur.generation) > burden(prev.generation)) {
      throw std::invalid_argument("strategy policy: operator burden rises from level " +
                                  std::to_string(lvl) + " to " + std::to_string(lvl + 1));
    }
  }
}

StrategyPair select_strategy(const WorkloadState& w, const StrategyPolicy& policy) {
  if (w.discrete_level < 1 || w.discrete_level > 4) {
    throw std::invalid_argument("workload level must be 1..4");
  }
  return policy.rows[static_cast<std::size_t>(w.discrete_level - 1)];
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "Info";
    case Severity::Warning: return "Warning";
    case Severity::Critical: return "Critical";
  }
  return "?";
}

std::string_view to_string(Modality m) { return m == Modality::Banner ? "Banner" : "Console"; }

std::string_view to_string(Formulation f) {
  switch (f) {
    case Formulation::Full: return "Full";
    case Formulation::Standard: return "Standard";
    case Formulation::Terse: return "Terse";
  }
  return "?";
}

EmissionDecision generate(const SystemMessage& msg, const WorkloadState& w, const StrategyPolicy& policy) {
  return generate(msg, select_strategy(w, policy).generation);
}

EmissionDecision generate(const SystemMessage& msg, GenerationStrategy g) {
  EmissionDecision d;
  d.severity = msg.severity;
  d.modality = msg.severity == Severity::Critical ? Modality::Banner : Modality::Console;
  d.text = msg.text;
  switch (g) {
    case GenerationStrategy::Verbose:
      d.emit = true;
      d.formulation = Formulation::Full;
      if (!msg.echo.empty()) d.text += ": " + msg.echo;
      break;
    case GenerationStrategy::Standard:
      d.emit = !(msg.severity == Severity::Info && msg.confirmation);
      d.formulation = Formulation::Standard;
      break;
    case GenerationStrategy::TerseCritical:
      d.emit = msg.severity != Severity::Info && !msg.confirmation;
      d.formulation = Formulation::Terse;
      break;
  }
  if (msg.severity == Severity::Critical) d.emit = true;  // safety floor
  return d;
}

// ---------------------------------------------------------------------------

bool Referents::empty() const {
  return vehicles.empty() && !zone && !beacon && !point && waypoints.empty() && label.empty() &&
         !direction && !breadth && !range && task.empty() && stage.empty() && mode.empty();
}

std::string_view to_string(Resolution r) {
  switch (r) {
    case Resolution::Executed: return "Executed";
    case Resolution::Clarified: return "Clarified";
    case Resolution::Abandoned: return "Abandoned";
  }
  return "?";
}

template <class Pred>
double GroundingStore::recency_of(Pred names, double decay) const {
  double weight = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it, weight *= decay) {
    if (it->resolution != Resolution::Abandoned && names(it->interpretation.referents)) return weight;
  }
  return 0.0;
}

double GroundingStore::recency(VehicleId id, double decay) const {
  return recency_of([&](const Referents& r) {
    return std::find(r.vehicles.begin(), r.vehicles.end(), id) != r.vehicles.end();
  }, decay);
}

double GroundingStore::recency_zone(ZoneId id, double decay) const {
  return recency_of([&](const Referents& r) { return r.zone == id; }, decay);
}

double GroundingStore::recency_beacon(BeaconId id, double decay) const {
  return recency_of([&](const Referents& r) { return r.beacon == id; }, decay);
}

std::optional<std::vector<VehicleId>> GroundingStore::last_vehicle_group() const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->resolution != Resolution::Abandoned && !it->interpretation.referents.vehicles.empty()) {
      return it->interpretation.referents.vehicles;
    }
  }
  return std::nullopt;
}

std::optional<Vec2> GroundingStore::last_location() const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->resolution != Resolution::Abandoned && it->interpretation.referents.point) {
      return it->interpretation.referents.point;
    }
  }
  return std::nullopt;
}

Interpretation interpret(const ParsedUtterance& parsed, const OperatorUtterance& utt, const World& world,
                         const GroundingStore& grounding, InterpretationStrategy strategy,
                         const InterpretConfig& cfg, const Pins& pins) {
  Interpretation I;
  I.intent = parsed.intent;
  Referents& R = I.referents;
  const Resolver res(utt, world, grounding, cfg);
  std::vector<Candidate> destination_options;

  auto apply_place = [&](const PlaceHit& hit) {
    R.point = hit.point;
    R.waypoints = hit.waypoints;
    R.beacon = hit.beacon;
    R.zone = hit.zone;
  };
  auto apply_candidate_place = [&](const Candidate& c) {
    if (c.beacon) {
      const Beacon* b = world.beacons.find(*c.beacon);
      if (!b) throw Unresolved{FailureKind::InvalidReference, "beacon no longer exists"};
      R.beacon = b->id;
      R.point = b->pos;
    } else if (c.zone) {
      const SearchZone* z = world.find_zone(*c.zone);
      if (!z) throw Unresolved{FailureKind::InvalidReference, "zone no longer exists"};
      R.zone = z->id;
      R.point = z->center;
    }
  };

  try {
    const GesturePrimitive* drag = last_drag(utt);
    switch (parsed.intent) {
      case Intent::Dispatch:
        if (pins.destination) {
          apply_candidate_place(*pins.destination);
        } else if (parsed.place) {
          const PlaceHit hit = res.place(*parsed.place, last_click(utt));
          if (hit.options.empty()) apply_place(hit);
          else destination_options = hit.options;
        } else if (auto c = last_click(utt)) {
          if (!world.field.contains(*c)) throw Unresolved{FailureKind::InvalidReference, "point outside the map"};
          R.point = c;
        } else {
          I.missing.push_back("destination");
        }
        break;
      case Intent::Pursue:
        if (parsed.place) {
          const SearchZone* z = world.find_zone(parsed.place->label);
          if (!z) throw Unresolved{FailureKind::InvalidReference, "unknown zone '" + parsed.place->label + "'"};
          R.zone = z->id;
          R.point = z->center;
          if (parsed.direction_deg) R.direction = *parsed.direction_deg * kDeg;
          else if (drag && distance(drag->from, drag->to) > 0)
            R.direction = std::atan2(drag->to.y - drag->from.y, drag->to.x - drag->from.x);
          else if (!z->direction) I.missing.push_back("direction");
        } else {
          I.missing.push_back("zone");
          if (parsed.direction_deg) R.direction = *parsed.direction_deg * kDeg;
        }
        break;
      case Intent::PlaceBeacon:
        if (world.beacons.find(parsed.label)) {
          throw Unresolved{FailureKind::InvalidReference, "beacon label '" + parsed.label + "' already in use"};
        }
        R.label = parsed.label;
        if (parsed.place) {
          R.point = res.place(*parsed.place, std::nullopt).point;
        } else if (auto c = last_click(utt)) {
          R.point = c;
        } else {
          I.missing.push_back("location");
        }
        if (R.point && !world.field.contains(*R.point)) {
          throw Unresolved{FailureKind::InvalidReference, "beacon position outside the map"};
        }
        break;
      case Intent::DefineZone: {
        if (world.find_zone(parsed.label)) {
          throw Unresolved{FailureKind::InvalidReference, "zone label '" + parsed.label + "' already in use"};
        }
        R.label = parsed.label;
        if (parsed.place) R.point = res.place(*parsed.place, std::nullopt).point;
        else if (auto c = last_click(utt)) R.point = c;
        else if (drag) R.point = drag->from;
        else I.missing.push_back("location");
        if (R.point && !world.field.contains(*R.point)) {
          throw Unresolved{FailureKind::InvalidReference, "zone centre outside the map"};
        }
        const double drag_len = drag ? distance(drag->from, drag->to) : 0.0;
        if (parsed.direction_deg) R.direction = *parsed.direction_deg * kDeg;
        else if (drag_len > 0) R.direction = std::atan2(drag->to.y - drag->from.y, drag->to.x - drag->from.x);
        if (parsed.breadth_deg) R.breadth = *parsed.breadth_deg * kDeg;
        else if (drag && drag->breadth) R.breadth = *drag->breadth;
        else R.breadth = cfg.default_breadth_deg * kDeg;
        if (parsed.range_m) R.range = *parsed.range_m;
        else if (drag_len > 0) R.range = drag_len;
        else R.range = cfg.default_range_m;
        if (!(*R.breadth > 0) || *R.breadth > 2 * kPi + 1e-9) {
          throw Unresolved{FailureKind::InvalidReference, "zone breadth must be in (0, 360] degrees"};
        }
        if (!(*R.range > 0)) throw Unresolved{FailureKind::InvalidReference, "zone range must be positive"};
        break;
      }
      case Intent::SetMode: {
        const auto& tasks = world.modes.tasks();
        if (std::find(tasks.begin(), tasks.end(), parsed.task) == tasks.end()) {
          throw Unresolved{FailureKind::InvalidReference, "unknown task '" + parsed.task + "'"};
        }
        OodaStage stage;
        try {
          stage = parse_stage(parsed.stage);
        } catch (const std::invalid_argument&) {
          throw Unresolved{FailureKind::InvalidReference, "unknown stage '" + parsed.stage + "'"};
        }
        const auto& cell = world.modes.cells().at({parsed.task, stage});
        const bool known = std::any_of(cell.modes.begin(), cell.modes.end(),
                                       [&](const OperatingMode& m) { return m.id == parsed.mode; });
        if (!known) {
          throw Unresolved{FailureKind::InvalidReference,
                           "no mode '" + parsed.mode + "' in " + parsed.task + "/" + parsed.stage};
        }
        R.task = parsed.task;
        R.stage = std::string(to_string(stage));
        R.mode = parsed.mode;
        break;
      }
      case Intent::QueryStatus:
        break;
    }

    if (parsed.group) {
      if (pins.vehicles) {
        for (VehicleId id : *pins.vehicles) {
          if (!world.find_vehicle(id)) throw Unresolved{FailureKind::InvalidReference, "vehicle no longer exists"};
        }
        R.vehicles = *pins.vehicles;
      } else {
        std::optional<Vec2> anchor = last_click(utt);
        if (!anchor) anchor = R.point;
        auto ranked = res.group(*parsed.group, anchor);
        if (auto pick = settle(ranked, strategy, cfg.dominance_margin)) {
          R.vehicles = ranked[*pick].vehicles;
        } else {
          if (ranked.size() > cfg.max_candidates) ranked.resize(cfg.max_candidates);
          I.confidence = Confidence::Ambiguous;
          I.ambiguous_slot = "vehicles";
          I.candidates = std::move(ranked);
          return I;
        }
      }
    }

    if (!destination_options.empty()) {
      // Re-score by proximity to the chosen vehicles when nothing was clicked.
      std::optional<Vec2> anchor = last_click(utt);
      if (!anchor) anchor = centroid(world, R.vehicles);
      const PlaceHit hit = res.place(*parsed.place, anchor);
      if (auto pick = settle(hit.options, strategy, cfg.dominance_margin)) {
        apply_candidate_place(hit.options[*pick]);
      } else {
        I.confidence = Confidence::Ambiguous;
        I.ambiguous_slot = "destination";
        I.candidates = hit.options;
        return I;
      }
    }
    I.confidence = Confidence::Unique;
    return I;
  } catch (const Unresolved& u) {
    Interpretation F;
    F.intent = parsed.intent;
    F.confidence = Confidence::Failed;
    F.failure = u.kind;
    F.reason = u.reason;
    return F;
  }
}

Interpretation interpret(const OperatorUtterance& utt, const World& world, const GroundingStore& grounding,
                         InterpretationStrategy strategy, const InterpretConfig& config) {
  const auto parsed = parse_utterance(utt.text);
  if (!parsed) {
    Interpretation F;
    F.confidence = Confidence::Failed;
    F.failure = FailureKind::NonUnderstanding;
    F.reason = "not in the command language";
    return F;
  }
  return interpret(*parsed, utt, world, grounding, strategy, config);
}

Conversion convert(const Interpretation& I, const World& world, const InterpretConfig& cfg) {
  if (I.confidence != Confidence::Unique) {
    throw std::logic_error("convert: interpretation is not unique");
  }
  const Referents& R = I.referents;
  if (!I.missing.empty()) {
    CompletionRequest req;
    for (const auto& m : I.missing) req.slots.push_back(slot_for(m));
    req.prompt = req.slots.front().prompt;
    return req;
  }

  switch (I.intent) {
    case Intent::Dispatch: {
      VehicleCommand cmd;
      cmd.kind = VehicleCommand::Kind::Goto;
      cmd.vehicles = R.vehicles;
      cmd.beacon = R.beacon;
      const PheromoneField& f = world.field;
      for (VehicleId id : R.vehicles) {
        if (!R.waypoints.empty()) {
          cmd.routes.push_back(R.waypoints);  // stated route is taken as is
          continue;
        }
        const Vehicle& v = *world.find_vehicle(id);
        const Cell to = f.cell_at(*R.point);
        if (f.blocked(to)) return Rejection{"destination lies in a blocked area"};
        const Cell from = f.cell_at(v.pos);
        const auto path = shortest_path(f, from, to);
        if (!path) return Rejection{"no unblocked route for uav" + std::to_string(id.value)};
        std::vector<Vec2> route;
        for (Cell c : *path) route.push_back(f.center_of(c));
        route.back() = *R.point;
        cmd.routes.push_back(std::move(route));
      }
      if (auto err = check_command(world, cmd)) return Rejection{*err};
      return cmd;
    }
    case Intent::Pursue: {
      VehicleCommand cmd;
      cmd.kind = VehicleCommand::Kind::Pursue;
      cmd.vehicles = R.vehicles;
      cmd.zone = R.zone;
      cmd.direction = R.direction;
      if (auto err = check_command(world, cmd)) return Rejection{*err};
      return cmd;
    }
    case Intent::PlaceBeacon:
      return OperatorAction{PlaceBeaconAction{R.label, *R.point}};
    case Intent::DefineZone: {
      SearchZone z;
      z.label = R.label;
      z.center = *R.point;
      z.direction = R.direction;
      z.breadth = R.breadth.value_or(cfg.default_breadth_deg * kDeg);
      z.range = R.range.value_or(cfg.default_range_m);
      return OperatorAction{DefineZoneAction{z}};
    }
    case Intent::SetMode:
      return OperatorAction{SetModeAction{R.task, parse_stage(R.stage), R.mode}};
    case Intent::QueryStatus:
      return OperatorAction{StatusQuery{R.vehicles}};
  }
  return Rejection{"unsupported intent"};
}

std::string describe(const VehicleCommand& cmd, const World& world) {
  std::string s = std::string(to_string(cmd.kind)) + " " + vehicle_list(cmd.vehicles);
  if (cmd.kind == VehicleCommand::Kind::Goto) {
    if (cmd.beacon) {
      if (const Beacon* b = world.beacons.find(*cmd.beacon)) s += " to beacon " + b->label;
    } else if (!cmd.routes.empty() && !cmd.routes.front().empty()) {
      const Vec2 p = cmd.routes.front().back();
      std::ostringstream os;
      os << " to (" << p.x << ", " << p.y << ")";
      s += os.str();
    }
    std::size_t n = 0;
    for (const auto& r : cmd.routes) n = std::max(n, r.size());
    s += " via " + std::to_string(n) + " waypoints";
  } else if (cmd.kind == VehicleCommand::Kind::Pursue && cmd.zone) {
    const SearchZone* z = world.find_zone(*cmd.zone);
    s += " zone " + (z ? z->label : std::to_string(cmd.zone->value));
    const std::optional<double> dir = cmd.direction ? cmd.direction : (z ? z->direction : std::nullopt);
    if (dir) s += " direction " + format_deg(*dir);
  }
  return s;
}

std::string describe(const OperatorAction& action) {
  struct V {
    std::string operator()(const PlaceBeaconAction& a) const {
      std::ostringstream os;
      os << "place beacon " << a.label << " at (" << a.pos.x << ", " << a.pos.y << ")";
      return os.str();
    }
    std::string operator()(const DefineZoneAction& a) const {
      std::ostringstream os;
      os << "define zone " << a.zone.label << " at (" << a.zone.center.x << ", " << a.zone.center.y << ")";
      if (a.zone.direction) os << " direction " << format_deg(*a.zone.direction);
      os << " breadth " << format_deg(a.zone.breadth) << " range " << a.zone.range;
      return os.str();
    }
    std::string operator()(const SetModeAction& a) const {
      return "set mode " + a.task + " " + std::string(to_string(a.stage)) + " " + a.mode;
    }
    std::string operator()(const StatusQuery& a) const {
      return a.vehicles.empty() ? std::string("status") : "status " + vehicle_list(a.vehicles);
    }
  };
  return std::visit(V{}, action);
}

// ---------------------------------------------------------------------------

DialogueManager::DialogueManager(StrategyPolicy policy, InterpretConfig config)
    : policy_(policy), config_(config) {
  policy_.validate();
}

std::optional<int> DialogueManager::pending_request() const {
  if (!exchange_) return std::nullopt;
  return exchange_->request_id;
}

EmissionDecision DialogueManager::notify(const SystemMessage& msg, const WorkloadState& w) const {
  return generate(msg, w, policy_);
}

void DialogueManager::close(Resolution resolution, DialogueOutput& out) {
  GroundingRecord rec;
  rec.utterance = exchange_->utterance;
  rec.interpretation = exchange_->last;
  rec.resolution = resolution;
  rec.rounds = exchange_->rounds;
  rec.strategy = exchange_->strategy;
  grounding_.append(rec);
  out.records.push_back(std::move(rec));
  exchange_.reset();
}

DialogueOutput DialogueManager::on_utterance(const OperatorUtterance& utt, const World& world,
                                             const WorkloadState& workload) {
  DialogueOutput out;
  if (exchange_) close(Resolution::Abandoned, out);  // superseded by new input
  const StrategyPair strategy = select_strategy(workload, policy_);
  out.strategy = strategy;

  const bool blank = utt.text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (blank && utt.gestures.empty()) {
    out.error = "empty utterance";
    return out;
  }
  const auto parsed = parse_utterance(utt.text);
  if (!parsed) {
    Exchange ex;
    ex.utterance = utt;
    ex.strategy = strategy;
    ex.last.confidence = Confidence::Failed;
    ex.last.failure = FailureKind::NonUnderstanding;
    ex.last.reason = "not in the command language";
    exchange_ = ex;
    close(Resolution::Abandoned, out);
    out.emission = generate({Severity::Warning, false, "Not understood: \"" + utt.text + "\". Please rephrase.", ""},
                            workload, policy_);
    return out;
  }
  Exchange ex;
  ex.utterance = utt;
  ex.parsed = *parsed;
  ex.strategy = strategy;
  DialogueOutput step = advance(std::move(ex), false, world);
  step.records.insert(step.records.begin(), out.records.begin(), out.records.end());
  return step;
}

DialogueOutput DialogueManager::on_completion(int request_id, const std::map<std::string, SlotValue>& values,
                                              std::optional<std::size_t> choice, const World& world,
                                              const WorkloadState& workload) {
  DialogueOutput out;
  if (!exchange_ || exchange_->request_id != request_id) {
    out.strategy = select_strategy(workload, policy_);
    out.error = "no open request " + std::to_string(request_id);
    return out;
  }
  Exchange ex = *exchange_;
  out.strategy = ex.strategy;
  if (!ex.choices.empty()) {
    if (!choice || *choice >= ex.choices.size()) {
      out.error = "choice must be an index below " + std::to_string(ex.choices.size());
      return out;
    }
    const Candidate& c = ex.choices[*choice];
    if (ex.last.ambiguous_slot == "vehicles") ex.pins.vehicles = c.vehicles;
    else ex.pins.destination = c;
  } else {
    for (const auto& slot : ex.awaiting) {
      auto it = values.find(slot);
      if (it == values.end()) {
        out.error = "missing value for slot '" + slot + "'";
        return out;
      }
      const SlotValue& v = it->second;
      if (slot == "direction") {
        if (!v.number) {
          out.error = "slot 'direction' takes a number of degrees";
          return out;
        }
        ex.parsed.direction_deg = *v.number;
      } else if (slot == "destination") {
        if (v.point) {
          ex.parsed.place = PlacePhrase{PlacePhrase::Kind::Points, {}, {*v.point}};
        } else if (v.text && is_label(lowercase(*v.text))) {
          ex.parsed.place = PlacePhrase{PlacePhrase::Kind::Label, lowercase(*v.text), {}};
        } else {
          out.error = "slot 'destination' takes a point or a beacon/zone label";
          return out;
        }
      } else if (slot == "zone") {
        if (!v.text || !is_label(lowercase(*v.text))) {
          out.error = "slot 'zone' takes a zone label";
          return out;
        }
        ex.parsed.place = PlacePhrase{PlacePhrase::Kind::Zone, lowercase(*v.text), {}};
      } else if (slot == "location") {
        if (!v.point) {
          out.error = "slot 'location' takes a point";
          return out;
        }
        ex.parsed.place = PlacePhrase{PlacePhrase::Kind::Points, {}, {*v.point}};
      }
    }
  }
  ex.rounds += 1;
  return advance(std::move(ex), true, world);
}

DialogueOutput DialogueManager::advance(Exchange ex, bool tentative, const World& world) {
  DialogueOutput out;
  out.strategy = ex.strategy;
  ex.last = interpret(ex.parsed, ex.utterance, world, grounding_, ex.strategy.interpretation, config_, ex.pins);
  ex.choices.clear();
  ex.awaiting.clear();

  auto invalid = [&](const std::string& reason) {
    // Parseable but invalid: reported as an error, not a grounding episode.
    // A bad completion answer leaves the open request as it was.
    out.error = reason;
    if (!tentative) exchange_.reset();
    return out;
  };
  auto open_request = [&](CompletionRequest req) {
    req.id = next_request_++;
    ex.request_id = req.id;
    exchange_ = std::move(ex);
    out.request = std::move(req);
    return out;
  };

  if (ex.last.confidence == Confidence::Failed) {
    if (ex.last.failure == FailureKind::InvalidReference) return invalid(ex.last.reason);
    const std::string reason = ex.last.reason;
    exchange_ = std::move(ex);
    close(Resolution::Abandoned, out);
    out.emission = generate({Severity::Warning, false, "Could not resolve the command: " + reason + ".", ""},
                            out.strategy.generation);
    return out;
  }
  if (ex.last.confidence == Confidence::Ambiguous) {
    CompletionRequest req;
    req.disambiguation = true;
    req.choices = ex.last.candidates;
    req.slots.push_back({"choice", "choice",
                         ex.last.ambiguous_slot == "vehicles" ? "Which vehicles?" : "Which destination?"});
    req.prompt = req.slots.front().prompt;
    ex.choices = ex.last.candidates;
    ex.awaiting = {"choice"};
    return open_request(std::move(req));
  }

  Conversion conv = convert(ex.last, world, config_);
  if (auto* req = std::get_if<CompletionRequest>(&conv)) {
    for (const auto& s : req->slots) ex.awaiting.push_back(s.name);
    return open_request(std::move(*req));
  }
  if (auto* rej = std::get_if<Rejection>(&conv)) return invalid(rej->reason);

  std::string echo;
  if (auto* cmd = std::get_if<VehicleCommand>(&conv)) {
    echo = describe(*cmd, world);
    out.command = std::move(*cmd);
  } else {
    auto& action = std::get<OperatorAction>(conv);
    echo = describe(action);
    out.action = std::move(action);
  }
  const Resolution r = ex.rounds > 0 ? Resolution::Clarified : Resolution::Executed;
  exchange_ = std::move(ex);
  close(r, out);
  out.emission = generate({Severity::Info, true, "Understood", echo}, out.strategy.generation);
  return out;
}

}  // namespace swarmctl
