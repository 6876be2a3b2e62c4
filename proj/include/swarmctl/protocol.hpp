#pragma once
// Wire format shared with the console: JSON frames {seq, tick, kind, payload}
// plus an optional correlation id echoed on the reply to an inbound frame.

#include "swarmctl/dialogue.hpp"
#include "swarmctl/field.hpp"
#include "swarmctl/swarm.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmctl::protocol {

using json = nlohmann::json;

enum class Kind {
  Snapshot,
  Event,
  Utterance,
  CompletionRequest,
  CompletionResponse,
  Emission,
  Command,
  ModeChange,
  Error,
};

std::string_view to_string(Kind kind);
std::optional<Kind> parse_kind(std::string_view text);

/// Malformed frame or payload; the message names the offending field.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Frame {
  std::int64_t seq = 0;
  Tick tick = 0;
  Kind kind = Kind::Event;
  json payload = json::object();
  std::optional<std::string> correlation;
};

json to_json(const Frame& frame);
/// Inbound frames may omit seq and tick; payload must be an object.
Frame parse_frame(const std::string& text);

// Payload codecs. Angles on the wire are degrees counter-clockwise from +x.

json encode(const VehicleCommand& cmd);
/// Zone may be given by id or label. Throws ProtocolError.
VehicleCommand decode_command(const json& payload, const World& world);

OperatorUtterance decode_utterance(const json& payload, Tick tick);
json encode(const OperatorUtterance& utt);

struct CompletionAnswer {
  std::optional<int> request;  // empty: "pending", the currently open request
  std::map<std::string, SlotValue> values;
  std::optional<std::size_t> choice;
};
CompletionAnswer decode_completion(const json& payload);
json encode(const CompletionAnswer& answer);

json encode(const CompletionRequest& req);
json encode(const EmissionDecision& d);
json encode(const StrategyPair& s);
json encode(const ModeChange& change);
json encode(const Alarm& alarm);
json encode(const AnomalyReport& report, const PheromoneField& field);
json encode(const Interpretation& interp);
json encode(const GroundingRecord& record);
json encode(const SearchZone& zone);
json encode(const Beacon& beacon);

/// Quantized pheromone grid as decoded by a client.
struct GridView {
  double scale = 0;
  std::vector<std::uint16_t> values;
};

/// Builds Snapshot payloads for one session. Grids are quantized to u16
/// against a power-of-two scale; between keyframes only changed cells are
/// sent as flat [index, value, ...] pairs.
class SnapshotEncoder {
 public:
  explicit SnapshotEncoder(int keyframe_every = 10) : keyframe_every_(keyframe_every) {}

  /// `context` (workload, strategy, anomalies, ...) is merged into the payload.
  json encode(const World& world, const json& context);
  void force_keyframe() { since_key_ = -1; }

 private:
  struct Grid {
    double scale = 0;
    std::vector<std::uint16_t> values;
  };
  json encode_grid(std::span<const double> v, Grid& prev, bool key);

  int keyframe_every_;
  int since_key_ = -1;
  Grid urgency_, presence_;
  std::pair<int, int> dims_{0, 0};
};

/// Client-side decoding, used by tests and tools.
class SnapshotDecoder {
 public:
  /// Throws ProtocolError on a delta without a preceding keyframe.
  void apply(const json& snapshot_payload);
  const GridView& urgency() const { return urgency_; }
  const GridView& presence() const { return presence_; }
  const std::vector<bool>& blocked() const { return blocked_; }

 private:
  static void apply_grid(const json& g, GridView& view, std::size_t cells);
  GridView urgency_, presence_;
  std::vector<bool> blocked_;
};

/// Smallest power of two >= max(v, 1).
double grid_scale(double max_value);

}  // namespace swarmctl::protocol
