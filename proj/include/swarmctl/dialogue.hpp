#pragma once
// Interaction manager.
//
// Operator input in a small command language (plus tokenized click/drag
// gestures) is parsed, its referents resolved against the world and the
// grounding history, and the result converted into a vehicle-level command.
// When the input cannot be converted yet, the manager asks back: a
// disambiguation choice or a completion request naming the missing slots.
// Which side carries the interaction burden follows the workload level.

#include "swarmctl/core.hpp"
#include "swarmctl/swarm.hpp"
#include "swarmctl/workload.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace swarmctl {

// ---------------------------------------------------------------------------
// Input

struct GesturePrimitive {
  enum class Kind { Click, Drag };
  Kind kind = Kind::Click;
  Vec2 from;
  Vec2 to;                        // same as `from` for clicks
  std::optional<double> breadth;  // drag only, radians
};

enum class Channel { Console, Gesture };

struct OperatorUtterance {
  std::string text;
  Tick tick = 0;
  Channel channel = Channel::Console;
  std::vector<GesturePrimitive> gestures;
};

enum class Intent { Dispatch, Pursue, PlaceBeacon, DefineZone, SetMode, QueryStatus };
std::string_view to_string(Intent intent);

struct PlacePhrase {
  enum class Kind { Beacon, Zone, Label, Points, Here, There };
  Kind kind = Kind::Points;
  std::string label;        // Beacon, Zone, Label (either kind)
  std::vector<Vec2> points;
};

struct GroupPhrase {
  enum class Kind { Ids, Count, Them, It, All };
  Kind kind = Kind::Ids;
  std::vector<int> ids;
  int count = 0;
  std::optional<PlacePhrase> anchor;  // "the two uavs nearest <place>"
};

/// Parse tree of one utterance. Completion answers are merged into it
/// before the next resolution round.
struct ParsedUtterance {
  Intent intent = Intent::QueryStatus;
  std::optional<GroupPhrase> group;
  std::optional<PlacePhrase> place;  // destination, pursued zone, or location
  std::string label;                 // name of a beacon or zone being created
  std::optional<double> direction_deg;
  std::optional<double> breadth_deg;
  std::optional<double> range_m;
  std::string task, stage, mode;
};

/// Nothing when the text is outside the command language.
std::optional<ParsedUtterance> parse_utterance(std::string_view text);

// ---------------------------------------------------------------------------
// Strategies

enum class InterpretationStrategy { StrictConfirm, ContextRank, AutoResolve };
enum class GenerationStrategy { Verbose, Standard, TerseCritical };
std::string_view to_string(InterpretationStrategy s);
std::string_view to_string(GenerationStrategy s);
InterpretationStrategy parse_interpretation_strategy(std::string_view text);
GenerationStrategy parse_generation_strategy(std::string_view text);

struct StrategyPair {
  InterpretationStrategy interpretation = InterpretationStrategy::StrictConfirm;
  GenerationStrategy generation = GenerationStrategy::Verbose;
  friend bool operator==(const StrategyPair&, const StrategyPair&) = default;
};

/// Level-indexed strategy table. Operator burden (higher = more work on the
/// operator's side) may not increase from level 1 to level 4.
struct StrategyPolicy {
  std::array<StrategyPair, 4> rows{{
      {InterpretationStrategy::StrictConfirm, GenerationStrategy::Verbose},
      {InterpretationStrategy::ContextRank, GenerationStrategy::Verbose},
      {InterpretationStrategy::ContextRank, GenerationStrategy::Standard},
      {InterpretationStrategy::AutoResolve, GenerationStrategy::TerseCritical},
  }};
  std::array<int, 3> interpretation_burden{3, 2, 1};  // StrictConfirm, ContextRank, AutoResolve
  std::array<int, 3> generation_burden{3, 2, 1};      // Verbose, Standard, TerseCritical

  int burden(InterpretationStrategy s) const { return interpretation_burden[static_cast<int>(s)]; }
  int burden(GenerationStrategy s) const { return generation_burden[static_cast<int>(s)]; }
  /// Throws std::invalid_argument when burden rises with the level.
  void validate() const;
};

StrategyPair select_strategy(const WorkloadState& workload, const StrategyPolicy& policy);

enum class Severity { Info, Warning, Critical };
std::string_view to_string(Severity s);

struct SystemMessage {
  Severity severity = Severity::Info;
  bool confirmation = false;  // acknowledges an operator command
  std::string text;
  std::string echo;           // interpreted command, shown with full feedback
};

enum class Modality { Console, Banner };
enum class Formulation { Full, Standard, Terse };
std::string_view to_string(Modality m);
std::string_view to_string(Formulation f);

struct EmissionDecision {
  bool emit = false;
  Severity severity = Severity::Info;
  Modality modality = Modality::Console;
  Formulation formulation = Formulation::Standard;
  std::string text;
};

/// Critical messages are emitted under every policy and level.
EmissionDecision generate(const SystemMessage& msg, const WorkloadState& workload,
                          const StrategyPolicy& policy);
EmissionDecision generate(const SystemMessage& msg, GenerationStrategy strategy);

// ---------------------------------------------------------------------------
// Grounding

enum class Confidence { Unique, Ambiguous, Failed };
enum class FailureKind { NonUnderstanding, InvalidReference };

struct Referents {
  std::vector<VehicleId> vehicles;
  std::optional<ZoneId> zone;
  std::optional<BeaconId> beacon;
  std::optional<Vec2> point;     // resolved destination or location
  std::vector<Vec2> waypoints;   // explicit route
  std::string label;
  std::optional<double> direction;  // radians
  std::optional<double> breadth;    // radians
  std::optional<double> range;      // metres
  std::string task, stage, mode;

  bool empty() const;
};

struct Candidate {
  std::vector<VehicleId> vehicles;
  std::optional<ZoneId> zone;
  std::optional<BeaconId> beacon;
  double score = 0.0;  // normalised to the best candidate
  double raw = 0.0;    // weighted sum before normalisation
  std::string description;
};

struct Interpretation {
  Intent intent = Intent::QueryStatus;
  Referents referents;
  std::vector<std::string> missing;
  Confidence confidence = Confidence::Failed;
  std::string ambiguous_slot;         // "vehicles" or "destination" when Ambiguous
  std::vector<Candidate> candidates;  // Ambiguous only
  FailureKind failure = FailureKind::NonUnderstanding;
  std::string reason;                 // Failed only
};

enum class Resolution { Executed, Clarified, Abandoned };
std::string_view to_string(Resolution r);

struct GroundingRecord {
  OperatorUtterance utterance;
  Interpretation interpretation;
  Resolution resolution = Resolution::Executed;
  int rounds = 0;
  StrategyPair strategy;
};

/// Append-only grounding history.
class GroundingStore {
 public:
  void append(GroundingRecord record) { records_.push_back(std::move(record)); }
  const std::vector<GroundingRecord>& records() const { return records_; }

  /// decay^(records since the last successful exchange naming the referent); 0 if none.
  double recency(VehicleId id, double decay) const;
  double recency_zone(ZoneId id, double decay) const;
  double recency_beacon(BeaconId id, double decay) const;
  std::optional<std::vector<VehicleId>> last_vehicle_group() const;
  std::optional<Vec2> last_location() const;

 private:
  template <class Pred>
  double recency_of(Pred names, double decay) const;

  std::vector<GroundingRecord> records_;
};

struct InterpretConfig {
  double label_weight = 1.0;
  double proximity_weight = 1.0;
  double recency_weight = 0.5;
  double proximity_scale = 400.0;  // metres, exp(-d/scale)
  double dominance_margin = 0.2;
  double recency_decay = 0.8;
  int candidate_pool_extra = 2;    // vehicles beyond the requested count considered for groups
  std::size_t max_candidates = 10;
  double default_breadth_deg = 90.0;
  double default_range_m = 400.0;
};

/// Choices fixed by earlier disambiguation rounds.
struct Pins {
  std::optional<std::vector<VehicleId>> vehicles;
  std::optional<Candidate> destination;
};

Interpretation interpret(const ParsedUtterance& parsed, const OperatorUtterance& utt,
                         const World& world, const GroundingStore& grounding,
                         InterpretationStrategy strategy, const InterpretConfig& config = {},
                         const Pins& pins = {});

/// Parses then resolves; unparseable text is a Failed non-understanding.
Interpretation interpret(const OperatorUtterance& utt, const World& world,
                         const GroundingStore& grounding, InterpretationStrategy strategy,
                         const InterpretConfig& config = {});

// ---------------------------------------------------------------------------
// Conversion

struct SlotSpec {
  std::string name;
  std::string type;  // angle_deg, point, label, place, vehicle_ids, choice
  std::string prompt;
};

struct CompletionRequest {
  int id = 0;
  bool disambiguation = false;
  std::vector<SlotSpec> slots;
  std::vector<Candidate> choices;
  std::string prompt;
};

struct PlaceBeaconAction {
  std::string label;
  Vec2 pos;
};
struct DefineZoneAction {
  SearchZone zone;
};
struct SetModeAction {
  std::string task;
  OodaStage stage = OodaStage::Observe;
  std::string mode;
};
struct StatusQuery {
  std::vector<VehicleId> vehicles;
};
using OperatorAction = std::variant<PlaceBeaconAction, DefineZoneAction, SetModeAction, StatusQuery>;

struct Rejection {
  std::string reason;
};

using Conversion = std::variant<VehicleCommand, OperatorAction, CompletionRequest, Rejection>;

/// Fills derivable slots, planning routes over open cells. Throws
/// std::logic_error if the interpretation is not Unique.
Conversion convert(const Interpretation& interp, const World& world,
                   const InterpretConfig& config = {});

std::string describe(const VehicleCommand& cmd, const World& world);
std::string describe(const OperatorAction& action);

// ---------------------------------------------------------------------------
// Session

/// One answer to a completion request: plain number, map point, or text.
struct SlotValue {
  std::optional<double> number;
  std::optional<Vec2> point;
  std::optional<std::string> text;
};

struct DialogueOutput {
  std::optional<VehicleCommand> command;
  std::optional<OperatorAction> action;
  std::optional<CompletionRequest> request;
  std::optional<EmissionDecision> emission;
  std::optional<std::string> error;       // parseable but invalid input
  std::vector<GroundingRecord> records;   // records appended by this call
  StrategyPair strategy;
};

/// One operator session. Every call yields exactly one of request, emission
/// or error. An open exchange keeps the strategy it was opened with.
class DialogueManager {
 public:
  explicit DialogueManager(StrategyPolicy policy = {}, InterpretConfig config = {});

  DialogueOutput on_utterance(const OperatorUtterance& utt, const World& world,
                              const WorkloadState& workload);
  DialogueOutput on_completion(int request_id, const std::map<std::string, SlotValue>& values,
                               std::optional<std::size_t> choice, const World& world,
                               const WorkloadState& workload);
  EmissionDecision notify(const SystemMessage& msg, const WorkloadState& workload) const;

  bool pending() const { return exchange_.has_value(); }
  std::optional<int> pending_request() const;
  const GroundingStore& grounding() const { return grounding_; }
  const StrategyPolicy& policy() const { return policy_; }

 private:
  struct Exchange {
    OperatorUtterance utterance;
    ParsedUtterance parsed;
    Pins pins;
    StrategyPair strategy;
    int rounds = 0;
    int request_id = 0;
    Interpretation last;
    std::vector<std::string> awaiting;
    std::vector<Candidate> choices;
  };

  DialogueOutput advance(Exchange ex, bool tentative, const World& world);
  void close(Resolution resolution, DialogueOutput& out);

  StrategyPolicy policy_;
  InterpretConfig config_;
  GroundingStore grounding_;
  std::optional<Exchange> exchange_;
  int next_request_ = 1;
};

}  // namespace swarmctl
