#pragma once
// Mission runtime: the tick loop, the ingress queue every state change goes
// through, the JSON-lines mission log, headless runs and log replay.

#include "swarmctl/dialogue.hpp"
#include "swarmctl/protocol.hpp"
#include "swarmctl/scenario.hpp"
#include "swarmctl/swarm.hpp"
#include "swarmctl/workload.hpp"

#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace swarmctl {

/// One frame waiting for the next tick.
struct Inbound {
  protocol::Kind kind = protocol::Kind::Utterance;
  json payload = json::object();
  std::optional<std::string> correlation;
  std::string source = "client";  // client | script | replay
};

/// Command and ModeChange frames are never dropped.
bool is_command(protocol::Kind kind);

/// Bounded, thread-safe. When full, the oldest non-command frame makes room;
/// if only commands are queued an incoming non-command frame is refused and
/// an incoming command is admitted over capacity.
class IngressQueue {
 public:
  explicit IngressQueue(std::size_t capacity = 64) : capacity_(capacity) {}

  /// Returns the frame that was dropped, if any (the caller owes it a reply).
  std::optional<Inbound> push(Inbound frame);
  std::vector<Inbound> drain();
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  mutable std::mutex mu_;
  std::size_t capacity_;
  std::deque<Inbound> q_;
};

/// Outbound frame before the session stamps its sequence number.
struct Outbound {
  protocol::Kind kind = protocol::Kind::Event;
  Tick tick = 0;
  json payload = json::object();
  std::optional<std::string> correlation;
};

protocol::Frame error_frame(Tick tick, const std::string& message, std::optional<std::string> correlation);

class Mission {
 public:
  struct Options {
    bool run_script = true;       // feed operator_script items through the queue
    bool collect_outbound = true; // keep frames for take_outbound()
    bool keep_log = true;         // keep log lines in memory
    std::ostream* log_stream = nullptr;
    std::optional<Tick> planned_ticks;  // recorded in the Init record
  };

  Mission(Scenario scenario, std::uint64_t seed, Options options);

  /// Advance one tick: scheduled no-fly areas, queued input, field, swarm,
  /// anomaly tracking, workload, Tick record.
  void tick();

  IngressQueue& ingress() { return queue_; }
  std::vector<Outbound> take_outbound();

  const World& world() const { return world_; }
  const Scenario& scenario() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }
  Tick now() const { return world_.tick; }
  const WorkloadState& workload() const { return workload_; }
  StrategyPair strategy() const { return select_strategy(workload_, scenario_.strategy); }
  const DialogueManager& dialogue() const { return dialogue_; }
  const std::vector<AnomalyReport>& anomalies() const { return anomalies_; }

  const std::vector<std::string>& log_lines() const { return log_; }
  /// FNV-1a over every log byte written so far (newlines included).
  std::uint64_t log_digest() const { return log_hash_; }

  /// Workload, strategy and anomalies for Snapshot payloads.
  json snapshot_context() const;
  bool take_keyframe_request();

 private:
  void write_log(const std::string& category, const json& body);
  void emit(protocol::Kind kind, json payload, std::optional<std::string> correlation = std::nullopt);
  void process(const Inbound& in);
  void handle_dialogue(DialogueOutput out, const std::optional<std::string>& corr);
  void apply_action(const OperatorAction& action, const std::optional<StrategyPair>& strategy,
                    const std::optional<EmissionDecision>& ack, const std::optional<std::string>& corr);
  void flush_mode_changes();
  void flush_events();
  WorkloadState compute_workload() const;
  std::string status_text(const std::vector<VehicleId>& ids) const;

  Scenario scenario_;
  std::uint64_t seed_;
  Options options_;
  World world_;
  AnomalyTracker tracker_;
  ContinuousWorkload continuous_;
  DialogueManager dialogue_;
  IngressQueue queue_;
  WorkloadState workload_;
  std::vector<AnomalyReport> anomalies_;
  std::size_t events_seen_ = 0;
  std::size_t mode_changes_seen_ = 0;
  std::size_t script_next_ = 0;
  bool keyframe_requested_ = false;
  std::vector<Outbound> outbound_;
  std::vector<std::string> log_;
  std::uint64_t log_hash_ = 1469598103934665603ULL;
};

struct HeadlessResult {
  std::vector<std::string> log;
  std::uint64_t log_digest = 0;
};

/// Deterministic: identical inputs give byte-identical logs.
HeadlessResult run_headless(const Scenario& scenario, std::uint64_t seed, Tick ticks,
                            std::ostream* log_stream = nullptr);

struct ReplayReport {
  enum class Status { Success, Partial, Diverged, Refused };
  Status status = Status::Success;
  Tick ticks_verified = 0;
  std::optional<Tick> divergence;  // first tick whose digest differs
  std::string message;
};

std::string_view to_string(ReplayReport::Status status);

/// Re-executes the logged inputs against the scenario and compares every
/// Tick digest. Refused when the log was written for a different scenario.
ReplayReport replay(const std::vector<std::string>& log, const Scenario& scenario);

std::vector<std::string> read_lines(std::istream& in);

}  // namespace swarmctl
