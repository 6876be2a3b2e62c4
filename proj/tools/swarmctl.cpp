// swarmctl: headless runs, live operator sessions, replay and workload calibration.

#include "swarmctl/metrics.hpp"
#include "swarmctl/mission.hpp"
#include "swarmctl/scenario.hpp"
#include "swarmctl/server.hpp"
#include "swarmctl/workload.hpp"

#include "CLI11.hpp"

#include <csignal>
#include <fstream>
#include <iostream>

using namespace swarmctl;

namespace {

Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int report_scenario_error(const ScenarioError& e) {
  std::cerr << "invalid input:\n";
  for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
  return 2;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

int cmd_run(const std::string& scenario_path, std::uint64_t seed, Tick ticks, const std::string& log_path,
            const std::string& metrics_path, const std::string& trace_path) {
  const Scenario s = load_scenario(scenario_path);
  auto log_out = open_out(log_path);
  const HeadlessResult r = run_headless(s, seed, ticks, &log_out);
  log_out.close();
  const CoverageMetrics m = compute_metrics(r.log);
  if (!metrics_path.empty()) {
    auto out = open_out(metrics_path);
    write_metrics_csv(out, m);
  }
  if (!trace_path.empty()) {
    auto out = open_out(trace_path);
    write_trace_csv(out, m);
  }
  std::cout << summary(m) << "\nlog digest " << to_hex(r.log_digest) << "\n";
  return 0;
}

int cmd_serve(const std::string& scenario_path, std::uint64_t seed, const ServeOptions& opts,
              const std::string& log_path) {
  Scenario s = load_scenario(scenario_path);
  std::ofstream log_out;
  ServeOptions o = opts;
  if (!log_path.empty()) {
    log_out = open_out(log_path);
    o.log_stream = &log_out;
  }
  Server server(std::move(s), seed, o);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on ws://" << o.address << ":" << server.port() << "/" << std::endl;
  server.run();
  g_server = nullptr;
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& scenario_path) {
  const Scenario s = load_scenario(scenario_path);
  std::ifstream in(log_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + log_path);
  const ReplayReport r = replay(read_lines(in), s);
  std::cout << to_string(r.status) << ": " << r.ticks_verified << " ticks verified";
  if (r.divergence) std::cout << ", first divergence at tick " << *r.divergence;
  if (!r.message.empty()) std::cout << " (" << r.message << ")";
  std::cout << "\n";
  switch (r.status) {
    case ReplayReport::Status::Success: return 0;
    case ReplayReport::Status::Partial: return 3;
    case ReplayReport::Status::Diverged: return 4;
    case ReplayReport::Status::Refused: return 5;
  }
  return 1;
}

int cmd_calibrate(const std::string& params_path) {
  WorkloadParams p;
  if (!params_path.empty()) {
    std::ifstream in(params_path);
    if (!in) throw std::runtime_error("cannot read " + params_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ScenarioError({std::string("not valid JSON: ") + e.what()});
    }
    p = parse_workload_params(doc);
  }
  const AgreementReport r = calibrate_agreement(p);
  std::cout << "scenario              windowed  continuous  agree\n";
  for (const auto& c : r.cases) {
    std::printf("%-20s  %8d  %10d  %s\n", c.scenario.c_str(), c.windowed, c.continuous, c.agree ? "yes" : "NO");
  }
  std::cout << (r.all_agree ? "all canonical scenarios agree\n" : "estimators disagree\n");
  return r.all_agree ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swarmctl - supervisory control of a patrolling UAV swarm"};
  app.require_subcommand(1);

  std::string scenario, log_path = "mission_log.jsonl", metrics_path, trace_path, params_path, serve_log;
  std::uint64_t seed = 1;
  Tick ticks = 1000;
  ServeOptions serve;
  long long max_ticks = 0;

  auto* run = app.add_subcommand("run", "run a mission headless and write its log");
  run->add_option("--scenario", scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--ticks", ticks, "ticks to simulate")->check(CLI::NonNegativeNumber);
  run->add_option("--log", log_path, "mission log output (JSON lines)");
  run->add_option("--metrics", metrics_path, "per-cell coverage CSV");
  run->add_option("--trace", trace_path, "workload/alarm trace CSV");

  auto* srv = app.add_subcommand("serve", "run a mission live with one operator session over WebSocket");
  srv->add_option("--scenario", scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  srv->add_option("--seed", seed, "RNG seed");
  srv->add_option("--port", serve.port, "TCP port (0 picks one)");
  srv->add_option("--bind", serve.address, "listen address");
  srv->add_option("--speed", serve.speed, "ticks per second; 0 runs unpaced");
  srv->add_option("--ticks", max_ticks, "stop after this many ticks (0 = run until interrupted)")
      ->check(CLI::NonNegativeNumber);
  srv->add_option("--log", serve_log, "mission log output (JSON lines)");

  auto* rep = app.add_subcommand("replay", "re-execute a mission log and check it tick by tick");
  rep->add_option("--log", log_path, "mission log")->required()->check(CLI::ExistingFile);
  rep->add_option("--scenario", scenario, "scenario the log was written for")->required()->check(CLI::ExistingFile);

  auto* cal = app.add_subcommand("calibrate-workload", "compare both workload estimators on canonical bursts");
  cal->add_option("--params", params_path, "workload parameter JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(scenario, seed, ticks, log_path, metrics_path, trace_path);
    if (*srv) {
      if (max_ticks > 0) serve.max_ticks = max_ticks;
      return cmd_serve(scenario, seed, serve, serve_log);
    }
    if (*rep) return cmd_replay(log_path, scenario);
    if (*cal) return cmd_calibrate(params_path);
  } catch (const ScenarioError& e) {
    return report_scenario_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
