#include "doctest.h"
#include "swarmctl/workload.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace swarmctl;

namespace {

std::vector<MissionEvent> burst(int commands, int alarms, Tick at) {
  std::vector<MissionEvent> log;
  for (int i = 0; i < commands; ++i) log.push_back({at, EventKind::Command, i});
  for (int i = 0; i < alarms; ++i) log.push_back({at, EventKind::Alarm, i});
  return log;
}

int table_level(int commands, int alarms) {
  if (alarms >= 2) return 4;
  if (alarms == 1) return 3;
  return commands >= 1 ? 2 : 1;
}

}  // namespace

TEST_CASE("windowed classifier follows the four-level table") {
  const WorkloadParams p;
  CHECK(classify_windowed({}, 500, p).discrete_level == 1);
  CHECK(classify_windowed(burst(1, 0, 500), 500, p).discrete_level == 2);
  CHECK(classify_windowed(burst(3, 1, 500), 500, p).discrete_level == 3);
  for (int c = 0; c <= 3; ++c)
    for (int a = 0; a <= 3; ++a) CHECK(classify_windowed(burst(c, a, 450), 500, p).discrete_level == table_level(c, a));
}

TEST_CASE("window is half-open: (now - W, now]") {
  const WorkloadParams p;  // W = 180
  CHECK(classify_windowed(burst(0, 1, 321), 500, p).discrete_level == 3);
  CHECK(classify_windowed(burst(0, 1, 320), 500, p).discrete_level == 1);
  CHECK(classify_windowed(burst(0, 1, 501), 500, p).discrete_level == 1);
}

TEST_CASE("continuous level examples") {
  const WorkloadParams p;
  const auto empty = level_continuous({}, 100, p);
  CHECK(empty.continuous_level == 0.0);
  CHECK(empty.discrete_level == 1);

  std::vector<MissionEvent> log{{100, EventKind::Alarm, 1}};
  auto s = level_continuous(log, 100, p);
  CHECK(s.continuous_level == doctest::Approx(2.5));
  CHECK(s.discrete_level == 3);

  log = {{100 - 120, EventKind::Alarm, 1}, {100, EventKind::Alarm, 2}};
  s = level_continuous(log, 100, p);
  CHECK(s.continuous_level == doctest::Approx(3.75));
  CHECK(s.discrete_level == 3);
  log.push_back({100, EventKind::Alarm, 3});
  s = level_continuous(log, 100, p);
  CHECK(s.continuous_level == doctest::Approx(6.25));
  CHECK(s.discrete_level == 4);
}

TEST_CASE("parameter validation") {
  WorkloadParams p;
  p.thresholds = {2.0, 0.5, 4.5};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_agreement(p), std::invalid_argument);
  p = {};
  p.window = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.half_life = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("calibration agreement") {
  const auto ok = calibrate_agreement(WorkloadParams{});
  CHECK(ok.all_agree);
  REQUIRE(ok.cases.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(ok.cases[i].windowed == i + 1);

  WorkloadParams low;
  low.alarm_weight = 1.0;
  const auto bad = calibrate_agreement(low);
  CHECK_FALSE(bad.all_agree);
  CHECK_FALSE(bad.cases[2].agree);
  CHECK(bad.cases[2].continuous == 2);
}

TEST_CASE("incremental accumulator matches brute force on random logs") {
  std::mt19937_64 rng(31);
  const WorkloadParams p;
  for (int trial = 0; trial < 20; ++trial) {
    ContinuousWorkload acc(p);
    std::vector<MissionEvent> log;
    Tick t = 0;
    const int n = 1 + static_cast<int>(rng() % 2000);
    for (int i = 0; i < n; ++i) {
      t += static_cast<Tick>(rng() % 30);
      const MissionEvent e{t, rng() % 3 == 0 ? EventKind::Alarm : EventKind::Command, i};
      const double before = acc.level_at(t);
      acc.append(e);
      log.push_back(e);
      CHECK(acc.level_at(t) > before);  // monotone on append
    }
    const Tick now = t + static_cast<Tick>(rng() % 100);
    const double brute = level_continuous(log, now, p).continuous_level;
    CHECK(std::abs(acc.level_at(now) - brute) <= 1e-9 * brute);
  }
}

TEST_CASE("decay without new events is strictly decreasing towards zero") {
  ContinuousWorkload acc(WorkloadParams{});
  acc.append({0, EventKind::Alarm, 1});
  double prev = acc.level_at(0);
  for (Tick t = 1; t < 2000; t += 7) {
    const double cur = acc.level_at(t);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(acc.level_at(20000) < 1e-40);
  CHECK_THROWS_AS(acc.append({-1, EventKind::Alarm, 2}), std::invalid_argument);
}

TEST_CASE("windowed result ignores events outside the window") {
  std::mt19937_64 rng(8);
  const WorkloadParams p;
  for (int trial = 0; trial < 200; ++trial) {
    const Tick now = 1000;
    std::vector<MissionEvent> inside;
    for (int i = 0, n = static_cast<int>(rng() % 5); i < n; ++i)
      inside.push_back({now - static_cast<Tick>(rng() % 180), rng() % 2 ? EventKind::Alarm : EventKind::Command, i});
    auto noisy = inside;
    for (int i = 0, n = static_cast<int>(rng() % 8); i < n; ++i)
      noisy.push_back({now - 180 - static_cast<Tick>(rng() % 500), rng() % 2 ? EventKind::Alarm : EventKind::Command, i});
    CHECK(classify_windowed(inside, now, p).discrete_level == classify_windowed(noisy, now, p).discrete_level);
  }
}
