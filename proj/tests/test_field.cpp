#include "doctest.h"
#include "swarmctl/field.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

using namespace swarmctl;

namespace {

FieldParams params(double growth, double rho, double delta) {
  FieldParams p;
  p.urgency_growth = growth;
  p.evaporation_rate = rho;
  p.diffusion_rate = delta;
  return p;
}

// Independent stencil: growth/evaporation, then explicit pairwise flows.
std::vector<double> stencil_oracle(const PheromoneField& f) {
  const auto& p = f.params();
  const int h = f.height(), w = f.width();
  std::vector<double> u1(f.cell_count(), 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (!f.blocked({r, c})) u1[f.index({r, c})] = (f.urgency({r, c}) + p.urgency_growth) * (1 - p.evaporation_rate);
  std::vector<double> out = u1;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (f.blocked({r, c})) continue;
      for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const Cell nb{r + dr, c + dc};
        if (!f.in_bounds(nb) || f.blocked(nb)) continue;
        const double flow = p.diffusion_rate * u1[f.index({r, c})];
        out[f.index({r, c})] -= flow;
        out[f.index(nb)] += flow;
      }
    }
  }
  return out;
}

// Full-grid BFS distances, no radius window.
std::vector<int> bfs_oracle(const PheromoneField& f, Cell from) {
  std::vector<int> dist(f.cell_count(), -1);
  std::deque<Cell> q{from};
  dist[f.index(from)] = 0;
  while (!q.empty()) {
    Cell cur = q.front();
    q.pop_front();
    for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
      Cell nb{cur.row + dr, cur.col + dc};
      if (!f.in_bounds(nb) || f.blocked(nb) || dist[f.index(nb)] >= 0) continue;
      dist[f.index(nb)] = dist[f.index(cur)] + 1;
      q.push_back(nb);
    }
  }
  return dist;
}

void block_ring(PheromoneField& f, int r0, int c0, int r1, int c1) {
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (r == r0 || r == r1 || c == c0 || c == c1) f.set_blocked({r, c}, true);
}

bool all_non_negative(const PheromoneField& f) {
  for (double v : f.urgency_grid()) if (v < 0) return false;
  for (double v : f.presence_grid()) if (v < 0) return false;
  return true;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(FieldParams{}.validate());
  CHECK_THROWS_AS(params(1, 1.0, 0.1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(params(1, 0.0, 0.26).validate(), std::invalid_argument);
  CHECK_NOTHROW(params(1, 0.0, 0.25).validate());
  CHECK_THROWS_AS(PheromoneField(0, 4, 1.0), std::invalid_argument);
}

TEST_CASE("single cell accumulates growth") {
  PheromoneField f(1, 1, 10.0, params(1, 0, 0));
  f.step();
  CHECK(f.urgency({0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("diffusion conserves mass") {
  std::mt19937_64 rng(5);
  PheromoneField f(17, 11, 10.0, params(0, 0, 0.2));
  for (std::size_t i = 0; i < f.cell_count(); ++i) f.set_urgency(f.cell_of(i), double(rng() % 1000));
  const double before = f.total_urgency();
  for (int t = 0; t < 40; ++t) {
    f.step();
    CHECK(std::abs(f.total_urgency() - before) <= 1e-9 * before);
  }
}

TEST_CASE("3x3 centre spike matches the stencil oracle") {
  PheromoneField f(3, 3, 10.0, params(0, 0, 0.1));
  f.set_urgency({1, 1}, 9.0);
  const auto expected = stencil_oracle(f);
  f.step();
  for (std::size_t i = 0; i < f.cell_count(); ++i) CHECK(f.urgency_grid()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  CHECK(f.urgency({1, 1}) == doctest::Approx(5.4));
  for (Cell c : {Cell{0, 1}, Cell{1, 0}, Cell{1, 2}, Cell{2, 1}}) CHECK(f.urgency(c) == doctest::Approx(0.9));
  for (Cell c : {Cell{0, 0}, Cell{0, 2}, Cell{2, 0}, Cell{2, 2}}) CHECK(f.urgency(c) == 0.0);
}

TEST_CASE("random fields with blocked cells match the stencil oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    PheromoneField f(9 + trial % 5, 7 + trial % 3, 5.0, params(0.7, 0.03, 0.2));
    for (std::size_t i = 0; i < f.cell_count(); ++i) {
      if (rng() % 4 == 0) f.set_blocked(f.cell_of(i), true);
      f.set_urgency(f.cell_of(i), double(rng() % 500) / 7.0);
    }
    const auto expected = stencil_oracle(f);
    f.step();
    for (std::size_t i = 0; i < f.cell_count(); ++i)
      CHECK(f.urgency_grid()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("blocked cells stay zero and presence evaporates") {
  PheromoneField f(4, 4, 10.0, FieldParams{});
  f.set_presence({0, 0}, 10.0);
  f.set_blocked({2, 2}, true);
  f.set_urgency({2, 2}, 7.0);  // ignored on blocked cells
  f.step();
  CHECK(f.urgency({2, 2}) == 0.0);
  CHECK(f.presence({2, 2}) == 0.0);
  CHECK(f.presence({0, 0}) == doctest::Approx(8.0));
}

TEST_CASE("scan resets urgency and deposits presence") {
  PheromoneField f(6, 6, 10.0, FieldParams{});
  for (int t = 0; t < 5; ++t) f.step();
  SUBCASE("full reset") {
    std::vector<Cell> all;
    for (std::size_t i = 0; i < f.cell_count(); ++i) all.push_back(f.cell_of(i));
    f.scan(all, Cell{0, 0});
    CHECK(f.total_urgency() == 0.0);
    CHECK(f.presence({0, 0}) == doctest::Approx(10.0));
  }
  SUBCASE("empty footprint only deposits") {
    const PheromoneField before = f;
    f.scan({}, Cell{3, 3});
    for (std::size_t i = 0; i < f.cell_count(); ++i) CHECK(f.urgency_grid()[i] == before.urgency_grid()[i]);
    CHECK(f.presence({3, 3}) - before.presence({3, 3}) == doctest::Approx(10.0));
  }
  SUBCASE("out-of-bounds footprint rejected without mutation") {
    const auto digest = f.digest();
    const std::vector<Cell> bad{{0, 0}, {6, 0}};
    CHECK_THROWS_AS(f.scan(bad, Cell{0, 0}), std::out_of_range);
    CHECK(f.digest() == digest);
  }
}

TEST_CASE("half-scanned field follows the scalar recurrence on the neglected half") {
  const double rho = 0.01;
  PheromoneField f(10, 6, 10.0, params(1.0, rho, 0.0));
  std::vector<Cell> left;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 5; ++c) left.push_back({r, c});
  double oracle = 0.0;
  for (int t = 0; t < 200; ++t) {
    f.step();
    f.scan(left, std::nullopt);
    oracle = (oracle + 1.0) * (1.0 - rho);
  }
  double right_mean = 0.0;
  for (int r = 0; r < 6; ++r)
    for (int c = 5; c < 10; ++c) right_mean += f.urgency({r, c}) / 30.0;
  const double closed = (1.0 - rho) * (1.0 - std::pow(1.0 - rho, 200)) / rho;
  CHECK(right_mean == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("gradient target basics") {
  PheromoneField f(8, 8, 10.0, FieldParams{});
  CHECK(gradient_target(f, {4, 4}, 3) == Cell{4, 4});
  f.set_urgency({4, 5}, 5.0);
  CHECK(gradient_target(f, {4, 4}, 3) == Cell{4, 5});
  f.set_urgency({3, 3}, 5.0);  // tie: lowest row wins
  CHECK(gradient_target(f, {4, 4}, 3) == Cell{3, 3});
  f.set_blocked({0, 0}, true);
  CHECK_THROWS_AS(gradient_target(f, {0, 0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(gradient_target(f, {9, 0}, 3), std::out_of_range);
}

TEST_CASE("enclosed islet is never a gradient target (10x10 exhaustive)") {
  PheromoneField f(10, 10, 10.0, FieldParams{});
  block_ring(f, 2, 2, 6, 6);
  for (int r = 3; r <= 5; ++r)
    for (int c = 3; c <= 5; ++c) f.set_urgency({r, c}, 1000.0);
  std::set<Cell> islet;
  for (int r = 3; r <= 5; ++r)
    for (int c = 3; c <= 5; ++c) islet.insert({r, c});
  for (std::size_t i = 0; i < f.cell_count(); ++i) {
    const Cell pos = f.cell_of(i);
    if (f.blocked(pos) || islet.count(pos)) continue;
    for (int radius = 1; radius <= 12; ++radius) {
      const Cell t = gradient_target(f, pos, radius);
      CHECK(islet.count(t) == 0);
      CHECK(bfs_oracle(f, pos)[f.index(t)] >= 0);
    }
  }
}

TEST_CASE("gradient target equals the BFS-oracle argmax on random 12x12 fields") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    PheromoneField f(12, 12, 10.0, FieldParams{});
    for (std::size_t i = 0; i < f.cell_count(); ++i) {
      if (rng() % 3 == 0) f.set_blocked(f.cell_of(i), true);
      f.set_urgency(f.cell_of(i), double(rng() % 20));
      f.set_presence(f.cell_of(i), double(rng() % 5));
    }
    std::vector<Cell> open;
    for (std::size_t i = 0; i < f.cell_count(); ++i)
      if (!f.blocked(f.cell_of(i))) open.push_back(f.cell_of(i));
    if (open.empty()) continue;
    const Cell pos = open[rng() % open.size()];
    const int radius = 1 + static_cast<int>(rng() % 8);
    const auto dist = bfs_oracle(f, pos);
    Cell best = pos;
    double best_score = f.score(pos);
    for (std::size_t i = 0; i < f.cell_count(); ++i) {
      if (dist[i] < 0 || dist[i] > radius) continue;
      const Cell c = f.cell_of(i);
      if (f.score(c) > best_score || (f.score(c) == best_score && c < best && best_score > f.score(pos))) {
        best = c;
        best_score = f.score(c);
      }
    }
    // Among cells tied at the best score above pos, the oracle wants the lowest.
    if (best_score > f.score(pos)) {
      for (std::size_t i = 0; i < f.cell_count(); ++i) {
        if (dist[i] >= 0 && dist[i] <= radius && f.score(f.cell_of(i)) == best_score && f.cell_of(i) < best) best = f.cell_of(i);
      }
    }
    const Cell got = gradient_target(f, pos, radius);
    CHECK(got == best);
    CHECK(dist[f.index(got)] >= 0);
  }
}

TEST_CASE("bounded reach paths are shortest and open") {
  PheromoneField f(12, 12, 10.0, FieldParams{});
  for (int r = 0; r < 10; ++r) f.set_blocked({r, 6}, true);
  const BoundedReach reach(f, {0, 0}, 40);
  const auto dist = bfs_oracle(f, {0, 0});
  const Cell target{0, 11};
  const auto path = reach.path_to(target);
  REQUIRE(!path.empty());
  CHECK(static_cast<int>(path.size()) == dist[f.index(target)]);
  Cell prev{0, 0};
  for (Cell c : path) {
    CHECK(!f.blocked(c));
    CHECK(std::abs(c.row - prev.row) + std::abs(c.col - prev.col) == 1);
    prev = c;
  }
}

TEST_CASE("anomaly detection") {
  PheromoneField f(10, 10, 10.0, params(1.0, 0.0, 0.0));
  AnomalyTracker tracker(f.cell_count(), {20.0, false}, 5);
  CHECK(tracker.detect(f).empty());

  block_ring(f, 1, 1, 4, 4);  // islet {2,3}x{2,3}
  block_ring(f, 5, 5, 8, 8);  // islet {6,7}x{6,7}
  std::vector<Cell> outside;
  for (std::size_t i = 0; i < f.cell_count(); ++i) {
    const Cell c = f.cell_of(i);
    const bool in_a = c.row >= 2 && c.row <= 3 && c.col >= 2 && c.col <= 3;
    const bool in_b = c.row >= 6 && c.row <= 7 && c.col >= 6 && c.col <= 7;
    if (!f.blocked(c) && !in_a && !in_b) outside.push_back(c);
  }
  SUBCASE("both islets reported as disjoint regions") {
    for (int t = 0; t < 24; ++t) {
      f.step();
      f.scan(outside, std::nullopt);
      tracker.observe(f);
    }
    // urgency exceeds 20 from tick 21; 4 observations so far
    CHECK(tracker.detect(f).empty());
    f.step();
    f.scan(outside, std::nullopt);
    tracker.observe(f);
    const auto reports = tracker.detect(f);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].region == std::vector<Cell>{{2, 2}, {2, 3}, {3, 2}, {3, 3}});
    CHECK(reports[1].region == std::vector<Cell>{{6, 6}, {6, 7}, {7, 6}, {7, 7}});
    CHECK(reports[0].severity == doctest::Approx(25.0));
    CHECK(reports[0].age == 5);
  }
  SUBCASE("scanning one islet leaves exactly one report") {
    std::vector<Cell> scanned = outside;
    for (Cell c : {Cell{6, 6}, Cell{6, 7}, Cell{7, 6}, Cell{7, 7}}) scanned.push_back(c);
    for (int t = 0; t < 40; ++t) {
      f.step();
      f.scan(scanned, std::nullopt);
      tracker.observe(f);
    }
    const auto reports = tracker.detect(f);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].region.size() == 4);
    CHECK(reports[0].region.front() == Cell{2, 2});
  }
}

TEST_CASE("properties over random operation sequences") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    FieldParams p = params(double(rng() % 3), 0.0, 0.25 * double(rng() % 5) / 4.0);
    PheromoneField a(9, 8, 10.0, p);
    for (std::size_t i = 0; i < a.cell_count(); ++i)
      if (rng() % 6 == 0) a.set_blocked(a.cell_of(i), true);
    PheromoneField b = a;
    const Cell never{0, 0};
    double last = a.urgency(never);
    for (int t = 0; t < 60; ++t) {
      std::vector<Cell> fp;
      for (int k = 0; k < 5; ++k) {
        Cell c = a.cell_of(rng() % a.cell_count());
        if (c != never) fp.push_back(c);
      }
      const Cell dep = a.cell_of(rng() % a.cell_count());
      a.step();
      a.scan(fp, dep);
      b.step();
      b.scan(fp, dep);
      CHECK(all_non_negative(a));
      CHECK(a.digest() == b.digest());
      if (p.diffusion_rate == 0.0) {  // without diffusion a neglected cell only grows
        CHECK(a.urgency(never) >= last);
        last = a.urgency(never);
      }
    }
  }
}
