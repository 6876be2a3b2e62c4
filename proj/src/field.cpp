#include "swarmctl/field.hpp"

#include "swarmctl/simd/field_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace swarmctl {
namespace {

void check_range(const char* name, double v, double lo, double hi, bool hi_open) {
  const bool ok = v >= lo && (hi_open ? v < hi : v <= hi);
  if (!ok || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("field parameter ") + name + " out of range");
  }
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

void FieldParams::validate() const {
  if (!(urgency_growth >= 0.0) || !std::isfinite(urgency_growth)) {
    throw std::invalid_argument("field parameter urgency_growth out of range");
  }
  check_range("evaporation_rate", evaporation_rate, 0.0, 1.0, true);
  check_range("diffusion_rate", diffusion_rate, 0.0, 0.25, false);
  if (!(presence_deposit >= 0.0) || !std::isfinite(presence_deposit)) {
    throw std::invalid_argument("field parameter presence_deposit out of range");
  }
  check_range("presence_evaporation", presence_evaporation, 0.0, 1.0, true);
}

PheromoneField::PheromoneField(int width, int height, double cell_size, FieldParams params)
    : width_(width), height_(height), cell_size_(cell_size), params_(params) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("field dimensions must be positive");
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell_size must be positive");
  params_.validate();
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  urgency_.assign(n, 0.0);
  presence_.assign(n, 0.0);
  open_.assign(n, 1.0);
  keep_.assign(n, 1.0);
  scratch_.assign(n, 0.0);
  zero_row_.assign(static_cast<std::size_t>(width), 0.0);
  open_count_ = n;
  refresh_keep();
}

void PheromoneField::set_urgency(Cell c, double value) {
  if (!in_bounds(c)) throw std::out_of_range("cell outside field");
  if (!(value >= 0.0)) throw std::invalid_argument("urgency must be non-negative");
  if (!blocked(c)) urgency_[index(c)] = value;
}

void PheromoneField::set_presence(Cell c, double value) {
  if (!in_bounds(c)) throw std::out_of_range("cell outside field");
  if (!(value >= 0.0)) throw std::invalid_argument("presence must be non-negative");
  if (!blocked(c)) presence_[index(c)] = value;
}

void PheromoneField::set_blocked(Cell c, bool is_blocked) {
  if (!in_bounds(c)) throw std::out_of_range("cell outside field");
  const std::size_t i = index(c);
  const bool was = open_[i] == 0.0;
  if (was == is_blocked) return;
  open_[i] = is_blocked ? 0.0 : 1.0;
  open_count_ += is_blocked ? std::size_t(-1) : 1;
  if (is_blocked) {
    urgency_[i] = 0.0;
    presence_[i] = 0.0;
  }
  refresh_keep();
}

void PheromoneField::refresh_keep() {
  const double rate = params_.diffusion_rate;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      int n = 0;
      const Cell nbrs[4] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const Cell& nb : nbrs) {
        if (in_bounds(nb) && !blocked(nb)) ++n;
      }
      keep_[index({r, c})] = 1.0 - rate * n;
    }
  }
}

bool PheromoneField::contains(Vec2 p) const {
  const Vec2 e = extent();
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= e.x && p.y <= e.y;
}

Cell PheromoneField::cell_at(Vec2 p) const {
  if (!contains(p)) throw std::out_of_range("point outside map");
  const int col = std::min(width_ - 1, static_cast<int>(p.x / cell_size_));
  const int row = std::min(height_ - 1, static_cast<int>(p.y / cell_size_));
  return {row, col};
}

Vec2 PheromoneField::center_of(Cell c) const {
  return {(c.col + 0.5) * cell_size_, (c.row + 0.5) * cell_size_};
}

void PheromoneField::step() { step(simd::active_kernels()); }

void PheromoneField::step(const simd::FieldKernels& k) {
  k.grow_evaporate(urgency_, open_, params_.urgency_growth, 1.0 - params_.evaporation_rate);
  const auto w = static_cast<std::size_t>(width_);
  for (int r = 0; r < height_; ++r) {
    const double* center = urgency_.data() + r * w;
    const double* up = r > 0 ? center - w : zero_row_.data();
    const double* down = r + 1 < height_ ? center + w : zero_row_.data();
    k.diffuse_row(up, center, down, keep_.data() + r * w, open_.data() + r * w,
                  params_.diffusion_rate, scratch_.data() + r * w, w);
  }
  urgency_.swap(scratch_);
  k.scale(presence_, 1.0 - params_.presence_evaporation);
}

void PheromoneField::scan(std::span<const Cell> footprint, std::optional<Cell> deposit_at) {
  for (const Cell& c : footprint) {
    if (!in_bounds(c)) {
      throw std::out_of_range("footprint cell (" + std::to_string(c.row) + ", " +
                              std::to_string(c.col) + ") outside field");
    }
  }
  if (deposit_at && !in_bounds(*deposit_at)) throw std::out_of_range("deposit cell outside field");
  for (const Cell& c : footprint) urgency_[index(c)] = 0.0;
  if (deposit_at && !blocked(*deposit_at)) presence_[index(*deposit_at)] += params_.presence_deposit;
}

double PheromoneField::total_urgency() const { return simd::active_kernels().sum(urgency_); }

double PheromoneField::mean_urgency() const {
  return open_count_ == 0 ? 0.0 : total_urgency() / static_cast<double>(open_count_);
}

std::uint64_t PheromoneField::digest() const {
  std::uint64_t h = kFnvOffset;
  h = fnv1a(h, urgency_.data(), urgency_.size() * sizeof(double));
  h = fnv1a(h, presence_.data(), presence_.size() * sizeof(double));
  h = fnv1a(h, open_.data(), open_.size() * sizeof(double));
  return h;
}

PheromoneField step_field(PheromoneField field) {
  field.step();
  return field;
}

PheromoneField scan(PheromoneField field, std::span<const Cell> footprint,
                    std::optional<Cell> deposit_at) {
  field.scan(footprint, deposit_at);
  return field;
}

std::vector<Cell> footprint_cells(const PheromoneField& field, Vec2 pos, double radius) {
  std::vector<Cell> out;
  const double s = field.cell_size();
  const int c0 = std::max(0, static_cast<int>(std::floor((pos.x - radius) / s)));
  const int c1 = std::min(field.width() - 1, static_cast<int>(std::floor((pos.x + radius) / s)));
  const int r0 = std::max(0, static_cast<int>(std::floor((pos.y - radius) / s)));
  const int r1 = std::min(field.height() - 1, static_cast<int>(std::floor((pos.y + radius) / s)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (distance(field.center_of({r, c}), pos) <= radius) out.push_back({r, c});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

BoundedReach::BoundedReach(const PheromoneField& field, Cell origin, int radius)
    : origin_(origin), radius_(std::max(0, radius)), span_(2 * std::max(0, radius) + 1) {
  dist_.assign(static_cast<std::size_t>(span_) * span_, -1);
  parent_.assign(dist_.size(), -1);
  if (!field.in_bounds(origin) || field.blocked(origin)) return;
  std::deque<Cell> frontier{origin};
  dist_[slot(origin)] = 0;
  while (!frontier.empty()) {
    const Cell cur = frontier.front();
    frontier.pop_front();
    const int d = dist_[slot(cur)];
    if (d == radius_) continue;
    const Cell nbrs[4] = {{cur.row - 1, cur.col}, {cur.row, cur.col - 1},
                          {cur.row, cur.col + 1}, {cur.row + 1, cur.col}};
    for (const Cell& nb : nbrs) {
      if (!field.in_bounds(nb) || field.blocked(nb) || !in_window(nb)) continue;
      const std::size_t s = slot(nb);
      if (dist_[s] >= 0) continue;
      dist_[s] = d + 1;
      parent_[s] = static_cast<int>(slot(cur));
      frontier.push_back(nb);
    }
  }
  for (int dr = -radius_; dr <= radius_; ++dr) {
    for (int dc = -radius_; dc <= radius_; ++dc) {
      const Cell c{origin.row + dr, origin.col + dc};
      if (in_window(c) && dist_[slot(c)] >= 0) cells_.push_back(c);
    }
  }
}

bool BoundedReach::in_window(Cell c) const {
  return std::abs(c.row - origin_.row) <= radius_ && std::abs(c.col - origin_.col) <= radius_;
}

std::size_t BoundedReach::slot(Cell c) const {
  return static_cast<std::size_t>(c.row - origin_.row + radius_) * span_ +
         static_cast<std::size_t>(c.col - origin_.col + radius_);
}

bool BoundedReach::reachable(Cell c) const { return in_window(c) && dist_[slot(c)] >= 0; }

int BoundedReach::steps_to(Cell c) const { return in_window(c) ? dist_[slot(c)] : -1; }

std::vector<Cell> BoundedReach::path_to(Cell target) const {
  std::vector<Cell> path;
  if (!reachable(target)) return path;
  int s = static_cast<int>(slot(target));
  const int origin_slot = static_cast<int>(slot(origin_));
  while (s != origin_slot) {
    path.push_back({origin_.row - radius_ + s / span_, origin_.col - radius_ + s % span_});
    s = parent_[static_cast<std::size_t>(s)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

Cell gradient_target(const PheromoneField& field, Cell pos, int radius) {
  if (!field.in_bounds(pos)) throw std::out_of_range("position outside field");
  if (field.blocked(pos)) throw std::invalid_argument("position is a blocked cell");
  const BoundedReach reach(field, pos, radius);
  // cells() is in (row, col) order, so strict comparison keeps the lowest on ties.
  Cell top = pos;
  double top_score = -std::numeric_limits<double>::infinity();
  for (const Cell& c : reach.cells()) {
    const double s = field.score(c);
    if (s > top_score) {
      top_score = s;
      top = c;
    }
  }
  return top_score > field.score(pos) ? top : pos;
}

// ---------------------------------------------------------------------------

std::vector<AnomalyReport> detect_anomalies(const PheromoneField& field,
                                            std::span<const Tick> ages, Tick min_age) {
  if (ages.size() != field.cell_count()) throw std::invalid_argument("age grid size mismatch");
  std::vector<AnomalyReport> reports;
  std::vector<char> seen(field.cell_count(), 0);
  auto qualifies = [&](Cell c) {
    return field.in_bounds(c) && !field.blocked(c) && ages[field.index(c)] >= min_age &&
           ages[field.index(c)] > 0;
  };
  for (std::size_t i = 0; i < field.cell_count(); ++i) {
    const Cell start = field.cell_of(i);
    if (seen[i] || !qualifies(start)) continue;
    AnomalyReport rep;
    rep.age = std::numeric_limits<Tick>::max();
    std::deque<Cell> frontier{start};
    seen[i] = 1;
    while (!frontier.empty()) {
      const Cell cur = frontier.front();
      frontier.pop_front();
      rep.region.push_back(cur);
      rep.severity = std::max(rep.severity, field.urgency(cur));
      rep.age = std::min(rep.age, ages[field.index(cur)]);
      const Cell nbrs[4] = {{cur.row - 1, cur.col}, {cur.row + 1, cur.col},
                            {cur.row, cur.col - 1}, {cur.row, cur.col + 1}};
      for (const Cell& nb : nbrs) {
        if (!qualifies(nb) || seen[field.index(nb)]) continue;
        seen[field.index(nb)] = 1;
        frontier.push_back(nb);
      }
    }
    std::sort(rep.region.begin(), rep.region.end());
    reports.push_back(std::move(rep));
  }
  return reports;
}

AnomalyTracker::AnomalyTracker(std::size_t cell_count, Rule rule, Tick min_age)
    : rule_(rule), min_age_(min_age), ages_(cell_count, 0) {
  if (!(rule.value > 0.0)) throw std::invalid_argument("anomaly threshold must be positive");
  if (min_age < 1) throw std::invalid_argument("anomaly min_age must be at least 1");
}

double AnomalyTracker::threshold_for(const PheromoneField& field) const {
  return rule_.relative_to_mean ? rule_.value * field.mean_urgency() : rule_.value;
}

void AnomalyTracker::observe(const PheromoneField& field) {
  if (ages_.size() != field.cell_count()) throw std::invalid_argument("tracker size mismatch");
  const double threshold = threshold_for(field);
  const auto u = field.urgency_grid();
  const auto open = field.open_mask();
  for (std::size_t i = 0; i < ages_.size(); ++i) {
    ages_[i] = (open[i] != 0.0 && u[i] > threshold) ? ages_[i] + 1 : 0;
  }
}

std::vector<AnomalyReport> AnomalyTracker::detect(const PheromoneField& field) const {
  return detect_anomalies(field, ages_, min_age_);
}

}  // namespace swarmctl
