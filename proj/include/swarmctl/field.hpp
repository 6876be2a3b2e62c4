#pragma once
// Dual digital-pheromone field.
//
// Urgency grows on every unblocked cell until a vehicle's sensor footprint
// resets it; presence is deposited by vehicles and evaporates. Patrolling
// vehicles climb (urgency - presence). Blocked (no-fly) cells hold zero in
// both grids and neither send nor receive diffusion, so a blocked ring cuts
// its interior off from the rest of the field.

#include "swarmctl/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace swarmctl {

namespace simd {
struct FieldKernels;
}

struct FieldParams {
  double urgency_growth = 1.0;
  double evaporation_rate = 0.01;   // fraction removed per tick, [0, 1)
  double diffusion_rate = 0.05;     // fraction sent to each open neighbour, [0, 0.25]
  double presence_deposit = 10.0;
  double presence_evaporation = 0.2;  // [0, 1)

  /// Throws std::invalid_argument naming the first out-of-range rate.
  void validate() const;
};

class PheromoneField {
 public:
  PheromoneField(int width, int height, double cell_size, FieldParams params = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  const FieldParams& params() const { return params_; }
  std::size_t cell_count() const { return urgency_.size(); }

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_of(std::size_t index) const {
    return {static_cast<int>(index / static_cast<std::size_t>(width_)),
            static_cast<int>(index % static_cast<std::size_t>(width_))};
  }

  double urgency(Cell c) const { return urgency_[index(c)]; }
  double presence(Cell c) const { return presence_[index(c)]; }
  bool blocked(Cell c) const { return open_[index(c)] == 0.0; }
  /// urgency - presence, the quantity patrolling vehicles climb.
  double score(Cell c) const { return urgency(c) - presence(c); }

  /// Ignored on blocked cells. Throws on negative values or out-of-bounds cells.
  void set_urgency(Cell c, double value);
  void set_presence(Cell c, double value);
  /// Blocking a cell zeroes both grids there.
  void set_blocked(Cell c, bool blocked);

  std::span<const double> urgency_grid() const { return urgency_; }
  std::span<const double> presence_grid() const { return presence_; }
  /// 1.0 for open cells, 0.0 for blocked ones.
  std::span<const double> open_mask() const { return open_; }

  /// Map extent in metres; cell (r, c) spans [c*s, (c+1)*s) x [r*s, (r+1)*s).
  Vec2 extent() const { return {width_ * cell_size_, height_ * cell_size_}; }
  bool contains(Vec2 p) const;
  /// Cell containing a map point; points on the far edge map to the last cell.
  Cell cell_at(Vec2 p) const;
  Vec2 center_of(Cell c) const;

  /// One tick of dynamics: growth, evaporation, diffusion on urgency;
  /// evaporation on presence.
  void step();
  /// Same, through an explicit kernel variant.
  void step(const simd::FieldKernels& kernels);

  /// Reset urgency over a footprint and deposit presence at the scanning
  /// vehicle's cell. Throws std::out_of_range before mutating anything if any
  /// footprint cell is outside the grid.
  void scan(std::span<const Cell> footprint, std::optional<Cell> deposit_at);

  double total_urgency() const;
  /// Mean urgency over open cells (0 if none are open).
  double mean_urgency() const;
  std::size_t open_count() const { return open_count_; }

  /// FNV-1a over grid bytes and blocked mask.
  std::uint64_t digest() const;

 private:
  void refresh_keep();

  int width_;
  int height_;
  double cell_size_;
  FieldParams params_;
  std::vector<double> urgency_;
  std::vector<double> presence_;
  std::vector<double> open_;
  std::vector<double> keep_;  // 1 - rate * (number of open 4-neighbours)
  std::vector<double> scratch_;
  std::vector<double> zero_row_;
  std::size_t open_count_;
};

/// Functional forms of the field operations.
PheromoneField step_field(PheromoneField field);
PheromoneField scan(PheromoneField field, std::span<const Cell> footprint,
                    std::optional<Cell> deposit_at);

/// Cells whose centre lies within `radius` metres of `pos`.
std::vector<Cell> footprint_cells(const PheromoneField& field, Vec2 pos, double radius);

/// Breadth-first reach over open cells, limited to `radius` steps from the
/// origin. Distances index a (2*radius+1)^2 window centred on the origin.
class BoundedReach {
 public:
  BoundedReach(const PheromoneField& field, Cell origin, int radius);

  bool reachable(Cell c) const;
  int steps_to(Cell c) const;  // -1 if unreachable
  /// Path from origin (exclusive) to target (inclusive). Empty for origin itself.
  std::vector<Cell> path_to(Cell target) const;
  /// Reachable cells in ascending (row, col) order.
  const std::vector<Cell>& cells() const { return cells_; }

 private:
  std::size_t slot(Cell c) const;
  bool in_window(Cell c) const;

  Cell origin_;
  int radius_;
  int span_;
  std::vector<int> dist_;
  std::vector<int> parent_;  // slot of predecessor, -1 for origin/unreached
  std::vector<Cell> cells_;
};

/// Open cell maximising urgency - presence among cells reachable from `pos`
/// within `radius` steps; ties go to the lowest (row, col). Returns `pos`
/// unless some cell strictly beats its score. Throws std::invalid_argument if
/// `pos` is blocked, std::out_of_range if outside the grid.
Cell gradient_target(const PheromoneField& field, Cell pos, int radius);

struct AnomalyReport {
  std::vector<Cell> region;  // ascending (row, col), 4-connected
  double severity = 0.0;     // max urgency in region
  Tick age = 0;              // min consecutive ticks above threshold across region
};

/// Maximal 4-connected open regions whose cells have all held
/// urgency > threshold for at least `min_age` consecutive observations.
/// `ages` holds one counter per cell as maintained by AnomalyTracker.
std::vector<AnomalyReport> detect_anomalies(const PheromoneField& field,
                                            std::span<const Tick> ages, Tick min_age);

/// Tracks how long each cell has stayed above the anomaly threshold.
/// The threshold is either fixed or a multiple of the current mean urgency.
class AnomalyTracker {
 public:
  struct Rule {
    double value = 5.0;
    bool relative_to_mean = true;
  };

  AnomalyTracker(std::size_t cell_count, Rule rule, Tick min_age);

  double threshold_for(const PheromoneField& field) const;
  void observe(const PheromoneField& field);
  std::vector<AnomalyReport> detect(const PheromoneField& field) const;
  std::span<const Tick> ages() const { return ages_; }
  Tick min_age() const { return min_age_; }

 private:
  Rule rule_;
  Tick min_age_;
  std::vector<Tick> ages_;
};

}  // namespace swarmctl
