#pragma once

#include "swarmctl/field.hpp"

#include <optional>
#include <vector>

namespace swarmctl {

/// A* over open cells with 4-connected unit steps and a Manhattan heuristic.
/// Returns the cell sequence from `from` to `to`, both inclusive, or nothing
/// when `to` is unreachable or either end is blocked. Equal-cost frontier
/// entries are expanded in (f, h, row, col) order so the path is reproducible.
std::optional<std::vector<Cell>> shortest_path(const PheromoneField& field, Cell from, Cell to);

}  // namespace swarmctl
