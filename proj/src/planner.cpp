#include "swarmctl/planner.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <queue>
#include <tuple>

namespace swarmctl {

std::optional<std::vector<Cell>> shortest_path(const PheromoneField& field, Cell from, Cell to) {
  if (!field.in_bounds(from) || !field.in_bounds(to)) return std::nullopt;
  if (field.blocked(from) || field.blocked(to)) return std::nullopt;

  auto h = [&](Cell c) { return std::abs(c.row - to.row) + std::abs(c.col - to.col); };
  using Entry = std::tuple<int, int, int, int>;  // f, h, row, col
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::vector<int> g(field.cell_count(), std::numeric_limits<int>::max());
  std::vector<int> parent(field.cell_count(), -1);
  std::vector<char> closed(field.cell_count(), 0);

  g[field.index(from)] = 0;
  open.emplace(h(from), h(from), from.row, from.col);
  while (!open.empty()) {
    const auto [f, hh, r, c] = open.top();
    open.pop();
    const Cell cur{r, c};
    const std::size_t ci = field.index(cur);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (cur == to) break;
    for (Cell nb : {Cell{r - 1, c}, Cell{r, c - 1}, Cell{r, c + 1}, Cell{r + 1, c}}) {
      if (!field.in_bounds(nb) || field.blocked(nb)) continue;
      const std::size_t ni = field.index(nb);
      if (closed[ni] || g[ci] + 1 >= g[ni]) continue;
      g[ni] = g[ci] + 1;
      parent[ni] = static_cast<int>(ci);
      open.emplace(g[ni] + h(nb), h(nb), nb.row, nb.col);
    }
  }
  if (!closed[field.index(to)]) return std::nullopt;

  std::vector<Cell> path;
  for (int i = static_cast<int>(field.index(to)); i >= 0; i = parent[static_cast<std::size_t>(i)]) {
    path.push_back(field.cell_of(static_cast<std::size_t>(i)));
    if (static_cast<std::size_t>(i) == field.index(from)) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace swarmctl
