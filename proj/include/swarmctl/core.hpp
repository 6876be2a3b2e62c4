#pragma once
// Shared value types: map coordinates, grid cells, typed ids, simulated time.

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>

namespace swarmctl {

/// Simulated time in ticks. One tick is one second of mission time.
using Tick = std::int64_t;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;

  double length() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).length(); }

/// Grid cell. Ordering is lexicographic on (row, col), which is the
/// tie-break order used everywhere a deterministic choice among cells is made.
struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Strongly typed integer id. Tag types keep vehicle, alarm, zone ids apart.
template <class Tag>
struct Id {
  std::int32_t value = 0;

  friend auto operator<=>(const Id&, const Id&) = default;
};

struct VehicleTag {};
struct IntruderTag {};
struct AlarmTag {};
struct ZoneTag {};
struct BeaconTag {};

using VehicleId = Id<VehicleTag>;
using IntruderId = Id<IntruderTag>;
using AlarmId = Id<AlarmTag>;
using ZoneId = Id<ZoneTag>;
using BeaconId = Id<BeaconTag>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace swarmctl

template <class Tag>
struct std::hash<swarmctl::Id<Tag>> {
  std::size_t operator()(const swarmctl::Id<Tag>& id) const noexcept {
    return std::hash<std::int32_t>{}(id.value);
  }
};
