#pragma once

// Radar returns, multi-sweep aggregation into the current ego frame, radial
// velocity geometry and fixed-size pillar expansion.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"

namespace cfusion {

/// One radar return. (vx, vy) is the ego-motion compensated radial velocity.
struct RadarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double timestamp = 0.0;

  Vec3 position() const { return {x, y, z}; }
  Vec2 velocity() const { return {vx, vy}; }

  bool operator==(const RadarPoint&) const = default;
};

struct RadarSweep {
  std::vector<RadarPoint> points;
  Pose ego_pose;  // ego -> global at sweep time
  double timestamp = 0.0;
  // Index of the ground-truth object that produced each point, -1 for clutter.
  // Only synthetic scenes carry it; empty otherwise.
  std::vector<int> owners;

  bool operator==(const RadarSweep&) const = default;
};

struct RadarPillar {
  RadarPoint anchor;
  Vec3 half_extents = Vec3::Zero();

  Vec3 min_corner() const { return anchor.position() - half_extents; }
  Vec3 max_corner() const { return anchor.position() + half_extents; }

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> out;
    int k = 0;
    const Vec3 p = anchor.position();
    for (int sx : {-1, 1}) {
      for (int sy : {-1, 1}) {
        for (int sz : {-1, 1}) {
          out[k++] = p + Vec3(sx * half_extents.x(), sy * half_extents.y(), sz * half_extents.z());
        }
      }
    }
    return out;
  }
};

struct SweepWindow {
  double window_s = 0.25;
  std::size_t max_sweeps = 3;
  // Time ages are measured from; the newest sweep's timestamp when unset.
  std::optional<double> reference_time;
};

inline constexpr std::array<double, 3> kDefaultPillarDims = {0.2, 0.2, 1.5};

/// Aggregated point plus the ground-truth owner carried by synthetic sweeps.
struct AggregatedPoint {
  RadarPoint point;
  int owner = -1;
};

// Sweeps are expected newest first. A sweep qualifies when its age is within
// the window; at most `max_sweeps` qualify. Positions are mapped through
// current_pose^-1 * sweep_pose, velocities are only rotated.
inline std::vector<AggregatedPoint> AggregateSweepsWithOwners(std::span<const RadarSweep> sweeps,
                                                              const Pose& current_pose,
                                                              const SweepWindow& window = {}) {
  std::vector<AggregatedPoint> out;
  if (sweeps.empty()) return out;
  const double now = window.reference_time.value_or(sweeps.front().timestamp);
  const Pose current_inv = current_pose.Inverse();
  std::size_t used = 0;
  for (const RadarSweep& sweep : sweeps) {
    if (used >= window.max_sweeps) break;
    if (now - sweep.timestamp > window.window_s + 1e-9) continue;
    ++used;
    const Pose to_current = current_inv * sweep.ego_pose;
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
      const RadarPoint& src = sweep.points[i];
      const Vec3 p = TransformPoint(src.position(), to_current);
      const Vec3 v = RotateVector(Vec3(src.vx, src.vy, 0.0), to_current);
      RadarPoint dst{p.x(), p.y(), p.z(), v.x(), v.y(), src.timestamp};
      out.push_back({dst, i < sweep.owners.size() ? sweep.owners[i] : -1});
    }
  }
  return out;
}

inline std::vector<RadarPoint> AggregateSweeps(std::span<const RadarSweep> sweeps,
                                               const Pose& current_pose,
                                               const SweepWindow& window = {}) {
  std::vector<RadarPoint> out;
  for (auto& ap : AggregateSweepsWithOwners(sweeps, current_pose, window)) {
    out.push_back(ap.point);
  }
  return out;
}

/// Component of `velocity` along the line of sight to `position` (BEV).
inline Vec2 RadialProject(const Vec2& position, const Vec2& velocity) {
  const double norm = position.norm();
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::kDegeneratePosition, "line of sight undefined at the sensor origin");
  }
  const Vec2 unit = position / norm;
  return velocity.dot(unit) * unit;
}

inline std::vector<RadarPillar> ExpandPillars(std::span<const RadarPoint> points,
                                              const std::array<double, 3>& dims = kDefaultPillarDims) {
  if (!(dims[0] > 0.0 && dims[1] > 0.0 && dims[2] > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pillar dimensions must be positive");
  }
  const Vec3 half(0.5 * dims[0], 0.5 * dims[1], 0.5 * dims[2]);
  std::vector<RadarPillar> out;
  out.reserve(points.size());
  for (const RadarPoint& p : points) out.push_back({p, half});
  return out;
}

}  // namespace cfusion
