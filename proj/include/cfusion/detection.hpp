#pragma once

#include <optional>
#include <vector>

#include "cfusion/geometry.hpp"

namespace cfusion {

/// Values a camera-only detector regresses at an object's center point.
struct PrimaryHeads {
  double depth = 1.0;                    // z-depth in the camera frame, meters
  Vec3 dims = Vec3::Ones();              // (w, l, h) meters
  OrientationCode orientation{};
  Vec2 offset = Vec2::Zero();            // sub-cell center offset, cells
  Vec2 size2d = Vec2::Zero();            // 2D box (w, h), pixels

  bool operator==(const PrimaryHeads&) const = default;
};

/// Values re-estimated once radar features are available.
struct SecondaryHeads {
  double depth = 1.0;                    // z-depth in the camera frame, meters
  OrientationCode orientation{};
  Vec2 velocity = Vec2::Zero();          // ego frame, m/s
  std::vector<double> attribute_scores;  // per-class attribute enumeration

  bool operator==(const SecondaryHeads&) const = default;
};

struct DetectionRecord {
  Box2D box2d;
  Vec2 center_px = Vec2::Zero();         // detected center point (projected 3D center)
  int class_id = 0;
  double score = 1.0;
  PrimaryHeads primary;
  std::optional<SecondaryHeads> secondary;
  std::optional<Box3D> gt_box3d;
  std::optional<int> gt_index;           // owner in the scene's gt list, synthetic data only

  bool operator==(const DetectionRecord&) const = default;
};

/// The 3D box implied by a record's primary heads.
inline Box3D EstimatedBox(const DetectionRecord& det, const CameraModel& cam) {
  Box3D box;
  box.center = cam.CameraToEgo(Unproject(det.center_px.x(), det.center_px.y(), det.primary.depth, cam));
  box.dims = det.primary.dims;
  box.yaw = DecodeOrientation(det.primary.orientation, RayAngle(det.center_px.x(), det.center_px.y(), cam));
  box.class_id = det.class_id;
  box.score = det.score;
  return box;
}

}  // namespace cfusion
