#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/radar_cloud.hpp"

namespace cfusion {

/// Everything the pipeline consumes for one camera frame.
struct Scene {
  std::string scene_id;
  double timestamp = 0.0;
  CameraModel camera;
  Pose ego_pose;  // ego -> global at `timestamp`
  std::vector<RadarSweep> radar_sweeps;  // newest first
  std::vector<Box3D> gt_boxes;           // current ego frame
  std::optional<std::vector<DetectionRecord>> preliminary_dets;

  bool operator==(const Scene&) const = default;
};

inline void ValidateScene(const Scene& scene) {
  const std::string where = "scene '" + scene.scene_id + "': ";
  try {
    scene.camera.Validate();
  } catch (const Error& e) {
    throw Error(e.code(), where + e.detail());
  }
  if (!scene.ego_pose.IsValid(1e-6)) throw Error(ErrorCode::kInvalidArgument, where + "invalid ego pose");
  for (const Box3D& b : scene.gt_boxes) {
    if (!b.center.allFinite() || !b.velocity.allFinite() || !std::isfinite(b.yaw)) {
      throw Error(ErrorCode::kInvalidArgument, where + "ground-truth box is not finite");
    }
    if (!(b.dims.minCoeff() > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, where + "ground-truth box dimensions must be positive");
    }
  }
  for (const RadarSweep& s : scene.radar_sweeps) {
    if (s.timestamp > scene.timestamp + 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, where + "radar sweep newer than the scene");
    }
    if (!s.owners.empty() && s.owners.size() != s.points.size()) {
      throw Error(ErrorCode::kInvalidArgument, where + "radar owner list does not match the points");
    }
  }
}

}  // namespace cfusion
