#pragma once

// Synthetic scenes: ground-truth objects in front of a forward camera, radar
// returns derived from them (radial velocity only), clutter, and a noisy
// camera-only "detector" that produces the preliminary detections.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/harness/json_io.hpp"
#include "cfusion/harness/scene.hpp"
#include "cfusion/radar_cloud.hpp"

namespace cfusion {

struct SynthClass {
  std::string name;
  double weight = 1.0;
  Vec3 dims = Vec3(1.9, 4.6, 1.7);  // (w, l, h)
  double dims_jitter = 0.1;          // relative, uniform
  double speed_min = 2.0;            // m/s, when moving
  double speed_max = 12.0;
  double moving_prob = 0.5;
};

inline constexpr int kAttributeMoving = 0;
inline constexpr int kAttributeStationary = 1;

enum class RadarZMode {
  kExact,    // z of the object center
  kZero,     // height unavailable: ground plane
  kUniform,  // center z plus uniform noise in [-z_span, z_span]
};

struct DetectorNoise {
  double depth_rel_sigma = 0.0;
  double center_px_sigma = 0.0;
  double yaw_sigma = 0.0;
  double dims_rel_sigma = 0.0;
  double score_min = 1.0;
  double score_max = 1.0;
};

struct RadarModel {
  int points_per_object = 1;
  double detection_prob = 1.0;
  double radial_sigma = 0.0;     // m, along the line of sight
  double velocity_sigma = 0.0;   // m/s, radial
  RadarZMode z_mode = RadarZMode::kExact;
  double z_span = 1.0;
  double footprint_spread = 0.0; // extra points spread over this fraction of the footprint
  double clutter_rate = 0.0;     // mean clutter points per sweep
  int num_sweeps = 1;
  double sweep_interval = 0.08;  // s
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int min_objects = 3;
  int max_objects = 8;
  double depth_min = 8.0;   // forward distance from the camera, m
  double depth_max = 45.0;
  double azimuth_margin_deg = 6.0;  // kept clear of the image border
  double min_separation = 0.5;      // m, between BEV circumcircles
  std::vector<SynthClass> classes = {
      {"car", 0.6, Vec3(1.9, 4.6, 1.7), 0.1, 2.0, 12.0, 0.6},
      {"pedestrian", 0.25, Vec3(0.7, 0.7, 1.75), 0.1, 0.5, 2.0, 0.5},
      {"truck", 0.15, Vec3(2.5, 7.5, 3.0), 0.1, 2.0, 10.0, 0.5},
  };
  double occlusion_rate = 0.0;  // chance an object is placed behind an earlier one
  double occlusion_gap_min = 8.0;
  double occlusion_gap_max = 14.0;
  double velocity_heading_sigma_deg = 0.0;  // motion direction vs. line of sight
  double ego_speed = 0.0;                   // m/s, forward
  double ego_yaw_rate = 0.0;                // rad/s
  int stride = 4;
  DetectorNoise detector;
  RadarModel radar;
  CameraModel camera = DefaultCamera();
};

inline RadarZMode RadarZModeFromString(const std::string& s) {
  if (s == "exact") return RadarZMode::kExact;
  if (s == "zero") return RadarZMode::kZero;
  if (s == "uniform") return RadarZMode::kUniform;
  throw Error(ErrorCode::kParse, "unknown radar z_mode '" + s + "'");
}

inline std::string ToString(RadarZMode m) {
  switch (m) {
    case RadarZMode::kExact: return "exact";
    case RadarZMode::kZero: return "zero";
    case RadarZMode::kUniform: return "uniform";
  }
  return "exact";
}

inline void ValidateSynthConfig(const SynthConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, "synth config: " + m); };
  if (c.min_objects < 0 || c.max_objects < c.min_objects) fail("object count range is empty");
  if (!(c.depth_min > 0.0) || c.depth_max < c.depth_min) fail("depth range is empty");
  if (c.classes.empty()) fail("no classes");
  for (const SynthClass& k : c.classes) {
    if (!(k.weight >= 0.0) || !(k.dims.minCoeff() > 0.0) || k.dims_jitter < 0.0 || k.speed_max < k.speed_min) {
      fail("invalid class '" + k.name + "'");
    }
  }
  const DetectorNoise& d = c.detector;
  if (d.depth_rel_sigma < 0 || d.center_px_sigma < 0 || d.yaw_sigma < 0 || d.dims_rel_sigma < 0) {
    fail("detector sigmas must be non-negative");
  }
  if (d.score_max < d.score_min || d.score_min < 0.0 || d.score_max > 1.0) fail("score range invalid");
  const RadarModel& r = c.radar;
  if (r.points_per_object < 0 || r.radial_sigma < 0 || r.velocity_sigma < 0 || r.clutter_rate < 0 ||
      r.z_span < 0 || r.footprint_spread < 0) {
    fail("radar parameters must be non-negative");
  }
  if (r.num_sweeps < 1 || !(r.sweep_interval >= 0.0)) fail("radar sweep settings invalid");
  if (c.occlusion_rate < 0 || c.occlusion_rate > 1 || c.occlusion_gap_max < c.occlusion_gap_min) {
    fail("occlusion settings invalid");
  }
  if (c.velocity_heading_sigma_deg < 0) fail("velocity heading sigma must be non-negative");
  if (c.stride < 1) fail("stride must be positive");
  c.camera.Validate();
}

inline SynthConfig SynthConfigFromJson(const Json& j) {
  try {
    SynthConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("num_objects")) {
      c.min_objects = j.at("num_objects").at(0).get<int>();
      c.max_objects = j.at("num_objects").at(1).get<int>();
    }
    if (j.contains("depth_range")) {
      c.depth_min = j.at("depth_range").at(0).get<double>();
      c.depth_max = j.at("depth_range").at(1).get<double>();
    }
    c.azimuth_margin_deg = j.value("azimuth_margin_deg", c.azimuth_margin_deg);
    c.min_separation = j.value("min_separation", c.min_separation);
    if (j.contains("classes")) {
      c.classes.clear();
      for (const Json& k : j.at("classes")) {
        SynthClass sc;
        sc.name = k.at("name").get<std::string>();
        sc.weight = k.value("weight", 1.0);
        sc.dims = json_detail::VecFromJson<3>(k.at("dims"), "class dims");
        sc.dims_jitter = k.value("dims_jitter", sc.dims_jitter);
        if (k.contains("speed")) {
          sc.speed_min = k.at("speed").at(0).get<double>();
          sc.speed_max = k.at("speed").at(1).get<double>();
        }
        sc.moving_prob = k.value("moving_prob", sc.moving_prob);
        c.classes.push_back(sc);
      }
    }
    c.occlusion_rate = j.value("occlusion_rate", c.occlusion_rate);
    if (j.contains("occlusion_gap")) {
      c.occlusion_gap_min = j.at("occlusion_gap").at(0).get<double>();
      c.occlusion_gap_max = j.at("occlusion_gap").at(1).get<double>();
    }
    c.velocity_heading_sigma_deg = j.value("velocity_heading_sigma_deg", c.velocity_heading_sigma_deg);
    c.ego_speed = j.value("ego_speed", c.ego_speed);
    c.ego_yaw_rate = j.value("ego_yaw_rate", c.ego_yaw_rate);
    c.stride = j.value("stride", c.stride);
    if (j.contains("detector")) {
      const Json& d = j.at("detector");
      c.detector.depth_rel_sigma = d.value("depth_rel_sigma", c.detector.depth_rel_sigma);
      c.detector.center_px_sigma = d.value("center_px_sigma", c.detector.center_px_sigma);
      c.detector.yaw_sigma = d.value("yaw_sigma", c.detector.yaw_sigma);
      c.detector.dims_rel_sigma = d.value("dims_rel_sigma", c.detector.dims_rel_sigma);
      if (d.contains("score")) {
        c.detector.score_min = d.at("score").at(0).get<double>();
        c.detector.score_max = d.at("score").at(1).get<double>();
      }
    }
    if (j.contains("radar")) {
      const Json& r = j.at("radar");
      c.radar.points_per_object = r.value("points_per_object", c.radar.points_per_object);
      c.radar.detection_prob = r.value("detection_prob", c.radar.detection_prob);
      c.radar.radial_sigma = r.value("radial_sigma", c.radar.radial_sigma);
      c.radar.velocity_sigma = r.value("velocity_sigma", c.radar.velocity_sigma);
      c.radar.z_mode = RadarZModeFromString(r.value("z_mode", ToString(c.radar.z_mode)));
      c.radar.z_span = r.value("z_span", c.radar.z_span);
      c.radar.footprint_spread = r.value("footprint_spread", c.radar.footprint_spread);
      c.radar.clutter_rate = r.value("clutter_rate", c.radar.clutter_rate);
      c.radar.num_sweeps = r.value("num_sweeps", c.radar.num_sweeps);
      c.radar.sweep_interval = r.value("sweep_interval", c.radar.sweep_interval);
    }
    if (j.contains("camera")) c.camera = CameraFromJson(j.at("camera"));
    ValidateSynthConfig(c);
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed synth config: ") + e.what());
  }
}

/// Exact detector output for a ground-truth box: the record a perfect
/// camera-only detector would emit.
inline DetectionRecord RecordFromGroundTruth(const Box3D& gt, const CameraModel& cam, int stride,
                                             std::optional<int> gt_index = std::nullopt) {
  const Vec3 c = cam.EgoToCamera(gt.center);
  const ImagePoint ip = ProjectToImage(c, cam);
  DetectionRecord rec;
  rec.center_px = Vec2(ip.u, ip.v);
  rec.box2d = Box3dToBox2d(gt, cam);
  rec.class_id = gt.class_id;
  rec.score = gt.score;
  rec.primary.depth = ip.depth;
  rec.primary.dims = gt.dims;
  rec.primary.orientation = EncodeOrientation(gt.yaw, RayAngle(ip.u, ip.v, cam));
  const auto cell = Vec2(std::floor(ip.u / stride), std::floor(ip.v / stride));
  rec.primary.offset = rec.center_px / stride - cell;
  rec.primary.size2d = Vec2(rec.box2d.w, rec.box2d.h);
  rec.gt_box3d = gt;
  rec.gt_index = gt_index;
  return rec;
}

namespace detail {

struct Placed {
  Box3D box;
  double radius;    // BEV circumradius
  bool occluder;    // already has an object placed behind it
};

inline bool Separated(const Box3D& box, double radius, const std::vector<Placed>& placed, double gap) {
  for (const Placed& p : placed) {
    const double d = std::hypot(box.center.x() - p.box.center.x(), box.center.y() - p.box.center.y());
    if (d < radius + p.radius + gap) return false;
  }
  return true;
}

inline bool FullyInFront(const Box3D& box, const CameraModel& cam) {
  for (const Vec3& c : Box3dCorners(box)) {
    if (!(cam.EgoToCamera(c).z() > 0.5)) return false;
  }
  const ImagePoint ip = ProjectToImage(cam.EgoToCamera(box.center), cam);
  return ip.u >= 0.0 && ip.v >= 0.0 && ip.u < cam.width && ip.v < cam.height;
}

}  // namespace detail

inline Scene GenerateScene(const SynthConfig& cfg, std::uint64_t seed) {
  ValidateSynthConfig(cfg);
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto gauss = [&](double sigma) { return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0; };
  auto chance = [&](double p) { return uniform(0.0, 1.0) < p; };

  const CameraModel& cam = cfg.camera;
  const Vec3 cam_origin = cam.CameraToEgo(Vec3::Zero());
  const double half_fov = std::atan2(0.5 * cam.width, cam.fx);
  const double az_limit = std::max(0.0, half_fov - cfg.azimuth_margin_deg * kPi / 180.0);

  Scene scene;
  char id[32];
  std::snprintf(id, sizeof(id), "scene-%06llu", static_cast<unsigned long long>(seed));
  scene.scene_id = id;
  scene.timestamp = 1.0;
  scene.camera = cam;
  auto ego_pose_at = [&](double t) {
    return Pose::FromYaw(cfg.ego_yaw_rate * t, Vec3(cfg.ego_speed * t, 0.0, 0.0));
  };
  scene.ego_pose = ego_pose_at(scene.timestamp);

  std::vector<double> class_weights;
  for (const SynthClass& k : cfg.classes) class_weights.push_back(k.weight);
  std::discrete_distribution<int> pick_class(class_weights.begin(), class_weights.end());

  // Objects.
  const int count = std::uniform_int_distribution<int>(cfg.min_objects, cfg.max_objects)(rng);
  std::vector<detail::Placed> placed;
  for (int i = 0; i < count; ++i) {
    const int cls = pick_class(rng);
    const SynthClass& kind = cfg.classes[static_cast<std::size_t>(cls)];
    Box3D box;
    box.class_id = cls;
    for (int a = 0; a < 3; ++a) box.dims[a] = kind.dims[a] * (1.0 + uniform(-kind.dims_jitter, kind.dims_jitter));
    const bool moving = chance(kind.moving_prob);
    const double speed = moving ? uniform(kind.speed_min, kind.speed_max) : 0.0;
    const double motion_sign = chance(0.5) ? 1.0 : -1.0;
    const double heading_noise = gauss(cfg.velocity_heading_sigma_deg * kPi / 180.0);
    const double free_yaw = uniform(-kPi, kPi);
    const double radius = 0.5 * std::hypot(box.dims.x(), box.dims.y());

    // Occluded placement: straight behind an earlier object along its viewing ray.
    std::optional<std::size_t> behind;
    if (cfg.occlusion_rate > 0.0 && chance(cfg.occlusion_rate)) {
      std::vector<std::size_t> candidates;
      for (std::size_t k = 0; k < placed.size(); ++k) {
        if (!placed[k].occluder) candidates.push_back(k);
      }
      if (!candidates.empty()) {
        behind = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
      }
    }

    bool ok = false;
    for (int attempt = 0; attempt < 60 && !ok; ++attempt) {
      double forward;
      double azimuth;
      if (behind) {
        const Vec3 front = placed[*behind].box.center - cam_origin;
        azimuth = std::atan2(front.y(), front.x()) + uniform(-0.01, 0.01);
        forward = std::hypot(front.x(), front.y()) * std::cos(azimuth) +
                  uniform(cfg.occlusion_gap_min, cfg.occlusion_gap_max);
      } else {
        forward = uniform(cfg.depth_min, cfg.depth_max);
        azimuth = uniform(-az_limit, az_limit);
      }
      box.center = cam_origin + Vec3(forward, forward * std::tan(azimuth), 0.0);
      box.center.z() = 0.5 * box.dims.z();
      const Vec2 los = Vec2(box.center.x(), box.center.y()).normalized();
      if (moving) {
        const double heading = std::atan2(los.y(), los.x()) + (motion_sign < 0 ? kPi : 0.0) + heading_noise;
        box.velocity = speed * Vec2(std::cos(heading), std::sin(heading));
        box.yaw = NormalizeAngle(heading - kPi / 2.0);  // length axis along the motion
      } else {
        box.velocity = Vec2::Zero();
        box.yaw = free_yaw;
      }
      box.attribute_id = moving ? kAttributeMoving : kAttributeStationary;
      ok = detail::FullyInFront(box, cam) && detail::Separated(box, radius, placed, cfg.min_separation);
    }
    if (!ok) continue;
    if (behind) placed[*behind].occluder = true;
    placed.push_back({box, radius, behind.has_value()});
  }
  for (const detail::Placed& p : placed) scene.gt_boxes.push_back(p.box);

  // Radar sweeps, newest first. Objects move with constant velocity; points are
  // expressed in the ego frame at sweep time.
  const Pose current = scene.ego_pose;
  for (int s = 0; s < cfg.radar.num_sweeps; ++s) {
    const double age = s * cfg.radar.sweep_interval;
    RadarSweep sweep;
    sweep.timestamp = scene.timestamp - age;
    sweep.ego_pose = ego_pose_at(sweep.timestamp);
    const Pose current_to_sweep = sweep.ego_pose.Inverse() * current;

    auto emit = [&](const Vec3& pos_sweep, const Vec2& velocity_sweep, int owner) {
      Vec3 p = pos_sweep;
      const Vec2 bev(p.x(), p.y());
      if (!(bev.norm() > 0.0)) return;
      const Vec2 los = bev.normalized();
      const double radial_noise = gauss(cfg.radar.radial_sigma);
      p.x() += radial_noise * los.x();
      p.y() += radial_noise * los.y();
      const Vec2 v = RadialProject(Vec2(p.x(), p.y()), velocity_sweep) + gauss(cfg.radar.velocity_sigma) * los;
      sweep.points.push_back({p.x(), p.y(), p.z(), v.x(), v.y(), sweep.timestamp});
      sweep.owners.push_back(owner);
    };

    for (std::size_t i = 0; i < scene.gt_boxes.size(); ++i) {
      const Box3D& gt = scene.gt_boxes[i];
      if (!chance(cfg.radar.detection_prob)) continue;
      const Vec3 center_then = gt.center - age * Vec3(gt.velocity.x(), gt.velocity.y(), 0.0);
      const Vec3 velocity_sweep = RotateVector(Vec3(gt.velocity.x(), gt.velocity.y(), 0.0), current_to_sweep);
      for (int k = 0; k < cfg.radar.points_per_object; ++k) {
        Vec3 local = Vec3::Zero();
        if (k > 0) {
          const double fx = uniform(-0.5, 0.5) * cfg.radar.footprint_spread * gt.dims.x();
          const double fy = uniform(-0.5, 0.5) * cfg.radar.footprint_spread * gt.dims.y();
          local = Vec3(std::cos(gt.yaw) * fx - std::sin(gt.yaw) * fy, std::sin(gt.yaw) * fx + std::cos(gt.yaw) * fy,
                       0.0);
        }
        Vec3 p = center_then + local;
        switch (cfg.radar.z_mode) {
          case RadarZMode::kExact: break;
          case RadarZMode::kZero: p.z() = 0.0; break;
          case RadarZMode::kUniform: p.z() += uniform(-cfg.radar.z_span, cfg.radar.z_span); break;
        }
        emit(TransformPoint(p, current_to_sweep), velocity_sweep.head<2>(), static_cast<int>(i));
      }
    }

    if (cfg.radar.clutter_rate > 0.0) {
      const int clutter = std::poisson_distribution<int>(cfg.radar.clutter_rate)(rng);
      for (int k = 0; k < clutter; ++k) {
        const double forward = uniform(cfg.depth_min, cfg.depth_max);
        const double azimuth = uniform(-half_fov, half_fov);
        const Vec3 p(cam_origin.x() + forward, forward * std::tan(azimuth), uniform(0.0, 2.0));
        const Vec2 v(gauss(1.0), gauss(1.0));
        emit(TransformPoint(p, current_to_sweep), RotateVector(Vec3(v.x(), v.y(), 0.0), current_to_sweep).head<2>(),
             -1);
      }
    }
    scene.radar_sweeps.push_back(std::move(sweep));
  }

  // Camera-only detector.
  const DetectorNoise& noise = cfg.detector;
  std::vector<DetectionRecord> dets;
  for (std::size_t i = 0; i < scene.gt_boxes.size(); ++i) {
    const Box3D& gt = scene.gt_boxes[i];
    DetectionRecord rec = RecordFromGroundTruth(gt, cam, cfg.stride, static_cast<int>(i));
    const Vec2 shift(gauss(noise.center_px_sigma), gauss(noise.center_px_sigma));
    rec.center_px.x() = std::clamp(rec.center_px.x() + shift.x(), 0.0, std::nextafter(cam.width, 0.0));
    rec.center_px.y() = std::clamp(rec.center_px.y() + shift.y(), 0.0, std::nextafter(cam.height, 0.0));
    rec.box2d.cx += shift.x();
    rec.box2d.cy += shift.y();
    rec.primary.depth = std::max(0.5, rec.primary.depth * (1.0 + gauss(noise.depth_rel_sigma)));
    for (int a = 0; a < 3; ++a) rec.primary.dims[a] *= std::max(0.2, 1.0 + gauss(noise.dims_rel_sigma));
    const double yaw = gt.yaw + gauss(noise.yaw_sigma);
    rec.primary.orientation = EncodeOrientation(yaw, RayAngle(rec.center_px.x(), rec.center_px.y(), cam));
    const Vec2 cell(std::floor(rec.center_px.x() / cfg.stride), std::floor(rec.center_px.y() / cfg.stride));
    rec.primary.offset = rec.center_px / cfg.stride - cell;
    rec.score = noise.score_max > noise.score_min ? uniform(noise.score_min, noise.score_max) : noise.score_max;
    dets.push_back(std::move(rec));
  }
  scene.preliminary_dets = std::move(dets);
  return scene;
}

}  // namespace cfusion
