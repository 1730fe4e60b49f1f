#pragma once

// One scene end to end: sweep aggregation, pillar expansion, frustum
// association, radar feature rasterization and box decoding.

#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfusion/decoder.hpp"
#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/feature_maps.hpp"
#include "cfusion/frustum_association.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/harness/scene.hpp"
#include "cfusion/harness/synth.hpp"
#include "cfusion/radar_cloud.hpp"

namespace cfusion {

enum class AssociationMethod { kFrustum, kImageBox };

struct PipelineConfig {
  double delta = kDefaultFrustumDelta;
  double alpha = kDefaultRadarExtent;
  std::array<double, 3> pillar_dims = kDefaultPillarDims;
  bool pillar_expansion = true;
  RadarNormalizers normalizers;
  FrustumMode mode = FrustumMode::kTest;
  SweepWindow window;
  int stride = 4;
  int num_classes = 3;
  bool fuse = true;
  AssociationMethod method = AssociationMethod::kFrustum;
  double moving_speed = 0.3;  // m/s of radar velocity separating the two attributes
  bool build_features = true;
};

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct PipelineDiagnostics {
  std::size_t num_objects = 0;
  std::size_t matched = 0;
  std::size_t unmatched = 0;
  std::size_t multi_claims = 0;
  std::size_t num_points = 0;
  std::size_t num_pillars = 0;
  double association_rate = 0.0;
  std::vector<StageTiming> timings;
};

struct PipelineResult {
  std::vector<Box3D> detections;
  std::vector<DetectionRecord> records;  // with secondary heads where associated
  std::vector<Association> associations;
  std::vector<AggregatedPoint> points;
  std::vector<RadarPillar> pillars;
  std::optional<FeatureMapStack> features;
  PipelineDiagnostics diagnostics;
};

/// Records for every ground-truth box, for Train-mode runs without a detector.
inline std::vector<DetectionRecord> RecordsFromGroundTruth(const Scene& scene, int stride) {
  std::vector<DetectionRecord> out;
  for (std::size_t i = 0; i < scene.gt_boxes.size(); ++i) {
    out.push_back(RecordFromGroundTruth(scene.gt_boxes[i], scene.camera, stride, static_cast<int>(i)));
  }
  return out;
}

/// Secondary heads from a matched radar pillar.
inline SecondaryHeads SecondaryFromRadar(const DetectionRecord& rec, const RadarPillar& pillar,
                                         const CameraModel& cam, double moving_speed) {
  SecondaryHeads sec;
  sec.depth = cam.EgoToCamera(pillar.anchor.position()).z();
  sec.velocity = pillar.anchor.velocity().head<2>();
  sec.orientation = rec.primary.orientation;
  const bool moving = sec.velocity.norm() > moving_speed;
  sec.attribute_scores = {moving ? 1.0 : 0.0, moving ? 0.0 : 1.0};
  return sec;
}

namespace detail {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink), last_(std::chrono::steady_clock::now()) {}
  void Mark(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.push_back({stage, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& sink_;
  std::chrono::steady_clock::time_point last_;
};

}  // namespace detail

inline PipelineResult RunPipeline(const Scene& scene, const PipelineConfig& cfg) {
  const CameraModel& cam = scene.camera;
  PipelineResult result;
  PipelineDiagnostics& diag = result.diagnostics;
  detail::StageClock clock(diag.timings);
  try {
    if (cfg.stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be positive");
    if (!(cfg.delta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "frustum delta must be non-negative");

    SweepWindow window = cfg.window;
    if (!window.reference_time) window.reference_time = scene.timestamp;
    result.points = AggregateSweepsWithOwners(scene.radar_sweeps, scene.ego_pose, window);
    std::vector<RadarPoint> points;
    points.reserve(result.points.size());
    for (const AggregatedPoint& p : result.points) points.push_back(p.point);
    clock.Mark("aggregate");

    result.pillars = ExpandPillars(points, cfg.pillar_dims);
    clock.Mark("expand");

    if (scene.preliminary_dets) {
      result.records = *scene.preliminary_dets;
    } else if (cfg.mode == FrustumMode::kTrain) {
      result.records = RecordsFromGroundTruth(scene, cfg.stride);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "test mode needs preliminary detections");
    }
    for (DetectionRecord& rec : result.records) {
      rec.secondary.reset();
      const auto [qx, qy] = QuantizeCenter(rec.center_px, cfg.stride);
      rec.primary.offset = rec.center_px / cfg.stride - Vec2(qx, qy);
    }

    const Membership membership = cfg.pillar_expansion ? Membership::kPillar : Membership::kPointOnly;
    if (cfg.method == AssociationMethod::kFrustum) {
      result.associations = Associate(result.records, result.pillars, cam, {cfg.delta, cfg.mode, membership});
    } else {
      result.associations = AssociateByImageBox(result.records, result.pillars, cam, membership);
    }
    clock.Mark("associate");

    std::vector<RadarFeatureTarget> targets;
    for (const Association& a : result.associations) {
      if (!a.pillar_index) continue;
      DetectionRecord& rec = result.records[a.object_index];
      const RadarPillar& pillar = result.pillars[*a.pillar_index];
      rec.secondary = SecondaryFromRadar(rec, pillar, cam, cfg.moving_speed);
      targets.push_back({rec.box2d, rec.secondary->depth, rec.secondary->velocity});
    }
    if (cfg.build_features) {
      FeatureMapStack stack = FeatureMapStack::ForImage(cam.width, cam.height, cfg.stride);
      std::vector<HeatmapAnnotation> anns;
      for (const DetectionRecord& rec : result.records) anns.push_back({rec.center_px, rec.class_id, rec.box2d});
      auto heat = RenderGtHeatmap(anns, cfg.num_classes, stack.width(), stack.height(), cfg.stride);
      for (int c = 0; c < cfg.num_classes; ++c) stack.Add(channel::Heatmap(c), std::move(heat[c]));
      RadarPlanes radar =
          RasterizeRadarFeatures(targets, stack.width(), stack.height(), cfg.stride, cfg.alpha, cfg.normalizers);
      stack.Add(channel::kRadarDepth, std::move(radar.depth));
      stack.Add(channel::kRadarVx, std::move(radar.vx));
      stack.Add(channel::kRadarVy, std::move(radar.vy));
      WriteRegressionTargets(stack, result.records);
      result.features = std::move(stack);
    }
    clock.Mark("rasterize");

    std::vector<Peak> peaks;
    peaks.reserve(result.records.size());
    for (const DetectionRecord& rec : result.records) {
      const auto [qx, qy] = QuantizeCenter(rec.center_px, cfg.stride);
      peaks.push_back({qx, qy, rec.score, rec.class_id});
    }
    result.detections = DecodeBoxes(peaks, result.records, cfg.stride, cam,
                                    cfg.fuse ? SecondaryUse::kWhenAvailable : SecondaryUse::kNever);
    clock.Mark("decode");
  } catch (const Error& e) {
    throw Error(e.code(), "scene '" + scene.scene_id + "': " + e.detail());
  }

  diag.num_objects = result.records.size();
  diag.num_points = result.points.size();
  diag.num_pillars = result.pillars.size();
  for (const Association& a : result.associations) (a.pillar_index ? diag.matched : diag.unmatched)++;
  diag.multi_claims = CountMultiClaims(result.associations);
  diag.association_rate =
      diag.num_objects ? static_cast<double>(diag.matched) / static_cast<double>(diag.num_objects) : 0.0;
  return result;
}

// ---------------------------------------------------------------------------
// Association quality on synthetic scenes, where radar points carry their owner.

struct AssociationScore {
  std::size_t eligible = 0;  // objects with at least one radar point of their own
  std::size_t correct = 0;   // associated pillar belongs to the object
  std::size_t wrong = 0;     // associated pillar belongs to another object or clutter

  double Recall() const { return eligible ? static_cast<double>(correct) / static_cast<double>(eligible) : 0.0; }
  AssociationScore& operator+=(const AssociationScore& o) {
    eligible += o.eligible;
    correct += o.correct;
    wrong += o.wrong;
    return *this;
  }
};

inline AssociationScore ScoreAssociations(const PipelineResult& result) {
  std::vector<bool> has_radar;
  for (const AggregatedPoint& p : result.points) {
    if (p.owner < 0) continue;
    if (static_cast<std::size_t>(p.owner) >= has_radar.size()) has_radar.resize(p.owner + 1, false);
    has_radar[p.owner] = true;
  }
  AssociationScore score;
  for (const Association& a : result.associations) {
    const auto& gt = result.records[a.object_index].gt_index;
    if (!gt) continue;
    const auto owner = static_cast<std::size_t>(*gt);
    if (owner < has_radar.size() && has_radar[owner]) ++score.eligible;
    if (!a.pillar_index) continue;
    if (result.points[*a.pillar_index].owner == *gt) {
      ++score.correct;
    } else {
      ++score.wrong;
    }
  }
  return score;
}

}  // namespace cfusion
