#pragma once

// Radar-to-object association through per-object RoI frustums.
//
// A frustum is the object's 2D box extruded along the camera rays and cut to a
// radial interval around the object. A radar pillar belongs to the frustum when
// any of its eight AABB corners, or its anchor, projects inside the 2D box with
// a radial distance inside the interval. Each object keeps only the closest
// qualifying pillar.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/radar_cloud.hpp"

namespace cfusion {

enum class FrustumMode { kTrain, kTest };

/// Which parts of a pillar are tested against a frustum.
enum class Membership { kPillar, kPointOnly };

inline constexpr double kDefaultFrustumDelta = 0.2;

struct FrustumRoI {
  CameraModel cam;
  Box2D box2d;
  double radial_near = 0.0;
  double radial_far = 0.0;
  FrustumMode mode = FrustumMode::kTest;
};

struct Association {
  std::size_t object_index = 0;
  std::optional<std::size_t> pillar_index;
  double match_depth = 0.0;  // radial distance of the pillar anchor from the camera

  bool operator==(const Association&) const = default;
};

inline double RadialDistance(const Vec3& p_cam) { return p_cam.norm(); }

/// Radial interval of the Test-mode frustum: the estimated radial half-extent
/// grown by (1 + delta), centered on the estimated radial distance.
inline std::pair<double, double> TestRadialBounds(double center_radial, double half_extent,
                                                  double delta) {
  const double r = half_extent * (1.0 + delta);
  return {center_radial - r, center_radial + r};
}

inline std::pair<double, double> RadialSpan(const Box3D& box, const CameraModel& cam) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const Vec3& c : Box3dCorners(box)) {
    const double r = RadialDistance(cam.EgoToCamera(c));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

inline FrustumRoI BuildFrustum(const DetectionRecord& det, const CameraModel& cam,
                               double delta = kDefaultFrustumDelta,
                               FrustumMode mode = FrustumMode::kTest) {
  if (!(det.box2d.area() > 0.0)) {
    throw Error(ErrorCode::kDegenerateBox, "2D box has zero area");
  }
  FrustumRoI roi{cam, det.box2d, 0.0, 0.0, mode};
  if (mode == FrustumMode::kTrain) {
    if (!det.gt_box3d) {
      throw Error(ErrorCode::kInvalidArgument, "Train-mode frustum needs a ground-truth 3D box");
    }
    std::tie(roi.radial_near, roi.radial_far) = RadialSpan(*det.gt_box3d, cam);
  } else {
    if (!(det.primary.depth > 0.0)) {
      throw Error(ErrorCode::kInvalidDepth, "estimated depth must be positive");
    }
    const Box3D estimate = EstimatedBox(det, cam);
    const auto [lo, hi] = RadialSpan(estimate, cam);
    const double center = RadialDistance(cam.EgoToCamera(estimate.center));
    std::tie(roi.radial_near, roi.radial_far) = TestRadialBounds(center, 0.5 * (hi - lo), delta);
  }
  roi.radial_near = std::max(roi.radial_near, 1e-6);
  if (!(roi.radial_far > roi.radial_near)) {
    throw Error(ErrorCode::kDegenerateBox, "frustum has an empty radial interval");
  }
  return roi;
}

/// Anchor or pillar-corner sample, already in the camera frame.
struct ProjectedSample {
  double u = 0.0;
  double v = 0.0;
  double radial = 0.0;
};

inline bool SampleInFrustum(const ProjectedSample& s, const FrustumRoI& f) {
  return s.radial >= f.radial_near && s.radial <= f.radial_far && f.box2d.Contains(s.u, s.v);
}

/// Samples in front of the camera: the anchor first, then the AABB corners.
inline std::vector<ProjectedSample> ProjectPillar(const RadarPillar& pillar, const CameraModel& cam,
                                                  Membership membership) {
  std::vector<ProjectedSample> out;
  auto add = [&](const Vec3& p_ego) {
    const Vec3 p = cam.EgoToCamera(p_ego);
    if (!(p.z() > 0.0)) return;
    const ImagePoint ip = ProjectToImage(p, cam);
    out.push_back({ip.u, ip.v, RadialDistance(p)});
  };
  add(pillar.anchor.position());
  if (membership == Membership::kPillar) {
    for (const Vec3& c : pillar.corners()) add(c);
  }
  return out;
}

inline bool PillarInFrustum(const RadarPillar& pillar, const FrustumRoI& frustum,
                            Membership membership = Membership::kPillar) {
  for (const ProjectedSample& s : ProjectPillar(pillar, frustum.cam, membership)) {
    if (SampleInFrustum(s, frustum)) return true;
  }
  return false;
}

struct AssociationOptions {
  double delta = kDefaultFrustumDelta;
  FrustumMode mode = FrustumMode::kTest;
  Membership membership = Membership::kPillar;
};

namespace detail {

struct PreparedPillar {
  std::size_t index = 0;
  double anchor_radial = 0.0;
  std::vector<ProjectedSample> samples;
};

// Pillars projected once and ordered by (anchor radial distance, index), so the
// first pillar passing a frustum is the association.
inline std::vector<PreparedPillar> PreparePillars(std::span<const RadarPillar> pillars,
                                                  const CameraModel& cam, Membership membership) {
  std::vector<PreparedPillar> out;
  out.reserve(pillars.size());
  for (std::size_t i = 0; i < pillars.size(); ++i) {
    const Vec3 anchor = cam.EgoToCamera(pillars[i].anchor.position());
    out.push_back({i, RadialDistance(anchor), ProjectPillar(pillars[i], cam, membership)});
  }
  std::stable_sort(out.begin(), out.end(), [](const PreparedPillar& a, const PreparedPillar& b) {
    return a.anchor_radial < b.anchor_radial;
  });
  return out;
}

}  // namespace detail

/// Objects whose frustum cannot be built (zero-area box, non-positive depth)
/// receive no association.
inline std::vector<Association> Associate(std::span<const DetectionRecord> dets,
                                          std::span<const RadarPillar> pillars,
                                          const CameraModel& cam,
                                          const AssociationOptions& options = {}) {
  const auto prepared = detail::PreparePillars(pillars, cam, options.membership);
  // Any sample lies within this distance of its anchor, which bounds the scan.
  double reach = 0.0;
  if (options.membership == Membership::kPillar) {
    for (const RadarPillar& p : pillars) reach = std::max(reach, p.half_extents.norm());
  }
  std::vector<double> anchor_radials(prepared.size());
  std::transform(prepared.begin(), prepared.end(), anchor_radials.begin(),
                 [](const detail::PreparedPillar& p) { return p.anchor_radial; });

  std::vector<Association> out;
  out.reserve(dets.size());
  for (std::size_t obj = 0; obj < dets.size(); ++obj) {
    Association assoc{obj, std::nullopt, 0.0};
    FrustumRoI frustum;
    try {
      frustum = BuildFrustum(dets[obj], cam, options.delta, options.mode);
    } catch (const Error&) {
      out.push_back(assoc);
      continue;
    }
    const double lo = frustum.radial_near - reach - 1e-9;
    const double hi = frustum.radial_far + reach + 1e-9;
    auto it = std::lower_bound(anchor_radials.begin(), anchor_radials.end(), lo);
    for (auto k = static_cast<std::size_t>(it - anchor_radials.begin()); k < prepared.size(); ++k) {
      const auto& cand = prepared[k];
      if (cand.anchor_radial > hi) break;
      const bool inside = std::any_of(cand.samples.begin(), cand.samples.end(),
                                      [&](const ProjectedSample& s) { return SampleInFrustum(s, frustum); });
      if (inside) {
        assoc.pillar_index = cand.index;
        assoc.match_depth = cand.anchor_radial;
        break;
      }
    }
    out.push_back(assoc);
  }
  return out;
}

/// Number of pillars claimed by more than one object.
inline std::size_t CountMultiClaims(std::span<const Association> assocs) {
  std::vector<std::size_t> claimed;
  for (const Association& a : assocs) {
    if (a.pillar_index) claimed.push_back(*a.pillar_index);
  }
  std::sort(claimed.begin(), claimed.end());
  std::size_t multi = 0;
  for (std::size_t i = 0; i < claimed.size();) {
    std::size_t j = i;
    while (j < claimed.size() && claimed[j] == claimed[i]) ++j;
    if (j - i > 1) ++multi;
    i = j;
  }
  return multi;
}

// Baseline without a radial gate: the closest pillar that projects into the
// object's 2D box. Used to measure what the frustum buys on occluded scenes.
inline std::vector<Association> AssociateByImageBox(std::span<const DetectionRecord> dets,
                                                    std::span<const RadarPillar> pillars,
                                                    const CameraModel& cam,
                                                    Membership membership = Membership::kPillar) {
  const auto prepared = detail::PreparePillars(pillars, cam, membership);
  std::vector<Association> out;
  for (std::size_t obj = 0; obj < dets.size(); ++obj) {
    Association assoc{obj, std::nullopt, 0.0};
    for (const auto& cand : prepared) {
      const bool inside = std::any_of(cand.samples.begin(), cand.samples.end(), [&](const ProjectedSample& s) {
        return dets[obj].box2d.Contains(s.u, s.v);
      });
      if (inside) {
        assoc.pillar_index = cand.index;
        assoc.match_depth = cand.anchor_radial;
        break;
      }
    }
    out.push_back(assoc);
  }
  return out;
}

}  // namespace cfusion
