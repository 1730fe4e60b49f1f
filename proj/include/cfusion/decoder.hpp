#pragma once

// Heatmap peak extraction and the box decoder that turns per-peak regression
// values into ego-frame 3D boxes, preferring secondary (radar-informed) values
// where they exist.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/feature_maps.hpp"
#include "cfusion/geometry.hpp"

namespace cfusion {

struct Peak {
  int x = 0;
  int y = 0;
  double score = 0.0;
  int class_id = 0;

  bool operator==(const Peak&) const = default;
};

inline constexpr std::size_t kDefaultMaxPeaks = 100;
inline constexpr double kDefaultPeakThreshold = 0.3;

namespace detail {
// A cell survives 3x3 suppression when every neighbor is lower, or equal with a
// larger row-major index.
inline bool IsLocalMax(const Plane& plane, int x, int y) {
  const double v = plane.at(x, y);
  const long self = static_cast<long>(y) * plane.width + x;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx;
      const int ny = y + dy;
      if (!plane.contains(nx, ny)) continue;
      const double n = plane.at(nx, ny);
      if (n > v) return false;
      if (n == v && static_cast<long>(ny) * plane.width + nx < self) return false;
    }
  }
  return true;
}
}  // namespace detail

/// Top-K local maxima over all class planes, highest score first.
inline std::vector<Peak> ExtractPeaks(std::span<const Plane> class_planes, std::size_t k = kDefaultMaxPeaks,
                                      double threshold = kDefaultPeakThreshold) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "peak count must be at least 1");
  std::vector<Peak> peaks;
  for (std::size_t c = 0; c < class_planes.size(); ++c) {
    const Plane& plane = class_planes[c];
    for (int y = 0; y < plane.height; ++y) {
      for (int x = 0; x < plane.width; ++x) {
        if (plane.at(x, y) >= threshold && detail::IsLocalMax(plane, x, y)) {
          peaks.push_back({x, y, plane.at(x, y), static_cast<int>(c)});
        }
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  if (peaks.size() > k) peaks.resize(k);
  return peaks;
}

enum class SecondaryUse {
  kNever,          // primary heads only
  kRequired,       // every record must carry secondary heads
  kWhenAvailable,  // fused records use secondary values, the rest fall back
};

inline int ArgMax(const std::vector<double>& scores) {
  if (scores.empty()) return -1;
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

/// Center pixel of a peak: (cell + offset) * stride.
inline Vec2 PeakCenterPixel(const Peak& peak, const Vec2& offset, int stride) {
  return {(peak.x + offset.x()) * stride, (peak.y + offset.y()) * stride};
}

inline std::vector<Box3D> DecodeBoxes(std::span<const Peak> peaks, std::span<const DetectionRecord> records,
                                      int stride, const CameraModel& cam,
                                      SecondaryUse use = SecondaryUse::kWhenAvailable) {
  if (peaks.size() != records.size()) {
    throw Error(ErrorCode::kShapeMismatch, "every peak needs exactly one record");
  }
  std::vector<Box3D> boxes;
  boxes.reserve(peaks.size());
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const Peak& peak = peaks[i];
    const DetectionRecord& rec = records[i];
    if (use == SecondaryUse::kRequired && !rec.secondary) {
      throw Error(ErrorCode::kMissingSecondary, "record " + std::to_string(i) + " has no secondary heads");
    }
    const SecondaryHeads* sec = use == SecondaryUse::kNever ? nullptr : (rec.secondary ? &*rec.secondary : nullptr);

    const Vec2 px = PeakCenterPixel(peak, rec.primary.offset, stride);
    const double depth = sec ? sec->depth : rec.primary.depth;
    if (!(depth > 0.0)) throw Error(ErrorCode::kInvalidDepth, "decoded depth must be positive");

    Box3D box;
    box.center = cam.CameraToEgo(Unproject(px.x(), px.y(), depth, cam));
    box.dims = rec.primary.dims;
    box.yaw = DecodeOrientation(sec ? sec->orientation : rec.primary.orientation, RayAngle(px.x(), px.y(), cam));
    box.velocity = sec ? sec->velocity : Vec2::Zero();
    box.attribute_id = sec ? ArgMax(sec->attribute_scores) : -1;
    box.class_id = peak.class_id;
    box.score = peak.score;
    boxes.push_back(box);
  }
  return boxes;
}

// ---------------------------------------------------------------------------
// Regression planes: the per-cell encoding of primary head values, written at
// each object's center cell and read back at peaks.

inline void AddRegressionChannels(FeatureMapStack& stack) {
  for (const char* name : {channel::kDepth, channel::kDimW, channel::kDimL, channel::kDimH, channel::kOffsetX,
                           channel::kOffsetY, channel::kSizeW, channel::kSizeH}) {
    if (!stack.Find(name)) stack.Add(name);
  }
  for (int k = 0; k < 8; ++k) {
    if (!stack.Find(channel::Rotation(k))) stack.Add(channel::Rotation(k));
  }
}

inline void WriteRegressionTargets(FeatureMapStack& stack, std::span<const DetectionRecord> records) {
  AddRegressionChannels(stack);
  for (const DetectionRecord& rec : records) {
    const auto [qx, qy] = QuantizeCenter(rec.center_px, stack.stride());
    if (!stack.Get(channel::kDepth).contains(qx, qy)) {
      throw Error(ErrorCode::kInvalidArgument, "record center lies outside the feature grid");
    }
    const double s = stack.stride();
    stack.Get(channel::kDepth).at(qx, qy) = DepthEncode(rec.primary.depth);
    stack.Get(channel::kDimW).at(qx, qy) = rec.primary.dims.x();
    stack.Get(channel::kDimL).at(qx, qy) = rec.primary.dims.y();
    stack.Get(channel::kDimH).at(qx, qy) = rec.primary.dims.z();
    stack.Get(channel::kOffsetX).at(qx, qy) = rec.center_px.x() / s - qx;
    stack.Get(channel::kOffsetY).at(qx, qy) = rec.center_px.y() / s - qy;
    stack.Get(channel::kSizeW).at(qx, qy) = rec.box2d.w;
    stack.Get(channel::kSizeH).at(qx, qy) = rec.box2d.h;
    for (int k = 0; k < 8; ++k) stack.Get(channel::Rotation(k)).at(qx, qy) = rec.primary.orientation[k];
  }
}

/// Primary-head records read from the regression planes at each peak.
inline std::vector<DetectionRecord> ReadRecords(const FeatureMapStack& stack, std::span<const Peak> peaks) {
  std::vector<DetectionRecord> out;
  out.reserve(peaks.size());
  for (const Peak& peak : peaks) {
    auto read = [&](const std::string& name) { return stack.Get(name).at(peak.x, peak.y); };
    DetectionRecord rec;
    rec.class_id = peak.class_id;
    rec.score = peak.score;
    rec.primary.depth = DepthDecode(read(channel::kDepth));
    rec.primary.dims = {read(channel::kDimW), read(channel::kDimL), read(channel::kDimH)};
    rec.primary.offset = {read(channel::kOffsetX), read(channel::kOffsetY)};
    rec.primary.size2d = {read(channel::kSizeW), read(channel::kSizeH)};
    for (int k = 0; k < 8; ++k) rec.primary.orientation[k] = read(channel::Rotation(k));
    rec.center_px = PeakCenterPixel(peak, rec.primary.offset, stack.stride());
    rec.box2d = {rec.center_px.x(), rec.center_px.y(), rec.primary.size2d.x(), rec.primary.size2d.y(), false};
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cfusion
