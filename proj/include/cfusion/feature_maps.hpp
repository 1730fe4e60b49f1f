#pragma once

// Grid-space features at output stride R: size-adaptive Gaussian keypoint
// heatmaps, radar depth/velocity channels rasterized inside object boxes, and
// the depth value transform used by the depth channels.

#include <algorithm>
#include <bit>
#include <deque>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"

namespace cfusion {

struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  bool operator==(const Plane&) const = default;
};

// Channel names used across the pipeline.
namespace channel {
inline std::string Heatmap(int class_id) { return "heatmap/" + std::to_string(class_id); }
inline constexpr const char* kRadarDepth = "radar/depth";
inline constexpr const char* kRadarVx = "radar/vx";
inline constexpr const char* kRadarVy = "radar/vy";
inline constexpr const char* kDepth = "reg/depth";
inline constexpr const char* kDimW = "reg/dim_w";
inline constexpr const char* kDimL = "reg/dim_l";
inline constexpr const char* kDimH = "reg/dim_h";
inline constexpr const char* kOffsetX = "reg/offset_x";
inline constexpr const char* kOffsetY = "reg/offset_y";
inline constexpr const char* kSizeW = "reg/size_w";
inline constexpr const char* kSizeH = "reg/size_h";
inline std::string Rotation(int k) { return "reg/rot_" + std::to_string(k); }
}  // namespace channel

/// Named planes sharing one grid shape.
class FeatureMapStack {
 public:
  FeatureMapStack() = default;
  FeatureMapStack(int width, int height, int stride) : width_(width), height_(height), stride_(stride) {
    if (width <= 0 || height <= 0 || stride <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "feature grid shape and stride must be positive");
    }
  }

  /// Grid covering every pixel of an image of the given size.
  static FeatureMapStack ForImage(int image_width, int image_height, int stride) {
    if (stride <= 0) throw Error(ErrorCode::kInvalidArgument, "stride must be positive");
    return {(image_width + stride - 1) / stride, (image_height + stride - 1) / stride, stride};
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int stride() const { return stride_; }

  Plane& Add(const std::string& name, Plane plane) {
    if (plane.width != width_ || plane.height != height_) {
      throw Error(ErrorCode::kShapeMismatch, "plane '" + name + "' does not match the grid");
    }
    if (Find(name)) throw Error(ErrorCode::kInvalidArgument, "duplicate channel '" + name + "'");
    names_.push_back(name);
    planes_.push_back(std::move(plane));
    return planes_.back();
  }
  Plane& Add(const std::string& name) { return Add(name, Plane(width_, height_)); }

  const Plane* Find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? nullptr : &planes_[static_cast<std::size_t>(it - names_.begin())];
  }
  Plane* Find(const std::string& name) {
    return const_cast<Plane*>(std::as_const(*this).Find(name));
  }
  const Plane& Get(const std::string& name) const {
    const Plane* p = Find(name);
    if (!p) throw Error(ErrorCode::kInvalidArgument, "no channel '" + name + "'");
    return *p;
  }
  Plane& Get(const std::string& name) { return const_cast<Plane&>(std::as_const(*this).Get(name)); }

  const std::vector<std::string>& names() const { return names_; }
  const std::deque<Plane>& planes() const { return planes_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int stride_ = 1;
  std::vector<std::string> names_;
  std::deque<Plane> planes_;  // deque: references from Add stay valid
};

// ---------------------------------------------------------------------------
// Keypoint heatmaps

inline constexpr double kDefaultMinOverlap = 0.7;

// Largest corner displacement r (same units as w, h) such that moving the two
// corners of a w x h box by up to r in each axis keeps IoU >= min_overlap.
// The bound is the tightest of three extremes: both corners shifted the same
// way, both pulled inward, both pushed outward.
inline double GaussianRadius(double w, double h, double min_overlap) {
  if (!(w > 0.0 && h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "box size must be positive");
  if (!(min_overlap > 0.0 && min_overlap < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "min_overlap must lie in (0, 1)");
  }
  const double mo = min_overlap;
  // (w - r)(h - r) = 2 mo wh / (1 + mo)
  const double b1 = w + h;
  const double c1 = w * h * (1.0 - mo) / (1.0 + mo);
  const double r1 = (b1 - std::sqrt(b1 * b1 - 4.0 * c1)) / 2.0;
  // (w - 2r)(h - 2r) = mo wh
  const double a2 = 4.0;
  const double b2 = 2.0 * (w + h);
  const double c2 = (1.0 - mo) * w * h;
  const double r2 = (b2 - std::sqrt(b2 * b2 - 4.0 * a2 * c2)) / (2.0 * a2);
  // wh = mo (w + 2r)(h + 2r)
  const double a3 = 4.0 * mo;
  const double b3 = 2.0 * mo * (w + h);
  const double c3 = (mo - 1.0) * w * h;
  const double r3 = (-b3 + std::sqrt(b3 * b3 - 4.0 * a3 * c3)) / (2.0 * a3);
  return std::min({r1, r2, r3});
}

/// Gaussian standard deviation in cells for a box given in pixels.
inline double GaussianSigma(double box_w_px, double box_h_px, double min_overlap = kDefaultMinOverlap,
                            int stride = 1) {
  const double r = GaussianRadius(box_w_px / stride, box_h_px / stride, min_overlap);
  return std::max(r, 1.0) / 3.0;
}

struct HeatmapAnnotation {
  Vec2 center_px = Vec2::Zero();
  int class_id = 0;
  Box2D box2d;
};

/// Integer cell holding pixel `p` at stride R.
inline std::pair<int, int> QuantizeCenter(const Vec2& p, int stride) {
  return {static_cast<int>(std::floor(p.x() / stride)), static_cast<int>(std::floor(p.y() / stride))};
}

/// exp(-d^2 / (2 sigma^2)) for a cell at squared distance d2 from the center.
inline double GaussianKernel(double d2, double sigma) { return std::exp(-d2 / (2.0 * sigma * sigma)); }

// Ground-truth heatmap: per class, the pointwise max of one Gaussian per object,
// centered on the object's quantized center cell.
inline std::vector<Plane> RenderGtHeatmap(std::span<const HeatmapAnnotation> annotations, int num_classes,
                                          int grid_w, int grid_h, int stride,
                                          double min_overlap = kDefaultMinOverlap) {
  std::vector<Plane> planes(static_cast<std::size_t>(num_classes), Plane(grid_w, grid_h));
  for (const HeatmapAnnotation& a : annotations) {
    if (a.class_id < 0 || a.class_id >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "annotation class out of range");
    }
    const auto [qx, qy] = QuantizeCenter(a.center_px, stride);
    if (qx < 0 || qy < 0 || qx >= grid_w || qy >= grid_h) {
      throw Error(ErrorCode::kInvalidArgument, "annotation center lies outside the image");
    }
    const double sigma = GaussianSigma(a.box2d.w, a.box2d.h, min_overlap, stride);
    Plane& plane = planes[static_cast<std::size_t>(a.class_id)];
    for (int y = 0; y < grid_h; ++y) {
      for (int x = 0; x < grid_w; ++x) {
        const double dx = x - qx;
        const double dy = y - qy;
        plane.at(x, y) = std::max(plane.at(x, y), GaussianKernel(dx * dx + dy * dy, sigma));
      }
    }
  }
  return planes;
}

// ---------------------------------------------------------------------------
// Radar feature channels

struct RadarNormalizers {
  double depth = 60.0;    // meters
  double velocity = 10.0; // m/s
};

inline constexpr double kDefaultRadarExtent = 0.3;

/// One associated object: its 2D box and the matched radar measurement.
struct RadarFeatureTarget {
  Box2D box2d;
  double depth = 0.0;
  Vec2 velocity = Vec2::Zero();
};

struct RadarPlanes {
  Plane depth;
  Plane vx;
  Plane vy;
};

// Fills |x - cx| <= alpha w, |y - cy| <= alpha h (in cells) with the normalized
// radar depth and velocity; the quantized center cell is always covered. Where
// regions overlap the target with the smaller depth wins, so the result does not
// depend on target order.
inline RadarPlanes RasterizeRadarFeatures(std::span<const RadarFeatureTarget> targets, int grid_w,
                                          int grid_h, int stride, double alpha = kDefaultRadarExtent,
                                          const RadarNormalizers& norm = {}) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "radar extent alpha must be positive");
  if (!(norm.depth > 0.0 && norm.velocity > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "radar normalizers must be positive");
  }
  RadarPlanes out{Plane(grid_w, grid_h), Plane(grid_w, grid_h), Plane(grid_w, grid_h)};
  using Key = std::tuple<double, double, double>;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<Key> owner(static_cast<std::size_t>(grid_w) * grid_h, Key{kInf, kInf, kInf});

  for (const RadarFeatureTarget& t : targets) {
    const Key key{t.depth, t.velocity.x(), t.velocity.y()};
    const double d = t.depth / norm.depth;
    const double vx = std::clamp(t.velocity.x() / norm.velocity, -1.0, 1.0);
    const double vy = std::clamp(t.velocity.y() / norm.velocity, -1.0, 1.0);
    auto paint = [&](int x, int y) {
      auto& cell = owner[static_cast<std::size_t>(y) * grid_w + x];
      if (key < cell) {
        cell = key;
        out.depth.at(x, y) = d;
        out.vx.at(x, y) = vx;
        out.vy.at(x, y) = vy;
      }
    };
    const double cx = t.box2d.cx / stride;
    const double cy = t.box2d.cy / stride;
    const double hx = alpha * t.box2d.w / stride;
    const double hy = alpha * t.box2d.h / stride;
    const int x0 = std::max(0, static_cast<int>(std::ceil(cx - hx)));
    const int x1 = std::min(grid_w - 1, static_cast<int>(std::floor(cx + hx)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(cy - hy)));
    const int y1 = std::min(grid_h - 1, static_cast<int>(std::floor(cy + hy)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) paint(x, y);
    }
    const int qx = std::clamp(static_cast<int>(std::floor(cx)), 0, grid_w - 1);
    const int qy = std::clamp(static_cast<int>(std::floor(cy)), 0, grid_h - 1);
    paint(qx, qy);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Depth transform: y = 1 / (1 + d), d = 1 / y - 1.

inline double DepthEncode(double depth) {
  if (!(depth > 0.0)) throw Error(ErrorCode::kDomain, "depth must be positive");
  return 1.0 / (1.0 + depth);
}

inline double DepthDecode(double y) {
  if (!(y > 0.0 && y < 1.0)) throw Error(ErrorCode::kDomain, "encoded depth must lie in (0, 1)");
  return 1.0 / y - 1.0;
}

/// Depth from a raw (pre-sigmoid) output: 1 / sigmoid(x) - 1 = exp(-x).
inline double DepthDecodeLogit(double raw) {
  if (!std::isfinite(raw)) throw Error(ErrorCode::kDomain, "raw depth output must be finite");
  return std::exp(-raw);
}

// ---------------------------------------------------------------------------
// Binary export
//
//   "CFFM"  magic
//   u32     version (1)
//   u32     width, height, stride, channel count
//   per channel: u32 name length, name bytes (UTF-8, no terminator)
//   per channel, in header order: width*height f32, row-major
// All integers and floats little-endian.

namespace detail {
inline void PutU32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes, 4);
}
inline std::uint32_t GetU32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::kParse, "truncated feature file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline void WriteFeatureStack(const FeatureMapStack& stack, std::ostream& os) {
  os.write("CFFM", 4);
  detail::PutU32(os, 1);
  detail::PutU32(os, static_cast<std::uint32_t>(stack.width()));
  detail::PutU32(os, static_cast<std::uint32_t>(stack.height()));
  detail::PutU32(os, static_cast<std::uint32_t>(stack.stride()));
  detail::PutU32(os, static_cast<std::uint32_t>(stack.names().size()));
  for (const std::string& name : stack.names()) {
    detail::PutU32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (const Plane& plane : stack.planes()) {
    for (double v : plane.data) detail::PutU32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

inline FeatureMapStack ReadFeatureStack(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "CFFM") {
    throw Error(ErrorCode::kParse, "not a feature map file");
  }
  if (detail::GetU32(is) != 1) throw Error(ErrorCode::kParse, "unsupported feature map version");
  const auto w = static_cast<int>(detail::GetU32(is));
  const auto h = static_cast<int>(detail::GetU32(is));
  const auto stride = static_cast<int>(detail::GetU32(is));
  const auto count = detail::GetU32(is);
  FeatureMapStack stack(w, h, stride);
  std::vector<std::string> names;
  for (std::uint32_t c = 0; c < count; ++c) {
    const std::uint32_t len = detail::GetU32(is);
    if (len > 4096) throw Error(ErrorCode::kParse, "channel name too long");
    std::string name(len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw Error(ErrorCode::kParse, "truncated channel name");
    }
    names.push_back(std::move(name));
  }
  for (const std::string& name : names) {
    Plane& plane = stack.Add(name);
    for (double& v : plane.data) v = std::bit_cast<float>(detail::GetU32(is));
  }
  return stack;
}

inline void WriteFeatureStack(const FeatureMapStack& stack, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  WriteFeatureStack(stack, os);
  if (!os) throw Error(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace cfusion
