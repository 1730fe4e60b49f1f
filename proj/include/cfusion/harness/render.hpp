#pragma once

// Bird's-eye-view raster (binary PPM). Ego x points up the image, ego y to the
// left; grid lines every `grid_step` meters carry their distance in meters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/harness/scene.hpp"
#include "cfusion/radar_cloud.hpp"

namespace cfusion {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

namespace colors {
inline constexpr Rgb kBackground{255, 255, 255};
inline constexpr Rgb kGrid{215, 215, 215};
inline constexpr Rgb kAxis{0, 0, 0};
inline constexpr Rgb kLabel{90, 90, 90};
inline constexpr Rgb kGroundTruth{255, 0, 0};
inline constexpr Rgb kDetection{0, 255, 255};
inline constexpr Rgb kRadar{0, 170, 0};
inline constexpr Rgb kPredVelocity{0, 0, 255};
}  // namespace colors

class Image {
 public:
  Image(int width, int height, Rgb fill = colors::kBackground)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  Rgb at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  void Set(int x, int y, Rgb c) {
    if (contains(x, y)) data_[static_cast<std::size_t>(y) * width_ + x] = c;
  }

  void DrawLine(double x0, double y0, double x1, double y1, Rgb c) {
    int ax = static_cast<int>(std::lround(x0));
    int ay = static_cast<int>(std::lround(y0));
    const int bx = static_cast<int>(std::lround(x1));
    const int by = static_cast<int>(std::lround(y1));
    const int dx = std::abs(bx - ax);
    const int dy = -std::abs(by - ay);
    const int sx = ax < bx ? 1 : -1;
    const int sy = ay < by ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      Set(ax, ay, c);
      if (ax == bx && ay == by) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
    }
  }

  void FillRect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) Set(x, y, c);
    }
  }

  std::string ToPpm() const {
    std::string out = "P6\n" + std::to_string(width_) + " " + std::to_string(height_) + "\n255\n";
    out.reserve(out.size() + data_.size() * 3);
    for (const Rgb& p : data_) {
      out.push_back(static_cast<char>(p.r));
      out.push_back(static_cast<char>(p.g));
      out.push_back(static_cast<char>(p.b));
    }
    return out;
  }

  void WritePpm(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
    const std::string bytes = ToPpm();
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
  }

 private:
  int width_;
  int height_;
  std::vector<Rgb> data_;
};

struct BevView {
  double x_min = 0.0;    // meters, ego forward
  double x_max = 60.0;
  double y_half = 30.0;  // meters either side
  double pixels_per_meter = 8.0;
  double grid_step = 10.0;
  double arrow_seconds = 1.0;  // arrow length = speed * arrow_seconds
  int margin = 16;             // pixels around the plotted area

  int width() const { return 2 * margin + static_cast<int>(std::lround(2.0 * y_half * pixels_per_meter)); }
  int height() const { return 2 * margin + static_cast<int>(std::lround((x_max - x_min) * pixels_per_meter)); }
  /// Pixel (column, row) of an ego-frame BEV point.
  Vec2 ToPixel(double x, double y) const {
    return {margin + (y_half - y) * pixels_per_meter, margin + (x_max - x) * pixels_per_meter};
  }
};

namespace detail {

// 3x5 glyphs, one row per nibble, MSB on the left.
inline const std::array<std::uint8_t, 5>& Glyph(char c) {
  static const std::array<std::array<std::uint8_t, 5>, 12> kGlyphs = {{
      {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1}, {7, 4, 7, 1, 7},
      {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}, {0, 0, 7, 0, 0}, {0, 0, 0, 0, 0},
  }};
  if (c >= '0' && c <= '9') return kGlyphs[static_cast<std::size_t>(c - '0')];
  return c == '-' ? kGlyphs[10] : kGlyphs[11];
}

inline void DrawText(Image& img, int x, int y, const std::string& text, Rgb c, int scale = 1) {
  for (char ch : text) {
    const auto& g = Glyph(ch);
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 3; ++col) {
        if (g[row] & (4 >> col)) {
          img.FillRect(x + col * scale, y + row * scale, x + col * scale + scale - 1, y + row * scale + scale - 1, c);
        }
      }
    }
    x += 4 * scale;
  }
}

inline std::string MeterLabel(double v) { return std::to_string(static_cast<long>(std::lround(v))); }

inline void DrawBox(Image& img, const BevView& view, const Box3D& box, Rgb c) {
  const auto corners = Box3dCorners(box);
  // The first four corners share the bottom face; walk its outline.
  std::array<Vec2, 4> bottom;
  int k = 0;
  for (const Vec3& p : corners) {
    if (k < 4 && p.z() < box.center.z()) bottom[k++] = view.ToPixel(p.x(), p.y());
  }
  // Order the footprint by angle around its center so the outline is convex.
  const Vec2 mid = view.ToPixel(box.center.x(), box.center.y());
  std::sort(bottom.begin(), bottom.end(), [&](const Vec2& a, const Vec2& b) {
    return std::atan2(a.y() - mid.y(), a.x() - mid.x()) < std::atan2(b.y() - mid.y(), b.x() - mid.x());
  });
  for (int i = 0; i < 4; ++i) {
    const Vec2& a = bottom[i];
    const Vec2& b = bottom[(i + 1) % 4];
    img.DrawLine(a.x(), a.y(), b.x(), b.y(), c);
  }
  // Heading tick: center to the front edge.
  const double heading = box.yaw + kPi / 2.0;
  const Vec2 front = view.ToPixel(box.center.x() + 0.5 * box.dims.y() * std::cos(heading),
                                  box.center.y() + 0.5 * box.dims.y() * std::sin(heading));
  img.DrawLine(mid.x(), mid.y(), front.x(), front.y(), c);
}

inline void DrawArrow(Image& img, const BevView& view, const Vec3& from, const Vec2& velocity, Rgb c) {
  const double len = velocity.norm() * view.arrow_seconds;
  if (!(len > 0.0)) return;
  const Vec2 a = view.ToPixel(from.x(), from.y());
  const Vec2 tip_m(from.x() + velocity.x() * view.arrow_seconds, from.y() + velocity.y() * view.arrow_seconds);
  const Vec2 b = view.ToPixel(tip_m.x(), tip_m.y());
  img.DrawLine(a.x(), a.y(), b.x(), b.y(), c);
  const Vec2 dir = (b - a).normalized();
  const double head = std::min(6.0, 0.4 * (b - a).norm());
  for (double s : {-1.0, 1.0}) {
    const Vec2 side(dir.x() * std::cos(s * 2.6) - dir.y() * std::sin(s * 2.6),
                    dir.x() * std::sin(s * 2.6) + dir.y() * std::cos(s * 2.6));
    img.DrawLine(b.x(), b.y(), b.x() + head * side.x(), b.y() + head * side.y(), c);
  }
}

}  // namespace detail

/// Axes and grid only.
inline Image RenderBevBackground(const BevView& view) {
  Image img(view.width(), view.height());
  const Vec2 top_left = view.ToPixel(view.x_max, view.y_half);
  const Vec2 bottom_right = view.ToPixel(view.x_min, -view.y_half);
  for (double x = std::ceil(view.x_min / view.grid_step) * view.grid_step; x <= view.x_max + 1e-9;
       x += view.grid_step) {
    const Vec2 p = view.ToPixel(x, 0.0);
    img.DrawLine(top_left.x(), p.y(), bottom_right.x(), p.y(), colors::kGrid);
    detail::DrawText(img, static_cast<int>(bottom_right.x()) + 3, static_cast<int>(p.y()) - 2,
                     detail::MeterLabel(x), colors::kLabel);
  }
  for (double y = -std::floor(view.y_half / view.grid_step) * view.grid_step; y <= view.y_half + 1e-9;
       y += view.grid_step) {
    const Vec2 p = view.ToPixel(0.0, y);
    img.DrawLine(p.x(), top_left.y(), p.x(), bottom_right.y(), colors::kGrid);
    detail::DrawText(img, static_cast<int>(p.x()) - 4, static_cast<int>(bottom_right.y()) + 4,
                     detail::MeterLabel(y), colors::kLabel);
  }
  // Ego axes through the origin.
  const Vec2 o = view.ToPixel(0.0, 0.0);
  img.DrawLine(o.x(), top_left.y(), o.x(), bottom_right.y(), colors::kAxis);
  img.DrawLine(top_left.x(), o.y(), bottom_right.x(), o.y(), colors::kAxis);
  return img;
}

inline Image RenderBev(const Scene& scene, std::span<const Box3D> detections, const BevView& view = {}) {
  Image img = RenderBevBackground(view);
  SweepWindow window;
  window.reference_time = scene.timestamp;
  for (const RadarPoint& p : AggregateSweeps(scene.radar_sweeps, scene.ego_pose, window)) {
    const Vec2 px = view.ToPixel(p.x, p.y);
    const int x = static_cast<int>(std::lround(px.x()));
    const int y = static_cast<int>(std::lround(px.y()));
    img.FillRect(x - 1, y - 1, x + 1, y + 1, colors::kRadar);
  }
  for (const Box3D& b : scene.gt_boxes) detail::DrawBox(img, view, b, colors::kGroundTruth);
  for (const Box3D& b : detections) detail::DrawBox(img, view, b, colors::kDetection);
  for (const Box3D& b : scene.gt_boxes) detail::DrawArrow(img, view, b.center, b.velocity, colors::kGroundTruth);
  for (const Box3D& b : detections) detail::DrawArrow(img, view, b.center, b.velocity, colors::kPredVelocity);
  return img;
}

}  // namespace cfusion
