#pragma once

// Coordinate frames, pinhole projection, 3D box helpers and the two-bin
// orientation code shared by every other stage.
//
// Frames:
//   ego     x forward, y left, z up, origin on the ground below the ego rear axle
//   camera  x right, y down, z along the optical axis
// A CameraModel's extrinsic maps ego coordinates into camera coordinates.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cfusion/error.hpp"

namespace cfusion {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double NormalizeAngle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Rigid transform y = rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose Identity() { return {}; }

  static Pose FromYaw(double yaw, const Vec3& translation = Vec3::Zero()) {
    Pose pose;
    pose.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
    pose.translation = translation;
    return pose;
  }

  Pose Inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  /// (this * other)(x) == this(other(x)).
  Pose operator*(const Pose& other) const {
    Pose out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  bool IsValid(double tol = 1e-9) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
      return false;
    }
    return std::abs(rotation.determinant() - 1.0) <= tol;
  }

  bool operator==(const Pose&) const = default;
};

inline Vec3 TransformPoint(const Vec3& p, const Pose& pose) {
  return pose.rotation * p + pose.translation;
}

/// Free vectors (velocities, directions) only rotate.
inline Vec3 RotateVector(const Vec3& v, const Pose& pose) { return pose.rotation * v; }

struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Pose extrinsic;  // ego -> camera

  void Validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "camera focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "camera image size must be positive");
    }
    if (!extrinsic.IsValid(1e-6)) {
      throw Error(ErrorCode::kInvalidArgument, "camera extrinsic rotation is not a proper rotation");
    }
  }

  Vec3 EgoToCamera(const Vec3& p_ego) const { return TransformPoint(p_ego, extrinsic); }
  Vec3 CameraToEgo(const Vec3& p_cam) const { return TransformPoint(p_cam, extrinsic.Inverse()); }

  bool operator==(const CameraModel&) const = default;
};

/// Forward-looking camera mounted at `mount` in the ego frame, no pitch or roll.
inline CameraModel MakeForwardCamera(double fx, double fy, double cx, double cy, int width,
                                     int height, const Vec3& mount) {
  CameraModel cam{fx, fy, cx, cy, width, height, {}};
  // Rows are the camera axes expressed in ego coordinates.
  cam.extrinsic.rotation << 0, -1, 0,
                            0, 0, -1,
                            1, 0, 0;
  cam.extrinsic.translation = -(cam.extrinsic.rotation * mount);
  return cam;
}

/// 800x450 camera at 1.5 m height, 1.5 m ahead of the ego origin.
inline CameraModel DefaultCamera() {
  return MakeForwardCamera(633.0, 633.0, 400.0, 225.0, 800, 450, Vec3(1.5, 0.0, 1.5));
}

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

inline ImagePoint ProjectToImage(const Vec3& p_cam, const CameraModel& cam) {
  if (!(p_cam.z() > 0.0)) {
    throw Error(ErrorCode::kPointBehindCamera,
                "point at z=" + std::to_string(p_cam.z()) + " is not in front of the camera");
  }
  return {cam.fx * p_cam.x() / p_cam.z() + cam.cx, cam.fy * p_cam.y() / p_cam.z() + cam.cy,
          p_cam.z()};
}

/// Inverse of ProjectToImage: the camera-frame point at z-depth `depth` on pixel (u, v).
inline Vec3 Unproject(double u, double v, double depth, const CameraModel& cam) {
  return {(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth};
}

/// Azimuth in the ego frame of the viewing ray through pixel (u, v).
inline double RayAngle(double u, double v, const CameraModel& cam) {
  const Vec3 ray_cam = Unproject(u, v, 1.0, cam);
  const Vec3 ray_ego = cam.extrinsic.rotation.transpose() * ray_cam;
  return std::atan2(ray_ego.y(), ray_ego.x());
}

struct Box3D {
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Ones();  // (w, l, h): extent along the box's local x, y, z
  double yaw = 0.0;
  Vec2 velocity = Vec2::Zero();
  int class_id = 0;
  int attribute_id = -1;  // -1: unknown
  double score = 1.0;

  bool operator==(const Box3D&) const = default;
};

inline std::array<Vec3, 8> Box3dCorners(const Box3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const Vec3 half = 0.5 * box.dims;
  std::array<Vec3, 8> corners;
  int k = 0;
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      for (int sz : {-1, 1}) {
        const double lx = sx * half.x();
        const double ly = sy * half.y();
        corners[k++] = box.center + Vec3(c * lx - s * ly, s * lx + c * ly, sz * half.z());
      }
    }
  }
  return corners;
}

struct Box2D {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  bool clipped = false;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double top() const { return cy - 0.5 * h; }
  double bottom() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  bool Contains(double u, double v) const {
    return u >= left() && u <= right() && v >= top() && v <= bottom();
  }

  static Box2D FromBounds(double x0, double y0, double x1, double y1, bool clipped = false) {
    return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0, clipped};
  }

  bool operator==(const Box2D&) const = default;
};

/// Image-plane bounding rectangle of the corners in front of the camera,
/// clipped to the image. `clipped` records whether clipping or culling occurred.
inline Box2D Box3dToBox2d(const Box3D& box, const CameraModel& cam) {
  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  int visible = 0;
  for (const Vec3& corner : Box3dCorners(box)) {
    const Vec3 p = cam.EgoToCamera(corner);
    if (!(p.z() > 0.0)) continue;
    const ImagePoint ip = ProjectToImage(p, cam);
    x0 = std::min(x0, ip.u);
    y0 = std::min(y0, ip.v);
    x1 = std::max(x1, ip.u);
    y1 = std::max(y1, ip.v);
    ++visible;
  }
  if (visible == 0) {
    throw Error(ErrorCode::kFullyBehindCamera, "no box corner lies in front of the camera");
  }
  const double w = cam.width;
  const double h = cam.height;
  const bool clipped = visible < 8 || x0 < 0.0 || y0 < 0.0 || x1 > w || y1 > h;
  x0 = std::clamp(x0, 0.0, w);
  x1 = std::clamp(x1, 0.0, w);
  y0 = std::clamp(y0, 0.0, h);
  y1 = std::clamp(y1, 0.0, h);
  return Box2D::FromBounds(x0, y0, x1, y1, clipped);
}

// Two-bin orientation code. Each bin holds four scalars:
//   [out-of-bin score, in-bin score, sin(offset), cos(offset)]
// where offset is the observation angle relative to the bin center. The bins
// cover [-7pi/6, pi/6] and [-pi/6, 7pi/6] and overlap around 0 and pi.
using OrientationCode = std::array<double, 8>;

inline constexpr std::array<double, 2> kOrientationBinCenters = {-kPi / 2.0, kPi / 2.0};
inline constexpr double kOrientationBinHalfWidth = 2.0 * kPi / 3.0;

inline bool InOrientationBin(double observation_angle, int bin) {
  return std::abs(NormalizeAngle(observation_angle - kOrientationBinCenters[bin])) <=
         kOrientationBinHalfWidth + 1e-12;
}

inline OrientationCode EncodeOrientation(double yaw, double ray_angle) {
  const double alpha = NormalizeAngle(yaw - ray_angle);
  OrientationCode code{};
  for (int bin = 0; bin < 2; ++bin) {
    const bool inside = InOrientationBin(alpha, bin);
    const double offset = NormalizeAngle(alpha - kOrientationBinCenters[bin]);
    code[4 * bin + 0] = inside ? 0.0 : 1.0;
    code[4 * bin + 1] = inside ? 1.0 : 0.0;
    code[4 * bin + 2] = std::sin(offset);
    code[4 * bin + 3] = std::cos(offset);
  }
  return code;
}

/// Decodes using an explicit bin, bypassing the classification scores.
inline double DecodeOrientationBin(const OrientationCode& code, int bin, double ray_angle) {
  const double offset = std::atan2(code[4 * bin + 2], code[4 * bin + 3]);
  return NormalizeAngle(kOrientationBinCenters[bin] + offset + ray_angle);
}

inline double DecodeOrientation(const OrientationCode& code, double ray_angle) {
  const int bin = code[1] >= code[5] ? 0 : 1;
  return DecodeOrientationBin(code, bin, ray_angle);
}

}  // namespace cfusion
