#pragma once

// JSON forms of scenes, detection lists and metric reports. Units throughout:
// meters, radians, seconds, m/s. Rotation matrices are row-major arrays of 9.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfusion/detection.hpp"
#include "cfusion/error.hpp"
#include "cfusion/geometry.hpp"
#include "cfusion/harness/scene.hpp"
#include "cfusion/metrics.hpp"
#include "cfusion/radar_cloud.hpp"

namespace cfusion {

using Json = nlohmann::json;

namespace json_detail {

template <typename Derived>
Json VecToJson(const Eigen::MatrixBase<Derived>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> VecFromJson(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw Error(ErrorCode::kParse, std::string(what) + " must be an array of " + std::to_string(N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

template <std::size_t N>
std::array<double, N> ArrayFromJson(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorCode::kParse, std::string(what) + " must be an array of " + std::to_string(N));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j.at(i).get<double>();
  return out;
}

}  // namespace json_detail

inline Json ToJson(const Pose& pose) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation(r, c));
  }
  return {{"rotation", rot}, {"translation", json_detail::VecToJson(pose.translation)}};
}

inline Pose PoseFromJson(const Json& j) {
  Pose pose;
  const auto rot = json_detail::ArrayFromJson<9>(j.at("rotation"), "rotation");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = rot[static_cast<std::size_t>(3 * r + c)];
  }
  pose.translation = json_detail::VecFromJson<3>(j.at("translation"), "translation");
  return pose;
}

inline Json ToJson(const CameraModel& cam) {
  return {{"intrinsics",
           {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy}, {"width", cam.width},
            {"height", cam.height}}},
          {"extrinsic", ToJson(cam.extrinsic)}};
}

inline CameraModel CameraFromJson(const Json& j) {
  const Json& in = j.at("intrinsics");
  CameraModel cam;
  cam.fx = in.at("fx").get<double>();
  cam.fy = in.at("fy").get<double>();
  cam.cx = in.at("cx").get<double>();
  cam.cy = in.at("cy").get<double>();
  cam.width = in.at("width").get<int>();
  cam.height = in.at("height").get<int>();
  cam.extrinsic = PoseFromJson(j.at("extrinsic"));
  return cam;
}

inline Json ToJson(const Box3D& b) {
  return {{"center", json_detail::VecToJson(b.center)},
          {"dims", json_detail::VecToJson(b.dims)},
          {"yaw", b.yaw},
          {"velocity", json_detail::VecToJson(b.velocity)},
          {"class", b.class_id},
          {"attribute", b.attribute_id},
          {"score", b.score}};
}

inline Box3D Box3DFromJson(const Json& j) {
  Box3D b;
  b.center = json_detail::VecFromJson<3>(j.at("center"), "center");
  b.dims = json_detail::VecFromJson<3>(j.at("dims"), "dims");
  b.yaw = j.at("yaw").get<double>();
  b.velocity = j.contains("velocity") ? json_detail::VecFromJson<2>(j.at("velocity"), "velocity") : Vec2::Zero();
  b.class_id = j.at("class").get<int>();
  b.attribute_id = j.value("attribute", -1);
  b.score = j.value("score", 1.0);
  return b;
}

inline Json ToJson(const Box2D& b) {
  return {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}, {"clipped", b.clipped}};
}

inline Box2D Box2DFromJson(const Json& j) {
  return {j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("w").get<double>(), j.at("h").get<double>(),
          j.value("clipped", false)};
}

inline Json ToJson(const DetectionRecord& d) {
  Json j = {{"box2d", ToJson(d.box2d)},
            {"center_px", json_detail::VecToJson(d.center_px)},
            {"class", d.class_id},
            {"score", d.score},
            {"primary",
             {{"depth", d.primary.depth},
              {"dims", json_detail::VecToJson(d.primary.dims)},
              {"orientation", d.primary.orientation},
              {"offset", json_detail::VecToJson(d.primary.offset)},
              {"size2d", json_detail::VecToJson(d.primary.size2d)}}}};
  if (d.secondary) {
    j["secondary"] = {{"depth", d.secondary->depth},
                      {"orientation", d.secondary->orientation},
                      {"velocity", json_detail::VecToJson(d.secondary->velocity)},
                      {"attribute_scores", d.secondary->attribute_scores}};
  }
  if (d.gt_box3d) j["gt_box3d"] = ToJson(*d.gt_box3d);
  if (d.gt_index) j["gt_index"] = *d.gt_index;
  return j;
}

inline DetectionRecord DetectionRecordFromJson(const Json& j) {
  DetectionRecord d;
  d.box2d = Box2DFromJson(j.at("box2d"));
  d.center_px = json_detail::VecFromJson<2>(j.at("center_px"), "center_px");
  d.class_id = j.at("class").get<int>();
  d.score = j.value("score", 1.0);
  const Json& p = j.at("primary");
  d.primary.depth = p.at("depth").get<double>();
  d.primary.dims = json_detail::VecFromJson<3>(p.at("dims"), "primary.dims");
  d.primary.orientation = json_detail::ArrayFromJson<8>(p.at("orientation"), "primary.orientation");
  d.primary.offset = json_detail::VecFromJson<2>(p.at("offset"), "primary.offset");
  d.primary.size2d = json_detail::VecFromJson<2>(p.at("size2d"), "primary.size2d");
  if (j.contains("secondary")) {
    const Json& s = j.at("secondary");
    SecondaryHeads sec;
    sec.depth = s.at("depth").get<double>();
    sec.orientation = json_detail::ArrayFromJson<8>(s.at("orientation"), "secondary.orientation");
    sec.velocity = json_detail::VecFromJson<2>(s.at("velocity"), "secondary.velocity");
    sec.attribute_scores = s.value("attribute_scores", std::vector<double>{});
    d.secondary = std::move(sec);
  }
  if (j.contains("gt_box3d")) d.gt_box3d = Box3DFromJson(j.at("gt_box3d"));
  if (j.contains("gt_index")) d.gt_index = j.at("gt_index").get<int>();
  return d;
}

inline Json ToJson(const RadarSweep& s) {
  Json points = Json::array();
  for (const RadarPoint& p : s.points) points.push_back({p.x, p.y, p.z, p.vx, p.vy});
  Json j = {{"timestamp", s.timestamp}, {"ego_pose", ToJson(s.ego_pose)}, {"points", points}};
  if (!s.owners.empty()) j["owners"] = s.owners;
  return j;
}

// Point timestamps are not stored; every point takes its sweep's timestamp.
inline RadarSweep RadarSweepFromJson(const Json& j) {
  RadarSweep s;
  s.timestamp = j.at("timestamp").get<double>();
  s.ego_pose = PoseFromJson(j.at("ego_pose"));
  for (const Json& p : j.at("points")) {
    const auto v = json_detail::ArrayFromJson<5>(p, "radar point");
    s.points.push_back({v[0], v[1], v[2], v[3], v[4], s.timestamp});
  }
  if (j.contains("owners")) s.owners = j.at("owners").get<std::vector<int>>();
  return s;
}

inline Json ToJson(const Scene& scene) {
  Json sweeps = Json::array();
  for (const RadarSweep& s : scene.radar_sweeps) sweeps.push_back(ToJson(s));
  Json gts = Json::array();
  for (const Box3D& b : scene.gt_boxes) gts.push_back(ToJson(b));
  Json j = {{"scene_id", scene.scene_id}, {"timestamp", scene.timestamp}, {"camera", ToJson(scene.camera)},
            {"ego_pose", ToJson(scene.ego_pose)}, {"radar_sweeps", sweeps}, {"gt_boxes", gts}};
  if (scene.preliminary_dets) {
    Json dets = Json::array();
    for (const DetectionRecord& d : *scene.preliminary_dets) dets.push_back(ToJson(d));
    j["preliminary_dets"] = dets;
  }
  return j;
}

inline Scene SceneFromJson(const Json& j) {
  try {
    Scene scene;
    scene.scene_id = j.at("scene_id").get<std::string>();
    scene.timestamp = j.at("timestamp").get<double>();
    scene.camera = CameraFromJson(j.at("camera"));
    scene.ego_pose = j.contains("ego_pose") ? PoseFromJson(j.at("ego_pose")) : Pose::Identity();
    for (const Json& s : j.value("radar_sweeps", Json::array())) scene.radar_sweeps.push_back(RadarSweepFromJson(s));
    for (const Json& b : j.value("gt_boxes", Json::array())) scene.gt_boxes.push_back(Box3DFromJson(b));
    if (j.contains("preliminary_dets")) {
      std::vector<DetectionRecord> dets;
      for (const Json& d : j.at("preliminary_dets")) dets.push_back(DetectionRecordFromJson(d));
      scene.preliminary_dets = std::move(dets);
    }
    ValidateScene(scene);
    return scene;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed scene JSON: ") + e.what());
  }
}

/// Detection interchange format: one object per scene.
inline Json DetectionsToJson(const std::string& scene_id, std::span<const Box3D> boxes) {
  Json dets = Json::array();
  for (const Box3D& b : boxes) {
    dets.push_back({{"class", b.class_id},
                    {"score", b.score},
                    {"center", json_detail::VecToJson(b.center)},
                    {"dims", json_detail::VecToJson(b.dims)},
                    {"yaw", b.yaw},
                    {"velocity", json_detail::VecToJson(b.velocity)},
                    {"attribute", b.attribute_id}});
  }
  return {{"scene_id", scene_id}, {"detections", dets}};
}

struct SceneDetections {
  std::string scene_id;
  std::vector<Box3D> boxes;
};

inline SceneDetections DetectionsFromJson(const Json& j) {
  try {
    SceneDetections out;
    out.scene_id = j.at("scene_id").get<std::string>();
    for (const Json& d : j.at("detections")) out.boxes.push_back(Box3DFromJson(d));
    return out;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed detection JSON: ") + e.what());
  }
}

inline Json ToJson(const TpErrors& e) {
  return {{"ATE", e.ate}, {"ASE", e.ase}, {"AOE", e.aoe}, {"AVE", e.ave}, {"AAE", e.aae}};
}

inline Json ToJson(const MetricReport& r) {
  Json classes = Json::object();
  for (const auto& [cls, cm] : r.per_class) {
    Json ap = Json::object();
    for (std::size_t i = 0; i < cm.ap.size(); ++i) {
      std::ostringstream key;
      key << r.dist_thresholds[i];
      ap[key.str()] = cm.ap[i];
    }
    classes[std::to_string(cls)] = {{"AP", ap},
                                    {"mean_AP", cm.mean_ap},
                                    {"tp_errors", ToJson(cm.errors)},
                                    {"num_gt", cm.num_gt},
                                    {"num_pred", cm.num_pred}};
  }
  return {{"NDS", r.nds},
          {"mAP", r.map},
          {"mATE", r.mean_errors.ate},
          {"mASE", r.mean_errors.ase},
          {"mAOE", r.mean_errors.aoe},
          {"mAVE", r.mean_errors.ave},
          {"mAAE", r.mean_errors.aae},
          {"dist_thresholds", r.dist_thresholds},
          {"per_class", classes}};
}

// ---------------------------------------------------------------------------
// Files

inline std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

inline Json ReadJsonFile(const std::filesystem::path& path) {
  try {
    return Json::parse(ReadTextFile(path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

/// Canonical serialized form: two-space indent, trailing newline.
inline std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

inline Scene LoadScene(const std::filesystem::path& path) {
  try {
    return SceneFromJson(ReadJsonFile(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

inline void SaveScene(const Scene& scene, const std::filesystem::path& path) {
  WriteTextFile(path, DumpJson(ToJson(scene)));
}

}  // namespace cfusion
