#include "armpose/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "armpose/errors.hpp"

namespace armpose {

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

std::size_t keypoint_id(const Json& e) {
  const int id = e.at("id").get<int>();
  if (id < 0 || id >= static_cast<int>(kNumKeypoints))
    throw ParseError("keypoint id " + std::to_string(id) + " out of range");
  return static_cast<std::size_t>(id);
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

bool operator==(const Annotation& a, const Annotation& b) { return to_json(a) == to_json(b); }

Json to_json(const CameraIntrinsics& i) {
  return {{"fx", i.fx}, {"fy", i.fy}, {"cx", i.cx},
          {"cy", i.cy}, {"width", i.width}, {"height", i.height}};
}

CameraIntrinsics intrinsics_from_json(const Json& j) {
  return guarded("intrinsics", [&] {
    CameraIntrinsics i;
    i.fx = j.at("fx").get<double>();
    i.fy = j.at("fy").get<double>();
    i.cx = j.at("cx").get<double>();
    i.cy = j.at("cy").get<double>();
    i.width = j.at("width").get<int>();
    i.height = j.at("height").get<int>();
    return i;
  });
}

Json to_json(const JointAngles& q) {
  Json j = Json::object();
  for (std::size_t n = 0; n < kNumJoints; ++n) j[std::string(kJointNames[n])] = q[n];
  return j;
}

JointAngles joints_from_json(const Json& j) {
  return guarded("joints", [&] {
    JointAngles q;
    for (std::size_t n = 0; n < kNumJoints; ++n)
      q[n] = j.at(std::string(kJointNames[n])).get<double>();
    return q;
  });
}

Json to_json(const PoseVector& p) {
  return {{"cam_location", vec_json(p.cam_location)},
          {"cam_rotation", vec_json(p.cam_rotation)},
          {"joints", to_json(p.joints)}};
}

PoseVector pose_from_json(const Json& j) {
  return guarded("pose", [&] {
    PoseVector p;
    p.cam_location = vec3(j.at("cam_location"));
    p.cam_rotation = vec3(j.at("cam_rotation"));
    p.joints = joints_from_json(j.at("joints"));
    return p;
  });
}

Json to_json(const Keypoints2D& y) {
  Json arr = Json::array();
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    arr.push_back({{"id", k},
                   {"u", y.points[k].x()},
                   {"v", y.points[k].y()},
                   {"visible", y.visible[k]},
                   {"confidence", y.confidence[k]}});
  return arr;
}

Keypoints2D keypoints2d_from_json(const Json& j) {
  return guarded("keypoints2d", [&] {
    if (!j.is_array() || j.size() != kNumKeypoints)
      throw ParseError("keypoints2d must list 17 keypoints");
    Keypoints2D y;
    std::array<bool, kNumKeypoints> seen{};
    for (const Json& e : j) {
      const std::size_t k = keypoint_id(e);
      if (seen[k]) throw ParseError("duplicate keypoint id " + std::to_string(k));
      seen[k] = true;
      y.points[k] = Vec2(e.at("u").get<double>(), e.at("v").get<double>());
      y.visible[k] = e.value("visible", true);
      y.confidence[k] = e.value("confidence", 1.0);
      if (!(y.confidence[k] >= 0.0 && y.confidence[k] <= 1.0))
        throw ParseError("confidence must lie in [0, 1]");
    }
    return y;
  });
}

Json to_json(const Keypoints3D& z) {
  Json arr = Json::array();
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    arr.push_back({{"id", k}, {"x", z.coords[k].x()}, {"y", z.coords[k].y()},
                   {"z", z.coords[k].z()}});
  return arr;
}

Keypoints3D keypoints3d_from_json(const Json& j) {
  return guarded("keypoints3d", [&] {
    if (!j.is_array() || j.size() != kNumKeypoints)
      throw ParseError("keypoints3d must list 17 keypoints");
    Keypoints3D z;
    for (const Json& e : j)
      z.coords[keypoint_id(e)] =
          Vec3(e.at("x").get<double>(), e.at("y").get<double>(), e.at("z").get<double>());
    return z;
  });
}

Json to_json(const Annotation& a) {
  Json j = a.extra.is_object() ? a.extra : Json::object();
  j["image_id"] = a.image_id;
  if (a.intrinsics) j["intrinsics"] = to_json(*a.intrinsics);
  if (a.pose) j["pose"] = to_json(*a.pose);
  j["keypoints2d"] = to_json(a.keypoints2d);
  if (a.keypoints3d) j["keypoints3d"] = to_json(*a.keypoints3d);
  return j;
}

Annotation annotation_from_json(const Json& j) {
  return guarded("annotation", [&] {
    Annotation a;
    a.image_id = j.at("image_id").get<std::string>();
    if (j.contains("intrinsics")) a.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    if (j.contains("pose")) a.pose = pose_from_json(j.at("pose"));
    a.keypoints2d = keypoints2d_from_json(j.at("keypoints2d"));
    if (j.contains("keypoints3d")) a.keypoints3d = keypoints3d_from_json(j.at("keypoints3d"));
    for (const auto& [key, value] : j.items())
      if (key != "image_id" && key != "intrinsics" && key != "pose" && key != "keypoints2d" &&
          key != "keypoints3d")
        a.extra[key] = value;
    return a;
  });
}

Json to_json(const SampleRanges& r) {
  auto iv = [](const Interval& i) { return Json::array({i.lo, i.hi}); };
  Json joints = Json::object();
  for (std::size_t j = 0; j < kNumJoints; ++j)
    joints[std::string(kJointNames[j])] = r.joints[j] ? iv(*r.joints[j]) : Json();
  return {{"cam_az", iv(r.cam_az)},
          {"cam_el", iv(r.cam_el)},
          {"cam_roll", iv(r.cam_roll)},
          {"cam_distance", iv(r.cam_distance)},
          {"look_at", vec_json(r.look_at)},
          {"look_at_jitter", r.look_at_jitter},
          {"joints", joints},
          {"min_in_image", r.min_in_image}};
}

SampleRanges ranges_from_json(const Json& j) {
  try {
    auto iv = [](const Json& a) {
      if (!a.is_array() || a.size() != 2) throw ParseError("interval must be [lo, hi]");
      return Interval{a[0].get<double>(), a[1].get<double>()};
    };
    SampleRanges r;
    if (j.contains("cam_az")) r.cam_az = iv(j["cam_az"]);
    if (j.contains("cam_el")) r.cam_el = iv(j["cam_el"]);
    if (j.contains("cam_roll")) r.cam_roll = iv(j["cam_roll"]);
    if (j.contains("cam_distance")) r.cam_distance = iv(j["cam_distance"]);
    if (j.contains("look_at")) {
      const auto v = j["look_at"].get<std::vector<double>>();
      if (v.size() != 3) throw ParseError("look_at needs 3 coordinates");
      r.look_at = Vec3(v[0], v[1], v[2]);
    }
    r.look_at_jitter = j.value("look_at_jitter", r.look_at_jitter);
    r.min_in_image = j.value("min_in_image", r.min_in_image);
    if (j.contains("joints")) {
      for (std::size_t k = 0; k < kNumJoints; ++k) {
        const std::string name(kJointNames[k]);
        if (j["joints"].contains(name) && !j["joints"][name].is_null())
          r.joints[k] = iv(j["joints"][name]);
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sample ranges: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  CameraIntrinsics i = intrinsics_from_json(read_json_file(path));
  i.validate();
  return i;
}

Annotation read_annotation(const std::filesystem::path& path) {
  return annotation_from_json(read_json_file(path));
}

void write_annotation(const std::filesystem::path& path, const Annotation& a) {
  write_json_file(path, to_json(a));
}

std::vector<Annotation> load_annotations(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<Annotation> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto& p = entry.path();
    if (!entry.is_regular_file() || p.extension() != ".json" || p.filename() == "manifest.json")
      continue;
    out.push_back(read_annotation(p));
  }
  std::sort(out.begin(), out.end(),
            [](const Annotation& a, const Annotation& b) { return a.image_id < b.image_id; });
  return out;
}

}  // namespace armpose
