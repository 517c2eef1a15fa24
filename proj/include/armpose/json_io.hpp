#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "armpose/camera.hpp"
#include "armpose/sample_ranges.hpp"

namespace armpose {

using Json = nlohmann::json;

/// One scene's annotation in the dataset format shared by generation,
/// pseudo-label export and evaluation:
///   {image_id, intrinsics, pose: {cam_location, cam_rotation, joints},
///    keypoints2d: [{id, u, v, visible, confidence}], keypoints3d: [{id, x, y, z}]}
/// Anything else in the object is carried through `extra` untouched.
struct Annotation {
  std::string image_id;
  std::optional<CameraIntrinsics> intrinsics;
  std::optional<PoseVector> pose;
  Keypoints2D keypoints2d;
  std::optional<Keypoints3D> keypoints3d;
  Json extra = Json::object();

  friend bool operator==(const Annotation&, const Annotation&);
};

Json to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const Json& j);
Json to_json(const JointAngles& q);
JointAngles joints_from_json(const Json& j);
Json to_json(const PoseVector& p);
PoseVector pose_from_json(const Json& j);
Json to_json(const Keypoints2D& y);
Keypoints2D keypoints2d_from_json(const Json& j);
Json to_json(const Keypoints3D& z);
Keypoints3D keypoints3d_from_json(const Json& j);
Json to_json(const Annotation& a);
Annotation annotation_from_json(const Json& j);
Json to_json(const SampleRanges& r);
/// Keys absent from `j` keep their defaults.
SampleRanges ranges_from_json(const Json& j);

/// All parse failures surface as ParseError; unreadable files as IoError.
Json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
Annotation read_annotation(const std::filesystem::path& path);
void write_annotation(const std::filesystem::path& path, const Annotation& a);
/// Every *.json in `dir` except manifest.json, sorted by image_id.
std::vector<Annotation> load_annotations(const std::filesystem::path& dir);

}  // namespace armpose
