#pragma once

#include <array>

#include "armpose/arm_model.hpp"

namespace armpose {

/// Pinhole intrinsics. Image coordinates have their origin at the top-left
/// pixel centre, u to the right and v down.
struct CameraIntrinsics {
  double fx = 320.0;
  double fy = 320.0;
  double cx = 128.0;
  double cy = 128.0;
  int width = 256;
  int height = 256;

  /// Throws InvalidArgumentError unless fx, fy > 0 and the principal point
  /// lies inside the image.
  void validate() const;
  bool in_image(const Vec2& uv) const {
    return uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() < width && uv.y() < height;
  }
  Mat3 matrix() const;
};

/// The 10-dimensional pose: camera location (cm, world frame), camera
/// rotation as (azimuth, elevation, roll) in degrees, and the joint angles.
///
/// Camera convention: with all three angles zero the camera sits on the +x
/// side looking back along -x with world z up in the image. Azimuth rotates
/// about world z, positive elevation tilts the optical axis downwards, roll
/// spins the image about the optical axis. Elevation must stay inside the
/// open interval (-90, 90).
struct PoseVector {
  Vec3 cam_location = Vec3::Zero();
  Vec3 cam_rotation = Vec3::Zero();  // az, el, roll (deg)
  JointAngles joints;
};

/// World-to-camera transform: x_cam = R * x_world + T. Camera looks along +z.
struct Extrinsics {
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
};

struct Keypoints2D {
  std::array<Vec2, kNumKeypoints> points;
  std::array<double, kNumKeypoints> confidence{};
  std::array<bool, kNumKeypoints> visible{};

  /// All points visible with confidence 1.
  static Keypoints2D from_points(const std::array<Vec2, kNumKeypoints>& pts);
};

struct ProjectionResult {
  Keypoints2D points2d;  // visible = inside the image, confidence 1
  std::array<double, kNumKeypoints> scales{};  // S_k = camera-frame depth (cm)
};

/// Minimum camera-frame depth (cm) a point needs to be projectable.
inline constexpr double kMinDepth = 1e-6;

/// Camera-to-world rotation for (az, el, roll) in degrees.
Mat3 camera_to_world_rotation(const Vec3& az_el_roll_deg);
/// d R / d angle (per degree) of the world-to-camera rotation, for az, el, roll.
std::array<Mat3, 3> rotation_derivatives(const Vec3& az_el_roll_deg);

Extrinsics pose_to_extrinsics(const PoseVector& p);
/// Camera location recovered from extrinsics: -R^T T.
Vec3 camera_center(const Extrinsics& e);

/// Full perspective projection S_k [u v 1]^T = K (R z_k + T).
/// Throws BehindCameraError when any depth <= kMinDepth.
ProjectionResult project(const CameraIntrinsics& intr, const Extrinsics& ext,
                         const Keypoints3D& z);
ProjectionResult project(const CameraIntrinsics& intr, const PoseVector& p,
                         const Keypoints3D& z);

/// Orthographic projection onto the camera image plane with uniform scale
/// (pixels per cm): u = cx + s * x_cam, v = cy + s * y_cam.
Keypoints2D weak_project(double scale, const PoseVector& p, const Keypoints3D& z,
                         const Vec2& principal = Vec2::Zero());

/// Largest absolute entry of S_k [u v 1]^T - K (R z_k + T) over all keypoints
/// with S_k taken as the projected depth. Zero for an exact projection.
double projection_consistency_residual(const CameraIntrinsics& intr, const PoseVector& p,
                                       const Keypoints3D& z, const Keypoints2D& y);

}  // namespace armpose
