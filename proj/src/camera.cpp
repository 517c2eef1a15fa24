#include "armpose/camera.hpp"

#include <cmath>
#include <sstream>

#include "armpose/errors.hpp"

namespace armpose {

namespace {

Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// Columns are the camera axes (right, down, forward) in world coordinates at
// zero azimuth/elevation/roll.
const Mat3& base_axes() {
  static const Mat3 b = [] {
    Mat3 m;
    m.col(0) = Vec3(0, 1, 0);
    m.col(1) = Vec3(0, 0, -1);
    m.col(2) = Vec3(-1, 0, 0);
    return m;
  }();
  return b;
}

}  // namespace

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw InvalidArgumentError("intrinsics: fx, fy must be > 0");
  if (width <= 0 || height <= 0) throw InvalidArgumentError("intrinsics: empty image");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw InvalidArgumentError("intrinsics: principal point outside the image");
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Keypoints2D Keypoints2D::from_points(const std::array<Vec2, kNumKeypoints>& pts) {
  Keypoints2D y;
  y.points = pts;
  y.confidence.fill(1.0);
  y.visible.fill(true);
  return y;
}

Mat3 camera_to_world_rotation(const Vec3& a) {
  return rot_z(a[0] * kDegToRad) * rot_y(-a[1] * kDegToRad) * base_axes() *
         rot_z(a[2] * kDegToRad);
}

std::array<Mat3, 3> rotation_derivatives(const Vec3& a) {
  const Mat3 az = rot_z(a[0] * kDegToRad);
  const Mat3 el = rot_y(-a[1] * kDegToRad);
  const Mat3 roll = rot_z(a[2] * kDegToRad);
  const Mat3 kz = skew(Vec3::UnitZ());
  const Mat3 ky = skew(Vec3::UnitY());
  const Mat3& b = base_axes();
  std::array<Mat3, 3> d;
  d[0] = (az * kz * el * b * roll).transpose() * kDegToRad;
  d[1] = (az * el * (-ky) * b * roll).transpose() * kDegToRad;
  d[2] = (az * el * b * roll * kz).transpose() * kDegToRad;
  return d;
}

Extrinsics pose_to_extrinsics(const PoseVector& p) {
  Extrinsics e;
  e.R = camera_to_world_rotation(p.cam_rotation).transpose();
  e.T = -e.R * p.cam_location;
  return e;
}

Vec3 camera_center(const Extrinsics& e) { return -e.R.transpose() * e.T; }

ProjectionResult project(const CameraIntrinsics& intr, const Extrinsics& ext,
                         const Keypoints3D& z) {
  ProjectionResult out;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const Vec3 pc = ext.R * z.coords[k] + ext.T;
    if (!(pc.z() > kMinDepth)) {
      std::ostringstream os;
      os << "keypoint " << k << " has camera depth " << pc.z() << " cm";
      throw BehindCameraError(os.str());
    }
    const Vec2 uv(intr.fx * pc.x() / pc.z() + intr.cx, intr.fy * pc.y() / pc.z() + intr.cy);
    out.points2d.points[k] = uv;
    out.points2d.confidence[k] = 1.0;
    out.points2d.visible[k] = intr.in_image(uv);
    out.scales[k] = pc.z();
  }
  return out;
}

ProjectionResult project(const CameraIntrinsics& intr, const PoseVector& p,
                         const Keypoints3D& z) {
  return project(intr, pose_to_extrinsics(p), z);
}

Keypoints2D weak_project(double scale, const PoseVector& p, const Keypoints3D& z,
                         const Vec2& principal) {
  if (!(scale > 0.0)) throw InvalidArgumentError("weak perspective scale must be > 0");
  const Extrinsics e = pose_to_extrinsics(p);
  Keypoints2D y;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const Vec3 pc = e.R * z.coords[k] + e.T;
    y.points[k] = principal + scale * pc.head<2>();
    y.confidence[k] = 1.0;
    y.visible[k] = true;
  }
  return y;
}

double projection_consistency_residual(const CameraIntrinsics& intr, const PoseVector& p,
                                       const Keypoints3D& z, const Keypoints2D& y) {
  const Extrinsics e = pose_to_extrinsics(p);
  const Mat3 k = intr.matrix();
  double worst = 0.0;
  for (std::size_t i = 0; i < kNumKeypoints; ++i) {
    const Vec3 rhs = k * (e.R * z.coords[i] + e.T);
    const double s = rhs.z();
    const Vec3 lhs(s * y.points[i].x(), s * y.points[i].y(), s);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace armpose
