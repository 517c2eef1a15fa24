#pragma once

#include <cmath>

#include <Eigen/Geometry>

#include "armpose/arm_model.hpp"
#include "armpose/rng.hpp"

namespace test {

inline const armpose::ArmModel& model() {
  static const armpose::ArmModel m = armpose::load_arm_model(ARMPOSE_DATA_DIR "/owi535.json");
  return m;
}

inline armpose::JointAngles random_joints(armpose::CounterRng& rng,
                                          const armpose::ArmModel& m = model()) {
  armpose::JointAngles q;
  for (std::size_t j = 0; j < armpose::kNumJoints; ++j)
    q[j] = rng.uniform(m.limit(j).min_deg, m.limit(j).max_deg);
  return q;
}

/// Keypoints via explicit 4x4 homogeneous matrices: each actuated part
/// contributes T(pivot) * Rot(axis, angle) * T(-pivot), chained from the root.
inline std::array<Eigen::Vector3d, armpose::kNumKeypoints> homogeneous_fk(
    const armpose::ArmModel& m, const armpose::JointAngles& q) {
  const auto& parts = m.parts();
  std::vector<Eigen::Matrix4d> world(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
    if (parts[i].joint >= 0) {
      const double a = q[parts[i].joint] * M_PI / 180.0;
      const Eigen::Vector3d u = parts[i].axis;
      // Rodrigues by hand.
      Eigen::Matrix3d k;
      k << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
      const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() + std::sin(a) * k +
                                (1 - std::cos(a)) * k * k;
      Eigen::Matrix4d t1 = Eigen::Matrix4d::Identity(), t2 = Eigen::Matrix4d::Identity(),
                      rot = Eigen::Matrix4d::Identity();
      t1.block<3, 1>(0, 3) = parts[i].pivot;
      t2.block<3, 1>(0, 3) = -parts[i].pivot;
      rot.block<3, 3>(0, 0) = r;
      local = t1 * rot * t2;
    }
    world[i] = parts[i].parent < 0 ? local : Eigen::Matrix4d(world[parts[i].parent] * local);
  }
  std::array<Eigen::Vector3d, armpose::kNumKeypoints> out;
  for (const auto& kp : m.keypoints()) {
    Eigen::Vector4d h;
    h << kp.rest, 1.0;
    out[kp.id] = (world[kp.part] * h).head<3>();
  }
  return out;
}

}  // namespace test
