#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace armpose {

inline constexpr std::size_t kNumKeypoints = 17;
inline constexpr std::size_t kNumJoints = 4;

/// Required joint names, in pose-vector order.
inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "rotation", "base", "elbow", "wrist"};

/// Range of motion of each motor (degrees).
inline constexpr std::array<double, kNumJoints> kJointSpansDeg = {270.0, 180.0,
                                                                   300.0, 120.0};

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kRadToDeg = 57.29577951308232;

/// Motor angles in degrees, indexed rotation/base/elbow/wrist.
struct JointAngles {
  std::array<double, kNumJoints> deg{};

  double& operator[](std::size_t i) { return deg[i]; }
  double operator[](std::size_t i) const { return deg[i]; }
  double rotation() const { return deg[0]; }
  double base() const { return deg[1]; }
  double elbow() const { return deg[2]; }
  double wrist() const { return deg[3]; }

  friend bool operator==(const JointAngles&, const JointAngles&) = default;
};

/// World-frame keypoint coordinates in cm (origin at the arm base, z up).
struct Keypoints3D {
  std::array<Vec3, kNumKeypoints> coords;
};

/// x -> rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
  RigidTransform compose(const RigidTransform& inner) const {
    return {rotation * inner.rotation, rotation * inner.translation + translation};
  }
  static RigidTransform identity() { return {}; }
};

struct JointLimit {
  double min_deg = 0.0;
  double max_deg = 0.0;
  double span() const { return max_deg - min_deg; }
  bool contains(double deg) const { return deg >= min_deg && deg <= max_deg; }
  double clamp(double deg) const;
};

struct Part {
  std::string name;
  int parent = -1;  // index into ArmModel::parts(), -1 for the root
  Vec3 axis = Vec3::UnitZ();
  Vec3 pivot = Vec3::Zero();  // rest-pose coordinates
  int joint = -1;             // actuating joint index, -1 for a rigid attachment
};

struct ModelKeypoint {
  int id = 0;
  int part = 0;
  Vec3 rest = Vec3::Zero();
};

/// Immutable kinematic description of the arm: a rooted tree of rigid parts,
/// four revolute joints, and the 17 keypoint rest coordinates (z_0).
///
/// Axes and pivots are expressed in rest-pose coordinates, which coincide with
/// every parent frame when all joint angles are zero.
class ArmModel {
 public:
  struct JointSpec {
    std::string name;
    std::string part;
    JointLimit limit;
  };
  struct PartSpec {
    std::string name;
    std::string parent;  // empty for the root
    Vec3 axis = Vec3::UnitZ();
    Vec3 pivot = Vec3::Zero();
  };
  struct KeypointSpec {
    int id = 0;
    std::string part;
    Vec3 rest = Vec3::Zero();
  };

  /// Validates every model invariant; throws ModelInvariantError.
  ArmModel(std::string name, std::vector<PartSpec> parts,
           std::vector<JointSpec> joints, std::vector<KeypointSpec> keypoints,
           int tip_keypoint);

  const std::string& name() const { return name_; }
  const std::vector<Part>& parts() const { return parts_; }
  const std::array<JointLimit, kNumJoints>& limits() const { return limits_; }
  const JointLimit& limit(std::size_t joint) const { return limits_[joint]; }
  /// Part actuated by joint `j`.
  int joint_part(std::size_t j) const { return joint_part_[j]; }
  const std::array<ModelKeypoint, kNumKeypoints>& keypoints() const {
    return keypoints_;
  }
  const Keypoints3D& rest_pose() const { return rest_; }
  int tip_keypoint() const { return tip_; }
  /// Joints that move keypoint k, as a bitmask over joint indices.
  unsigned moving_joints(std::size_t k) const { return moving_joints_[k]; }

  bool within_limits(const JointAngles& q) const;
  /// Throws JointLimitError naming the first offending joint.
  void check_limits(const JointAngles& q) const;
  JointAngles clamp(const JointAngles& q) const;

 private:
  std::string name_;
  std::vector<Part> parts_;
  std::array<JointLimit, kNumJoints> limits_{};
  std::array<int, kNumJoints> joint_part_{};
  std::array<ModelKeypoint, kNumKeypoints> keypoints_{};
  std::array<unsigned, kNumKeypoints> moving_joints_{};
  Keypoints3D rest_;
  int tip_ = 0;
};

/// Loads the JSON geometry file. Throws ParseError or ModelInvariantError.
ArmModel load_arm_model(const std::filesystem::path& path);
ArmModel parse_arm_model(std::string_view json_text);

/// The transform joint `joint` applies at `angle_deg`: rotation about its axis
/// through its pivot. Throws JointLimitError outside the joint's limits.
RigidTransform motor_transform(const ArmModel& model, std::size_t joint,
                               double angle_deg);

/// World position and direction of each joint axis plus the keypoints for a
/// configuration. Needed by Jacobians downstream.
struct KinematicState {
  Keypoints3D keypoints;
  std::array<Vec3, kNumJoints> axis_world;
  std::array<Vec3, kNumJoints> pivot_world;
};

KinematicState forward_state(const ArmModel& model, const JointAngles& q);
Keypoints3D forward_kinematics(const ArmModel& model, const JointAngles& q);
Vec3 tip_position(const ArmModel& model, const JointAngles& q);

/// d(keypoint k)/d(joint j) in cm per degree; zero when j does not move k.
Vec3 keypoint_joint_derivative(const ArmModel& model, const KinematicState& s,
                               std::size_t k, std::size_t j);

/// Upper bound on the distance from the first off-axis pivot (the shoulder)
/// to the tip over all configurations: the sum of the chain's link lengths.
struct ReachBound {
  Vec3 shoulder;
  double radius = 0.0;
};
ReachBound reach_bound(const ArmModel& model);

}  // namespace armpose
