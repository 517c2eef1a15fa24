#include "armpose/arm_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "armpose/errors.hpp"

namespace armpose {

namespace {

constexpr double kAxisUnitTol = 1e-9;
constexpr double kSpanTol = 1e-9;

std::string fmt_joint(std::size_t j, double deg, const JointLimit& lim) {
  std::ostringstream os;
  os << "joint '" << kJointNames[j] << "' angle " << deg << " deg outside ["
     << lim.min_deg << ", " << lim.max_deg << "]";
  return os.str();
}

Vec3 vec3_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError(std::string(what) + " must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(what) + " must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

}  // namespace

double JointLimit::clamp(double deg) const {
  return std::clamp(deg, min_deg, max_deg);
}

ArmModel::ArmModel(std::string name, std::vector<PartSpec> parts,
                   std::vector<JointSpec> joints,
                   std::vector<KeypointSpec> keypoints, int tip_keypoint)
    : name_(std::move(name)), tip_(tip_keypoint) {
  if (parts.empty()) throw ModelInvariantError("model has no parts");

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!index.emplace(parts[i].name, static_cast<int>(i)).second)
      throw ModelInvariantError("duplicate part '" + parts[i].name + "'");
  }

  // Order parts so every parent precedes its children; detects cycles and
  // multiple roots at the same time.
  std::vector<int> parent(parts.size(), -1);
  int roots = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].parent.empty()) {
      ++roots;
      continue;
    }
    auto it = index.find(parts[i].parent);
    if (it == index.end())
      throw ModelInvariantError("part '" + parts[i].name + "' has unknown parent '" +
                                parts[i].parent + "'");
    parent[i] = it->second;
  }
  if (roots != 1) throw ModelInvariantError("part graph must have exactly one root");

  std::vector<int> order;
  std::vector<int> state(parts.size(), 0);  // 0 new, 1 visiting, 2 placed
  auto place = [&](auto&& self, int i) -> void {
    if (state[i] == 2) return;
    if (state[i] == 1)
      throw ModelInvariantError("part graph has a cycle through '" + parts[i].name + "'");
    state[i] = 1;
    if (parent[i] >= 0) self(self, parent[i]);
    state[i] = 2;
    order.push_back(i);
  };
  for (std::size_t i = 0; i < parts.size(); ++i) place(place, static_cast<int>(i));

  std::vector<int> new_index(parts.size());
  for (std::size_t n = 0; n < order.size(); ++n) new_index[order[n]] = static_cast<int>(n);
  for (int old : order) {
    const PartSpec& spec = parts[old];
    if (std::abs(spec.axis.norm() - 1.0) > kAxisUnitTol)
      throw ModelInvariantError("axis of part '" + spec.name + "' is not a unit vector");
    Part p;
    p.name = spec.name;
    p.parent = parent[old] < 0 ? -1 : new_index[parent[old]];
    p.axis = spec.axis;
    p.pivot = spec.pivot;
    parts_.push_back(std::move(p));
  }
  index.clear();
  for (std::size_t i = 0; i < parts_.size(); ++i) index[parts_[i].name] = static_cast<int>(i);

  if (joints.size() != kNumJoints)
    throw ModelInvariantError("model must have exactly 4 actuated joints, got " +
                              std::to_string(joints.size()));
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const JointSpec& js = joints[j];
    if (js.name != kJointNames[j])
      throw ModelInvariantError("joint " + std::to_string(j) + " must be named '" +
                                std::string(kJointNames[j]) + "', got '" + js.name + "'");
    auto it = index.find(js.part);
    if (it == index.end())
      throw ModelInvariantError("joint '" + js.name + "' actuates unknown part '" +
                                js.part + "'");
    Part& p = parts_[it->second];
    if (p.parent < 0) throw ModelInvariantError("the root part cannot be actuated");
    if (p.joint >= 0)
      throw ModelInvariantError("part '" + p.name + "' is actuated by two joints");
    if (!(js.limit.min_deg <= 0.0 && js.limit.max_deg >= 0.0))
      throw ModelInvariantError("limits of joint '" + js.name + "' must contain 0");
    if (std::abs(js.limit.span() - kJointSpansDeg[j]) > kSpanTol)
      throw ModelInvariantError("joint '" + js.name + "' spans " +
                                std::to_string(js.limit.span()) + " deg, expected " +
                                std::to_string(kJointSpansDeg[j]));
    p.joint = static_cast<int>(j);
    limits_[j] = js.limit;
    joint_part_[j] = it->second;
  }

  if (keypoints.size() != kNumKeypoints)
    throw ModelInvariantError("model must have exactly 17 keypoints, got " +
                              std::to_string(keypoints.size()));
  std::array<bool, kNumKeypoints> seen{};
  for (const KeypointSpec& ks : keypoints) {
    if (ks.id < 0 || ks.id >= static_cast<int>(kNumKeypoints) || seen[ks.id])
      throw ModelInvariantError("keypoint ids must be a permutation of 0..16");
    seen[ks.id] = true;
    auto it = index.find(ks.part);
    if (it == index.end())
      throw ModelInvariantError("keypoint " + std::to_string(ks.id) +
                                " is owned by unknown part '" + ks.part + "'");
    if (!ks.rest.allFinite())
      throw ModelInvariantError("keypoint " + std::to_string(ks.id) + " is not finite");
    keypoints_[ks.id] = {ks.id, it->second, ks.rest};
    rest_.coords[ks.id] = ks.rest;

    unsigned mask = 0;
    for (int part = it->second; part >= 0; part = parts_[part].parent)
      if (parts_[part].joint >= 0) mask |= 1u << parts_[part].joint;
    moving_joints_[ks.id] = mask;
  }
  if (tip_ < 0 || tip_ >= static_cast<int>(kNumKeypoints))
    throw ModelInvariantError("tip_keypoint out of range");
}

bool ArmModel::within_limits(const JointAngles& q) const {
  for (std::size_t j = 0; j < kNumJoints; ++j)
    if (!limits_[j].contains(q[j])) return false;
  return true;
}

void ArmModel::check_limits(const JointAngles& q) const {
  for (std::size_t j = 0; j < kNumJoints; ++j)
    if (!limits_[j].contains(q[j])) throw JointLimitError(fmt_joint(j, q[j], limits_[j]));
}

JointAngles ArmModel::clamp(const JointAngles& q) const {
  JointAngles out;
  for (std::size_t j = 0; j < kNumJoints; ++j) out[j] = limits_[j].clamp(q[j]);
  return out;
}

ArmModel parse_arm_model(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("arm model: ") + e.what());
  }
  try {
    std::vector<ArmModel::PartSpec> parts;
    for (const auto& p : doc.at("parts")) {
      ArmModel::PartSpec s;
      s.name = p.at("name").get<std::string>();
      if (p.contains("parent") && !p.at("parent").is_null())
        s.parent = p.at("parent").get<std::string>();
      s.axis = vec3_from_json(p.at("axis"), "part axis");
      s.pivot = vec3_from_json(p.at("pivot"), "part pivot");
      parts.push_back(std::move(s));
    }
    std::vector<ArmModel::JointSpec> joints;
    for (const auto& j : doc.at("joints")) {
      ArmModel::JointSpec s;
      s.name = j.at("name").get<std::string>();
      s.part = j.at("part").get<std::string>();
      const auto& lim = j.at("limit_deg");
      if (!lim.is_array() || lim.size() != 2) throw ParseError("limit_deg must be [min, max]");
      s.limit = {lim[0].get<double>(), lim[1].get<double>()};
      if (s.limit.min_deg > s.limit.max_deg)
        throw ModelInvariantError("limit of joint '" + s.name + "' is inverted");
      joints.push_back(std::move(s));
    }
    std::vector<ArmModel::KeypointSpec> keypoints;
    for (const auto& k : doc.at("keypoints")) {
      ArmModel::KeypointSpec s;
      s.id = k.at("id").get<int>();
      s.part = k.at("part").get<std::string>();
      s.rest = vec3_from_json(k.at("rest"), "keypoint rest");
      keypoints.push_back(std::move(s));
    }
    return ArmModel(doc.at("name").get<std::string>(), std::move(parts), std::move(joints),
                    std::move(keypoints), doc.at("tip_keypoint").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("arm model: ") + e.what());
  }
}

ArmModel load_arm_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open arm model '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_arm_model(ss.str());
}

RigidTransform motor_transform(const ArmModel& model, std::size_t joint, double angle_deg) {
  const JointLimit& lim = model.limit(joint);
  if (!lim.contains(angle_deg)) throw JointLimitError(fmt_joint(joint, angle_deg, lim));
  if (angle_deg == 0.0) return RigidTransform::identity();
  const Part& part = model.parts()[model.joint_part(joint)];
  const Mat3 r = Eigen::AngleAxisd(angle_deg * kDegToRad, part.axis).toRotationMatrix();
  return {r, part.pivot - r * part.pivot};
}

KinematicState forward_state(const ArmModel& model, const JointAngles& q) {
  model.check_limits(q);
  const auto& parts = model.parts();
  std::vector<RigidTransform> world(parts.size());
  KinematicState s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Part& p = parts[i];
    const RigidTransform parent =
        p.parent < 0 ? RigidTransform::identity() : world[p.parent];
    if (p.joint >= 0) {
      s.axis_world[p.joint] = parent.rotation * p.axis;
      s.pivot_world[p.joint] = parent.apply(p.pivot);
      world[i] = parent.compose(motor_transform(model, p.joint, q[p.joint]));
    } else {
      world[i] = parent;
    }
  }
  for (const ModelKeypoint& kp : model.keypoints())
    s.keypoints.coords[kp.id] = world[kp.part].apply(kp.rest);
  return s;
}

Keypoints3D forward_kinematics(const ArmModel& model, const JointAngles& q) {
  return forward_state(model, q).keypoints;
}

Vec3 tip_position(const ArmModel& model, const JointAngles& q) {
  return forward_kinematics(model, q).coords[model.tip_keypoint()];
}

Vec3 keypoint_joint_derivative(const ArmModel& model, const KinematicState& s,
                               std::size_t k, std::size_t j) {
  if (!(model.moving_joints(k) & (1u << j))) return Vec3::Zero();
  return kDegToRad * s.axis_world[j].cross(s.keypoints.coords[k] - s.pivot_world[j]);
}

ReachBound reach_bound(const ArmModel& model) {
  const auto& parts = model.parts();
  // Joint pivots from the root down to the tip's part.
  std::vector<int> chain;
  for (int p = model.keypoints()[model.tip_keypoint()].part; p >= 0; p = parts[p].parent)
    if (parts[p].joint >= 0) chain.push_back(p);
  std::reverse(chain.begin(), chain.end());
  const Vec3 tip = model.rest_pose().coords[model.tip_keypoint()];
  if (chain.empty()) return {tip, 0.0};

  std::size_t first = 0;
  if (chain.size() > 1) {
    const Part& root_joint = parts[chain[0]];
    const Vec3 d = parts[chain[1]].pivot - root_joint.pivot;
    if (d.cross(root_joint.axis).norm() < 1e-9) first = 1;
  }
  ReachBound b{parts[chain[first]].pivot, 0.0};
  for (std::size_t i = first; i + 1 < chain.size(); ++i)
    b.radius += (parts[chain[i + 1]].pivot - parts[chain[i]].pivot).norm();
  b.radius += (tip - parts[chain.back()].pivot).norm();
  return b;
}

}  // namespace armpose
