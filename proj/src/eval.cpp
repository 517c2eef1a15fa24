#include "armpose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <Eigen/Geometry>

#include "armpose/errors.hpp"
#include "armpose/parallel.hpp"

namespace armpose {

int PckCounts::total_hits() const {
  int n = 0;
  for (int h : hits) n += h;
  return n;
}

int PckCounts::total_eligible() const {
  int n = 0;
  for (int e : eligible) n += e;
  return n;
}

double PckCounts::fraction() const {
  const int n = total_eligible();
  if (n == 0) throw EmptyEvalError("no eligible keypoints");
  return static_cast<double>(total_hits()) / n;
}

PckCounts& PckCounts::operator+=(const PckCounts& o) {
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    hits[k] += o.hits[k];
    eligible[k] += o.eligible[k];
  }
  return *this;
}

double pck_normalizer(const Keypoints2D& gt) {
  Vec2 lo = gt.points[0], hi = gt.points[0];
  for (const Vec2& p : gt.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).maxCoeff();
}

PckCounts pck_counts(const Keypoints2D& pred, const Keypoints2D& gt, double alpha,
                     bool visible_only) {
  if (!(alpha >= 0.0)) throw InvalidArgumentError("alpha must be >= 0");
  const double threshold = alpha * pck_normalizer(gt);
  PckCounts c;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (visible_only && !gt.visible[k]) continue;
    c.eligible[k] = 1;
    c.hits[k] = (pred.points[k] - gt.points[k]).norm() <= threshold ? 1 : 0;
  }
  return c;
}

double pck(const Keypoints2D& pred, const Keypoints2D& gt, double alpha, bool visible_only) {
  return pck_counts(pred, gt, alpha, visible_only).fraction();
}

double rotation_error_deg(const Mat3& a, const Mat3& b) {
  const Eigen::Quaterniond q(Mat3(a.transpose() * b));
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w())) * kRadToDeg;
}

PoseError pose_error(const PoseVector& pred, const PoseVector& gt) {
  PoseError e;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    e.joints[j] = std::abs(pred.joints[j] - gt.joints[j]);
    e.joint_average += e.joints[j] / kNumJoints;
  }
  e.cam_rotation = rotation_error_deg(camera_to_world_rotation(pred.cam_rotation),
                                      camera_to_world_rotation(gt.cam_rotation));
  e.cam_location = (pred.cam_location - gt.cam_location).norm();
  return e;
}

namespace {

struct PairScore {
  PckCounts all;
  PckCounts visible;
  std::optional<PoseError> pose;
};

std::filesystem::path annotation_root(const std::filesystem::path& dir) {
  if (std::filesystem::is_directory(dir / "annotations")) return dir / "annotations";
  return dir;
}

}  // namespace

EvalReport evaluate(const std::vector<Annotation>& pred, const std::vector<Annotation>& gt,
                    const EvalOptions& opts) {
  std::map<std::string, const Annotation*> gt_by_id, pred_by_id;
  for (const Annotation& a : gt) gt_by_id[a.image_id] = &a;
  for (const Annotation& a : pred) {
    if (!gt_by_id.contains(a.image_id))
      throw MissingPairError("no ground truth for prediction '" + a.image_id + "'");
    pred_by_id[a.image_id] = &a;
  }

  EvalReport report;
  report.alpha = opts.alpha;
  std::vector<std::pair<const Annotation*, const Annotation*>> pairs;
  for (const auto& [id, g] : gt_by_id) {
    const auto it = pred_by_id.find(id);
    if (it == pred_by_id.end()) {
      if (!opts.allow_missing_pred) throw MissingPairError("no prediction for '" + id + "'");
      report.missing_pred.push_back(id);
      continue;
    }
    pairs.emplace_back(it->second, g);
  }
  if (pairs.empty()) throw EmptyEvalError("no prediction/ground-truth pairs");

  std::vector<PairScore> scores(pairs.size());
  parallel_for(pairs.size(), opts.workers, [&](std::size_t i) {
    const auto [p, g] = pairs[i];
    PairScore& s = scores[i];
    s.all = pck_counts(p->keypoints2d, g->keypoints2d, opts.alpha, opts.visible_only);
    s.visible = pck_counts(p->keypoints2d, g->keypoints2d, opts.alpha, true);
    if (p->pose && g->pose) s.pose = pose_error(*p->pose, *g->pose);
  });

  PckCounts all, visible;
  for (const PairScore& s : scores) {
    all += s.all;
    visible += s.visible;
    if (!s.pose) continue;
    ++report.n_pose_samples;
    for (std::size_t j = 0; j < kNumJoints; ++j) report.joint_errors[j] += s.pose->joints[j];
    report.joint_error_average += s.pose->joint_average;
    report.cam_rotation_error += s.pose->cam_rotation;
    report.cam_location_error += s.pose->cam_location;
  }
  report.n_samples = static_cast<int>(pairs.size());
  report.pck = all.fraction();
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    if (all.eligible[k] > 0)
      report.pck_per_keypoint[k] = static_cast<double>(all.hits[k]) / all.eligible[k];
  if (visible.total_eligible() > 0) report.pck_visible_only = visible.fraction();
  if (report.n_pose_samples > 0) {
    const double n = report.n_pose_samples;
    for (double& e : report.joint_errors) e /= n;
    report.joint_error_average /= n;
    report.cam_rotation_error /= n;
    report.cam_location_error /= n;
  }
  return report;
}

EvalReport evaluate_dataset(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir, const EvalOptions& opts) {
  return evaluate(load_annotations(annotation_root(pred_dir)),
                  load_annotations(annotation_root(gt_dir)), opts);
}

Json to_json(const EvalReport& r) {
  Json per_kp = Json::array();
  for (const auto& v : r.pck_per_keypoint) per_kp.push_back(v ? Json(*v) : Json(nullptr));
  Json joints = Json::object();
  for (std::size_t j = 0; j < kNumJoints; ++j) joints[kJointNames[j]] = r.joint_errors[j];
  joints["average"] = r.joint_error_average;
  Json j = {{"n_samples", r.n_samples},
            {"alpha", r.alpha},
            {"pck", r.pck},
            {"pck_per_keypoint", per_kp},
            {"pck_visible_only", r.pck_visible_only ? Json(*r.pck_visible_only) : Json(nullptr)},
            {"n_pose_samples", r.n_pose_samples},
            {"missing_pred", r.missing_pred}};
  if (r.n_pose_samples > 0) {
    j["joint_errors"] = joints;
    j["cam_rotation_error"] = r.cam_rotation_error;
    j["cam_location_error"] = r.cam_location_error;
  } else {
    j["joint_errors"] = nullptr;
    j["cam_rotation_error"] = nullptr;
    j["cam_location_error"] = nullptr;
  }
  return j;
}

std::string format_table(const EvalReport& r) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "samples: %d\n", r.n_samples);
  s += buf;
  char visible[32] = "n/a";
  if (r.pck_visible_only) std::snprintf(visible, sizeof visible, "%.2f", 100.0 * *r.pck_visible_only);
  std::snprintf(buf, sizeof buf, "PCK@%.2f (%%)   all %.2f   visible %s\n", r.alpha, 100.0 * r.pck,
                visible);
  s += buf;
  if (r.n_pose_samples == 0) return s;
  s += "3D pose error (deg)   rotation     base    elbow    wrist  average\n";
  std::snprintf(buf, sizeof buf, "                      %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                r.joint_errors[0], r.joint_errors[1], r.joint_errors[2], r.joint_errors[3],
                r.joint_error_average);
  s += buf;
  std::snprintf(buf, sizeof buf, "camera                rotation %.2f deg   location %.2f cm\n",
                r.cam_rotation_error, r.cam_location_error);
  s += buf;
  return s;
}

}  // namespace armpose
