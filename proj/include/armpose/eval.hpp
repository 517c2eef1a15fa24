#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "armpose/json_io.hpp"

namespace armpose {

/// Hits and eligible counts behind a PCK value, kept separate so datasets
/// aggregate by pooling rather than averaging per-image fractions.
struct PckCounts {
  std::array<int, kNumKeypoints> hits{};
  std::array<int, kNumKeypoints> eligible{};

  int total_hits() const;
  int total_eligible() const;
  /// Throws EmptyEvalError when nothing was eligible.
  double fraction() const;
  PckCounts& operator+=(const PckCounts& o);
};

/// max(width, height) of the bounding box of all 17 ground-truth keypoints.
double pck_normalizer(const Keypoints2D& gt);

/// A keypoint is a hit when |pred - gt| <= alpha * pck_normalizer(gt). With
/// visible_only, keypoints whose ground truth is not visible are skipped.
PckCounts pck_counts(const Keypoints2D& pred, const Keypoints2D& gt, double alpha = 0.2,
                     bool visible_only = false);
/// Fraction of eligible keypoints that are hits. Throws EmptyEvalError.
double pck(const Keypoints2D& pred, const Keypoints2D& gt, double alpha = 0.2,
           bool visible_only = false);

/// Geodesic angle between two rotations, degrees in [0, 180].
double rotation_error_deg(const Mat3& a, const Mat3& b);

struct PoseError {
  std::array<double, kNumJoints> joints{};  // absolute difference (deg)
  double joint_average = 0.0;
  double cam_rotation = 0.0;  // geodesic (deg)
  double cam_location = 0.0;  // cm
};

PoseError pose_error(const PoseVector& pred, const PoseVector& gt);

struct EvalOptions {
  double alpha = 0.2;
  bool visible_only = false;
  /// Ground-truth ids without a prediction are skipped instead of raising
  /// MissingPairError. Predictions without ground truth always raise.
  bool allow_missing_pred = false;
  unsigned workers = 0;
};

struct EvalReport {
  int n_samples = 0;
  double alpha = 0.2;
  double pck = 0.0;
  /// Per keypoint; empty when no image had the keypoint eligible.
  std::array<std::optional<double>, kNumKeypoints> pck_per_keypoint;
  /// Over keypoints visible in the ground truth; empty if none are.
  std::optional<double> pck_visible_only;
  /// Pose statistics over pairs where both sides carry a pose.
  int n_pose_samples = 0;
  std::array<double, kNumJoints> joint_errors{};
  double joint_error_average = 0.0;
  double cam_rotation_error = 0.0;
  double cam_location_error = 0.0;
  std::vector<std::string> missing_pred;
};

/// Pairs by image_id (both inputs in any order). Throws MissingPairError,
/// EmptyEvalError.
EvalReport evaluate(const std::vector<Annotation>& pred, const std::vector<Annotation>& gt,
                    const EvalOptions& opts = {});
/// As evaluate, reading the annotations in each directory (or its
/// annotations/ subdirectory when present).
EvalReport evaluate_dataset(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir, const EvalOptions& opts = {});

Json to_json(const EvalReport& r);
/// Human-readable summary in the layout of a results table.
std::string format_table(const EvalReport& r);

}  // namespace armpose
