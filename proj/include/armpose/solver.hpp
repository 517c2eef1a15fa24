#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "armpose/arm_model.hpp"
#include "armpose/camera.hpp"
#include "armpose/lm.hpp"
#include "armpose/sample_ranges.hpp"

namespace armpose {

using KeypointMask = std::array<bool, kNumKeypoints>;

enum class ProjectionMode { Perspective, WeakPerspective };

struct SolverOptions {
  /// Keypoints with confidence below this are treated as unknown.
  double confidence_threshold = 0.3;
  int max_iterations = 200;
  int restarts = 16;
  /// Relative loss change at which a descent run counts as converged.
  double convergence_tol = 1e-6;
  int min_inliers = 6;
  ProjectionMode mode = ProjectionMode::Perspective;
  std::uint64_t seed = 0;
  /// Camera rotation ranges initial guesses are drawn from.
  SampleRanges init_ranges;
  /// Extra first initialisation, e.g. the previous frame's solution.
  std::optional<PoseVector> initial_guess;
  /// Post-fit demotion: a confident keypoint whose reprojection error
  /// exceeds max(outlier_ratio * median inlier error, outlier_floor_px) is
  /// dropped and the pose refit. 0 disables.
  double outlier_ratio = 0.0;
  double outlier_floor_px = 2.0;
  /// With demotion on and this > 0, the multi-start search minimises the
  /// Cauchy loss c^2 log(1 + e^2 / c^2) of each point error e (c in pixels)
  /// so a few displaced peaks cannot drag the fit; demotion then works from
  /// that fit and the final pose is the plain least-squares refit over the
  /// inliers.
  double robust_scale_px = 0.0;

  void validate() const;
};

/// Weak-perspective camera: u = scale * (R z)_xy + offset.
struct WeakCamera {
  double scale = 1.0;
  Vec2 offset = Vec2::Zero();
};

struct SolveResult {
  PoseVector pose;
  Keypoints3D z;
  /// Reprojection of the fitted pose for all 17 keypoints, gated ones included.
  Keypoints2D y_refined;
  /// Final loss over inlier_mask (pixels^2).
  double residual = 0.0;
  KeypointMask inlier_mask{};
  int iterations_used = 0;
  int restarts_used = 0;
  /// Smallest loss over every initialisation that was tried.
  double best_initial_residual = 0.0;
  /// Set when the Jacobian at the solution is (numerically) rank deficient
  /// or the confident observations are collinear; the pose is then not
  /// unique.
  bool rank_deficient = false;
  std::optional<WeakCamera> weak;
};

/// Parameter vector layout used by the solver: cam_location (3),
/// cam_rotation (3), joints (4).
inline constexpr int kNumPoseParams = 10;
Eigen::VectorXd pose_to_params(const PoseVector& p);
PoseVector params_to_pose(const Eigen::VectorXd& x);

/// flag_k = confidence_k >= xi.
KeypointMask filter_keypoints(const Keypoints2D& y, double xi);
int count(const KeypointMask& mask);

/// Stacked (u, v) residuals projected - observed over masked keypoints in
/// index order.
Eigen::VectorXd reprojection_residuals(const PoseVector& p, const Keypoints2D& y,
                                       const KeypointMask& mask,
                                       const CameraIntrinsics& intr, const ArmModel& model);
/// Jacobian of reprojection_residuals with respect to pose_to_params(p).
Eigen::MatrixXd reprojection_jacobian(const PoseVector& p, const KeypointMask& mask,
                                      const CameraIntrinsics& intr, const ArmModel& model);
/// Sum of squared pixel distances over masked keypoints (pixels^2).
double reprojection_loss(const PoseVector& p, const Keypoints2D& y, const KeypointMask& mask,
                         const CameraIntrinsics& intr, const ArmModel& model);

/// One damped descent from `start`, exposing the loss trace. Joint limits
/// and the elevation interval act as box bounds.
LmResult refine_pose(const PoseVector& start, const Keypoints2D& y, const KeypointMask& mask,
                     const CameraIntrinsics& intr, const ArmModel& model,
                     const SolverOptions& opts);

/// Multi-start fit of the 10-DOF pose to the confident keypoints.
/// Throws InsufficientKeypointsError, NoConvergenceError, BehindCameraError.
SolveResult solve_pose(const Keypoints2D& y, const CameraIntrinsics& intr,
                       const ArmModel& model, const SolverOptions& opts = {});

/// Prior for the weak-perspective solve. scale <= 0 means estimate it from
/// the keypoint spread. `focal_hint` > 0 places the reported camera location
/// at depth focal_hint / scale; otherwise the camera lies in the plane
/// through the origin parallel to the image.
struct WeakPrior {
  double scale = 0.0;
  Vec2 principal = Vec2::Zero();
  double focal_hint = 0.0;
};

/// Weak-perspective counterpart of solve_pose for unknown intrinsics; the fit
/// is over (scale, camera rotation, image offset, joints).
SolveResult solve_pose_weak(const Keypoints2D& y, const WeakPrior& prior,
                            const ArmModel& model, const SolverOptions& opts = {});

/// Weak projection with an explicit camera (see WeakCamera).
Keypoints2D weak_project(const WeakCamera& cam, const Vec3& cam_rotation,
                         const Keypoints3D& z);

}  // namespace armpose
