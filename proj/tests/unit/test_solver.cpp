#include <doctest.h>

#include "armpose/errors.hpp"
#include "armpose/solver.hpp"
#include "armpose/synth.hpp"
#include "helpers.hpp"

using namespace armpose;

namespace {

Scene scene(std::uint64_t seed, const SampleRanges& r = {}) {
  return sample_scene(seed, r, test::model(), CameraIntrinsics{});
}

double max_joint_error(const JointAngles& a, const JointAngles& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

KeypointMask all_true() {
  KeypointMask m;
  m.fill(true);
  return m;
}

}  // namespace

TEST_CASE("reprojection loss") {
  const CameraIntrinsics intr;
  const Scene s = scene(1);
  CHECK(reprojection_loss(s.pose, s.y, all_true(), intr, test::model()) < 1e-12);

  Keypoints2D moved = s.y;
  moved.points[5].x() += 3.0;
  CHECK(reprojection_loss(s.pose, moved, all_true(), intr, test::model()) ==
        doctest::Approx(9.0).epsilon(1e-9));

  CounterRng rng(31);
  for (int i = 0; i < 20; ++i) {
    Keypoints2D y = s.y;
    const std::size_t k = static_cast<std::size_t>(rng.uniform(0, 17));
    const Vec2 d(rng.normal(0, 5), rng.normal(0, 5));
    y.points[k] += d;
    CHECK(reprojection_loss(s.pose, y, all_true(), intr, test::model()) ==
          doctest::Approx(d.squaredNorm()).epsilon(1e-9));
    // Masked-out points contribute nothing.
    KeypointMask m = all_true();
    m[k] = false;
    CHECK(reprojection_loss(s.pose, y, m, intr, test::model()) < 1e-12);
  }
}

TEST_CASE("confidence gate") {
  Keypoints2D y;
  y.confidence.fill(0.5);
  y.confidence[0] = 0.9;
  y.confidence[1] = 0.1;
  KeypointMask m = filter_keypoints(y, 0.3);
  CHECK(m[0]);
  CHECK_FALSE(m[1]);
  CHECK(count(m) == 16);
  CHECK(count(filter_keypoints(y, 0.0)) == 17);
  y.confidence.fill(0.3);
  CHECK(count(filter_keypoints(y, 0.3)) == 17);

  CounterRng rng(32);
  for (int i = 0; i < 100; ++i) {
    for (double& c : y.confidence) c = rng.uniform();
    const double hi = rng.uniform(), lo = rng.uniform(0.0, hi);
    const KeypointMask a = filter_keypoints(y, hi), b = filter_keypoints(y, lo);
    for (std::size_t k = 0; k < kNumKeypoints; ++k) CHECK((!a[k] || b[k]));
  }
}

TEST_CASE("analytic Jacobian matches central differences") {
  const CameraIntrinsics intr;
  CounterRng rng(33);
  for (int i = 0; i < 100; ++i) {
    Scene s = scene(CounterRng::derive(33, i));
    PoseVector& p = s.pose;
    for (std::size_t j = 0; j < kNumJoints; ++j)
      p.joints[j] = std::clamp(p.joints[j], test::model().limit(j).min_deg + 1e-3,
                               test::model().limit(j).max_deg - 1e-3);
    const Eigen::MatrixXd jac = reprojection_jacobian(p, all_true(), intr, test::model());
    Eigen::MatrixXd fd(jac.rows(), jac.cols());
    const Eigen::VectorXd x = pose_to_params(p);
    for (int c = 0; c < kNumPoseParams; ++c) {
      Eigen::VectorXd a = x, b = x;
      a[c] += 1e-5;
      b[c] -= 1e-5;
      fd.col(c) = (reprojection_residuals(params_to_pose(a), s.y, all_true(), intr, test::model()) -
                   reprojection_residuals(params_to_pose(b), s.y, all_true(), intr, test::model())) /
                  2e-5;
    }
    CHECK((jac - fd).norm() / fd.norm() < 1e-4);
  }
}

TEST_CASE("noiseless round trip recovers the pose") {
  const CameraIntrinsics intr;
  for (int i = 0; i < 10; ++i) {
    const Scene s = scene(CounterRng::derive(34, i));
    const SolveResult r = solve_pose(s.y, intr, test::model());
    CHECK(max_joint_error(r.pose.joints, s.pose.joints) < 0.1);
    CHECK((r.pose.cam_location - s.pose.cam_location).norm() < 0.1);
    CHECK(r.residual < 1e-6);
    CHECK(r.residual <= r.best_initial_residual);
    CHECK(r.restarts_used == 16);
    CHECK(count(r.inlier_mask) == 17);
    CHECK(test::model().within_limits(r.pose.joints));
    // The refined keypoints are exactly the reprojection of the pose.
    CHECK(projection_consistency_residual(intr, r.pose, r.z, r.y_refined) < 1e-9);
    const Keypoints2D again = project(intr, r.pose, forward_kinematics(test::model(), r.pose.joints)).points2d;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) CHECK(again.points[k] == r.y_refined.points[k]);
  }
}

TEST_CASE("gated keypoints are filled in by the model") {
  const CameraIntrinsics intr;
  const Scene s = scene(35);
  Keypoints2D y = s.y;
  for (std::size_t k : {2u, 9u, 14u}) {
    y.confidence[k] = 0.1;
    y.points[k] += Vec2(40.0, -25.0);  // ignored
  }
  const SolveResult r = solve_pose(y, intr, test::model());
  CHECK_FALSE(r.inlier_mask[2]);
  for (std::size_t k : {2u, 9u, 14u}) CHECK((r.y_refined.points[k] - s.y.points[k]).norm() < 0.05);
}

TEST_CASE("too few confident keypoints") {
  Keypoints2D y = scene(36).y;
  y.confidence.fill(0.0);
  for (std::size_t k = 0; k < 4; ++k) y.confidence[k] = 1.0;
  CHECK_THROWS_AS(solve_pose(y, CameraIntrinsics{}, test::model()), InsufficientKeypointsError);
  SolverOptions bad;
  bad.min_inliers = 5;
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
}

TEST_CASE("solving is deterministic") {
  const Scene s = scene(37);
  Keypoints2D y = s.y;
  CounterRng rng(37);
  for (auto& p : y.points) p += Vec2(rng.normal(0, 2), rng.normal(0, 2));
  const SolveResult a = solve_pose(y, CameraIntrinsics{}, test::model());
  const SolveResult b = solve_pose(y, CameraIntrinsics{}, test::model());
  CHECK(pose_to_params(a.pose) == pose_to_params(b.pose));
  CHECK(a.residual == b.residual);
  CHECK(a.iterations_used == b.iterations_used);
}

TEST_CASE("robust demotion drops a displaced keypoint") {
  const CameraIntrinsics intr;
  const Scene s = scene(38);
  Keypoints2D y = s.y;
  CounterRng rng(38);
  for (auto& p : y.points) p += Vec2(rng.normal(0, 0.5), rng.normal(0, 0.5));
  y.points[12] += Vec2(30.0, 10.0);
  SolverOptions o;
  o.outlier_ratio = 3.0;
  const SolveResult r = solve_pose(y, intr, test::model(), o);
  CHECK_FALSE(r.inlier_mask[12]);
  CHECK((r.y_refined.points[12] - s.y.points[12]).norm() < 3.0);
}

TEST_CASE("robust screening with several displaced keypoints") {
  const CameraIntrinsics intr;
  SampleRanges ranges;
  ranges.min_in_image = 17;
  for (int i = 0; i < 10; ++i) {
    const Scene s = scene(CounterRng::derive(39, i), ranges);
    Keypoints2D y = s.y;
    CounterRng rng(CounterRng::derive(40, i));
    for (auto& p : y.points) p += Vec2(rng.normal(0, 0.5), rng.normal(0, 0.5));
    const std::array<std::size_t, 4> bad{1, 6, 11, 15};
    for (std::size_t k : bad) {
      const double a = rng.uniform(0.0, 2.0 * M_PI);
      y.points[k] += 25.0 * Vec2(std::cos(a), std::sin(a));
    }
    SolverOptions o;
    o.outlier_ratio = 3.0;
    o.robust_scale_px = 4.0;
    const SolveResult r = solve_pose(y, intr, test::model(), o);
    for (std::size_t k : bad) CHECK_FALSE(r.inlier_mask[k]);
    // The reported residual is the plain squared loss over the inliers.
    CHECK(r.residual ==
          doctest::Approx(reprojection_loss(r.pose, y, r.inlier_mask, intr, test::model())));
    double refined = 0.0, observed = 0.0;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      refined += (r.y_refined.points[k] - s.y.points[k]).norm();
      observed += (y.points[k] - s.y.points[k]).norm();
    }
    CHECK(refined < observed);
  }
  SolverOptions bad;
  bad.robust_scale_px = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
}

TEST_CASE("tracking from a previous solution") {
  const CameraIntrinsics intr;
  const Scene s = scene(39);
  SolverOptions o;
  o.restarts = 1;
  o.initial_guess = s.pose;
  o.initial_guess->joints[2] = std::clamp(s.pose.joints[2] + 5.0, -150.0, 150.0);
  const SolveResult r = solve_pose(s.y, intr, test::model(), o);
  CHECK(max_joint_error(r.pose.joints, s.pose.joints) < 0.1);
  CHECK(r.restarts_used == 2);
}

TEST_CASE("weak perspective round trip") {
  const Vec2 principal(128.0, 128.0);
  for (int i = 0; i < 5; ++i) {
    CounterRng rng(40, i);
    PoseVector p;
    p.cam_rotation = Vec3(rng.uniform(0, 45), rng.uniform(30, 60), rng.uniform(-30, 30));
    p.joints = test::random_joints(rng);
    const double scale = rng.uniform(3.0, 6.0);
    const Keypoints3D z = forward_kinematics(test::model(), p.joints);
    const Keypoints2D y = weak_project(scale, p, z, principal);
    const SolveResult r = solve_pose_weak(y, {0.0, principal, 0.0}, test::model());
    REQUIRE(r.weak);
    CHECK(std::abs(r.weak->scale / scale - 1.0) < 0.005);
    CHECK(max_joint_error(r.pose.joints, p.joints) < 0.5);
    CHECK((r.pose.cam_rotation - p.cam_rotation).cwiseAbs().maxCoeff() < 0.5);
    CHECK(r.residual < 1e-6);
  }
}

TEST_CASE("distant perspective views solved weakly") {
  SampleRanges far;
  far.cam_distance = {400.0, 500.0};
  CameraIntrinsics intr;
  intr.fx = intr.fy = 2400.0;  // keeps the arm at a usable pixel size
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Scene s = sample_scene(CounterRng::derive(41, i), far, test::model(), intr);
    SolverOptions o;
    o.mode = ProjectionMode::WeakPerspective;
    const SolveResult r = solve_pose(s.y, intr, test::model(), o);
    double mean = 0.0;
    for (std::size_t j = 0; j < kNumJoints; ++j)
      mean += std::abs(r.pose.joints[j] - s.pose.joints[j]) / kNumJoints;
    worst = std::max(worst, mean);
  }
  CHECK(worst < 3.0);
}

TEST_CASE("collinear keypoints are flagged") {
  Keypoints2D y;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    y.points[k] = Vec2(60.0 + 8.0 * k, 128.0);
    y.confidence[k] = 1.0;
    y.visible[k] = true;
  }
  bool flagged = false;
  try {
    const SolveResult r = solve_pose_weak(y, {0.0, Vec2(128.0, 128.0), 0.0}, test::model());
    flagged = r.rank_deficient;
  } catch (const NoConvergenceError&) {
    flagged = true;
  }
  CHECK(flagged);
}
