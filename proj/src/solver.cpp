#include "armpose/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "armpose/errors.hpp"
#include "armpose/rng.hpp"

namespace armpose {

namespace {

constexpr double kMaxElevation = 89.0;
constexpr double kMinWeakScale = 1e-6;

double wrap_deg(double a) { return std::remainder(a, 360.0); }

void project_box(Eigen::VectorXd& x, const ArmModel& model, int rot_offset, int joint_offset) {
  x[rot_offset + 0] = wrap_deg(x[rot_offset + 0]);
  x[rot_offset + 1] = std::clamp(x[rot_offset + 1], -kMaxElevation, kMaxElevation);
  x[rot_offset + 2] = wrap_deg(x[rot_offset + 2]);
  for (std::size_t j = 0; j < kNumJoints; ++j)
    x[joint_offset + j] = model.limit(j).clamp(x[joint_offset + j]);
}

JointAngles joints_from(const Eigen::VectorXd& x, int offset) {
  JointAngles q;
  for (std::size_t j = 0; j < kNumJoints; ++j) q[j] = x[offset + j];
  return q;
}

// Residuals projected - observed for masked keypoints; false if any of the 17
// keypoints falls behind the camera.
bool eval_perspective(const Eigen::VectorXd& x, const Keypoints2D& y, const KeypointMask& mask,
                      const CameraIntrinsics& intr, const ArmModel& model, Eigen::VectorXd& r,
                      Eigen::MatrixXd* jac) {
  const PoseVector p = params_to_pose(x);
  const KinematicState s = forward_state(model, p.joints);
  const Extrinsics e = pose_to_extrinsics(p);
  const int n = count(mask);
  r.resize(2 * n);
  std::array<Mat3, 3> dr;
  if (jac) {
    jac->setZero(2 * n, kNumPoseParams);
    dr = rotation_derivatives(p.cam_rotation);
  }
  int row = 0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const Vec3 d = s.keypoints.coords[k] - p.cam_location;
    const Vec3 pc = e.R * d;
    if (!(pc.z() > kMinDepth)) return false;
    if (!mask[k]) continue;
    const double iz = 1.0 / pc.z();
    r[row] = intr.fx * pc.x() * iz + intr.cx - y.points[k].x();
    r[row + 1] = intr.fy * pc.y() * iz + intr.cy - y.points[k].y();
    if (jac) {
      Eigen::Matrix<double, 2, 3> a;
      a << intr.fx * iz, 0.0, -intr.fx * pc.x() * iz * iz, 0.0, intr.fy * iz,
          -intr.fy * pc.y() * iz * iz;
      const Eigen::Matrix<double, 2, 3> ar = a * e.R;
      jac->block<2, 3>(row, 0) = -ar;
      for (int i = 0; i < 3; ++i) jac->block<2, 1>(row, 3 + i) = a * (dr[i] * d);
      for (std::size_t j = 0; j < kNumJoints; ++j)
        jac->block<2, 1>(row, 6 + j) = ar * keypoint_joint_derivative(model, s, k, j);
    }
    row += 2;
  }
  return true;
}

// Weak layout: scale, az, el, roll, offset u, offset v, joints.
bool eval_weak(const Eigen::VectorXd& x, const Keypoints2D& y, const KeypointMask& mask,
               const ArmModel& model, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
  const double scale = x[0];
  const Vec3 angles = x.segment<3>(1);
  const Vec2 offset = x.segment<2>(4);
  const KinematicState s = forward_state(model, joints_from(x, 6));
  const Mat3 rot = camera_to_world_rotation(angles).transpose();
  const int n = count(mask);
  r.resize(2 * n);
  std::array<Mat3, 3> dr;
  if (jac) {
    jac->setZero(2 * n, kNumPoseParams);
    dr = rotation_derivatives(angles);
  }
  int row = 0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (!mask[k]) continue;
    const Vec3& z = s.keypoints.coords[k];
    const Vec3 pc = rot * z;
    r.segment<2>(row) = scale * pc.head<2>() + offset - y.points[k];
    if (jac) {
      jac->block<2, 1>(row, 0) = pc.head<2>();
      for (int i = 0; i < 3; ++i) jac->block<2, 1>(row, 1 + i) = scale * (dr[i] * z).head<2>();
      jac->block<2, 2>(row, 4).setIdentity();
      for (std::size_t j = 0; j < kNumJoints; ++j)
        jac->block<2, 1>(row, 6 + j) =
            scale * (rot * keypoint_joint_derivative(model, s, k, j)).head<2>();
    }
    row += 2;
  }
  return true;
}

// Joint limits and the elevation interval as LM box bounds; azimuth and roll
// wrap instead.
LmOptions lm_options(const SolverOptions& opts, const ArmModel& model, int rot_offset,
                     int joint_offset) {
  LmOptions o;
  o.max_iterations = opts.max_iterations;
  o.relative_tol = opts.convergence_tol;
  const double inf = std::numeric_limits<double>::infinity();
  o.lower = Eigen::VectorXd::Constant(kNumPoseParams, -inf);
  o.upper = Eigen::VectorXd::Constant(kNumPoseParams, inf);
  o.lower[rot_offset + 1] = -kMaxElevation;
  o.upper[rot_offset + 1] = kMaxElevation;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    o.lower[joint_offset + j] = model.limit(j).min_deg;
    o.upper[joint_offset + j] = model.limit(j).max_deg;
  }
  return o;
}

struct Spread {
  Vec2 centre2d = Vec2::Zero();
  double radius2d = 0.0;
  Vec3 centre3d = Vec3::Zero();
  double radius3d = 0.0;
};

Spread spread(const Keypoints2D& y, const Keypoints3D& z, const KeypointMask& mask) {
  Spread s;
  const int n = count(mask);
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (!mask[k]) continue;
    s.centre2d += y.points[k] / n;
    s.centre3d += z.coords[k] / n;
  }
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (!mask[k]) continue;
    s.radius2d += (y.points[k] - s.centre2d).squaredNorm() / n;
    s.radius3d += (z.coords[k] - s.centre3d).squaredNorm() / n;
  }
  s.radius2d = std::sqrt(s.radius2d);
  s.radius3d = std::sqrt(s.radius3d);
  return s;
}

// Restart 0 uses the middle of the rotation ranges and the rest pose; the
// others draw rotation and joints uniformly.
std::pair<Vec3, JointAngles> draw_start(std::size_t restart, const ArmModel& model,
                                        const SolverOptions& opts) {
  const SampleRanges& rr = opts.init_ranges;
  if (restart == 0) return {Vec3(rr.cam_az.mid(), rr.cam_el.mid(), rr.cam_roll.mid()), {}};
  CounterRng rng(opts.seed, restart);
  Vec3 rot(rng.uniform(rr.cam_az.lo, rr.cam_az.hi), rng.uniform(rr.cam_el.lo, rr.cam_el.hi),
           rng.uniform(rr.cam_roll.lo, rr.cam_roll.hi));
  JointAngles q;
  for (std::size_t j = 0; j < kNumJoints; ++j)
    q[j] = rng.uniform(model.limit(j).min_deg, model.limit(j).max_deg);
  return {rot, q};
}

PoseVector perspective_start(std::size_t restart, const Keypoints2D& y, const KeypointMask& mask,
                             const CameraIntrinsics& intr, const ArmModel& model,
                             const SolverOptions& opts) {
  auto [rot, q] = draw_start(restart, model, opts);
  PoseVector p;
  p.cam_rotation = rot;
  p.joints = q;
  const Spread sp = spread(y, forward_kinematics(model, q), mask);
  const double f = 0.5 * (intr.fx + intr.fy);
  double depth = sp.radius2d > 1e-6 ? f * sp.radius3d / sp.radius2d : 60.0;
  depth = std::clamp(depth, 5.0, 1e4);
  const Vec3 ray((sp.centre2d.x() - intr.cx) / intr.fx, (sp.centre2d.y() - intr.cy) / intr.fy,
                 1.0);
  const Mat3 r = camera_to_world_rotation(rot).transpose();
  p.cam_location = sp.centre3d - r.transpose() * (depth * ray);
  return p;
}

Eigen::VectorXd weak_start(std::size_t restart, const Keypoints2D& y, const KeypointMask& mask,
                           const WeakPrior& prior, const ArmModel& model,
                           const SolverOptions& opts) {
  auto [rot, q] = draw_start(restart, model, opts);
  const Keypoints3D z = forward_kinematics(model, q);
  const Spread sp = spread(y, z, mask);
  double scale = prior.scale;
  if (!(scale > 0.0)) scale = sp.radius3d > 1e-9 ? sp.radius2d / sp.radius3d : 1.0;
  scale = std::max(scale, kMinWeakScale);
  const Mat3 r = camera_to_world_rotation(rot).transpose();
  const Vec2 offset = sp.centre2d - scale * (r * sp.centre3d).head<2>();
  Eigen::VectorXd x(kNumPoseParams);
  x << scale, rot, offset, q[0], q[1], q[2], q[3];
  return x;
}

// Observed points on one line cannot pin down the pose.
bool collinear(const Keypoints2D& y, const KeypointMask& mask) {
  Vec2 centre = Vec2::Zero();
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    if (mask[k]) centre += y.points[k] / count(mask);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    if (mask[k]) cov += (y.points[k] - centre) * (y.points[k] - centre).transpose();
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  return ev[0] <= 1e-12 * std::max(ev[1], 1e-300);
}

std::vector<double> point_errors(const Eigen::VectorXd& r) {
  std::vector<double> e(r.size() / 2);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = r.segment<2>(2 * i).norm();
  return e;
}

// Rescales each point's 2-residual r to g(s) r with g(s)^2 s = rho(s), s = |r|^2,
// rho the Cauchy loss, so the squared norm of the output is the robust cost.
ResidualFn cauchy(ResidualFn fn, double c) {
  return [fn = std::move(fn), c2 = c * c](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                          Eigen::MatrixXd* jac) {
    if (!fn(x, r, jac)) return false;
    for (Eigen::Index i = 0; i + 1 < r.size(); i += 2) {
      const Vec2 e = r.segment<2>(i);
      const double s = e.squaredNorm();
      double g, dg;  // g(s) and dg/ds
      if (s < 1e-8 * c2) {
        g = 1.0 - s / (4.0 * c2);
        dg = -1.0 / (4.0 * c2);
      } else {
        const double rho = c2 * std::log1p(s / c2);
        const double drho = 1.0 / (1.0 + s / c2);
        g = std::sqrt(rho / s);
        dg = (drho * s - rho) / (2.0 * s * s * g);
      }
      r.segment<2>(i) = g * e;
      if (jac) {
        const Eigen::MatrixXd rows = jac->middleRows(i, 2);
        jac->middleRows(i, 2) = g * rows + (2.0 * dg) * e * (e.transpose() * rows);
      }
    }
    return true;
  };
}

struct FitOutcome {
  LmResult best;
  KeypointMask mask{};
  int restarts_used = 0;
  double best_initial = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

using MaskedFn = std::function<ResidualFn(const KeypointMask&)>;

// Runs every start, keeps the lowest loss (ties go to the earlier start),
// then applies the optional outlier demotion with refits.
FitOutcome multi_start(const std::vector<Eigen::VectorXd>& starts, const KeypointMask& mask,
                       const MaskedFn& make_fn, const ProjectFn& proj, const LmOptions& lm_opts,
                       const SolverOptions& opts) {
  FitOutcome out;
  out.mask = mask;
  const bool robust = opts.outlier_ratio > 0.0 && opts.robust_scale_px > 0.0;
  const ResidualFn plain = make_fn(mask);
  const ResidualFn fn = robust ? cauchy(plain, opts.robust_scale_px) : plain;
  bool any_valid = false, any_converged = false;
  for (const Eigen::VectorXd& x0 : starts) {
    LmResult run = levenberg_marquardt(fn, x0, lm_opts, proj);
    ++out.restarts_used;
    if (run.stop == LmStop::Infeasible) continue;
    double init = run.initial_loss;
    if (robust) {
      // Report the plain loss at the (projected) start.
      Eigen::VectorXd x = x0, r;
      if (proj) proj(x);
      if (lm_opts.lower.size() == x.size()) x = x.cwiseMax(lm_opts.lower);
      if (lm_opts.upper.size() == x.size()) x = x.cwiseMin(lm_opts.upper);
      init = plain(x, r, nullptr) ? r.squaredNorm() : init;
    }
    out.best_initial = std::min(out.best_initial, init);
    any_converged = any_converged || run.converged();
    if (!any_valid || run.loss < out.best.loss) out.best = std::move(run);
    any_valid = true;
  }
  if (!any_valid) throw BehindCameraError("no initialisation yields a valid projection");
  if (!any_converged)
    throw NoConvergenceError("no restart converged within " +
                             std::to_string(opts.max_iterations) + " iterations");
  out.iterations = out.best.iterations;

  if (opts.outlier_ratio <= 0.0) return out;
  bool refit_needed = robust;
  while (count(out.mask) > opts.min_inliers) {
    Eigen::VectorXd r;
    make_fn(out.mask)(out.best.x, r, nullptr);
    std::vector<double> errs = point_errors(r);
    std::vector<double> sorted = errs;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0) {
      const double lower = *std::max_element(sorted.begin(), sorted.begin() + sorted.size() / 2);
      median = 0.5 * (median + lower);
    }
    const double cutoff = std::max(opts.outlier_ratio * median, opts.outlier_floor_px);
    const auto worst = std::max_element(errs.begin(), errs.end());
    if (*worst <= cutoff) break;
    int idx = static_cast<int>(worst - errs.begin());
    for (std::size_t k = 0; k < kNumKeypoints; ++k) {
      if (!out.mask[k]) continue;
      if (idx-- == 0) {
        out.mask[k] = false;
        break;
      }
    }
    LmResult refit = levenberg_marquardt(make_fn(out.mask), out.best.x, lm_opts, proj);
    out.iterations += refit.iterations;
    out.best = std::move(refit);
    refit_needed = false;
  }
  if (refit_needed) {
    LmResult refit = levenberg_marquardt(make_fn(out.mask), out.best.x, lm_opts, proj);
    out.iterations += refit.iterations;
    out.best = std::move(refit);
  }
  return out;
}

}  // namespace

void SolverOptions::validate() const {
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
    throw InvalidArgumentError("confidence threshold must lie in [0, 1]");
  if (min_inliers < 6) throw InvalidArgumentError("min_inliers must be >= 6");
  if (restarts < 1) throw InvalidArgumentError("restarts must be >= 1");
  if (max_iterations < 1) throw InvalidArgumentError("max_iterations must be >= 1");
  if (outlier_ratio < 0.0) throw InvalidArgumentError("outlier_ratio must be >= 0");
  if (!(robust_scale_px >= 0.0)) throw InvalidArgumentError("robust_scale_px must be >= 0");
}

Eigen::VectorXd pose_to_params(const PoseVector& p) {
  Eigen::VectorXd x(kNumPoseParams);
  x << p.cam_location, p.cam_rotation, p.joints[0], p.joints[1], p.joints[2], p.joints[3];
  return x;
}

PoseVector params_to_pose(const Eigen::VectorXd& x) {
  PoseVector p;
  p.cam_location = x.segment<3>(0);
  p.cam_rotation = x.segment<3>(3);
  p.joints = joints_from(x, 6);
  return p;
}

KeypointMask filter_keypoints(const Keypoints2D& y, double xi) {
  KeypointMask m{};
  for (std::size_t k = 0; k < kNumKeypoints; ++k) m[k] = y.confidence[k] >= xi;
  return m;
}

int count(const KeypointMask& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), true));
}

Eigen::VectorXd reprojection_residuals(const PoseVector& p, const Keypoints2D& y,
                                       const KeypointMask& mask, const CameraIntrinsics& intr,
                                       const ArmModel& model) {
  model.check_limits(p.joints);
  const ProjectionResult pr = project(intr, p, forward_kinematics(model, p.joints));
  Eigen::VectorXd r(2 * count(mask));
  int row = 0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (!mask[k]) continue;
    r.segment<2>(row) = pr.points2d.points[k] - y.points[k];
    row += 2;
  }
  return r;
}

Eigen::MatrixXd reprojection_jacobian(const PoseVector& p, const KeypointMask& mask,
                                      const CameraIntrinsics& intr, const ArmModel& model) {
  Keypoints2D dummy;
  for (auto& pt : dummy.points) pt.setZero();
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  if (!eval_perspective(pose_to_params(p), dummy, mask, intr, model, r, &jac))
    throw BehindCameraError("pose places a keypoint behind the camera");
  return jac;
}

double reprojection_loss(const PoseVector& p, const Keypoints2D& y, const KeypointMask& mask,
                         const CameraIntrinsics& intr, const ArmModel& model) {
  if (count(mask) == 0) throw InvalidArgumentError("reprojection loss needs a non-empty mask");
  return reprojection_residuals(p, y, mask, intr, model).squaredNorm();
}

LmResult refine_pose(const PoseVector& start, const Keypoints2D& y, const KeypointMask& mask,
                     const CameraIntrinsics& intr, const ArmModel& model,
                     const SolverOptions& opts) {
  const ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
    return eval_perspective(x, y, mask, intr, model, r, j);
  };
  const ProjectFn proj = [&](Eigen::VectorXd& x) { project_box(x, model, 3, 6); };
  return levenberg_marquardt(fn, pose_to_params(start), lm_options(opts, model, 3, 6), proj);
}

SolveResult solve_pose(const Keypoints2D& y, const CameraIntrinsics& intr, const ArmModel& model,
                       const SolverOptions& opts) {
  if (opts.mode == ProjectionMode::WeakPerspective) {
    WeakPrior prior;
    prior.principal = Vec2(intr.cx, intr.cy);
    prior.focal_hint = 0.5 * (intr.fx + intr.fy);
    return solve_pose_weak(y, prior, model, opts);
  }
  opts.validate();
  intr.validate();
  const KeypointMask mask = filter_keypoints(y, opts.confidence_threshold);
  if (count(mask) < opts.min_inliers)
    throw InsufficientKeypointsError(std::to_string(count(mask)) +
                                     " keypoints pass the confidence threshold, need " +
                                     std::to_string(opts.min_inliers));

  std::vector<Eigen::VectorXd> starts;
  if (opts.initial_guess) {
    PoseVector g = *opts.initial_guess;
    g.joints = model.clamp(g.joints);
    starts.push_back(pose_to_params(g));
  }
  for (int i = 0; i < opts.restarts; ++i)
    starts.push_back(pose_to_params(perspective_start(i, y, mask, intr, model, opts)));

  const MaskedFn make_fn = [&](const KeypointMask& m) -> ResidualFn {
    return [&y, &intr, &model, m](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                  Eigen::MatrixXd* j) {
      return eval_perspective(x, y, m, intr, model, r, j);
    };
  };
  const ProjectFn proj = [&](Eigen::VectorXd& x) { project_box(x, model, 3, 6); };
  FitOutcome fit = multi_start(starts, mask, make_fn, proj, lm_options(opts, model, 3, 6), opts);

  SolveResult res;
  res.pose = params_to_pose(fit.best.x);
  res.z = forward_kinematics(model, res.pose.joints);
  res.y_refined = project(intr, res.pose, res.z).points2d;
  res.residual = fit.best.loss;
  res.inlier_mask = fit.mask;
  res.iterations_used = fit.iterations;
  res.restarts_used = fit.restarts_used;
  res.best_initial_residual = fit.best_initial;
  res.rank_deficient = rank_deficient(reprojection_jacobian(res.pose, fit.mask, intr, model)) ||
                       collinear(y, fit.mask);
  return res;
}

Keypoints2D weak_project(const WeakCamera& cam, const Vec3& cam_rotation, const Keypoints3D& z) {
  const Mat3 r = camera_to_world_rotation(cam_rotation).transpose();
  Keypoints2D y;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    y.points[k] = cam.scale * (r * z.coords[k]).head<2>() + cam.offset;
    y.confidence[k] = 1.0;
    y.visible[k] = true;
  }
  return y;
}

SolveResult solve_pose_weak(const Keypoints2D& y, const WeakPrior& prior, const ArmModel& model,
                            const SolverOptions& opts) {
  opts.validate();
  const KeypointMask mask = filter_keypoints(y, opts.confidence_threshold);
  if (count(mask) < opts.min_inliers)
    throw InsufficientKeypointsError(std::to_string(count(mask)) +
                                     " keypoints pass the confidence threshold, need " +
                                     std::to_string(opts.min_inliers));

  std::vector<Eigen::VectorXd> starts;
  if (opts.initial_guess) {
    // Reuse rotation and joints of the guess; scale and offset come from the data.
    Eigen::VectorXd x = weak_start(0, y, mask, prior, model, opts);
    const Vec3 rot = opts.initial_guess->cam_rotation;
    const JointAngles q = model.clamp(opts.initial_guess->joints);
    const Spread sp = spread(y, forward_kinematics(model, q), mask);
    const Mat3 r = camera_to_world_rotation(rot).transpose();
    x.segment<3>(1) = rot;
    x.segment<2>(4) = sp.centre2d - x[0] * (r * sp.centre3d).head<2>();
    for (std::size_t j = 0; j < kNumJoints; ++j) x[6 + j] = q[j];
    starts.push_back(x);
  }
  for (int i = 0; i < opts.restarts; ++i)
    starts.push_back(weak_start(i, y, mask, prior, model, opts));

  const MaskedFn make_fn = [&](const KeypointMask& m) -> ResidualFn {
    return [&y, &model, m](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* j) {
      return eval_weak(x, y, m, model, r, j);
    };
  };
  const ProjectFn proj = [&](Eigen::VectorXd& x) {
    x[0] = std::max(x[0], kMinWeakScale);
    project_box(x, model, 1, 6);
  };
  LmOptions lm_opts = lm_options(opts, model, 1, 6);
  lm_opts.lower[0] = kMinWeakScale;
  FitOutcome fit = multi_start(starts, mask, make_fn, proj, lm_opts, opts);

  const Eigen::VectorXd& x = fit.best.x;
  WeakCamera cam{x[0], x.segment<2>(4)};
  SolveResult res;
  res.pose.cam_rotation = x.segment<3>(1);
  res.pose.joints = joints_from(x, 6);
  const Mat3 r = camera_to_world_rotation(res.pose.cam_rotation).transpose();
  const Vec2 in_plane = (prior.principal - cam.offset) / cam.scale;
  const double depth = prior.focal_hint > 0.0 ? prior.focal_hint / cam.scale : 0.0;
  res.pose.cam_location = r.transpose() * Vec3(in_plane.x(), in_plane.y(), -depth);
  res.z = forward_kinematics(model, res.pose.joints);
  res.y_refined = weak_project(cam, res.pose.cam_rotation, res.z);
  res.residual = fit.best.loss;
  res.inlier_mask = fit.mask;
  res.iterations_used = fit.iterations;
  res.restarts_used = fit.restarts_used;
  res.best_initial_residual = fit.best_initial;
  Eigen::VectorXd rr;
  Eigen::MatrixXd jac;
  eval_weak(x, y, fit.mask, model, rr, &jac);
  res.rank_deficient = rank_deficient(jac) || collinear(y, fit.mask);
  res.weak = cam;
  return res;
}

}  // namespace armpose
