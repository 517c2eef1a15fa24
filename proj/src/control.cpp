#include "armpose/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "armpose/errors.hpp"
#include "armpose/log.hpp"
#include "armpose/parallel.hpp"
#include "armpose/rng.hpp"

namespace armpose {

void SimConfig::validate() const {
  if (!(max_speed_deg > 0.0)) throw InvalidArgumentError("max_speed_deg must be positive");
  if (!(actuation_noise >= 0.0 && actuation_noise < 1.0))
    throw InvalidArgumentError("actuation_noise must lie in [0, 1)");
}

Action Action::clamped(const std::array<double, kNumJoints>& c) {
  Action a;
  for (std::size_t j = 0; j < kNumJoints; ++j)
    a.command[j] = std::isnan(c[j]) ? 0.0 : std::clamp(c[j], -1.0, 1.0);
  return a;
}

bool in_collision(const ArmModel& model, const JointAngles& q, double margin) {
  for (const Vec3& p : forward_kinematics(model, q).coords)
    if (p.z() < margin) return true;
  return false;
}

SimState sim_step(const ArmModel& model, const SimState& state, const Action& a,
                  std::uint64_t noise_seed, const SimConfig& cfg) {
  cfg.validate();
  const Action cmd = Action::clamped(a.command);
  CounterRng rng(noise_seed, static_cast<std::uint64_t>(state.step_count));
  SimState next = state;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const double eps = rng.uniform(-cfg.actuation_noise, cfg.actuation_noise);
    const double move = cmd.command[j] * cfg.max_speed_deg * (1.0 + eps);
    next.joints[j] = model.limit(j).clamp(state.joints[j] + move);
  }
  ++next.step_count;
  next.collided = state.collided || in_collision(model, next.joints);
  return next;
}

void PidGains::validate() const {
  if (!(std::isfinite(kp) && kp > 0.0)) throw InvalidArgumentError("kp must be positive");
  if (!(std::isfinite(ki) && std::isfinite(kd)))
    throw InvalidArgumentError("PID gains must be finite");
}

std::pair<Action, PidState> pid_pose_maker(const JointAngles& current, const JointAngles& target,
                                           const PidGains& gains, const PidState& state) {
  gains.validate();
  PidState next = state;
  std::array<double, kNumJoints> u{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const double e = target[j] - current[j];
    next.integral[j] =
        std::clamp(state.integral[j] + e, -kPidIntegralLimit, kPidIntegralLimit);
    const double de = state.primed ? e - state.prev_error[j] : 0.0;
    u[j] = gains.kp * e + gains.ki * next.integral[j] + gains.kd * de;
    next.prev_error[j] = e;
  }
  next.primed = true;
  return {Action::clamped(u), next};
}

void TaskSpec::validate() const {
  if (!(success_radius > 0.0)) throw InvalidArgumentError("success_radius must be positive");
  if (max_steps < 1) throw InvalidArgumentError("max_steps must be >= 1");
  if (!target.allFinite()) throw InvalidArgumentError("target must be finite");
}

double TaskSpec::distance(const Vec3& tip) const {
  const Vec3 d = tip - target;
  return measure == DistanceMeasure::Horizontal ? d.head<2>().norm() : d.norm();
}

std::vector<TaskSpec> reach_target_grid() {
  std::vector<TaskSpec> tasks;
  for (double r : {15.0, 20.0, 25.0})
    for (double a : {-45.0, 0.0, 45.0}) {
      TaskSpec t;
      t.target = Vec3(r * std::cos(a * kDegToRad), r * std::sin(a * kDegToRad), 10.0);
      tasks.push_back(t);
    }
  return tasks;
}

void PlannerOptions::validate() const {
  if (restarts < 0) throw InvalidArgumentError("planner restarts must be >= 0");
  if (max_waypoints < 1) throw InvalidArgumentError("max_waypoints must be >= 1");
  if (!(waypoint_spacing_deg > 0.0 && path_check_step_deg > 0.0))
    throw InvalidArgumentError("planner step sizes must be positive");
}

namespace {

double max_joint_delta(const JointAngles& a, const JointAngles& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

// Convex combination, clamped so rounding cannot leave the limits.
JointAngles lerp(const ArmModel& model, const JointAngles& a, const JointAngles& b, double t) {
  JointAngles q;
  for (std::size_t j = 0; j < kNumJoints; ++j)
    q[j] = model.limit(j).clamp((1.0 - t) * a[j] + t * b[j]);
  return q;
}

bool path_clear(const ArmModel& model, const JointAngles& from, const JointAngles& to,
                const PlannerOptions& opts) {
  const int n = std::max(1, static_cast<int>(std::ceil(max_joint_delta(from, to) /
                                                       opts.path_check_step_deg)));
  for (int i = 0; i <= n; ++i)
    if (in_collision(model, lerp(model, from, to, static_cast<double>(i) / n), opts.collision_margin))
      return false;
  return true;
}

// Damped least squares on tip - target over the joints, bounded by the limits.
JointAngles solve_ik(const ArmModel& model, const JointAngles& start, const Vec3& target) {
  const std::size_t tip = static_cast<std::size_t>(model.tip_keypoint());
  const ResidualFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    JointAngles q;
    for (std::size_t j = 0; j < kNumJoints; ++j) q[j] = x[j];
    const KinematicState s = forward_state(model, q);
    r = s.keypoints.coords[tip] - target;
    if (jac) {
      jac->resize(3, kNumJoints);
      for (std::size_t j = 0; j < kNumJoints; ++j)
        jac->col(j) = keypoint_joint_derivative(model, s, tip, j);
    }
    return true;
  };
  LmOptions o;
  o.lower.resize(kNumJoints);
  o.upper.resize(kNumJoints);
  Eigen::VectorXd x0(kNumJoints);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    o.lower[j] = model.limit(j).min_deg;
    o.upper[j] = model.limit(j).max_deg;
    x0[j] = start[j];
  }
  const LmResult res = levenberg_marquardt(fn, x0, o);
  JointAngles q;
  for (std::size_t j = 0; j < kNumJoints; ++j) q[j] = model.limit(j).clamp(res.x[j]);
  return q;
}

// Forward kinematics from 4x4 homogeneous matrices, kept separate from
// forward_state so the plan checker does not share code with the planner.
std::vector<Vec3> homogeneous_keypoints(const ArmModel& model, const JointAngles& q) {
  const auto& parts = model.parts();
  std::vector<Eigen::Matrix4d> world(parts.size(), Eigen::Matrix4d::Identity());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Part& p = parts[i];
    Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
    if (p.joint >= 0) {
      Eigen::Matrix4d to = Eigen::Matrix4d::Identity(), back = Eigen::Matrix4d::Identity(),
                      rot = Eigen::Matrix4d::Identity();
      to.block<3, 1>(0, 3) = p.pivot;
      back.block<3, 1>(0, 3) = -p.pivot;
      rot.block<3, 3>(0, 0) =
          Eigen::AngleAxisd(q[p.joint] * kDegToRad, p.axis.normalized()).toRotationMatrix();
      local = to * rot * back;
    }
    world[i] = (p.parent < 0 ? Eigen::Matrix4d::Identity() : world[p.parent]) * local;
  }
  std::vector<Vec3> out(kNumKeypoints);
  for (const ModelKeypoint& kp : model.keypoints())
    out[kp.id] = (world[kp.part] * kp.rest.homogeneous()).head<3>();
  return out;
}

}  // namespace

std::vector<JointAngles> plan_reach(const ArmModel& model, const SimState& state,
                                    const TaskSpec& task, const PlannerOptions& opts) {
  task.validate();
  opts.validate();
  const ReachBound bound = reach_bound(model);
  if ((task.target - bound.shoulder).norm() > bound.radius)
    throw UnreachableError("target lies " +
                           std::to_string((task.target - bound.shoulder).norm()) +
                           " cm from the shoulder, beyond the reach bound of " +
                           std::to_string(bound.radius) + " cm");
  const JointAngles current = model.clamp(state.joints);
  const double tolerance = 0.5 * task.success_radius;

  std::optional<JointAngles> best;
  double best_delta = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= opts.restarts; ++i) {
    JointAngles start = current;
    if (i > 0) {
      CounterRng rng(opts.seed, static_cast<std::uint64_t>(i));
      for (std::size_t j = 0; j < kNumJoints; ++j)
        start[j] = rng.uniform(model.limit(j).min_deg, model.limit(j).max_deg);
    }
    const JointAngles goal = solve_ik(model, start, task.target);
    if (task.distance(tip_position(model, goal)) > tolerance) continue;
    const double delta = max_joint_delta(current, goal);
    if (delta >= best_delta) continue;
    if (!path_clear(model, current, goal, opts)) continue;
    best = goal;
    best_delta = delta;
  }
  if (!best) throw UnreachableError("no collision-free joint solution reaches the target");

  const int n = std::clamp(static_cast<int>(std::ceil(best_delta / opts.waypoint_spacing_deg)),
                           1, opts.max_waypoints);
  std::vector<JointAngles> plan;
  for (int i = 1; i <= n; ++i)
    plan.push_back(i == n ? *best : lerp(model, current, *best, static_cast<double>(i) / n));
  if (best_delta == 0.0) plan = {current};
  return plan;
}

std::string check_plan(const ArmModel& model, const std::vector<JointAngles>& plan,
                       const TaskSpec& task, const PlannerOptions& opts) {
  if (plan.empty()) return "empty plan";
  if (static_cast<int>(plan.size()) > opts.max_waypoints)
    return "plan has " + std::to_string(plan.size()) + " waypoints";
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (std::size_t j = 0; j < kNumJoints; ++j)
      if (!(plan[i][j] >= model.limit(j).min_deg && plan[i][j] <= model.limit(j).max_deg))
        return "waypoint " + std::to_string(i) + " violates the limit of joint " +
               std::string(kJointNames[j]);
    for (const Vec3& p : homogeneous_keypoints(model, plan[i]))
      if (p.z() < opts.collision_margin)
        return "waypoint " + std::to_string(i) + " comes within the collision margin";
  }
  const Vec3 tip = homogeneous_keypoints(model, plan.back())[model.tip_keypoint()];
  if (task.distance(tip) > 0.5 * task.success_radius) return "final tip misses the target";
  return {};
}

EpisodeConfig::EpisodeConfig() {
  heatmap_noise.outlier_prob = 0.0;
  heatmap_noise.dropout_prob = 0.0;
  solver.outlier_ratio = 3.0;
}

namespace {

// Camera fixed for the episode: drawn from the ranges with the arm at its
// start pose.
PoseVector episode_camera(const ArmModel& model, const EpisodeConfig& cfg, std::uint64_t seed) {
  SampleRanges r = cfg.camera_ranges;
  for (std::size_t j = 0; j < kNumJoints; ++j) r.joints[j] = Interval{cfg.start[j], cfg.start[j]};
  PoseVector cam = sample_scene(seed, r, model, cfg.intrinsics).pose;
  cam.joints = {};
  return cam;
}

}  // namespace

EpisodeResult run_episode(const ArmModel& model, const TaskSpec& task, const EpisodeConfig& cfg,
                          std::uint64_t seed) {
  task.validate();
  cfg.sim.validate();
  model.check_limits(cfg.start);
  const std::uint64_t sim_seed = CounterRng::derive(seed, 1);
  const std::uint64_t obs_seed = CounterRng::derive(seed, 2);

  EpisodeResult res;
  SimState state;
  state.joints = cfg.start;
  state.collided = in_collision(model, state.joints);
  res.trajectory.push_back(state);

  std::optional<PoseVector> estimate;
  double error_sum = 0.0;
  int observations = 0;
  if (cfg.source == PoseSource::Solver)
    res.camera = episode_camera(model, cfg, CounterRng::derive(seed, 0));

  auto observe = [&](const SimState& s) -> JointAngles {
    if (cfg.source == PoseSource::GroundTruth) return s.joints;
    PoseVector truth = *res.camera;
    truth.joints = s.joints;
    NoiseSpec noise = cfg.heatmap_noise;
    noise.seed = CounterRng::derive(obs_seed, static_cast<std::uint64_t>(s.step_count));
    const Keypoints2D y =
        project(cfg.intrinsics, truth, forward_kinematics(model, s.joints)).points2d;
    SolverOptions so = cfg.solver;
    so.initial_guess = estimate;
    try {
      estimate = solve_pose(heatmap_argmax(render_heatmaps(y, noise, cfg.geometry)),
                            cfg.intrinsics, model, so)
                     .pose;
    } catch (const Error& e) {
      ++res.solver_failures;
      log().debug("step {}: pose estimate failed: {}", s.step_count, e.what());
      if (!estimate) {
        estimate = truth;
        estimate->joints = cfg.start;
      }
    }
    for (std::size_t j = 0; j < kNumJoints; ++j)
      error_sum += std::abs(estimate->joints[j] - s.joints[j]) / kNumJoints;
    ++observations;
    return estimate->joints;
  };

  JointAngles observed = observe(state);
  SimState planning_state = state;
  planning_state.joints = observed;
  PlannerOptions popts = cfg.planner;
  popts.seed = CounterRng::derive(seed, 3);
  res.plan = plan_reach(model, planning_state, task, popts);

  std::size_t waypoint = 0;
  PidState pid;
  auto finished = [&] {
    res.final_distance = task.distance(tip_position(model, state.joints));
    res.collided = state.collided;
    res.success = !state.collided && res.final_distance <= task.success_radius;
    return res.success || state.collided;
  };
  while (!finished() && state.step_count < task.max_steps) {
    if (waypoint + 1 < res.plan.size() &&
        max_joint_delta(observed, res.plan[waypoint]) <= cfg.waypoint_tolerance_deg)
      ++waypoint;
    Action a;
    std::tie(a, pid) = pid_pose_maker(observed, res.plan[waypoint], cfg.gains, pid);
    state = sim_step(model, state, a, sim_seed, cfg.sim);
    res.trajectory.push_back(state);
    observed = observe(state);
  }
  res.steps_used = state.step_count;
  if (observations > 0 && cfg.source == PoseSource::Solver)
    res.mean_estimate_error_deg = error_sum / observations;
  return res;
}

std::vector<ReachRun> run_reach_experiment(const ArmModel& model,
                                           const std::vector<TaskSpec>& tasks,
                                           const EpisodeConfig& cfg, int seeds,
                                           std::uint64_t seed, unsigned workers) {
  if (seeds < 1) throw InvalidArgumentError("seeds must be >= 1");
  const std::size_t n = tasks.size() * static_cast<std::size_t>(seeds);
  std::vector<ReachRun> runs(n);
  parallel_for(n, workers, [&](std::size_t i) {
    ReachRun& r = runs[i];
    r.task_index = i / seeds;
    r.seed_index = static_cast<int>(i % seeds);
    r.task = tasks[r.task_index];
    const std::uint64_t s =
        CounterRng::derive(CounterRng::derive(seed, r.task_index), r.seed_index);
    try {
      r.result = run_episode(model, r.task, cfg, s);
    } catch (const UnreachableError& e) {
      log().warn("task {} seed {}: {}", r.task_index, r.seed_index, e.what());
      r.result = EpisodeResult{};
      r.result.final_distance = r.task.distance(tip_position(model, cfg.start));
      r.result.plan.clear();
    }
  });
  return runs;
}

ReachSummary summarize(const std::vector<ReachRun>& runs) {
  ReachSummary s;
  s.episodes = static_cast<int>(runs.size());
  for (const ReachRun& r : runs) {
    s.successes += r.result.success;
    s.mean_distance += r.result.final_distance;
    s.mean_steps += r.result.steps_used;
    s.unreachable += r.result.plan.empty();
  }
  if (s.episodes > 0) {
    s.success_rate = static_cast<double>(s.successes) / s.episodes;
    s.mean_distance /= s.episodes;
    s.mean_steps /= s.episodes;
  }
  return s;
}

Json to_json(const TaskSpec& t) {
  return {{"target", {t.target.x(), t.target.y(), t.target.z()}},
          {"success_radius", t.success_radius},
          {"max_steps", t.max_steps},
          {"measure", t.measure == DistanceMeasure::Horizontal ? "horizontal" : "3d"}};
}

TaskSpec task_from_json(const Json& j) {
  try {
    TaskSpec t;
    const auto target = j.at("target").get<std::vector<double>>();
    if (target.size() != 3) throw ParseError("task target needs 3 coordinates");
    t.target = Vec3(target[0], target[1], target[2]);
    t.success_radius = j.value("success_radius", t.success_radius);
    t.max_steps = j.value("max_steps", t.max_steps);
    const std::string m = j.value("measure", std::string("horizontal"));
    if (m == "horizontal") {
      t.measure = DistanceMeasure::Horizontal;
    } else if (m == "3d") {
      t.measure = DistanceMeasure::Full3D;
    } else {
      throw ParseError("unknown distance measure '" + m + "'");
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("task: ") + e.what());
  }
}

Json to_json(const ReachRun& r, bool with_trajectory) {
  Json plan = Json::array();
  for (const JointAngles& q : r.result.plan) plan.push_back(to_json(q));
  Json j = {{"task_index", r.task_index},
            {"seed_index", r.seed_index},
            {"task", to_json(r.task)},
            {"success", r.result.success},
            {"final_distance", r.result.final_distance},
            {"steps_used", r.result.steps_used},
            {"collided", r.result.collided},
            {"reachable", !r.result.plan.empty()},
            {"plan", plan}};
  if (r.result.camera) {
    j["camera"] = to_json(*r.result.camera);
    j["mean_estimate_error_deg"] = r.result.mean_estimate_error_deg;
    j["solver_failures"] = r.result.solver_failures;
  }
  if (with_trajectory) {
    Json traj = Json::array();
    for (const SimState& s : r.result.trajectory)
      traj.push_back({{"step", s.step_count},
                      {"joints", to_json(s.joints)},
                      {"collided", s.collided}});
    j["trajectory"] = traj;
  }
  return j;
}

Json to_json(const ReachSummary& s) {
  return {{"episodes", s.episodes},       {"successes", s.successes},
          {"success_rate", s.success_rate}, {"mean_distance", s.mean_distance},
          {"mean_steps", s.mean_steps},     {"unreachable", s.unreachable}};
}

std::string format_table(const ReachSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "episodes  distance error (cm)  success rate  average steps\n"
                "%8d  %19.2f  %11.1f%%  %13.1f\n",
                s.episodes, s.mean_distance, 100.0 * s.success_rate, s.mean_steps);
  return buf;
}

}  // namespace armpose
