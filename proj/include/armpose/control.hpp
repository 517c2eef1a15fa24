#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "armpose/json_io.hpp"
#include "armpose/solver.hpp"
#include "armpose/synth.hpp"

namespace armpose {

/// Actuation model of the simulated arm.
struct SimConfig {
  double max_speed_deg = 3.0;  // joint motion per step at |command| = 1
  /// Each joint's motion is scaled by (1 + eps), eps ~ U(-noise, noise),
  /// drawn per joint per step. 0 disables.
  double actuation_noise = 0.2;

  void validate() const;
};

struct SimState {
  JointAngles joints;
  int step_count = 0;
  bool collided = false;  // latches once any keypoint dips below the table
};

/// Signed speed fraction per joint, each in [-1, 1].
struct Action {
  std::array<double, kNumJoints> command{};

  /// Clamps every command to [-1, 1]; NaN becomes 0.
  static Action clamped(const std::array<double, kNumJoints>& c);
};

/// True when some keypoint lies below z = margin (the table is z = 0).
bool in_collision(const ArmModel& model, const JointAngles& q, double margin = 0.0);

/// Advances one step. Noise for the step is drawn from
/// CounterRng(noise_seed, state.step_count), so a run is reproducible from
/// its seed alone.
SimState sim_step(const ArmModel& model, const SimState& state, const Action& a,
                  std::uint64_t noise_seed, const SimConfig& cfg = {});

struct PidGains {
  double kp = 0.5;  // per degree of error
  double ki = 0.005;
  double kd = 0.0;

  void validate() const;
};

/// Integral term bound (degree-steps).
inline constexpr double kPidIntegralLimit = 10.0;

struct PidState {
  std::array<double, kNumJoints> integral{};
  std::array<double, kNumJoints> prev_error{};
  bool primed = false;  // prev_error holds a real sample
};

/// Per-joint PID on target - current with unit time step; output clamped to
/// [-1, 1].
std::pair<Action, PidState> pid_pose_maker(const JointAngles& current, const JointAngles& target,
                                           const PidGains& gains, const PidState& state);

enum class DistanceMeasure { Horizontal, Full3D };

struct TaskSpec {
  Vec3 target = Vec3::Zero();  // cm, world frame
  double success_radius = 3.0;
  int max_steps = 50;
  DistanceMeasure measure = DistanceMeasure::Horizontal;

  void validate() const;
  /// Tip-to-target distance under `measure`.
  double distance(const Vec3& tip) const;
};

/// Targets at 15, 20 and 25 cm from the base axis, at azimuths -45, 0 and
/// 45 deg, 10 cm above the table.
std::vector<TaskSpec> reach_target_grid();

struct PlannerOptions {
  int restarts = 16;
  std::uint64_t seed = 0;
  double collision_margin = 0.5;  // cm above the table for every keypoint
  int max_waypoints = 10;
  double waypoint_spacing_deg = 15.0;  // largest joint move between waypoints
  /// Resolution of the collision check along the straight joint-space path.
  double path_check_step_deg = 1.0;

  void validate() const;
};

/// Inverse kinematics by damped least squares on the tip position over the
/// joints (bounded by the limits), from the current joints and then seeded
/// random starts. Among solutions whose tip lies within success_radius / 2
/// of the target and whose straight joint-space path stays clear of the
/// table, picks the one nearest to the current joints, and returns linearly
/// interpolated waypoints ending at it.
/// Throws UnreachableError when the target is beyond reach_bound or no start
/// yields an acceptable solution.
std::vector<JointAngles> plan_reach(const ArmModel& model, const SimState& state,
                                    const TaskSpec& task, const PlannerOptions& opts = {});

/// Independent re-validation of a plan: non-empty, at most max_waypoints,
/// within limits, every waypoint clear of the table by collision_margin
/// (checked with homogeneous matrices rather than forward_kinematics) and
/// the final tip within success_radius / 2. Returns an empty string when
/// sound, else the first violation.
std::string check_plan(const ArmModel& model, const std::vector<JointAngles>& plan,
                       const TaskSpec& task, const PlannerOptions& opts = {});

enum class PoseSource { GroundTruth, Solver };

struct EpisodeConfig {
  PoseSource source = PoseSource::GroundTruth;
  SimConfig sim;
  PidGains gains;
  PlannerOptions planner;
  /// Intermediate waypoints count as reached within this (deg, every joint).
  double waypoint_tolerance_deg = 5.0;
  JointAngles start;
  // Solver-in-the-loop only.
  CameraIntrinsics intrinsics;
  SampleRanges camera_ranges;
  /// Gaussian centre jitter only (pixel_sigma 2) unless overridden.
  NoiseSpec heatmap_noise;
  HeatmapGeometry geometry;
  SolverOptions solver;

  EpisodeConfig();
};

struct EpisodeResult {
  bool success = false;
  double final_distance = 0.0;
  int steps_used = 0;
  bool collided = false;
  std::vector<SimState> trajectory;  // initial state, then one per step
  std::vector<JointAngles> plan;
  /// Solver-in-the-loop: the episode's camera and mean absolute joint
  /// error of the estimates.
  std::optional<PoseVector> camera;
  double mean_estimate_error_deg = 0.0;
  int solver_failures = 0;
};

/// Closed loop: observe joints (ground truth, or solve_pose on heatmaps
/// rendered from the true state), PID towards the current waypoint, step.
/// Ends on success, collision or task.max_steps. All randomness derives
/// from `seed`. Throws UnreachableError from the planner.
EpisodeResult run_episode(const ArmModel& model, const TaskSpec& task, const EpisodeConfig& cfg,
                          std::uint64_t seed);

struct ReachRun {
  std::size_t task_index = 0;
  int seed_index = 0;
  TaskSpec task;
  EpisodeResult result;
};

struct ReachSummary {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_distance = 0.0;
  double mean_steps = 0.0;
  int unreachable = 0;
};

/// Every task x seed index, episode seed CounterRng::derive(derive(seed,
/// task index), seed index). Unreachable targets count as failures with
/// distance measured at the start pose.
std::vector<ReachRun> run_reach_experiment(const ArmModel& model,
                                           const std::vector<TaskSpec>& tasks,
                                           const EpisodeConfig& cfg, int seeds,
                                           std::uint64_t seed, unsigned workers = 0);
ReachSummary summarize(const std::vector<ReachRun>& runs);

Json to_json(const ReachRun& r, bool with_trajectory = false);
Json to_json(const ReachSummary& s);
std::string format_table(const ReachSummary& s);

TaskSpec task_from_json(const Json& j);
Json to_json(const TaskSpec& t);

}  // namespace armpose
