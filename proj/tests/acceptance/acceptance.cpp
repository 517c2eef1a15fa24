// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance <path to the armpose cli>

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "armpose/control.hpp"
#include "armpose/errors.hpp"
#include "armpose/eval.hpp"
#include "armpose/parallel.hpp"
#include "armpose/refine.hpp"
#include "armpose/rng.hpp"
#include "armpose/solver.hpp"
#include "armpose/synth.hpp"

using namespace armpose;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ArmModel& model() {
  static const ArmModel m = load_arm_model(ARMPOSE_DATA_DIR "/owi535.json");
  return m;
}

Scene scene(std::uint64_t base, int i) {
  return sample_scene(CounterRng::derive(base, i), {}, model(), CameraIntrinsics{});
}

double max_joint_error(const PoseVector& a, const PoseVector& b) {
  double e = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j) e = std::max(e, std::abs(a.joints[j] - b.joints[j]));
  return e;
}

double mean_keypoint_error(const Keypoints2D& a, const Keypoints2D& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) e += (a.points[k] - b.points[k]).norm();
  return e / kNumKeypoints;
}

// Single-threaded on purpose: the runtime bound is per core.
Outcome exact_round_trip() {
  const int n = 500;
  const CameraIntrinsics intr;
  int exact = 0, bounded = 0, failed = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < n; ++i) {
    const Scene s = scene(1001, i);
    try {
      const SolveResult r = solve_pose(s.y, intr, model());
      if (max_joint_error(r.pose, s.pose) <= 0.1 &&
          (r.pose.cam_location - s.pose.cam_location).norm() <= 0.1)
        ++exact;
      else if (r.residual <= r.best_initial_residual)
        ++bounded;
      else
        ++failed;
    } catch (const Error&) {
      ++failed;
    }
  }
  const double secs = seconds_since(t0);
  return {exact >= 0.95 * n && failed == 0 && secs <= 60.0,
          fmt("exact %d/%d, remainder residual<=init %d, other %d, %.1f s", exact, n, bounded,
              failed, secs)};
}

Outcome noisy_solve() {
  const int n = 500;
  const CameraIntrinsics intr;
  std::vector<std::optional<PoseError>> errs(n);
  parallel_for(n, 0, [&](std::size_t i) {
    const Scene s = scene(1002, static_cast<int>(i));
    CounterRng rng(CounterRng::derive(1003, i));
    Keypoints2D y = s.y;
    for (auto& p : y.points) p += Vec2(rng.normal(0.0, 2.0), rng.normal(0.0, 2.0));
    try {
      errs[i] = pose_error(solve_pose(y, intr, model()).pose, s.pose);
    } catch (const Error&) {
    }
  });
  double joint = 0.0, rot = 0.0, loc = 0.0;
  int solved = 0;
  for (const auto& e : errs) {
    if (!e) continue;
    joint += e->joint_average;
    rot += e->cam_rotation;
    loc += e->cam_location;
    ++solved;
  }
  if (solved == 0) return {false, "no scene solved"};
  joint /= solved;
  rot /= solved;
  loc /= solved;
  // An unsolved scene counts against the criterion.
  return {solved == n && joint < 6.0 && rot < 5.0 && loc < 6.0,
          fmt("solved %d/%d, joint %.2f deg, camera %.2f deg / %.2f cm", solved, n, joint, rot,
              loc)};
}

// Clean blobs with at most four peaks pushed 20-30 px off their true
// position, at least 12 keypoints visible and confident.
Outcome refinement_improves() {
  const int trials = 200;
  const CameraIntrinsics intr;
  SampleRanges ranges;
  ranges.min_in_image = 12;
  std::vector<int> better(trials, 0);
  std::vector<PseudoLabelRecord> records(trials);
  std::vector<int> ok(trials, 0);
  parallel_for(trials, 0, [&](std::size_t t) {
    CounterRng rng(CounterRng::derive(1004, t));
    const Scene s = sample_scene(rng.next_u64(), ranges, model(), intr);
    std::array<Vec2, kNumKeypoints> centres = s.y.points;
    std::array<bool, kNumKeypoints> present = s.y.visible;
    std::vector<std::size_t> visible;
    for (std::size_t k = 0; k < kNumKeypoints; ++k)
      if (present[k]) visible.push_back(k);
    const int n_bad = 1 + static_cast<int>(rng.uniform() * 4.0);
    for (int b = 0; b < n_bad; ++b) {
      const std::size_t pick = static_cast<std::size_t>(rng.uniform() * (visible.size() - b));
      const std::size_t k = visible[pick];
      std::swap(visible[pick], visible[visible.size() - 1 - b]);
      const double ang = rng.uniform(0.0, 2.0 * M_PI), len = rng.uniform(20.0, 30.0);
      centres[k] += len * Vec2(std::cos(ang), std::sin(ang));
    }
    const HeatmapSet h = render_blobs(centres, present, 1.0);
    try {
      const PseudoLabelRecord r = refine_labels(h, intr, model(), refine_solver_options(),
                                                "trial_" + std::to_string(t));
      better[t] = mean_keypoint_error(r.y_refined, s.y) < mean_keypoint_error(r.y_argmax, s.y);
      records[t] = r;
      ok[t] = 1;
    } catch (const Error&) {
    }
  });
  RefineBatch batch;
  int wins = 0;
  for (int t = 0; t < trials; ++t) {
    wins += better[t];
    if (ok[t]) batch.records.push_back(records[t]);
  }
  const auto dir = std::filesystem::temp_directory_path() / "armpose_acceptance_labels";
  std::filesystem::remove_all(dir);
  export_pseudo_dataset(batch, dir);
  double worst = 0.0;
  for (const Annotation& a : load_annotations(dir))
    worst = std::max(worst, projection_consistency_residual(*a.intrinsics, *a.pose,
                                                            *a.keypoints3d, a.keypoints2d));
  std::filesystem::remove_all(dir);
  return {wins >= 0.9 * trials && worst < 1e-9,
          fmt("refined better on %d/%d, exported %zu, max residual %.2e", wins, trials,
              batch.records.size(), worst)};
}

Outcome argmax_pck() {
  const int n = 500;
  std::vector<Annotation> pred, gt;
  for (int i = 0; i < n; ++i) {
    const Scene s = scene(1005, i);
    const HeatmapSet h = render_heatmaps(s.y, NoiseSpec::none());
    Annotation g, p;
    g.image_id = p.image_id = scene_id(i);
    g.keypoints2d = s.y;
    p.keypoints2d = heatmap_argmax(h);
    gt.push_back(g);
    pred.push_back(p);
  }
  const double at02 = evaluate(pred, gt).pck;
  bool monotone = true;
  double prev = 0.0;
  for (int a = 0; a <= 40; ++a) {
    EvalOptions o;
    o.alpha = a * 0.01;
    const double v = evaluate(pred, gt, o).pck;
    monotone = monotone && v >= prev;
    prev = v;
  }
  return {at02 >= 0.99 && monotone,
          fmt("PCK@0.2 %.4f, monotone over alpha in [0, 0.4]: %s", at02, monotone ? "yes" : "no")};
}

Outcome reaching() {
  const auto t0 = Clock::now();
  EpisodeConfig gt_cfg;
  const ReachSummary gt = summarize(run_reach_experiment(model(), reach_target_grid(), gt_cfg, 8, 1006));
  EpisodeConfig solver_cfg;
  solver_cfg.source = PoseSource::Solver;
  const ReachSummary sv =
      summarize(run_reach_experiment(model(), reach_target_grid(), solver_cfg, 8, 1006));
  const double secs = seconds_since(t0);
  return {gt.success_rate >= 0.9 && sv.success_rate >= 0.5 && sv.mean_distance <= 4.0 &&
              secs <= 300.0,
          fmt("ground truth %.1f%% (%.2f cm), solver %.1f%% (%.2f cm), %.1f s",
              100.0 * gt.success_rate, gt.mean_distance, 100.0 * sv.success_rate,
              sv.mean_distance, secs)};
}

std::string run_capture(const std::string& cmd) {
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) return {};
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe.get())) out.append(buf.data(), got);
  return out;
}

Outcome numerical_hygiene(const std::string& cli) {
  const CameraIntrinsics intr;
  KeypointMask all;
  all.fill(true);
  double worst_jac = 0.0;
  for (int i = 0; i < 100; ++i) {
    const PoseVector p = scene(1007, i).pose;
    const Eigen::MatrixXd jac = reprojection_jacobian(p, all, intr, model());
    Eigen::MatrixXd fd(jac.rows(), jac.cols());
    const Eigen::VectorXd x = pose_to_params(p);
    Keypoints2D zero;
    for (int c = 0; c < kNumPoseParams; ++c) {
      const double h = 1e-6;
      Eigen::VectorXd a = x, b = x;
      a[c] += h;
      b[c] -= h;
      fd.col(c) = (reprojection_residuals(params_to_pose(a), zero, all, intr, model()) -
                   reprojection_residuals(params_to_pose(b), zero, all, intr, model())) /
                  (2.0 * h);
    }
    worst_jac = std::max(worst_jac, (jac - fd).norm() / jac.norm());
  }

  // Every rigid pair of keypoints keeps its rest distance.
  const Keypoints3D rest = forward_kinematics(model(), JointAngles{});
  double worst_bone = 0.0;
  CounterRng rng(1008);
  for (int i = 0; i < 1000; ++i) {
    JointAngles q;
    for (std::size_t j = 0; j < kNumJoints; ++j)
      q[j] = rng.uniform(model().limit(j).min_deg, model().limit(j).max_deg);
    const Keypoints3D z = forward_kinematics(model(), q);
    for (std::size_t a = 0; a < kNumKeypoints; ++a)
      for (std::size_t b = a + 1; b < kNumKeypoints; ++b) {
        if (model().moving_joints(a) != model().moving_joints(b)) continue;
        worst_bone = std::max(worst_bone, std::abs((z.coords[a] - z.coords[b]).norm() -
                                                   (rest.coords[a] - rest.coords[b]).norm()));
      }
  }

  const std::string cmd = "'" + cli + "' demo --seed 7 --n 100 --format json 2>/dev/null";
  const std::string first = run_capture(cmd), second = run_capture(cmd);
  const bool same = !first.empty() && first == second;
  return {worst_jac < 1e-4 && worst_bone < 1e-9 && same,
          fmt("Jacobian rel err %.2e, bone drift %.2e, demo identical: %s (%zu bytes)", worst_jac,
              worst_bone, same ? "yes" : "no", first.size())};
}

Outcome pose_maker() {
  SimConfig sim;
  sim.actuation_noise = 0.0;
  CounterRng rng(1009);
  int converged = 0, worst_steps = 0;
  for (int trial = 0; trial < 10; ++trial) {
    JointAngles target;
    for (std::size_t j = 0; j < kNumJoints; ++j)
      target[j] = rng.uniform(model().limit(j).min_deg, model().limit(j).max_deg);
    SimState s;
    PidState pid;
    int steps = 0;
    auto close = [&] {
      for (std::size_t j = 0; j < kNumJoints; ++j)
        if (std::abs(s.joints[j] - target[j]) > 2.0) return false;
      return true;
    };
    while (!close() && steps < 50) {
      Action a;
      std::tie(a, pid) = pid_pose_maker(s.joints, target, PidGains{}, pid);
      s = sim_step(model(), s, a, 0, sim);
      ++steps;
    }
    converged += close();
    worst_steps = std::max(worst_steps, steps);
  }
  return {converged == 10, fmt("converged %d/10, slowest %d steps", converged, worst_steps)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <armpose cli>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 generate-then-solve exactness", exact_round_trip},
      {"2 noisy solve magnitude", noisy_solve},
      {"3 refinement improves labels", refinement_improves},
      {"4 argmax PCK sanity", argmax_pck},
      {"5 reaching task", reaching},
      {"6 numerical hygiene", [&] { return numerical_hygiene(cli); }},
      {"7 pose maker", pose_maker},
  };
  bool all = true;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
