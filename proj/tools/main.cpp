// armpose: command-line front end for the pose-estimation and reaching pipeline.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "armpose/control.hpp"
#include "armpose/errors.hpp"
#include "armpose/eval.hpp"
#include "armpose/log.hpp"
#include "armpose/parallel.hpp"
#include "armpose/pipeline.hpp"
#include "armpose/refine.hpp"
#include "armpose/synth.hpp"

namespace fs = std::filesystem;
using namespace armpose;

namespace {

struct Common {
  std::string model = ARMPOSE_DATA_DIR "/owi535.json";
  unsigned workers = 0;
  std::string format = "json";
};

void emit(const Common& c, const Json& j, const std::string& table) {
  if (c.format == "table") {
    std::cout << table;
  } else {
    std::cout << j.dump(2) << '\n';
  }
}

void add_common(CLI::App* sub, Common& c, bool with_model = true) {
  if (with_model) sub->add_option("--model", c.model, "Arm model JSON")->check(CLI::ExistingFile);
  sub->add_option("--workers", c.workers, "Worker threads (0 = all cores)");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "table"}));
}

void add_solver(CLI::App* sub, SolverOptions& o) {
  sub->add_option("--xi", o.confidence_threshold, "Confidence gate")->capture_default_str();
  sub->add_option("--restarts", o.restarts, "Random restarts")->capture_default_str();
  sub->add_option("--max-iterations", o.max_iterations, "Iterations per restart")
      ->capture_default_str();
  sub->add_option("--solver-seed", o.seed, "Seed for restart draws")->capture_default_str();
}

// --- synth ---------------------------------------------------------------
struct SynthArgs {
  Common c;
  std::string out, intrinsics, noise, ranges;
  int n = 5000;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
};

int run_synth(const SynthArgs& a) {
  const ArmModel model = load_arm_model(a.c.model);
  DatasetSpec spec;
  spec.n = a.n;
  spec.seed = a.seed;
  spec.val_fraction = a.val_fraction;
  spec.workers = a.c.workers;
  if (!a.intrinsics.empty()) spec.intrinsics = load_intrinsics(a.intrinsics);
  if (!a.noise.empty()) spec.noise = noise_from_json(read_json_file(a.noise));
  if (!a.ranges.empty()) spec.ranges = ranges_from_json(read_json_file(a.ranges));
  const Json m = generate_dataset(spec, model, a.out);
  const Json j = {{"command", "synth"},
                  {"out", a.out},
                  {"n", a.n},
                  {"seed", a.seed},
                  {"train", m["split"]["train"].size()},
                  {"val", m["split"]["val"].size()}};
  emit(a.c, j,
       "wrote " + std::to_string(a.n) + " scenes to " + a.out + " (" +
           std::to_string(m["split"]["train"].size()) + " train, " +
           std::to_string(m["split"]["val"].size()) + " val)\n");
  return 0;
}

// --- solve ---------------------------------------------------------------
struct SolveArgs {
  Common c;
  std::string input, out, intrinsics;
  bool weak = false;
  SolverOptions solver;
};

int run_solve(const SolveArgs& a) {
  const ArmModel model = load_arm_model(a.c.model);
  std::vector<Annotation> inputs;
  if (fs::is_directory(a.input)) {
    const fs::path root =
        fs::is_directory(fs::path(a.input) / "annotations") ? fs::path(a.input) / "annotations"
                                                             : fs::path(a.input);
    inputs = load_annotations(root);
  } else {
    inputs.push_back(read_annotation(a.input));
  }
  std::optional<CameraIntrinsics> intr;
  if (!a.intrinsics.empty()) intr = load_intrinsics(a.intrinsics);

  std::vector<std::optional<Annotation>> solved(inputs.size());
  std::vector<std::optional<SkippedRecord>> failed(inputs.size());
  parallel_for(inputs.size(), a.c.workers, [&](std::size_t i) {
    const Annotation& in = inputs[i];
    try {
      SolverOptions so = a.solver;
      if (a.weak) so.mode = ProjectionMode::WeakPerspective;
      const CameraIntrinsics k = intr ? *intr : in.intrinsics.value_or(CameraIntrinsics{});
      const SolveResult r = solve_pose(in.keypoints2d, k, model, so);
      Annotation out;
      out.image_id = in.image_id;
      out.intrinsics = k;
      out.pose = r.pose;
      out.keypoints2d = r.y_refined;
      out.keypoints3d = r.z;
      Json inliers = Json::array();
      for (bool b : r.inlier_mask) inliers.push_back(b);
      out.extra["solver"] = {{"residual", r.residual},
                             {"inlier_mask", inliers},
                             {"iterations", r.iterations_used},
                             {"restarts", r.restarts_used},
                             {"rank_deficient", r.rank_deficient}};
      if (r.weak) out.extra["solver"]["weak"] = {{"scale", r.weak->scale},
                                                 {"offset", {r.weak->offset.x(), r.weak->offset.y()}}};
      solved[i] = std::move(out);
    } catch (const Error& e) {
      failed[i] = SkippedRecord{in.image_id, e.code(), e.what()};
    }
  });

  fs::create_directories(a.out);
  Json skipped = Json::array();
  int written = 0;
  double residual = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (solved[i]) {
      write_annotation(fs::path(a.out) / (solved[i]->image_id + ".json"), *solved[i]);
      residual += solved[i]->extra["solver"]["residual"].get<double>();
      ++written;
    } else {
      log().warn("skipping {}: {}", failed[i]->image_id, failed[i]->message);
      skipped.push_back({{"image_id", failed[i]->image_id},
                         {"error", failed[i]->error},
                         {"message", failed[i]->message}});
    }
  }
  const Json j = {{"command", "solve"},
                  {"out", a.out},
                  {"solved", written},
                  {"skipped", skipped},
                  {"mean_residual", written > 0 ? Json(residual / written) : Json(nullptr)}};
  emit(a.c, j,
       "solved " + std::to_string(written) + ", skipped " + std::to_string(skipped.size()) +
           "\n");
  return 0;
}

// --- refine --------------------------------------------------------------
struct RefineArgs {
  Common c;
  std::string heatmaps, intrinsics, out;
  SolverOptions solver = refine_solver_options();
};

int run_refine(const RefineArgs& a) {
  const ArmModel model = load_arm_model(a.c.model);
  // A dataset directory written by synth carries its intrinsics in the manifest.
  const std::filesystem::path manifest = std::filesystem::path(a.heatmaps) / "manifest.json";
  CameraIntrinsics intr;
  if (!a.intrinsics.empty())
    intr = load_intrinsics(a.intrinsics);
  else if (std::filesystem::exists(manifest) && read_json_file(manifest).contains("intrinsics"))
    intr = intrinsics_from_json(read_json_file(manifest)["intrinsics"]);
  else
    throw InvalidArgumentError("--intrinsics is required unless the heatmap directory has a manifest");
  const RefineBatch batch =
      refine_batch(load_heatmap_dir(a.heatmaps), intr, model, a.solver, a.c.workers);
  const int written = export_pseudo_dataset(batch, a.out);
  Json skipped = Json::array();
  for (const SkippedRecord& s : batch.skipped)
    skipped.push_back({{"image_id", s.image_id}, {"error", s.error}, {"message", s.message}});
  const Json j = {
      {"command", "refine"}, {"out", a.out}, {"written", written}, {"skipped", skipped}};
  emit(a.c, j,
       "wrote " + std::to_string(written) + " pseudo-labels, skipped " +
           std::to_string(skipped.size()) + "\n");
  return 0;
}

// --- eval ----------------------------------------------------------------
struct EvalArgs {
  Common c;
  std::string pred, gt;
  EvalOptions opts;
};

int run_eval(EvalArgs a) {
  a.opts.workers = a.c.workers;
  const EvalReport r = evaluate_dataset(a.pred, a.gt, a.opts);
  emit(a.c, to_json(r), format_table(r));
  return 0;
}

// --- reach ---------------------------------------------------------------
struct ReachArgs {
  Common c;
  std::string targets = "grid";
  std::string pose_source = "gt";
  std::string noise;
  std::string intrinsics;
  int seeds = 8;
  std::uint64_t seed = 0;
  double actuation_noise = 0.2;
  bool trajectory = false;
};

int run_reach(const ReachArgs& a) {
  const ArmModel model = load_arm_model(a.c.model);
  std::vector<TaskSpec> tasks;
  if (a.targets == "grid") {
    tasks = reach_target_grid();
  } else {
    const Json j = read_json_file(a.targets);
    if (!j.is_array()) throw ParseError("targets file must hold a JSON array of tasks");
    for (const Json& t : j) tasks.push_back(task_from_json(t));
  }
  EpisodeConfig cfg;
  cfg.source = a.pose_source == "solver" ? PoseSource::Solver : PoseSource::GroundTruth;
  cfg.sim.actuation_noise = a.actuation_noise;
  if (!a.noise.empty()) cfg.heatmap_noise = noise_from_json(read_json_file(a.noise));
  if (!a.intrinsics.empty()) cfg.intrinsics = load_intrinsics(a.intrinsics);
  cfg.solver.seed = a.seed;
  const std::vector<ReachRun> runs =
      run_reach_experiment(model, tasks, cfg, a.seeds, a.seed, a.c.workers);
  const ReachSummary s = summarize(runs);
  Json episodes = Json::array();
  for (const ReachRun& r : runs) episodes.push_back(to_json(r, a.trajectory));
  const Json j = {{"command", "reach"},
                  {"pose_source", a.pose_source},
                  {"seed", a.seed},
                  {"summary", to_json(s)},
                  {"episodes", episodes}};
  emit(a.c, j, format_table(s));
  return 0;
}

// --- demo ----------------------------------------------------------------
struct DemoArgs {
  Common c;
  DemoOptions opts;
  std::string out;
};

int run_demo_cmd(DemoArgs a) {
  const ArmModel model = load_arm_model(a.c.model);
  a.opts.workers = a.c.workers;
  if (!a.out.empty()) a.opts.out_dir = a.out;
  const Json j = run_demo(model, a.opts);
  emit(a.c, j, format_demo(j));
  return 0;
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << Json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robot-arm pose estimation from keypoint heatmaps, label refinement and reaching"};
  app.set_config("--config", "", "TOML/INI file of option values; command-line flags win");
  app.require_subcommand(1);
  app.footer("Environment: ARMPOSE_LOG_LEVEL=trace|debug|info|warn|error|off (default warn)");

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(s, synth.c);
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Dataset seed")->required();
  s->add_option("--n", synth.n, "Number of scenes")->capture_default_str()->check(CLI::NonNegativeNumber);
  s->add_option("--intrinsics", synth.intrinsics, "Camera intrinsics JSON")->check(CLI::ExistingFile);
  s->add_option("--noise", synth.noise, "Heatmap noise JSON")->check(CLI::ExistingFile);
  s->add_option("--ranges", synth.ranges, "Sample ranges JSON")->check(CLI::ExistingFile);
  s->add_option("--val-fraction", synth.val_fraction, "Validation share")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  SolveArgs solve;
  CLI::App* so = app.add_subcommand("solve", "Fit poses to 2D keypoint annotations");
  add_common(so, solve.c);
  so->add_option("--keypoints", solve.input, "Annotation file or directory")
      ->required()
      ->check(CLI::ExistingPath);
  so->add_option("--out", solve.out, "Output directory")->required();
  so->add_option("--intrinsics", solve.intrinsics, "Intrinsics JSON (default: per annotation)")
      ->check(CLI::ExistingFile);
  so->add_flag("--weak", solve.weak, "Weak-perspective camera model");
  add_solver(so, solve.solver);
  so->add_option("--outlier-ratio", solve.solver.outlier_ratio, "Robust demotion ratio (0 = off)")
      ->capture_default_str();

  RefineArgs refine;
  CLI::App* r = app.add_subcommand("refine", "Refine heatmap keypoints into pseudo-labels");
  add_common(r, refine.c);
  r->add_option("--heatmaps", refine.heatmaps, "Directory of .hmap files")
      ->required()
      ->check(CLI::ExistingDirectory);
  r->add_option("--intrinsics", refine.intrinsics,
                "Camera intrinsics JSON (default: the dataset manifest's)")
      ->check(CLI::ExistingFile);
  r->add_option("--out", refine.out, "Output directory")->required();
  add_solver(r, refine.solver);
  r->add_option("--outlier-ratio", refine.solver.outlier_ratio, "Robust demotion ratio (0 = off)")
      ->capture_default_str();
  r->add_option("--robust-scale", refine.solver.robust_scale_px,
                "Cauchy scale (px) of the screening fit (0 = plain least squares)")
      ->capture_default_str();

  EvalArgs eval;
  CLI::App* e = app.add_subcommand("eval", "Score predictions against ground truth");
  add_common(e, eval.c, false);
  e->add_option("--pred", eval.pred, "Prediction directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--gt", eval.gt, "Ground-truth directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--alpha", eval.opts.alpha, "PCK threshold factor")->capture_default_str();
  e->add_flag("--visible-only", eval.opts.visible_only, "Score visible keypoints only");
  e->add_flag("--allow-missing", eval.opts.allow_missing_pred,
              "Skip ground truth without predictions");

  ReachArgs reach;
  CLI::App* re = app.add_subcommand("reach", "Run reaching episodes in the simulator");
  add_common(re, reach.c);
  re->add_option("--targets", reach.targets, "'grid' or a JSON array of tasks")->capture_default_str();
  re->add_option("--pose-source", reach.pose_source, "Joint feedback")
      ->capture_default_str()
      ->check(CLI::IsMember({"gt", "solver"}));
  re->add_option("--seeds", reach.seeds, "Episodes per target")->capture_default_str()->check(CLI::PositiveNumber);
  re->add_option("--seed", reach.seed, "Base seed")->capture_default_str();
  re->add_option("--noise", reach.noise, "Heatmap noise JSON")->check(CLI::ExistingFile);
  re->add_option("--intrinsics", reach.intrinsics, "Camera intrinsics JSON")->check(CLI::ExistingFile);
  re->add_option("--actuation-noise", reach.actuation_noise, "Relative motor noise")
      ->capture_default_str();
  re->add_flag("--trajectory", reach.trajectory, "Include per-step states");

  DemoArgs demo;
  CLI::App* d = app.add_subcommand("demo", "End-to-end run: synth, refine, eval, reach");
  add_common(d, demo.c);
  d->add_option("--seed", demo.opts.seed, "Seed")->capture_default_str();
  d->add_option("--n", demo.opts.n, "Number of scenes")->capture_default_str()->check(CLI::PositiveNumber);
  d->add_option("--reach-seeds", demo.opts.reach_seeds, "Episodes per reach target")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  d->add_option("--out", demo.out, "Directory for the dataset, pseudo-labels and report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (*s) return run_synth(synth);
    if (*so) return run_solve(solve);
    if (*r) return run_refine(refine);
    if (*e) return run_eval(eval);
    if (*re) return run_reach(reach);
    if (*d) return run_demo_cmd(demo);
  } catch (const Error& ex) {
    print_error(ex.code(), ex.what());
    return 1;
  } catch (const fs::filesystem_error& ex) {
    print_error("IoError", ex.what());
    return 1;
  } catch (const std::exception& ex) {
    print_error("InternalError", ex.what());
    return 1;
  }
  return 2;
}
