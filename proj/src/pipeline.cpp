#include "armpose/pipeline.hpp"

#include <cstdio>

#include "armpose/control.hpp"
#include "armpose/errors.hpp"
#include "armpose/eval.hpp"
#include "armpose/refine.hpp"
#include "armpose/synth.hpp"

namespace armpose {

Json run_demo(const ArmModel& model, const DemoOptions& opts) {
  if (opts.n < 1) throw InvalidArgumentError("demo needs n >= 1");
  DatasetSpec spec;
  spec.n = opts.n;
  spec.seed = opts.seed;
  spec.workers = opts.workers;
  const std::vector<SyntheticSample> samples = synthesize_dataset(spec, model);

  std::vector<HeatmapInput> inputs;
  std::vector<Annotation> gt, argmax;
  for (const SyntheticSample& s : samples) {
    inputs.push_back({s.annotation.image_id, s.heatmaps});
    gt.push_back(s.annotation);
    Annotation a;
    a.image_id = s.annotation.image_id;
    a.keypoints2d = heatmap_argmax(s.heatmaps);
    argmax.push_back(std::move(a));
  }
  SolverOptions so = refine_solver_options();
  so.seed = opts.seed;
  const RefineBatch batch = refine_batch(inputs, spec.intrinsics, model, so, opts.workers);
  std::vector<Annotation> refined;
  for (const PseudoLabelRecord& r : batch.records) refined.push_back(to_annotation(r));

  EvalOptions eo;
  eo.workers = opts.workers;
  const EvalReport argmax_report = evaluate(argmax, gt, eo);
  eo.allow_missing_pred = true;
  const EvalReport refined_report = evaluate(refined, gt, eo);

  EpisodeConfig cfg;
  cfg.solver.seed = opts.seed;
  const std::vector<TaskSpec> grid = reach_target_grid();
  const ReachSummary reach_gt =
      summarize(run_reach_experiment(model, grid, cfg, opts.reach_seeds, opts.seed, opts.workers));
  cfg.source = PoseSource::Solver;
  const ReachSummary reach_solver =
      summarize(run_reach_experiment(model, grid, cfg, opts.reach_seeds, opts.seed, opts.workers));

  Json skipped = Json::array();
  for (const SkippedRecord& s : batch.skipped) skipped.push_back(s.image_id);
  Json out = {{"seed", opts.seed},
              {"n", opts.n},
              {"refine", {{"refined", batch.records.size()}, {"skipped", skipped}}},
              {"eval", {{"argmax", to_json(argmax_report)}, {"refined", to_json(refined_report)}}},
              {"reach", {{"ground_truth", to_json(reach_gt)}, {"solver", to_json(reach_solver)}}}};

  if (opts.out_dir) {
    generate_dataset(spec, model, *opts.out_dir / "dataset");
    export_pseudo_dataset(batch, *opts.out_dir / "pseudo_labels");
    write_json_file(*opts.out_dir / "demo.json", out);
  }
  return out;
}

std::string format_demo(const Json& d) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "demo seed %llu, %d scenes, %zu refined, %zu skipped\n\n",
                static_cast<unsigned long long>(d["seed"].get<std::uint64_t>()),
                d["n"].get<int>(), d["refine"]["refined"].get<std::size_t>(),
                d["refine"]["skipped"].size());
  s += buf;
  s += "2D keypoint detection (PCK@0.2, %)\n";
  for (const char* key : {"argmax", "refined"}) {
    std::snprintf(buf, sizeof buf, "  %-8s %6.2f\n", key,
                  100.0 * d["eval"][key]["pck"].get<double>());
    s += buf;
  }
  const Json& r = d["eval"]["refined"];
  s += "\n3D pose estimation errors (deg)\n  rotation     base    elbow    wrist  average\n";
  const Json& je = r["joint_errors"];
  std::snprintf(buf, sizeof buf, "  %8.2f %8.2f %8.2f %8.2f %8.2f\n", je["rotation"].get<double>(),
                je["base"].get<double>(), je["elbow"].get<double>(), je["wrist"].get<double>(),
                je["average"].get<double>());
  s += buf;
  std::snprintf(buf, sizeof buf, "  camera rotation %.2f deg, location %.2f cm\n",
                r["cam_rotation_error"].get<double>(), r["cam_location_error"].get<double>());
  s += buf;
  s += "\nreaching       distance error (cm)  success rate  average steps\n";
  for (const char* key : {"ground_truth", "solver"}) {
    const Json& x = d["reach"][key];
    std::snprintf(buf, sizeof buf, "  %-12s %19.2f  %11.1f%%  %13.1f\n", key,
                  x["mean_distance"].get<double>(), 100.0 * x["success_rate"].get<double>(),
                  x["mean_steps"].get<double>());
    s += buf;
  }
  return s;
}

}  // namespace armpose
