#include "armpose/refine.hpp"

#include <algorithm>
#include <optional>

#include "armpose/errors.hpp"
#include "armpose/log.hpp"
#include "armpose/parallel.hpp"

namespace armpose {

SolverOptions refine_solver_options() {
  SolverOptions o;
  o.outlier_ratio = 3.0;
  o.robust_scale_px = 4.0;
  return o;
}

PseudoLabelRecord refine_labels(const HeatmapSet& h, const CameraIntrinsics& intr,
                                const ArmModel& model, const SolverOptions& opts,
                                const std::string& image_id) {
  h.validate();
  PseudoLabelRecord rec;
  rec.image_id = image_id;
  rec.intrinsics = intr;
  rec.y_argmax = heatmap_argmax(h);
  const SolveResult s = solve_pose(rec.y_argmax, intr, model, opts);
  rec.y_refined = s.y_refined;
  rec.pose = s.pose;
  rec.z = s.z;
  rec.residual = s.residual;
  rec.inlier_mask = s.inlier_mask;
  rec.iterations_used = s.iterations_used;
  rec.restarts_used = s.restarts_used;
  rec.rank_deficient = s.rank_deficient;
  return rec;
}

RefineBatch refine_batch(const std::vector<HeatmapInput>& inputs, const CameraIntrinsics& intr,
                         const ArmModel& model, const SolverOptions& opts, unsigned workers) {
  std::vector<std::optional<PseudoLabelRecord>> out(inputs.size());
  std::vector<std::optional<SkippedRecord>> failed(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    try {
      out[i] = refine_labels(inputs[i].heatmaps, intr, model, opts, inputs[i].image_id);
    } catch (const Error& e) {
      failed[i] = SkippedRecord{inputs[i].image_id, e.code(), e.what()};
    }
  });
  RefineBatch batch;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (out[i]) batch.records.push_back(std::move(*out[i]));
    if (failed[i]) {
      log().warn("skipping {}: {}: {}", failed[i]->image_id, failed[i]->error,
                 failed[i]->message);
      batch.skipped.push_back(std::move(*failed[i]));
    }
  }
  return batch;
}

std::vector<HeatmapInput> load_heatmap_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path root = dir;
  if (fs::is_directory(dir / "heatmaps")) root = dir / "heatmaps";
  if (!fs::is_directory(root)) throw IoError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ".hmap")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.stem() < b.stem(); });
  std::vector<HeatmapInput> inputs;
  inputs.reserve(files.size());
  for (const fs::path& f : files) inputs.push_back({f.stem().string(), read_heatmaps(f)});
  return inputs;
}

Annotation to_annotation(const PseudoLabelRecord& r) {
  Annotation a;
  a.image_id = r.image_id;
  a.intrinsics = r.intrinsics;
  a.pose = r.pose;
  a.keypoints2d = r.y_refined;
  a.keypoints3d = r.z;
  Json inliers = Json::array();
  for (bool b : r.inlier_mask) inliers.push_back(b);
  a.extra["refinement"] = {{"residual", r.residual},
                           {"inlier_mask", inliers},
                           {"iterations", r.iterations_used},
                           {"restarts", r.restarts_used},
                           {"rank_deficient", r.rank_deficient},
                           {"argmax", to_json(r.y_argmax)}};
  return a;
}

int export_pseudo_dataset(const RefineBatch& batch, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  Json written = Json::array();
  for (const PseudoLabelRecord& r : batch.records) {
    write_annotation(dir / (r.image_id + ".json"), to_annotation(r));
    written.push_back(r.image_id);
  }
  Json skipped = Json::array();
  for (const SkippedRecord& s : batch.skipped)
    skipped.push_back({{"image_id", s.image_id}, {"error", s.error}, {"message", s.message}});
  write_json_file(dir / "manifest.json", {{"format", "armpose-pseudo-labels"},
                                          {"version", 1},
                                          {"count", written.size()},
                                          {"image_ids", written},
                                          {"skipped", skipped},
                                          {"suggested_mix_ratio", "6:4"}});
  return static_cast<int>(batch.records.size());
}

}  // namespace armpose
