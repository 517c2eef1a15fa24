#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "armpose/heatmap.hpp"
#include "armpose/json_io.hpp"
#include "armpose/solver.hpp"

namespace armpose {

/// Geometry-consistent keypoints for one image, ready to be used as a
/// training label for the detector.
struct PseudoLabelRecord {
  std::string image_id;
  CameraIntrinsics intrinsics;
  /// Raw heatmap peaks the fit started from.
  Keypoints2D y_argmax;
  /// Projection of the fitted pose for all 17 keypoints (original-image px).
  Keypoints2D y_refined;
  PoseVector pose;
  Keypoints3D z;
  double residual = 0.0;
  KeypointMask inlier_mask{};
  int iterations_used = 0;
  int restarts_used = 0;
  bool rank_deficient = false;
};

/// Solver settings used for label refinement: robust demotion at 3x the
/// median inlier error.
SolverOptions refine_solver_options();

/// heatmap_argmax, confidence gate, multi-start fit. Solver errors propagate.
PseudoLabelRecord refine_labels(const HeatmapSet& h, const CameraIntrinsics& intr,
                                const ArmModel& model,
                                const SolverOptions& opts = refine_solver_options(),
                                const std::string& image_id = {});

struct HeatmapInput {
  std::string image_id;
  HeatmapSet heatmaps;
};

struct SkippedRecord {
  std::string image_id;
  std::string error;  // error code, e.g. "InsufficientKeypointsError"
  std::string message;
};

struct RefineBatch {
  std::vector<PseudoLabelRecord> records;  // input order, failures removed
  std::vector<SkippedRecord> skipped;
};

/// Refines every input on up to `workers` threads (0 = all cores). Inputs
/// whose refinement throws an armpose::Error are skipped and logged.
RefineBatch refine_batch(const std::vector<HeatmapInput>& inputs, const CameraIntrinsics& intr,
                         const ArmModel& model, const SolverOptions& opts, unsigned workers = 0);

/// Reads every *.hmap in `dir` (or in `dir`/heatmaps when present), sorted
/// by file stem, which becomes the image id.
std::vector<HeatmapInput> load_heatmap_dir(const std::filesystem::path& dir);

Annotation to_annotation(const PseudoLabelRecord& r);

/// Writes one annotation file per record into `dir` plus manifest.json
/// listing written ids, skipped ids and the suggested synthetic-to-real
/// mixing ratio for the external trainer. Returns the number of annotation
/// files written. Throws IoError.
int export_pseudo_dataset(const RefineBatch& batch, const std::filesystem::path& dir);

}  // namespace armpose
