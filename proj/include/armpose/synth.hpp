#pragma once

#include <cstdint>
#include <filesystem>

#include "armpose/camera.hpp"
#include "armpose/heatmap.hpp"
#include "armpose/json_io.hpp"
#include "armpose/sample_ranges.hpp"

namespace armpose {

/// Detector imperfections applied when synthesising heatmaps.
struct NoiseSpec {
  double pixel_sigma = 2.0;        // Gaussian jitter of each blob centre (image px)
  double blob_sigma = 1.0;         // blob width (heatmap cells)
  double outlier_prob = 0.05;      // chance a blob is displaced
  double outlier_shift_min = 20.0; // displacement is in [min, 1.5 min] image px
  double dropout_prob = 0.05;      // chance a map is all zeros
  std::uint64_t seed = 0;

  static NoiseSpec none() { return {0.0, 1.0, 0.0, 20.0, 0.0, 0}; }
  void validate() const;
};

Json to_json(const NoiseSpec& n);
NoiseSpec noise_from_json(const Json& j);

/// Heatmap layout: grid size and the crop it covers in the original image.
struct HeatmapGeometry {
  int height = 64;
  int width = 64;
  int crop_size = 256;
  Eigen::Vector2i crop_offset = Eigen::Vector2i::Zero();
};

struct Scene {
  PoseVector pose;
  Keypoints3D z;
  Keypoints2D y;  // noiseless projection; visible = inside the image
};

/// Draws camera angles, distance, look-at jitter and joints uniformly from
/// `ranges`. The camera sits at look_at + distance * (cos el cos az,
/// cos el sin az, sin el) and points at the look-at point. Rejects draws
/// until every keypoint is in front of the camera and at least
/// ranges.min_in_image project inside the image.
/// Throws SamplingExhaustedError after 1000 rejections.
Scene sample_scene(std::uint64_t seed, const SampleRanges& ranges, const ArmModel& model,
                   const CameraIntrinsics& intr);

/// Gaussian blobs with peak 1 at `centres` (image px) for each map whose
/// `present` flag is set; other maps stay zero. blob_sigma == 0 puts a unit
/// impulse in the nearest cell.
HeatmapSet render_blobs(const std::array<Vec2, kNumKeypoints>& centres,
                        const std::array<bool, kNumKeypoints>& present, double blob_sigma,
                        const HeatmapGeometry& geom = {});

/// Renders y with jitter, displacement and dropout drawn from noise.seed.
HeatmapSet render_heatmaps(const Keypoints2D& y, const NoiseSpec& noise,
                           const HeatmapGeometry& geom = {});

struct DatasetSpec {
  int n = 5000;
  std::uint64_t seed = 0;
  SampleRanges ranges;
  NoiseSpec noise;
  CameraIntrinsics intrinsics;
  HeatmapGeometry geometry;
  double val_fraction = 0.1;
  unsigned workers = 1;
};

/// Scene i uses seed CounterRng::derive(spec.seed, i); heatmap noise for it
/// uses CounterRng::derive(that, spec.noise.seed).
Scene dataset_scene(const DatasetSpec& spec, const ArmModel& model, int index);
std::string scene_id(int index);

struct SyntheticSample {
  Annotation annotation;  // ground truth
  HeatmapSet heatmaps;
};

/// The samples generate_dataset writes, in index order.
std::vector<SyntheticSample> synthesize_dataset(const DatasetSpec& spec, const ArmModel& model);

struct DatasetSplit {
  std::vector<int> train;  // sorted scene indices
  std::vector<int> val;
};

/// Seeded shuffle of 0..n-1; the first round(val_fraction * n) become the
/// validation split.
DatasetSplit dataset_split(int n, double val_fraction, std::uint64_t seed);

/// Writes annotations/<id>.json (ground truth), heatmaps/<id>.hmap and
/// manifest.json (seed, ranges, noise, train/val split) under `out_dir`.
/// Returns the manifest.
Json generate_dataset(const DatasetSpec& spec, const ArmModel& model,
                      const std::filesystem::path& out_dir);

}  // namespace armpose
