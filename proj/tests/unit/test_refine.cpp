#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "armpose/errors.hpp"
#include "armpose/refine.hpp"
#include "armpose/synth.hpp"
#include "helpers.hpp"

using namespace armpose;
namespace fs = std::filesystem;

namespace {

double mean_error(const Keypoints2D& a, const Keypoints2D& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) e += (a.points[k] - b.points[k]).norm();
  return e / kNumKeypoints;
}

HeatmapInput input_for(int i, const NoiseSpec& noise) {
  const Scene s = sample_scene(CounterRng::derive(71, i), {}, test::model(), CameraIntrinsics{});
  return {"img_" + std::to_string(i), render_heatmaps(s.y, noise)};
}

}  // namespace

TEST_CASE("exact heatmaps refine to the true projection") {
  const CameraIntrinsics intr;
  for (int i = 0; i < 10; ++i) {
    SampleRanges r;
    r.min_in_image = 17;
    const Scene s = sample_scene(CounterRng::derive(72, i), r, test::model(), intr);
    const HeatmapSet h = render_heatmaps(s.y, NoiseSpec::none());
    const PseudoLabelRecord rec = refine_labels(h, intr, test::model());
    CHECK(mean_error(rec.y_refined, s.y) < 1.0);
    CHECK(mean_error(rec.y_refined, s.y) <= mean_error(rec.y_argmax, s.y) + 1e-6);
    CHECK(projection_consistency_residual(intr, rec.pose, rec.z, rec.y_refined) < 1e-9);
  }
}

TEST_CASE("displaced peaks are demoted") {
  const CameraIntrinsics intr;
  SampleRanges r;
  r.min_in_image = 17;
  const Scene s = sample_scene(73, r, test::model(), intr);
  std::array<Vec2, kNumKeypoints> centres = s.y.points;
  std::array<bool, kNumKeypoints> present;
  present.fill(true);
  for (std::size_t k : {4u, 10u, 15u}) centres[k] += Vec2(24.0, -12.0);
  const HeatmapSet h = render_blobs(centres, present, 1.0);
  const PseudoLabelRecord rec = refine_labels(h, intr, test::model());
  for (std::size_t k : {4u, 10u, 15u}) CHECK_FALSE(rec.inlier_mask[k]);
  CHECK(mean_error(rec.y_refined, s.y) < mean_error(rec.y_argmax, s.y));
}

TEST_CASE("batch skips records with too few confident peaks") {
  std::vector<HeatmapInput> inputs;
  for (int i = 0; i < 4; ++i) inputs.push_back(input_for(i, NoiseSpec::none()));
  for (std::size_t k = 5; k < kNumKeypoints; ++k)
    std::fill(inputs[2].heatmaps.maps[k].begin(), inputs[2].heatmaps.maps[k].end(), 0.f);
  const RefineBatch one = refine_batch(inputs, CameraIntrinsics{}, test::model(),
                                       refine_solver_options(), 1);
  const RefineBatch many = refine_batch(inputs, CameraIntrinsics{}, test::model(),
                                        refine_solver_options(), 3);
  REQUIRE(one.records.size() == 3);
  REQUIRE(one.skipped.size() == 1);
  CHECK(one.skipped[0].image_id == "img_2");
  CHECK(one.skipped[0].error == "InsufficientKeypointsError");
  REQUIRE(many.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(many.records[i].image_id == one.records[i].image_id);
    CHECK(pose_to_params(many.records[i].pose) == pose_to_params(one.records[i].pose));
  }
}

TEST_CASE("export writes one file per record plus a manifest") {
  const fs::path dir = fs::temp_directory_path() / "armpose_test_export";
  fs::remove_all(dir);
  CHECK(export_pseudo_dataset({}, dir) == 0);
  CHECK(load_annotations(dir).empty());
  fs::remove_all(dir);

  std::vector<HeatmapInput> inputs;
  for (int i = 0; i < 11; ++i) inputs.push_back(input_for(i, NoiseSpec::none()));
  for (auto& m : inputs[7].heatmaps.maps) std::fill(m.begin(), m.end(), 0.f);
  const RefineBatch batch =
      refine_batch(inputs, CameraIntrinsics{}, test::model(), refine_solver_options(), 0);
  REQUIRE(batch.records.size() == 10);
  CHECK(export_pseudo_dataset(batch, dir) == 10);
  const std::vector<Annotation> back = load_annotations(dir);
  REQUIRE(back.size() == 10);
  // Files come back sorted by id, so img_10 precedes img_2.
  for (std::size_t i = 0; i < back.size(); ++i) {
    const auto rec = std::find_if(batch.records.begin(), batch.records.end(),
                                  [&](const auto& r) { return r.image_id == back[i].image_id; });
    REQUIRE(rec != batch.records.end());
    CHECK(back[i] == to_annotation(*rec));
    CHECK(projection_consistency_residual(*back[i].intrinsics, *back[i].pose, *back[i].keypoints3d,
                                          back[i].keypoints2d) < 1e-9);
  }
  const Json manifest = read_json_file(dir / "manifest.json");
  CHECK(manifest["count"] == 10);
  REQUIRE(manifest["skipped"].size() == 1);
  CHECK(manifest["skipped"][0]["image_id"] == "img_7");
  CHECK(manifest["suggested_mix_ratio"] == "6:4");

  const std::vector<HeatmapInput> loaded = [&] {
    const fs::path hdir = dir / "hm";
    fs::create_directories(hdir);
    for (const auto& in : inputs) write_heatmaps(hdir / (in.image_id + ".hmap"), in.heatmaps);
    return load_heatmap_dir(hdir);
  }();
  REQUIRE(loaded.size() == inputs.size());
  CHECK(loaded[0].image_id == "img_0");
  CHECK(loaded[1].image_id == "img_1");
  CHECK(loaded[2].image_id == "img_10");
  fs::remove_all(dir);
}
