#include "armpose/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "armpose/errors.hpp"
#include "armpose/parallel.hpp"
#include "armpose/rng.hpp"

namespace armpose {

namespace {

constexpr int kMaxRejections = 1000;

void check_interval(const Interval& i, const char* what) {
  if (!(i.lo <= i.hi)) throw InvalidArgumentError(std::string(what) + " interval is inverted");
}

Vec3 look_direction(double az_deg, double el_deg) {
  const double az = az_deg * kDegToRad, el = el_deg * kDegToRad;
  return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
}

}  // namespace

Interval SampleRanges::joint_range(const ArmModel& model, std::size_t j) const {
  if (joints[j]) return *joints[j];
  return {model.limit(j).min_deg, model.limit(j).max_deg};
}

void SampleRanges::validate(const ArmModel& model) const {
  check_interval(cam_az, "cam_az");
  check_interval(cam_el, "cam_el");
  check_interval(cam_roll, "cam_roll");
  check_interval(cam_distance, "cam_distance");
  if (!(cam_el.lo > -90.0 && cam_el.hi < 90.0))
    throw InvalidArgumentError("cam_el must lie inside (-90, 90)");
  if (!(cam_distance.lo > 0.0)) throw InvalidArgumentError("cam_distance must be positive");
  if (look_at_jitter < 0.0) throw InvalidArgumentError("look_at_jitter must be >= 0");
  if (min_in_image < 0 || min_in_image > static_cast<int>(kNumKeypoints))
    throw InvalidArgumentError("min_in_image must lie in [0, 17]");
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const Interval r = joint_range(model, j);
    check_interval(r, "joint");
    if (!(model.limit(j).contains(r.lo) && model.limit(j).contains(r.hi)))
      throw InvalidArgumentError("sample range of joint '" + std::string(kJointNames[j]) +
                                 "' exceeds the model limits");
  }
}

void NoiseSpec::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(outlier_prob) || !prob(dropout_prob))
    throw InvalidArgumentError("noise probabilities must lie in [0, 1]");
  if (!(pixel_sigma >= 0.0 && blob_sigma >= 0.0 && outlier_shift_min >= 0.0))
    throw InvalidArgumentError("noise sigmas and shifts must be >= 0");
}

Json to_json(const NoiseSpec& n) {
  return {{"pixel_sigma", n.pixel_sigma},   {"blob_sigma", n.blob_sigma},
          {"outlier_prob", n.outlier_prob}, {"outlier_shift_min", n.outlier_shift_min},
          {"dropout_prob", n.dropout_prob}, {"seed", n.seed}};
}

NoiseSpec noise_from_json(const Json& j) {
  try {
    NoiseSpec n;
    n.pixel_sigma = j.value("pixel_sigma", n.pixel_sigma);
    n.blob_sigma = j.value("blob_sigma", n.blob_sigma);
    n.outlier_prob = j.value("outlier_prob", n.outlier_prob);
    n.outlier_shift_min = j.value("outlier_shift_min", n.outlier_shift_min);
    n.dropout_prob = j.value("dropout_prob", n.dropout_prob);
    n.seed = j.value("seed", n.seed);
    n.validate();
    return n;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("noise spec: ") + e.what());
  }
}

Scene sample_scene(std::uint64_t seed, const SampleRanges& ranges, const ArmModel& model,
                   const CameraIntrinsics& intr) {
  ranges.validate(model);
  intr.validate();
  CounterRng rng(seed);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    Scene s;
    const double az = rng.uniform(ranges.cam_az.lo, ranges.cam_az.hi);
    const double el = rng.uniform(ranges.cam_el.lo, ranges.cam_el.hi);
    const double roll = rng.uniform(ranges.cam_roll.lo, ranges.cam_roll.hi);
    const double dist = rng.uniform(ranges.cam_distance.lo, ranges.cam_distance.hi);
    Vec3 look = ranges.look_at;
    for (int i = 0; i < 3; ++i)
      look[i] += rng.uniform(-ranges.look_at_jitter, ranges.look_at_jitter);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const Interval r = ranges.joint_range(model, j);
      s.pose.joints[j] = rng.uniform(r.lo, r.hi);
    }
    s.pose.cam_rotation = Vec3(az, el, roll);
    s.pose.cam_location = look + dist * look_direction(az, el);
    s.z = forward_kinematics(model, s.pose.joints);

    const Extrinsics e = pose_to_extrinsics(s.pose);
    bool in_front = true;
    for (const Vec3& p : s.z.coords) in_front = in_front && (e.R * p + e.T).z() > kMinDepth;
    if (!in_front) continue;
    s.y = project(intr, e, s.z).points2d;
    if (std::count(s.y.visible.begin(), s.y.visible.end(), true) < ranges.min_in_image) continue;
    return s;
  }
  throw SamplingExhaustedError("no valid scene after " + std::to_string(kMaxRejections) +
                               " draws");
}

HeatmapSet render_blobs(const std::array<Vec2, kNumKeypoints>& centres,
                        const std::array<bool, kNumKeypoints>& present, double blob_sigma,
                        const HeatmapGeometry& geom) {
  HeatmapSet h = HeatmapSet::zeros(geom.height, geom.width, geom.crop_size, geom.crop_offset);
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    if (!present[k]) continue;
    const Vec2 g = h.image_to_grid(centres[k]);
    if (!g.allFinite()) continue;
    if (blob_sigma <= 0.0) {
      const long x = std::lround(g.x()), y = std::lround(g.y());
      if (x >= 0 && y >= 0 && x < h.width && y < h.height) h.at(k, x, y) = 1.f;
      continue;
    }
    // Samples beyond 6 sigma are below 2e-8 and left at zero.
    const double reach = std::ceil(6.0 * blob_sigma) + 1.0;
    const int x0 = static_cast<int>(std::max(0.0, std::floor(g.x() - reach)));
    const int x1 = static_cast<int>(std::min<double>(h.width - 1, std::ceil(g.x() + reach)));
    const int y0 = static_cast<int>(std::max(0.0, std::floor(g.y() - reach)));
    const int y1 = static_cast<int>(std::min<double>(h.height - 1, std::ceil(g.y() + reach)));
    const double inv = 1.0 / (2.0 * blob_sigma * blob_sigma);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - g.x(), dy = y - g.y();
        h.at(k, x, y) = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
      }
  }
  return h;
}

HeatmapSet render_heatmaps(const Keypoints2D& y, const NoiseSpec& noise,
                           const HeatmapGeometry& geom) {
  noise.validate();
  std::array<Vec2, kNumKeypoints> centres;
  std::array<bool, kNumKeypoints> present{};
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    CounterRng rng(noise.seed, k);
    Vec2 c = y.points[k];
    const double jx = rng.normal(), jy = rng.normal();
    c += noise.pixel_sigma * Vec2(jx, jy);
    const bool dropped = rng.bernoulli(noise.dropout_prob);
    const bool displaced = rng.bernoulli(noise.outlier_prob);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double shift = noise.outlier_shift_min * rng.uniform(1.0, 1.5);
    if (displaced) c += shift * Vec2(std::cos(angle), std::sin(angle));
    centres[k] = c;
    present[k] = !dropped;
  }
  return render_blobs(centres, present, noise.blob_sigma, geom);
}

std::string scene_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%06d", index);
  return buf;
}

Scene dataset_scene(const DatasetSpec& spec, const ArmModel& model, int index) {
  return sample_scene(CounterRng::derive(spec.seed, static_cast<std::uint64_t>(index)),
                      spec.ranges, model, spec.intrinsics);
}

std::vector<SyntheticSample> synthesize_dataset(const DatasetSpec& spec, const ArmModel& model) {
  if (spec.n < 0) throw InvalidArgumentError("dataset size must be >= 0");
  spec.ranges.validate(model);
  spec.noise.validate();
  spec.intrinsics.validate();
  const std::size_t n = static_cast<std::size_t>(spec.n);
  std::vector<SyntheticSample> samples(n);
  parallel_for(n, spec.workers, [&](std::size_t i) {
    const Scene s = dataset_scene(spec, model, static_cast<int>(i));
    Annotation& a = samples[i].annotation;
    a.image_id = scene_id(static_cast<int>(i));
    a.intrinsics = spec.intrinsics;
    a.pose = s.pose;
    a.keypoints2d = s.y;
    a.keypoints3d = s.z;
    NoiseSpec noise = spec.noise;
    noise.seed = CounterRng::derive(CounterRng::derive(spec.seed, i), spec.noise.seed);
    samples[i].heatmaps = render_heatmaps(s.y, noise, spec.geometry);
  });
  return samples;
}

DatasetSplit dataset_split(int n, double val_fraction, std::uint64_t seed) {
  if (n < 0) throw InvalidArgumentError("dataset size must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0))
    throw InvalidArgumentError("val_fraction must lie in [0, 1]");
  // Seeded Fisher-Yates shuffle; the first n_val indices become validation.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  CounterRng rng(seed, 0x5b117);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next_u64() % i]);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * n));
  DatasetSplit s;
  s.val.assign(order.begin(), order.begin() + n_val);
  s.train.assign(order.begin() + n_val, order.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

Json generate_dataset(const DatasetSpec& spec, const ArmModel& model,
                      const std::filesystem::path& out_dir) {
  dataset_split(spec.n, spec.val_fraction, spec.seed);  // validates before any work
  const std::vector<SyntheticSample> samples = synthesize_dataset(spec, model);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "annotations", ec);
  fs::create_directories(out_dir / "heatmaps", ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  for (const SyntheticSample& s : samples) {
    write_annotation(out_dir / "annotations" / (s.annotation.image_id + ".json"), s.annotation);
    write_heatmaps(out_dir / "heatmaps" / (s.annotation.image_id + ".hmap"), s.heatmaps);
  }

  const DatasetSplit split_ids = dataset_split(spec.n, spec.val_fraction, spec.seed);
  Json split = {{"train", Json::array()}, {"val", Json::array()}};
  for (int i : split_ids.train) split["train"].push_back(scene_id(i));
  for (int i : split_ids.val) split["val"].push_back(scene_id(i));

  Json manifest = {{"format", "armpose-dataset"},
                   {"version", 1},
                   {"n", spec.n},
                   {"seed", spec.seed},
                   {"model", model.name()},
                   {"intrinsics", to_json(spec.intrinsics)},
                   {"ranges", to_json(spec.ranges)},
                   {"noise", to_json(spec.noise)},
                   {"heatmap", {{"height", spec.geometry.height},
                                {"width", spec.geometry.width},
                                {"crop_size", spec.geometry.crop_size}}},
                   {"split", split}};
  write_json_file(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace armpose
