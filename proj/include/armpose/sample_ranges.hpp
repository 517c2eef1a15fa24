#pragma once

#include <array>
#include <optional>

#include "armpose/arm_model.hpp"

namespace armpose {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

/// Ranges scenes are drawn from. Camera angles are in degrees, distance in
/// cm from the look-at point. Joint ranges default to the model limits.
struct SampleRanges {
  Interval cam_az{0.0, 45.0};
  Interval cam_el{30.0, 60.0};
  Interval cam_roll{-30.0, 30.0};
  Interval cam_distance{40.0, 90.0};
  /// Look-at point (cm, world) and its per-axis uniform jitter.
  Vec3 look_at = Vec3(0.0, 0.0, 12.0);
  double look_at_jitter = 3.0;
  /// Per-joint overrides; unset means the model's full limit interval.
  std::array<std::optional<Interval>, kNumJoints> joints{};
  /// Minimum number of projected keypoints that must land inside the image.
  int min_in_image = 12;

  /// Throws InvalidArgumentError on inverted intervals, elevation outside
  /// (-90, 90) or joint ranges outside the model limits.
  void validate(const ArmModel& model) const;
  Interval joint_range(const ArmModel& model, std::size_t j) const;
};

}  // namespace armpose
