#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "armpose/camera.hpp"

namespace armpose {

/// Per-keypoint score maps as produced by a keypoint detector on a square
/// crop of the original image.
///
/// Grid sample (x, y) of a map corresponds to original-image pixel
/// crop_offset + (x, y) * crop_size / W, so the sample grid and the image
/// share the pixel-centre origin.
struct HeatmapSet {
  int height = 64;
  int width = 64;
  int crop_size = 256;
  Eigen::Vector2i crop_offset = Eigen::Vector2i::Zero();
  /// kNumKeypoints maps, row-major, height * width each.
  std::vector<std::vector<float>> maps;

  static HeatmapSet zeros(int height = 64, int width = 64, int crop_size = 256,
                          Eigen::Vector2i crop_offset = Eigen::Vector2i::Zero());

  float at(std::size_t k, int x, int y) const { return maps[k][y * width + x]; }
  float& at(std::size_t k, int x, int y) { return maps[k][y * width + x]; }
  double pixels_per_cell_x() const { return static_cast<double>(crop_size) / width; }
  double pixels_per_cell_y() const { return static_cast<double>(crop_size) / height; }
  Vec2 grid_to_image(const Vec2& g) const;
  Vec2 image_to_grid(const Vec2& uv) const;

  /// Throws InvalidArgumentError unless there are 17 maps of uniform size
  /// holding finite scores.
  void validate() const;
};

/// Binary heatmap container, little-endian:
///   "HMAP" | u16 version=1 | u16 K | u16 H | u16 W | u16 crop_size |
///   i32 crop_offset_x | i32 crop_offset_y | K*H*W float32 (row-major per map)
inline constexpr std::uint16_t kHeatmapFormatVersion = 1;

void write_heatmaps(std::ostream& out, const HeatmapSet& h);
HeatmapSet read_heatmaps(std::istream& in);
void write_heatmaps(const std::filesystem::path& path, const HeatmapSet& h);
HeatmapSet read_heatmaps(const std::filesystem::path& path);

/// Per map: the arg-max cell (first in row-major order on ties), shifted a
/// quarter cell towards the larger of its two neighbours along each axis (no
/// shift when they are equal or one is off-grid), mapped to image pixels.
/// Confidence is the peak value clamped to [0, 1] and visible is set when it
/// is positive. A map whose values are all equal yields the grid centre.
Keypoints2D heatmap_argmax(const HeatmapSet& h);

}  // namespace armpose
