#include "armpose/heatmap.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "armpose/errors.hpp"

namespace armpose {

namespace {

constexpr std::array<char, 4> kMagic = {'H', 'M', 'A', 'P'};

template <typename U>
void put_le(std::ostream& out, U v) {
  std::array<char, sizeof(U)> b;
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), b.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> b;
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size()))
    throw ParseError("heatmap file truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return v;
}

std::uint16_t checked_u16(int v, const char* what) {
  if (v < 0 || v > 0xffff) throw InvalidArgumentError(std::string(what) + " does not fit u16");
  return static_cast<std::uint16_t>(v);
}

}  // namespace

HeatmapSet HeatmapSet::zeros(int height, int width, int crop_size,
                             Eigen::Vector2i crop_offset) {
  HeatmapSet h;
  h.height = height;
  h.width = width;
  h.crop_size = crop_size;
  h.crop_offset = crop_offset;
  h.maps.assign(kNumKeypoints, std::vector<float>(static_cast<std::size_t>(height) * width, 0.f));
  return h;
}

Vec2 HeatmapSet::grid_to_image(const Vec2& g) const {
  return Vec2(crop_offset.x() + g.x() * pixels_per_cell_x(),
              crop_offset.y() + g.y() * pixels_per_cell_y());
}

Vec2 HeatmapSet::image_to_grid(const Vec2& uv) const {
  return Vec2((uv.x() - crop_offset.x()) / pixels_per_cell_x(),
              (uv.y() - crop_offset.y()) / pixels_per_cell_y());
}

void HeatmapSet::validate() const {
  if (height <= 0 || width <= 0 || crop_size <= 0)
    throw InvalidArgumentError("heatmap dimensions must be positive");
  if (maps.size() != kNumKeypoints)
    throw InvalidArgumentError("expected 17 heatmaps, got " + std::to_string(maps.size()));
  for (const auto& m : maps) {
    if (m.size() != static_cast<std::size_t>(height) * width)
      throw InvalidArgumentError("heatmaps must share one H x W size");
    if (!std::all_of(m.begin(), m.end(), [](float v) { return std::isfinite(v); }))
      throw InvalidArgumentError("heatmap scores must be finite");
  }
}

void write_heatmaps(std::ostream& out, const HeatmapSet& h) {
  h.validate();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(out, kHeatmapFormatVersion);
  put_le<std::uint16_t>(out, checked_u16(static_cast<int>(h.maps.size()), "K"));
  put_le<std::uint16_t>(out, checked_u16(h.height, "H"));
  put_le<std::uint16_t>(out, checked_u16(h.width, "W"));
  put_le<std::uint16_t>(out, checked_u16(h.crop_size, "crop_size"));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.crop_offset.x()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(h.crop_offset.y()));
  for (const auto& m : h.maps)
    for (float v : m) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw IoError("failed writing heatmaps");
}

HeatmapSet read_heatmaps(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ParseError("not a HMAP heatmap file");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kHeatmapFormatVersion)
    throw ParseError("unsupported heatmap format version " + std::to_string(version));
  const auto k = get_le<std::uint16_t>(in);
  HeatmapSet h;
  h.height = get_le<std::uint16_t>(in);
  h.width = get_le<std::uint16_t>(in);
  h.crop_size = get_le<std::uint16_t>(in);
  h.crop_offset.x() = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  h.crop_offset.y() = static_cast<std::int32_t>(get_le<std::uint32_t>(in));
  if (k != kNumKeypoints) throw ParseError("heatmap file holds " + std::to_string(k) + " maps");
  h.maps.assign(k, std::vector<float>(static_cast<std::size_t>(h.height) * h.width));
  for (auto& m : h.maps)
    for (float& v : m) v = std::bit_cast<float>(get_le<std::uint32_t>(in));
  try {
    h.validate();
  } catch (const InvalidArgumentError& e) {
    throw ParseError(e.what());
  }
  return h;
}

void write_heatmaps(const std::filesystem::path& path, const HeatmapSet& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_heatmaps(out, h);
}

HeatmapSet read_heatmaps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_heatmaps(in);
}

Keypoints2D heatmap_argmax(const HeatmapSet& h) {
  h.validate();
  Keypoints2D y;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const auto& m = h.maps[k];
    const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
    Vec2 g;
    if (*lo == *hi) {
      g = Vec2(0.5 * (h.width - 1), 0.5 * (h.height - 1));
    } else {
      const int idx = static_cast<int>(hi - m.begin());
      const int x = idx % h.width, yy = idx / h.width;
      g = Vec2(x, yy);
      if (x > 0 && x + 1 < h.width) {
        const float l = h.at(k, x - 1, yy), r = h.at(k, x + 1, yy);
        if (r > l) g.x() += 0.25;
        else if (l > r) g.x() -= 0.25;
      }
      if (yy > 0 && yy + 1 < h.height) {
        const float u = h.at(k, x, yy - 1), d = h.at(k, x, yy + 1);
        if (d > u) g.y() += 0.25;
        else if (u > d) g.y() -= 0.25;
      }
    }
    y.points[k] = h.grid_to_image(g);
    y.confidence[k] = std::clamp(static_cast<double>(*hi), 0.0, 1.0);
    y.visible[k] = y.confidence[k] > 0.0;
  }
  return y;
}

}  // namespace armpose
