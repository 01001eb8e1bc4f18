#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "uvgrasp/geometry.hpp"

namespace uvgrasp {

// Size of a UV-plane grid in texels.
struct GridSize
{
  int width = 256;
  int height = 256;

  std::size_t texel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool operator==(const GridSize&) const = default;
};

inline constexpr GridSize kDefaultUVResolution{ 256, 256 };

// Texel (x, y) has its center at ((x + 0.5) / W, (y + 0.5) / H) in UV space;
// rows follow the v axis.
inline Vec2
texel_center(int x, int y, GridSize size)
{
  return { (x + 0.5) / size.width, (y + 0.5) / size.height };
}

// Dense map of projected image coordinates and depth over the UV template.
struct UVCoordinateMap
{
  GridSize size;
  std::vector<Uvd> texels;          // row-major
  std::vector<std::uint8_t> valid;  // row-major, 1 = covered by the template

  UVCoordinateMap() = default;
  explicit UVCoordinateMap(GridSize s)
    : size(s)
    , texels(s.texel_count())
    , valid(s.texel_count(), 0)
  {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * size.width + x; }
  const Uvd& at(int x, int y) const { return texels[index(x, y)]; }
  Uvd& at(int x, int y) { return texels[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  std::size_t valid_count() const;
};

// Forward differences along x (columns) and y (rows). A texel is valid when
// it and both forward neighbours are valid.
struct UVGradient
{
  GridSize size;
  std::vector<Uvd> dx;
  std::vector<Uvd> dy;
  std::vector<std::uint8_t> valid;
};

// Barycentric weights of `p` in UV triangle (a, b, c) when `p` is covered
// (all weights >= -kCoverageTolerance). Degenerate triangles cover nothing.
inline constexpr double kCoverageTolerance = 1e-12;

std::optional<std::array<double, 3>>
uv_barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p);

// Calls fn(x, y, weights) for every texel whose center the UV triangle
// covers.
template<class Fn>
void
for_each_covered_texel(const Vec2& a, const Vec2& b, const Vec2& c, GridSize size, Fn&& fn)
{
  const double min_u = std::min({ a.x(), b.x(), c.x() });
  const double max_u = std::max({ a.x(), b.x(), c.x() });
  const double min_v = std::min({ a.y(), b.y(), c.y() });
  const double max_v = std::max({ a.y(), b.y(), c.y() });
  const int x0 = std::max(0, static_cast<int>(std::floor(min_u * size.width - 0.5)));
  const int x1 = std::min(size.width - 1, static_cast<int>(std::ceil(max_u * size.width - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_v * size.height - 0.5)));
  const int y1 = std::min(size.height - 1, static_cast<int>(std::ceil(max_v * size.height - 0.5)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (auto w = uv_barycentric(a, b, c, texel_center(x, y, size)))
        fn(x, y, *w);
}

// Texel ownership of a UV template: the lowest-index face covering each
// texel center, with its barycentric weights. Depends only on the template
// and the resolution.
struct TexelCoverage
{
  GridSize size;
  std::vector<std::int32_t> face;                 // -1 where uncovered
  std::vector<std::array<double, 3>> weights;
};

TexelCoverage
rasterize_coverage(const Mesh& templ, GridSize size);

// Rasterizes per-vertex projections (u, v, d) over the UV template.
// Errors: EmptyResolution, MissingUV, NonPositiveDepth.
UVCoordinateMap
rasterize_coordinate_map(const Mesh& mesh, const CameraIntrinsics& camera, GridSize size = kDefaultUVResolution);

// Precomputed bilinear taps from a map layout to template vertices. Invalid
// neighbours are dropped and the remaining weights renormalized.
class VertexSampler
{
public:
  struct Tap
  {
    std::uint32_t texel = 0;
    double weight = 0.0;
  };

  // Throws NoValidSupport when a vertex has no valid texel among its four
  // bilinear neighbours.
  VertexSampler(GridSize size, const std::vector<std::uint8_t>& valid, const std::vector<Vec2>& uvs);

  std::size_t vertex_count() const { return taps_.size(); }
  const std::vector<Tap>& taps(std::size_t vertex) const { return taps_[vertex]; }

  std::vector<Uvd> sample(const UVCoordinateMap& map) const;

private:
  GridSize size_;
  std::vector<std::vector<Tap>> taps_;
};

std::vector<Uvd>
sample_vertices(const UVCoordinateMap& map, const Mesh& mesh_template);

// Unprojects sampled vertices; faces, UVs and position ids come from the
// template and seam duplicates are welded to their mean position.
Mesh
reconstruct_mesh(const UVCoordinateMap& map, const Mesh& mesh_template, const CameraIntrinsics& camera);

UVGradient
gradient(const UVCoordinateMap& map);

// Same differences with support taken from `mask` instead of map.valid.
UVGradient
gradient(const UVCoordinateMap& map, const std::vector<std::uint8_t>& mask);

// Binary "UVCM" grid: 16-byte header (magic, u32 width, u32 height,
// u32 channels = 3), row-major float32 (u, v, d) per texel, row-major u8
// valid mask. Little-endian.
void
save_uvcm(const UVCoordinateMap& map, const std::filesystem::path& path);

UVCoordinateMap
load_uvcm(const std::filesystem::path& path);

} // namespace uvgrasp
