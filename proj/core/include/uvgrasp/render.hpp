#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uvgrasp/geometry.hpp"
#include "uvgrasp/image.hpp"
#include "uvgrasp/uv_map.hpp"

namespace uvgrasp {

// RGB texture aligned with the UV template grid. Texels without a source
// sample are absent.
struct TextureMap
{
  GridSize size;
  std::vector<Rgb> texels;
  std::vector<std::uint8_t> present;

  TextureMap() = default;
  explicit TextureMap(GridSize s, const Rgb& fill = Rgb::Zero(), bool all_present = false)
    : size(s)
    , texels(s.texel_count(), fill)
    , present(s.texel_count(), all_present ? 1 : 0)
  {}

  // Bilinear lookup at template UV (s, t) with clamp-to-edge addressing;
  // absent texels are skipped and the remaining weights renormalized.
  // Returns black when all four neighbours are absent.
  Rgb sample(const Vec2& uv) const;
};

struct RenderOutput
{
  Image color;
  std::vector<std::uint8_t> silhouette;  // row-major, 1 = covered
  std::vector<double> depth;             // meters; +inf off the silhouette

  std::size_t silhouette_area() const;
};

enum class RenderMode {
  Serial,
  // Faces are split across threads, each with a private z-buffer; buffers are
  // merged by (depth, face index), which reproduces the serial result.
  Parallel,
};

// Bilinear image sample at each valid texel's stored (u, v). Texels outside
// the image or invalid in the map are absent.
TextureMap
extract_texture(const Image& image, const UVCoordinateMap& map);

// Unlit z-buffer rasterization with pixel-center coverage, no back-face
// culling and perspective-correct UV interpolation.
// Errors: NonPositiveDepth, MissingUV.
RenderOutput
render(const Mesh& mesh, const TextureMap& texture, const CameraIntrinsics& camera,
       RenderMode mode = RenderMode::Serial, int threads = 0);

// Pixelwise product of the image with the silhouette. Errors:
// DimensionMismatch.
Image
masked_target(const Image& image, const std::vector<std::uint8_t>& silhouette);

// Textures are stored as RGBA PNGs over the texel grid; alpha 0 marks an
// absent texel.
void
save_texture_png(const TextureMap& texture, const std::filesystem::path& path);

TextureMap
load_texture_png(const std::filesystem::path& path);

} // namespace uvgrasp
