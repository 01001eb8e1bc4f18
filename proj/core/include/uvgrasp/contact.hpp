#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "uvgrasp/geometry.hpp"
#include "uvgrasp/spatial.hpp"
#include "uvgrasp/uv_map.hpp"

namespace uvgrasp {

// Hand vertices within this distance of the nearest object vertex are in
// contact (inclusive).
inline constexpr double kContactThresholdMm = 4.0;

// Binary contact grid aligned with a UV coordinate map.
struct ContactMask
{
  GridSize size;
  std::vector<std::uint8_t> bits;

  ContactMask() = default;
  explicit ContactMask(GridSize s)
    : size(s)
    , bits(s.texel_count(), 0)
  {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * size.width + x] != 0; }
  std::size_t count() const;
};

// Sorted, duplicate-free hand vertex indices.
struct ContactVertexSet
{
  std::vector<std::uint32_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  bool contains(std::uint32_t i) const;
  bool is_subset_of(const ContactVertexSet& other) const;
};

ContactVertexSet
contact_vertices(const Mesh& hand, const ObjectQuery& object, double threshold_mm = kContactThresholdMm);

// Errors: EmptyMesh when the object has no vertices.
ContactVertexSet
contact_vertices(const Mesh& hand, const Mesh& object, double threshold_mm = kContactThresholdMm);

// Sets every texel covered by a UV face whose three vertices are all
// contacts.
ContactMask
rasterize_contact_mask(const ContactVertexSet& contacts, const Mesh& hand, GridSize size = kDefaultUVResolution);

// |a & b| / |a | b|; 1 when both masks are empty. Errors: DimensionMismatch.
double
mask_iou(const ContactMask& a, const ContactMask& b);

// 8-neighbourhood dilation by `radius` texels.
ContactMask
dilate(const ContactMask& mask, int radius = 1);

// Vertices whose bilinear footprint touches the mask after a one-texel
// dilation.
ContactVertexSet
restrict_penetration_candidates(const ContactMask& mask, const Mesh& hand);

// Binary "CMSK" grid: same 16-byte header as UVCM (channels = 1) followed by
// the row-major u8 payload.
void
save_cmsk(const ContactMask& mask, const std::filesystem::path& path);

ContactMask
load_cmsk(const std::filesystem::path& path);

} // namespace uvgrasp
