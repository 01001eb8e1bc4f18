#include "uvgrasp/contact.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"
#include "uvgrasp/error.hpp"

namespace uvgrasp {

std::size_t
ContactMask::count() const
{
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

bool
ContactVertexSet::contains(std::uint32_t i) const
{
  return std::binary_search(indices.begin(), indices.end(), i);
}

bool
ContactVertexSet::is_subset_of(const ContactVertexSet& other) const
{
  return std::includes(other.indices.begin(), other.indices.end(), indices.begin(), indices.end());
}

ContactVertexSet
contact_vertices(const Mesh& hand, const ObjectQuery& object, double threshold_mm)
{
  const double threshold = threshold_mm * kMetersPerMillimeter;
  ContactVertexSet set;
  for (std::size_t i = 0; i < hand.vertices.size(); ++i)
    if (object.nearest(hand.vertices[i]).distance <= threshold)
      set.indices.push_back(static_cast<std::uint32_t>(i));
  return set;
}

ContactVertexSet
contact_vertices(const Mesh& hand, const Mesh& object, double threshold_mm)
{
  return contact_vertices(hand, ObjectQuery(object), threshold_mm);
}

ContactMask
rasterize_contact_mask(const ContactVertexSet& contacts, const Mesh& hand, GridSize size)
{
  if (size.width < 1 || size.height < 1)
    fail(ErrorCode::EmptyResolution, "mask resolution must be at least 1x1");
  if (!hand.has_uv())
    fail(ErrorCode::MissingUV, "hand mesh has no UV template");
  ContactMask mask(size);
  if (contacts.empty())
    return mask;
  for (const auto& f : hand.faces) {
    if (!contacts.contains(f[0]) || !contacts.contains(f[1]) || !contacts.contains(f[2]))
      continue;
    for_each_covered_texel(hand.uv_template[f[0]], hand.uv_template[f[1]], hand.uv_template[f[2]], size,
                           [&](int x, int y, const auto&) { mask.bits[static_cast<std::size_t>(y) * size.width + x] = 1; });
  }
  return mask;
}

double
mask_iou(const ContactMask& a, const ContactMask& b)
{
  if (a.size != b.size || a.bits.size() != b.bits.size())
    fail(ErrorCode::DimensionMismatch, "contact masks differ in size");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i] != 0;
    const bool y = b.bits[i] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ContactMask
dilate(const ContactMask& mask, int radius)
{
  ContactMask out(mask.size);
  const int w = mask.size.width;
  const int h = mask.size.height;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y))
        continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < w && ny < h)
            out.bits[static_cast<std::size_t>(ny) * w + nx] = 1;
        }
    }
  return out;
}

ContactVertexSet
restrict_penetration_candidates(const ContactMask& mask, const Mesh& hand)
{
  if (!hand.has_uv())
    fail(ErrorCode::MissingUV, "hand mesh has no UV template");
  const auto grown = dilate(mask, 1);
  const int w = mask.size.width;
  const int h = mask.size.height;
  ContactVertexSet set;
  for (std::size_t i = 0; i < hand.vertices.size(); ++i) {
    const auto& uv = hand.uv_template[i];
    const int x0 = static_cast<int>(std::floor(uv.x() * w - 0.5));
    const int y0 = static_cast<int>(std::floor(uv.y() * h - 0.5));
    bool hit = false;
    for (int dy = 0; dy <= 1 && !hit; ++dy)
      for (int dx = 0; dx <= 1 && !hit; ++dx) {
        const int x = x0 + dx;
        const int y = y0 + dy;
        hit = x >= 0 && y >= 0 && x < w && y < h && grown.at(x, y);
      }
    if (hit)
      set.indices.push_back(static_cast<std::uint32_t>(i));
  }
  return set;
}

void
save_cmsk(const ContactMask& mask, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  detail::write_grid_header(out, "CMSK",
                            { static_cast<std::uint32_t>(mask.size.width), static_cast<std::uint32_t>(mask.size.height), 1 });
  std::vector<std::uint8_t> payload(mask.bits.size());
  std::transform(mask.bits.begin(), mask.bits.end(), payload.begin(), [](auto b) { return b ? 1 : 0; });
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out)
    fail(ErrorCode::IoError, "write failed for " + path.string());
}

ContactMask
load_cmsk(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::IoError, "cannot open " + path.string());
  const auto h = detail::read_grid_header(in, "CMSK");
  if (h.channels != 1)
    fail(ErrorCode::ParseError, "CMSK file must have 1 channel");
  if (h.width == 0 || h.height == 0)
    fail(ErrorCode::EmptyResolution, "CMSK file has an empty grid");
  ContactMask mask(GridSize{ static_cast<int>(h.width), static_cast<int>(h.height) });
  in.read(reinterpret_cast<char*>(mask.bits.data()), static_cast<std::streamsize>(mask.bits.size()));
  if (!in)
    fail(ErrorCode::IoError, "truncated CMSK file " + path.string());
  return mask;
}

} // namespace uvgrasp
