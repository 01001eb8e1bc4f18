#include "uvgrasp/uv_map.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "uvgrasp/error.hpp"

namespace uvgrasp {

std::size_t
UVCoordinateMap::valid_count() const
{
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{ 1 }));
}

std::optional<std::array<double, 3>>
uv_barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p)
{
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const Vec2 ap = p - a;
  const double area = ab.x() * ac.y() - ab.y() * ac.x();
  if (area == 0.0)
    return std::nullopt;
  const double w1 = (ap.x() * ac.y() - ap.y() * ac.x()) / area;
  const double w2 = (ab.x() * ap.y() - ab.y() * ap.x()) / area;
  const double w0 = 1.0 - w1 - w2;
  if (w0 < -kCoverageTolerance || w1 < -kCoverageTolerance || w2 < -kCoverageTolerance)
    return std::nullopt;
  return std::array<double, 3>{ w0, w1, w2 };
}

TexelCoverage
rasterize_coverage(const Mesh& templ, GridSize size)
{
  if (size.width < 1 || size.height < 1)
    fail(ErrorCode::EmptyResolution, "UV resolution must be at least 1x1");
  templ.validate();
  if (!templ.has_uv())
    fail(ErrorCode::MissingUV, "mesh has no UV template");

  TexelCoverage cov;
  cov.size = size;
  cov.face.assign(size.texel_count(), -1);
  cov.weights.assign(size.texel_count(), { 0.0, 0.0, 0.0 });
  for (std::size_t f = 0; f < templ.faces.size(); ++f) {
    const auto& face = templ.faces[f];
    for_each_covered_texel(templ.uv_template[face[0]], templ.uv_template[face[1]], templ.uv_template[face[2]], size,
                           [&](int x, int y, const std::array<double, 3>& w) {
                             const auto idx = static_cast<std::size_t>(y) * size.width + x;
                             if (cov.face[idx] < 0) {
                               cov.face[idx] = static_cast<std::int32_t>(f);
                               cov.weights[idx] = w;
                             }
                           });
  }
  return cov;
}

UVCoordinateMap
rasterize_coordinate_map(const Mesh& mesh, const CameraIntrinsics& camera, GridSize size)
{
  const auto cov = rasterize_coverage(mesh, size);
  std::vector<Uvd> projected;
  projected.reserve(mesh.vertex_count());
  for (const auto& v : mesh.vertices)
    projected.push_back(project(v, camera));

  UVCoordinateMap map(size);
  for (std::size_t i = 0; i < cov.face.size(); ++i) {
    if (cov.face[i] < 0)
      continue;
    const auto& f = mesh.faces[static_cast<std::size_t>(cov.face[i])];
    const auto& w = cov.weights[i];
    const auto& a = projected[f[0]];
    const auto& b = projected[f[1]];
    const auto& c = projected[f[2]];
    map.texels[i] = { w[0] * a.u + w[1] * b.u + w[2] * c.u, w[0] * a.v + w[1] * b.v + w[2] * c.v,
                      w[0] * a.d + w[1] * b.d + w[2] * c.d };
    map.valid[i] = 1;
  }
  return map;
}

VertexSampler::VertexSampler(GridSize size, const std::vector<std::uint8_t>& valid, const std::vector<Vec2>& uvs)
  : size_(size)
{
  if (valid.size() != size.texel_count())
    fail(ErrorCode::DimensionMismatch, "valid mask does not match grid size");
  taps_.resize(uvs.size());
  for (std::size_t i = 0; i < uvs.size(); ++i) {
    const double x = uvs[i].x() * size.width - 0.5;
    const double y = uvs[i].y() * size.height - 0.5;
    const double x0 = std::floor(x);
    const double y0 = std::floor(y);
    const double fx = x - x0;
    const double fy = y - y0;
    const std::array<std::array<double, 3>, 4> corners{ { { x0, y0, (1 - fx) * (1 - fy) },
                                                          { x0 + 1, y0, fx * (1 - fy) },
                                                          { x0, y0 + 1, (1 - fx) * fy },
                                                          { x0 + 1, y0 + 1, fx * fy } } };
    auto& taps = taps_[i];
    std::vector<Tap> valid_neighbours;
    double total = 0.0;
    for (const auto& [cx, cy, w] : corners) {
      if (cx < 0 || cy < 0 || cx >= size.width || cy >= size.height)
        continue;
      const auto texel = static_cast<std::uint32_t>(cy * size.width + cx);
      if (!valid[texel])
        continue;
      valid_neighbours.push_back({ texel, 0.0 });
      if (w > 0.0) {
        taps.push_back({ texel, w });
        total += w;
      }
    }
    if (valid_neighbours.empty())
      fail(ErrorCode::NoValidSupport,
           "vertex " + std::to_string(i) + " has no valid texel among its bilinear neighbours");
    if (total > 1e-12) {
      for (auto& t : taps)
        t.weight /= total;
    } else {
      // All weight sits on invalid texels: average the valid neighbours.
      taps = valid_neighbours;
      for (auto& t : taps)
        t.weight = 1.0 / static_cast<double>(taps.size());
    }
  }
}

std::vector<Uvd>
VertexSampler::sample(const UVCoordinateMap& map) const
{
  if (map.size != size_)
    fail(ErrorCode::DimensionMismatch, "map size does not match sampler layout");
  std::vector<Uvd> out(taps_.size());
  for (std::size_t i = 0; i < taps_.size(); ++i) {
    Uvd acc{ 0.0, 0.0, 0.0 };
    for (const auto& t : taps_[i]) {
      const auto& p = map.texels[t.texel];
      acc.u += t.weight * p.u;
      acc.v += t.weight * p.v;
      acc.d += t.weight * p.d;
    }
    out[i] = acc;
  }
  return out;
}

std::vector<Uvd>
sample_vertices(const UVCoordinateMap& map, const Mesh& mesh_template)
{
  if (!mesh_template.has_uv())
    fail(ErrorCode::MissingUV, "template has no UV coordinates");
  return VertexSampler(map.size, map.valid, mesh_template.uv_template).sample(map);
}

Mesh
reconstruct_mesh(const UVCoordinateMap& map, const Mesh& mesh_template, const CameraIntrinsics& camera)
{
  const auto samples = sample_vertices(map, mesh_template);
  Mesh out;
  out.faces = mesh_template.faces;
  out.uv_template = mesh_template.uv_template;
  out.position_ids = mesh_template.position_ids;
  out.vertices.reserve(samples.size());
  for (const auto& s : samples)
    out.vertices.push_back(unproject(s, camera));
  weld_positions(out);
  return out;
}

UVGradient
gradient(const UVCoordinateMap& map, const std::vector<std::uint8_t>& mask)
{
  if (mask.size() != map.size.texel_count() || map.texels.size() != map.size.texel_count())
    fail(ErrorCode::DimensionMismatch, "mask does not match map size");
  const int w = map.size.width;
  const int h = map.size.height;
  UVGradient g;
  g.size = map.size;
  g.dx.assign(map.size.texel_count(), {});
  g.dy.assign(map.size.texel_count(), {});
  g.valid.assign(map.size.texel_count(), 0);
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      const auto i = map.index(x, y);
      const auto ix = map.index(x + 1, y);
      const auto iy = map.index(x, y + 1);
      if (!mask[i] || !mask[ix] || !mask[iy])
        continue;
      const auto& p = map.texels[i];
      const auto& px = map.texels[ix];
      const auto& py = map.texels[iy];
      g.dx[i] = { px.u - p.u, px.v - p.v, px.d - p.d };
      g.dy[i] = { py.u - p.u, py.v - p.v, py.d - p.d };
      g.valid[i] = 1;
    }
  }
  return g;
}

UVGradient
gradient(const UVCoordinateMap& map)
{
  return gradient(map, map.valid);
}

void
save_uvcm(const UVCoordinateMap& map, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  detail::write_grid_header(out, "UVCM",
                            { static_cast<std::uint32_t>(map.size.width), static_cast<std::uint32_t>(map.size.height), 3 });
  for (const auto& t : map.texels) {
    detail::write_f32(out, static_cast<float>(t.u));
    detail::write_f32(out, static_cast<float>(t.v));
    detail::write_f32(out, static_cast<float>(t.d));
  }
  out.write(reinterpret_cast<const char*>(map.valid.data()), static_cast<std::streamsize>(map.valid.size()));
  if (!out)
    fail(ErrorCode::IoError, "write failed for " + path.string());
}

UVCoordinateMap
load_uvcm(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::IoError, "cannot open " + path.string());
  const auto h = detail::read_grid_header(in, "UVCM");
  if (h.channels != 3)
    fail(ErrorCode::ParseError, "UVCM file must have 3 channels");
  if (h.width == 0 || h.height == 0)
    fail(ErrorCode::EmptyResolution, "UVCM file has an empty grid");
  UVCoordinateMap map(GridSize{ static_cast<int>(h.width), static_cast<int>(h.height) });
  for (auto& t : map.texels) {
    t.u = detail::read_f32(in);
    t.v = detail::read_f32(in);
    t.d = detail::read_f32(in);
  }
  in.read(reinterpret_cast<char*>(map.valid.data()), static_cast<std::streamsize>(map.valid.size()));
  if (!in)
    fail(ErrorCode::IoError, "truncated UVCM file " + path.string());
  for (auto& v : map.valid)
    v = v ? 1 : 0;
  return map;
}

} // namespace uvgrasp
