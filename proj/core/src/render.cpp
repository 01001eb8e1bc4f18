#include "uvgrasp/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Fragment
{
  double depth = kInf;
  std::int64_t face = -1;
  Vec2 uv = Vec2::Zero();
};

struct Projected
{
  double u, v, inv_z;
};

void
rasterize_faces(const Mesh& mesh, const std::vector<Projected>& proj, const CameraIntrinsics& camera, std::size_t begin,
                std::size_t end, std::vector<Fragment>& frags)
{
  const int w = camera.width;
  const int h = camera.height;
  for (std::size_t f = begin; f < end; ++f) {
    const auto& face = mesh.faces[f];
    const auto& a = proj[face[0]];
    const auto& b = proj[face[1]];
    const auto& c = proj[face[2]];
    const double area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
    if (area == 0.0)
      continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({ a.u, b.u, c.u }) - 0.5)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({ a.u, b.u, c.u }) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({ a.v, b.v, c.v }) - 0.5)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({ a.v, b.v, c.v }) - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double l1 = ((px - a.u) * (c.v - a.v) - (py - a.v) * (c.u - a.u)) / area;
        const double l2 = ((b.u - a.u) * (py - a.v) - (b.v - a.v) * (px - a.u)) / area;
        const double l0 = 1.0 - l1 - l2;
        if (l0 < -kCoverageTolerance || l1 < -kCoverageTolerance || l2 < -kCoverageTolerance)
          continue;
        const double w0 = l0 * a.inv_z;
        const double w1 = l1 * b.inv_z;
        const double w2 = l2 * c.inv_z;
        const double inv_z = w0 + w1 + w2;
        const double depth = 1.0 / inv_z;
        auto& frag = frags[static_cast<std::size_t>(y) * w + x];
        if (depth < frag.depth) {
          frag.depth = depth;
          frag.face = static_cast<std::int64_t>(f);
          frag.uv = (w0 * mesh.uv_template[face[0]] + w1 * mesh.uv_template[face[1]] + w2 * mesh.uv_template[face[2]]) /
                    inv_z;
        }
      }
    }
  }
}

} // namespace

Rgb
TextureMap::sample(const Vec2& uv) const
{
  const double x = uv.x() * size.width - 0.5;
  const double y = uv.y() * size.height - 0.5;
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  Rgb acc = Rgb::Zero();
  double total = 0.0;
  for (int dy = 0; dy <= 1; ++dy)
    for (int dx = 0; dx <= 1; ++dx) {
      const double wgt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
      if (wgt <= 0.0)
        continue;
      const int cx = std::clamp(x0 + dx, 0, size.width - 1);
      const int cy = std::clamp(y0 + dy, 0, size.height - 1);
      const auto idx = static_cast<std::size_t>(cy) * size.width + cx;
      if (!present[idx])
        continue;
      acc += wgt * texels[idx];
      total += wgt;
    }
  return total > 0.0 ? Rgb(acc / total) : Rgb(Rgb::Zero());
}

std::size_t
RenderOutput::silhouette_area() const
{
  return static_cast<std::size_t>(std::count(silhouette.begin(), silhouette.end(), std::uint8_t{ 1 }));
}

TextureMap
extract_texture(const Image& image, const UVCoordinateMap& map)
{
  TextureMap tex(map.size);
  if (image.width < 1 || image.height < 1)
    return tex;
  for (std::size_t i = 0; i < map.texels.size(); ++i) {
    if (!map.valid[i])
      continue;
    const auto& t = map.texels[i];
    if (!(t.u >= 0.0 && t.u <= image.width && t.v >= 0.0 && t.v <= image.height))
      continue;
    const double x = t.u - 0.5;
    const double y = t.v - 0.5;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    auto px = [&](int xi, int yi) -> const Rgb& {
      return image.at(std::clamp(xi, 0, image.width - 1), std::clamp(yi, 0, image.height - 1));
    };
    tex.texels[i] = (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x0 + 1, y0) +
                    (1 - fx) * fy * px(x0, y0 + 1) + fx * fy * px(x0 + 1, y0 + 1);
    tex.present[i] = 1;
  }
  return tex;
}

RenderOutput
render(const Mesh& mesh, const TextureMap& texture, const CameraIntrinsics& camera, RenderMode mode, int threads)
{
  camera.validate();
  mesh.validate();
  if (!mesh.has_uv())
    fail(ErrorCode::MissingUV, "render needs a UV template");

  std::vector<Projected> proj;
  proj.reserve(mesh.vertex_count());
  for (const auto& v : mesh.vertices) {
    const auto p = project(v, camera);
    proj.push_back({ p.u, p.v, 1.0 / p.d });
  }

  const auto pixel_count = static_cast<std::size_t>(camera.width) * static_cast<std::size_t>(camera.height);
  std::vector<Fragment> frags(pixel_count);
  if (mode == RenderMode::Serial) {
    rasterize_faces(mesh, proj, camera, 0, mesh.faces.size(), frags);
  } else {
    const auto n = static_cast<std::size_t>(
      threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::vector<Fragment>> partial(n, std::vector<Fragment>(pixel_count));
    std::vector<std::thread> pool;
    const auto chunk = (mesh.faces.size() + n - 1) / n;
    for (std::size_t t = 0; t < n; ++t) {
      const auto begin = std::min(mesh.faces.size(), t * chunk);
      const auto end = std::min(mesh.faces.size(), begin + chunk);
      pool.emplace_back([&, t, begin, end] { rasterize_faces(mesh, proj, camera, begin, end, partial[t]); });
    }
    for (auto& th : pool)
      th.join();
    for (const auto& part : partial)
      for (std::size_t i = 0; i < pixel_count; ++i) {
        const auto& cand = part[i];
        auto& best = frags[i];
        if (cand.face >= 0 &&
            (cand.depth < best.depth || (cand.depth == best.depth && cand.face < best.face)))
          best = cand;
      }
  }

  RenderOutput out;
  out.color = Image(camera.width, camera.height);
  out.silhouette.assign(pixel_count, 0);
  out.depth.assign(pixel_count, kInf);
  for (std::size_t i = 0; i < pixel_count; ++i) {
    if (frags[i].face < 0)
      continue;
    out.silhouette[i] = 1;
    out.depth[i] = frags[i].depth;
    out.color.pixels[i] = texture.sample(frags[i].uv);
  }
  return out;
}

Image
masked_target(const Image& image, const std::vector<std::uint8_t>& silhouette)
{
  if (silhouette.size() != image.pixels.size())
    fail(ErrorCode::DimensionMismatch, "silhouette does not match image size");
  Image out = image;
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    if (!silhouette[i])
      out.pixels[i] = Rgb::Zero();
  return out;
}

void
save_texture_png(const TextureMap& texture, const std::filesystem::path& path)
{
  Image img(texture.size.width, texture.size.height);
  std::vector<std::uint8_t> alpha(texture.texels.size(), 0);
  for (std::size_t i = 0; i < texture.texels.size(); ++i)
    if (texture.present[i]) {
      img.pixels[i] = texture.texels[i];
      alpha[i] = 255;
    }
  save_png(img, path, &alpha);
}

TextureMap
load_texture_png(const std::filesystem::path& path)
{
  std::vector<std::uint8_t> alpha;
  const auto img = load_png(path, &alpha);
  TextureMap tex(GridSize{ img.width, img.height });
  tex.texels = img.pixels;
  for (std::size_t i = 0; i < alpha.size(); ++i)
    tex.present[i] = alpha[i] >= 128 ? 1 : 0;
  return tex;
}

} // namespace uvgrasp
