#pragma once

// Seeded generators for property tests. Each property runs a fixed number of
// cases from a fixed seed so failures replay exactly.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "uvgrasp/geometry.hpp"
#include "uvgrasp/image.hpp"
#include "uvgrasp/uv_map.hpp"

namespace testgen {

using uvgrasp::Vec2;
using uvgrasp::Vec3;

class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return uniform() < p; }

  Vec3 vec3(double lo, double hi) { return { uniform(lo, hi), uniform(lo, hi), uniform(lo, hi) }; }
  Vec3 unit3()
  {
    Vec3 v(normal(), normal(), normal());
    while (v.norm() < 1e-9)
      v = Vec3(normal(), normal(), normal());
    return v.normalized();
  }
  // Uniform point in the ball of radius r.
  Vec3 in_ball(double r) { return unit3() * r * std::cbrt(uniform()); }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

inline Eigen::Matrix3d
random_rotation(Rng& rng)
{
  const Vec3 axis = rng.unit3();
  return Eigen::AngleAxisd(rng.uniform(-std::numbers::pi, std::numbers::pi), axis).toRotationMatrix();
}

inline uvgrasp::RigidTransform
random_rigid(Rng& rng, double max_translation)
{
  uvgrasp::RigidTransform t;
  t.rotation = random_rotation(rng);
  t.translation = rng.vec3(-max_translation, max_translation);
  return t;
}

inline uvgrasp::CameraIntrinsics
random_camera(Rng& rng)
{
  uvgrasp::CameraIntrinsics c;
  c.fx = rng.uniform(100.0, 1500.0);
  c.fy = rng.uniform(100.0, 1500.0);
  c.cx = rng.uniform(0.0, 640.0);
  c.cy = rng.uniform(0.0, 480.0);
  c.width = 640;
  c.height = 480;
  return c;
}

// A point in front of the camera.
inline Vec3
random_visible_point(Rng& rng)
{
  return { rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(0.05, 10.0) };
}

// Regular n x n grid patch over [0, 1]^2 in UV, mapped to a bumpy surface
// facing the camera at depth `depth`. Every UV triangle is a half cell.
inline uvgrasp::Mesh
grid_patch(int n, double size, double depth, Rng& rng, double bump = 0.0)
{
  uvgrasp::Mesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double s = static_cast<double>(i) / n;
      const double t = static_cast<double>(j) / n;
      m.uv_template.push_back(Vec2(0.02 + 0.96 * s, 0.02 + 0.96 * t));
      m.vertices.push_back(Vec3((s - 0.5) * size, (t - 0.5) * size, depth + bump * rng.uniform(-1.0, 1.0)));
    }
  auto at = [n](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.faces.push_back({ at(i, j), at(i + 1, j), at(i + 1, j + 1) });
      m.faces.push_back({ at(i, j), at(i + 1, j + 1), at(i, j + 1) });
    }
  return m;
}

inline uvgrasp::Image
random_image(Rng& rng, int w, int h)
{
  uvgrasp::Image img(w, h);
  for (auto& p : img.pixels)
    p = uvgrasp::Rgb(rng.uniform(), rng.uniform(), rng.uniform());
  return img;
}

// Smooth random image: a few random sinusoids per channel, values in [0, 1].
inline uvgrasp::Image
smooth_image(Rng& rng, int w, int h)
{
  uvgrasp::Image img(w, h);
  double fx[3], fy[3], ph[3];
  for (int c = 0; c < 3; ++c) {
    fx[c] = rng.uniform(0.01, 0.1);
    fy[c] = rng.uniform(0.01, 0.1);
    ph[c] = rng.uniform(0.0, 6.28);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y)[c] = 0.5 + 0.4 * std::sin(fx[c] * x + fy[c] * y + ph[c]);
  return img;
}

inline uvgrasp::UVCoordinateMap
random_map(Rng& rng, uvgrasp::GridSize size, double valid_fraction = 0.7)
{
  uvgrasp::UVCoordinateMap m(size);
  for (std::size_t i = 0; i < m.texels.size(); ++i) {
    m.texels[i] = { rng.uniform(0.0, 256.0), rng.uniform(0.0, 256.0), rng.uniform(0.3, 1.0) };
    m.valid[i] = rng.coin(valid_fraction) ? 1 : 0;
  }
  return m;
}

// Axis-aligned cube of half-size h at the origin as a closed 12-triangle
// mesh (outward orientation, no UVs).
inline uvgrasp::Mesh
cube_mesh(double h)
{
  uvgrasp::Mesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(Vec3(i & 1 ? h : -h, i & 2 ? h : -h, i & 4 ? h : -h));
  m.faces = { { 0, 2, 1 }, { 1, 2, 3 }, { 4, 5, 6 }, { 5, 7, 6 }, { 0, 1, 4 }, { 1, 5, 4 },
              { 2, 6, 3 }, { 3, 6, 7 }, { 0, 4, 2 }, { 2, 4, 6 }, { 1, 3, 5 }, { 3, 7, 5 } };
  return m;
}

} // namespace testgen
