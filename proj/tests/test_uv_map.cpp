#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "uvgrasp/error.hpp"
#include "uvgrasp/scene.hpp"
#include "uvgrasp/uv_map.hpp"

using namespace uvgrasp;

namespace {

Mesh
single_triangle(const Vec2& a, const Vec2& b, const Vec2& c)
{
  Mesh m;
  m.vertices = { Vec3(-0.1, -0.1, 1.0), Vec3(0.1, -0.05, 1.2), Vec3(0.0, 0.1, 0.9) };
  m.uv_template = { a, b, c };
  m.faces = { { 0, 1, 2 } };
  return m;
}

CameraIntrinsics
camera()
{
  return SceneSpec::default_camera();
}

double
max_abs(const Uvd& a, const Uvd& b)
{
  return std::max({ std::abs(a.u - b.u), std::abs(a.v - b.v), std::abs(a.d - b.d) });
}

} // namespace

TEST_CASE("a texel at a vertex UV stores that vertex's projection exactly")
{
  const GridSize size{ 64, 64 };
  const Vec2 a = texel_center(10, 12, size);
  const auto m = single_triangle(a, a + Vec2(0.3, 0.05), a + Vec2(0.1, 0.4));
  const auto map = rasterize_coordinate_map(m, camera(), size);
  REQUIRE(map.is_valid(10, 12));
  const Uvd expect = project(m.vertices[0], camera());
  CHECK(map.at(10, 12).u == expect.u);
  CHECK(map.at(10, 12).v == expect.v);
  CHECK(map.at(10, 12).d == expect.d);
}

TEST_CASE("a texel at the UV centroid stores the mean projection")
{
  const GridSize size{ 64, 64 };
  const Vec2 c0 = texel_center(30, 30, size);
  const double d = 0.1;
  const auto m = single_triangle(c0 + Vec2(-d, -d), c0 + Vec2(2 * d, -d), c0 + Vec2(-d, 2 * d));
  const auto map = rasterize_coordinate_map(m, camera(), size);
  REQUIRE(map.is_valid(30, 30));
  const auto pa = project(m.vertices[0], camera()), pb = project(m.vertices[1], camera()),
             pc = project(m.vertices[2], camera());
  const Uvd mean{ (pa.u + pb.u + pc.u) / 3, (pa.v + pb.v + pc.v) / 3, (pa.d + pb.d + pc.d) / 3 };
  CHECK(max_abs(map.at(30, 30), mean) < 1e-10);
}

TEST_CASE("property: rasterizer equals the brute-force per-texel oracle")
{
  testgen::Rng rng(17);
  SceneSpec spec;
  spec.seed = 2;
  const auto hand = make_posed_hand(spec);
  const GridSize size{ 128, 128 };
  const auto map = rasterize_coordinate_map(hand, camera(), size);
  for (int i = 0; i < 1000; ++i) {
    const int x = rng.integer(0, size.width - 1), y = rng.integer(0, size.height - 1);
    const auto o = oracle::coordinate_texel(hand, camera(), size, x, y);
    CHECK(map.is_valid(x, y) == o.valid);
    if (o.valid) {
      CHECK(map.at(x, y).u == o.value.u);
      CHECK(map.at(x, y).v == o.value.v);
      CHECK(map.at(x, y).d == o.value.d);
    }
  }
}

TEST_CASE("property: the valid mask depends only on the template")
{
  testgen::Rng rng(2);
  const auto patch = testgen::grid_patch(6, 0.2, 1.0, rng, 0.01);
  const auto ref = rasterize_coordinate_map(patch, camera(), { 48, 40 });
  for (int t = 0; t < 10; ++t) {
    auto cam = testgen::random_camera(rng);
    auto moved = patch;
    for (auto& v : moved.vertices)
      v += Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(0.0, 1.0));
    CHECK(rasterize_coordinate_map(moved, cam, { 48, 40 }).valid == ref.valid);
  }
}

TEST_CASE("property: translating the mesh changes texels as the projection dictates")
{
  testgen::Rng rng(23);
  const auto patch = testgen::grid_patch(5, 0.2, 1.0, rng, 0.02);
  const GridSize size{ 40, 40 };
  const auto cov = rasterize_coverage(patch, size);
  for (int t = 0; t < 10; ++t) {
    const Vec3 shift = rng.vec3(-0.2, 0.2);
    auto moved = patch;
    for (auto& v : moved.vertices)
      v += shift;
    const auto map = rasterize_coordinate_map(moved, camera(), size);
    for (std::size_t i = 0; i < cov.face.size(); ++i) {
      if (cov.face[i] < 0)
        continue;
      const auto& f = patch.faces[static_cast<std::size_t>(cov.face[i])];
      const auto& w = cov.weights[i];
      Uvd expect{ 0, 0, 0 };
      for (int k = 0; k < 3; ++k) {
        const Uvd p = project(patch.vertices[f[k]] + shift, camera());
        expect.u += w[k] * p.u;
        expect.v += w[k] * p.v;
        expect.d += w[k] * p.d;
      }
      CHECK(max_abs(map.texels[i], expect) < 1e-9);
    }
  }
}

TEST_CASE("sampling a constant map returns the constant")
{
  testgen::Rng rng(1);
  const auto patch = testgen::grid_patch(4, 0.1, 1.0, rng);
  auto map = rasterize_coordinate_map(patch, camera(), { 32, 32 });
  for (std::size_t i = 0; i < map.texels.size(); ++i)
    if (map.valid[i])
      map.texels[i] = { 3.0, 4.0, 0.5 };
  for (const auto& s : sample_vertices(map, patch)) {
    CHECK(s.u == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(s.v == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(s.d == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("a vertex UV on a texel center samples that texel exactly")
{
  const GridSize size{ 16, 16 };
  UVCoordinateMap map(size);
  for (std::size_t i = 0; i < map.texels.size(); ++i) {
    map.texels[i] = { static_cast<double>(i), 2.0 * i, 1.0 + i };
    map.valid[i] = 1;
  }
  Mesh m = single_triangle(texel_center(3, 4, size), texel_center(9, 4, size), texel_center(5, 11, size));
  const auto s = sample_vertices(map, m);
  CHECK(s[0].u == map.at(3, 4).u);
  CHECK(s[1].v == map.at(9, 4).v);
  CHECK(s[2].d == map.at(5, 11).d);
}

TEST_CASE("invalid neighbours are dropped and the remaining weights renormalized")
{
  const GridSize size{ 8, 8 };
  UVCoordinateMap map(size);
  map.at(2, 2) = { 1, 1, 1 };
  map.at(3, 2) = { 5, 5, 5 };
  map.at(2, 3) = { 100, 100, 100 };
  map.valid[map.index(2, 2)] = 1;
  map.valid[map.index(3, 2)] = 1;
  // Bilinear position: fx = 0.25, fy = 0.5 between texels (2,2) and (3,3).
  const Vec2 uv((2.25 + 0.5) / 8.0, (2.5 + 0.5) / 8.0);
  const VertexSampler sampler(size, map.valid, { uv });
  const auto out = sampler.sample(map);
  // Weights 0.75 * 0.5 and 0.25 * 0.5, renormalized to 0.75 and 0.25.
  CHECK(out[0].u == doctest::Approx(0.75 * 1 + 0.25 * 5));
}

TEST_CASE("a vertex without valid support is an error")
{
  const GridSize size{ 8, 8 };
  std::vector<std::uint8_t> valid(size.texel_count(), 0);
  valid[0] = 1;
  try {
    VertexSampler(size, valid, { Vec2(0.9, 0.9) });
    FAIL("expected NoValidSupport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoValidSupport);
  }
}

TEST_CASE("rasterization argument errors")
{
  const auto m = single_triangle(Vec2(0.1, 0.1), Vec2(0.9, 0.1), Vec2(0.1, 0.9));
  try {
    rasterize_coordinate_map(m, camera(), { 0, 4 });
    FAIL("expected EmptyResolution");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyResolution);
  }
  auto no_uv = m;
  no_uv.uv_template.clear();
  try {
    rasterize_coordinate_map(no_uv, camera(), { 4, 4 });
    FAIL("expected MissingUV");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingUV);
  }
  auto behind = m;
  behind.vertices[0].z() = -1.0;
  try {
    rasterize_coordinate_map(behind, camera(), { 4, 4 });
    FAIL("expected NonPositiveDepth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveDepth);
  }
}

TEST_CASE("property: samples at vertices match the direct projection within a texel-size bound")
{
  testgen::Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const auto patch = testgen::grid_patch(8, 0.15, rng.uniform(0.4, 1.0), rng, 0.005);
    const GridSize size{ 256, 256 };
    const auto map = rasterize_coordinate_map(patch, camera(), size);
    const auto s = sample_vertices(map, patch);
    for (std::size_t i = 0; i < patch.vertex_count(); ++i) {
      const Uvd p = project(patch.vertices[i], camera());
      // Neighbouring texels are at most sqrt(2) texels away; the projected
      // patch changes by under 5 px and 1 cm per texel.
      CHECK(std::abs(s[i].u - p.u) < 5.0);
      CHECK(std::abs(s[i].v - p.v) < 5.0);
      CHECK(std::abs(s[i].d - p.d) < 0.01);
    }
  }
}

TEST_CASE("three-vertex template with texel-aligned UVs is recovered exactly")
{
  const GridSize size{ 32, 32 };
  const auto m = single_triangle(texel_center(2, 2, size), texel_center(29, 3, size), texel_center(4, 28, size));
  const auto rec = reconstruct_mesh(rasterize_coordinate_map(m, camera(), size), m, camera());
  for (int i = 0; i < 3; ++i)
    CHECK((rec.vertices[i] - m.vertices[i]).norm() <= 1e-12);
}

TEST_CASE("property: a far-away plane stays planar after the round trip")
{
  testgen::Rng rng(41);
  for (int t = 0; t < 5; ++t) {
    auto patch = testgen::grid_patch(10, 1.0, 0.0, rng);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(rng.uniform(-0.5, 0.5), rng.unit3()).toRotationMatrix();
    for (auto& v : patch.vertices)
      v = rot * v + Vec3(0, 0, 20.0);
    const auto rec = reconstruct_mesh(rasterize_coordinate_map(patch, camera()), patch, camera());
    // Plane-fit residual of the reconstruction.
    const Vec3 c = centroid(rec.vertices);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& v : rec.vertices)
      cov += (v - c) * (v - c).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Vec3 n = eig.eigenvectors().col(0);
    double worst = 0.0;
    for (const auto& v : rec.vertices)
      worst = std::max(worst, std::abs(n.dot(v - c)));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("property: reconstruct(rasterize(hand)) stays within 1 mm")
{
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    const auto hand = make_posed_hand(spec);
    const auto rec = reconstruct_mesh(rasterize_coordinate_map(hand, camera()), hand, camera());
    double worst = 0.0;
    for (std::size_t i = 0; i < hand.vertex_count(); ++i)
      worst = std::max(worst, (rec.vertices[i] - hand.vertices[i]).norm());
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("gradient of constant and ramp maps")
{
  const GridSize size{ 10, 7 };
  UVCoordinateMap map(size);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      map.at(x, y) = { static_cast<double>(x), 2.0, 1.0 };
      map.valid[map.index(x, y)] = 1;
    }
  const auto g = gradient(map);
  for (int y = 0; y + 1 < size.height; ++y)
    for (int x = 0; x + 1 < size.width; ++x) {
      const auto i = map.index(x, y);
      REQUIRE(g.valid[i]);
      CHECK(g.dx[i].u == 1.0);
      CHECK(g.dx[i].v == 0.0);
      CHECK(g.dy[i].u == 0.0);
      CHECK(g.dy[i].d == 0.0);
    }
  CHECK_FALSE(g.valid[map.index(size.width - 1, 0)]);
}

TEST_CASE("property: gradient equals the forward-difference oracle")
{
  testgen::Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const GridSize size{ rng.integer(2, 20), rng.integer(2, 20) };
    const auto map = testgen::random_map(rng, size);
    const auto g = gradient(map);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) {
        const auto i = map.index(x, y);
        const bool ok = x + 1 < size.width && y + 1 < size.height && map.is_valid(x, y) &&
                        map.is_valid(x + 1, y) && map.is_valid(x, y + 1);
        CHECK(static_cast<bool>(g.valid[i]) == ok);
        if (ok) {
          CHECK(g.dx[i].u == map.at(x + 1, y).u - map.at(x, y).u);
          CHECK(g.dx[i].d == map.at(x + 1, y).d - map.at(x, y).d);
          CHECK(g.dy[i].v == map.at(x, y + 1).v - map.at(x, y).v);
        }
      }
  }
}

TEST_CASE("UVCM files round trip at float32 precision")
{
  testgen::Rng rng(7);
  const auto map = testgen::random_map(rng, { 13, 9 });
  const auto path = std::filesystem::temp_directory_path() / "uvgrasp_test.uvcm";
  save_uvcm(map, path);
  const auto back = load_uvcm(path);
  CHECK(back.size == map.size);
  CHECK(back.valid == map.valid);
  for (std::size_t i = 0; i < map.texels.size(); ++i) {
    CHECK(back.texels[i].u == static_cast<double>(static_cast<float>(map.texels[i].u)));
    CHECK(back.texels[i].d == static_cast<double>(static_cast<float>(map.texels[i].d)));
  }
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOPE0000";
  }
  try {
    load_uvcm(path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  std::filesystem::remove(path);
}
