#include <doctest.h>

#include "support/generators.hpp"
#include "uvgrasp/error.hpp"
#include "uvgrasp/geometry.hpp"

using namespace uvgrasp;

namespace {

CameraIntrinsics
cam100()
{
  CameraIntrinsics c;
  c.fx = c.fy = 100.0;
  c.cx = c.cy = 50.0;
  c.width = c.height = 100;
  return c;
}

} // namespace

TEST_CASE("project follows the pinhole formula")
{
  const auto c = cam100();
  auto p = project(Vec3(0, 0, 1), c);
  CHECK(p.u == 50.0);
  CHECK(p.v == 50.0);
  CHECK(p.d == 1.0);
  p = project(Vec3(0.1, 0, 1), c);
  CHECK(p.u == doctest::Approx(60.0).epsilon(1e-15));
  CHECK(p.v == 50.0);
}

TEST_CASE("unproject inverts by hand")
{
  const auto c = cam100();
  auto q = unproject({ 50, 50, 1 }, c);
  CHECK(q.isApprox(Vec3(0, 0, 1)));
  q = unproject({ 60, 50, 2 }, c);
  CHECK(q.x() == doctest::Approx(0.2));
  CHECK(q.y() == doctest::Approx(0.0));
  CHECK(q.z() == 2.0);
}

TEST_CASE("non-positive depth is rejected")
{
  const auto c = cam100();
  CHECK_THROWS_AS(project(Vec3(0, 0, 0), c), Error);
  CHECK_THROWS_AS(project(Vec3(0, 0, -1), c), Error);
  CHECK_THROWS_AS(unproject({ 1, 1, 0 }, c), Error);
  try {
    project(Vec3(0, 0, -1), c);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveDepth);
  }
}

TEST_CASE("property: project and unproject are mutually inverse")
{
  testgen::Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto c = testgen::random_camera(rng);
    const Vec3 p = testgen::random_visible_point(rng);
    const Vec3 back = unproject(project(p, c), c);
    CHECK((back - p).norm() <= 1e-9 * p.norm());
    const Uvd uvd{ rng.uniform(-100, 700), rng.uniform(-100, 600), rng.uniform(0.01, 20.0) };
    const Uvd again = project(unproject(uvd, c), c);
    CHECK(std::abs(again.u - uvd.u) <= 1e-9 * (std::abs(uvd.u) + 1.0));
    CHECK(std::abs(again.v - uvd.v) <= 1e-9 * (std::abs(uvd.v) + 1.0));
    CHECK(std::abs(again.d - uvd.d) <= 1e-9 * uvd.d);
  }
}

TEST_CASE("cube volume, watertightness and orientation")
{
  const auto cube = testgen::cube_mesh(0.5);
  CHECK(is_watertight(cube));
  CHECK(signed_volume(cube) == doctest::Approx(1.0).epsilon(1e-12));
  auto flipped = cube;
  for (auto& f : flipped.faces)
    std::swap(f[1], f[2]);
  CHECK(signed_volume(flipped) == doctest::Approx(-1.0).epsilon(1e-12));

  auto open = cube;
  open.faces.pop_back();
  CHECK_FALSE(is_watertight(open));
  CHECK_THROWS_AS(require_watertight(open), Error);
}

TEST_CASE("seam duplicates close a mesh over position ids")
{
  // Cube whose vertex 0 is split into two UV copies.
  auto cube = testgen::cube_mesh(1.0);
  cube.vertices.push_back(cube.vertices[0]);
  for (std::uint32_t i = 0; i < 8; ++i)
    cube.position_ids.push_back(i);
  cube.position_ids.push_back(0);
  cube.faces[0][0] = 8;
  CHECK(cube.position_count() == 8);
  CHECK(is_watertight(cube));
  cube.position_ids.back() = 8;
  CHECK_FALSE(is_watertight(cube));
}

TEST_CASE("weld_positions moves duplicates to their mean")
{
  Mesh m;
  m.vertices = { Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.2, 0, 0) };
  m.faces = { { 0, 1, 2 } };
  m.position_ids = { 0, 1, 2, 0 };
  weld_positions(m);
  CHECK(m.vertices[0].isApprox(Vec3(0.1, 0, 0)));
  CHECK(m.vertices[3] == m.vertices[0]);
  CHECK(m.vertices[1] == Vec3(1, 0, 0));
}

TEST_CASE("property: vertex_sampling_gap is the largest circumradius")
{
  testgen::Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    Mesh m;
    const int n = rng.integer(1, 6);
    double oracle = 0.0;
    for (int f = 0; f < n; ++f) {
      const Vec3 a = rng.vec3(-1, 1), b = rng.vec3(-1, 1), c = rng.vec3(-1, 1);
      const auto base = static_cast<std::uint32_t>(m.vertices.size());
      m.vertices.insert(m.vertices.end(), { a, b, c });
      m.faces.push_back({ base, base + 1, base + 2 });
      const double la = (b - c).norm(), lb = (a - c).norm(), lc = (a - b).norm();
      const double area = 0.5 * (b - a).cross(c - a).norm();
      oracle = std::max(oracle, la * lb * lc / (4.0 * area));
    }
    CHECK(vertex_sampling_gap(m) == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("property: transformed applies the rigid map per vertex")
{
  testgen::Rng rng(8);
  const auto cube = testgen::cube_mesh(0.3);
  for (int t = 0; t < 20; ++t) {
    const auto tr = testgen::random_rigid(rng, 1.0);
    const auto moved = transformed(cube, tr);
    for (std::size_t i = 0; i < cube.vertex_count(); ++i)
      CHECK((moved.vertices[i] - (tr.rotation * cube.vertices[i] + tr.translation)).norm() < 1e-12);
    CHECK(signed_volume(moved) == doctest::Approx(signed_volume(cube)).epsilon(1e-10));
  }
}

TEST_CASE("mesh validation catches inconsistent arrays")
{
  Mesh m;
  m.vertices = { Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0) };
  m.faces = { { 0, 1, 3 } };
  CHECK_THROWS_AS(m.validate(), Error);
  m.faces = { { 0, 1, 2 } };
  CHECK_NOTHROW(m.validate());
  m.uv_template = { Vec2(0, 0) };
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("bounding box and centroid")
{
  const std::vector<Vec3> pts = { Vec3(0, 0, 0), Vec3(2, 1, -1), Vec3(1, 3, 1) };
  const auto box = bounding_box(pts);
  CHECK(box.min == Vec3(0, 0, -1));
  CHECK(box.max == Vec3(2, 3, 1));
  CHECK(centroid(pts).isApprox(Vec3(1, 4.0 / 3.0, 0)));
}
