#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "support/generators.hpp"
#include "uvgrasp/error.hpp"
#include "uvgrasp/obj_io.hpp"
#include "uvgrasp/scene.hpp"

using namespace uvgrasp;

namespace {

ErrorCode
code_of(const std::string& text)
{
  std::istringstream in(text);
  try {
    read_obj(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("single triangle")
{
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n");
  const auto m = read_obj(in);
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
  CHECK(m.uv_template[1] == Vec2(1, 0));
  CHECK(m.vertices[2] == Vec3(0, 1, 0));
}

TEST_CASE("normals, comments and negative indices are accepted")
{
  std::istringstream in("# c\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 1\n"
                        "f -3/-3/1 -2/-2/1 -1/-1/1\n");
  const auto m = read_obj(in);
  CHECK(m.face_count() == 1);
}

TEST_CASE("format errors")
{
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 0/1 1/1 2/1\n") == ErrorCode::ParseError);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 9/1\n") == ErrorCode::ParseError);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n") == ErrorCode::ParseError);
  CHECK(code_of("v 0 0\n") == ErrorCode::ParseError);
  CHECK(code_of("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n") == ErrorCode::MissingUV);
  CHECK_THROWS_AS(load_obj("/nonexistent/file.obj"), Error);
}

TEST_CASE("corners sharing a position but not a texture index share a position id")
{
  std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\n"
                        "f 1/1 2/2 3/3\nf 2/4 4/2 3/3\n");
  const auto m = read_obj(in);
  CHECK(m.vertex_count() == 5);
  CHECK(m.position_count() == 4);
}

TEST_CASE("property: save then load reproduces meshes within 1e-6")
{
  testgen::Rng rng(3);
  const auto dir = std::filesystem::temp_directory_path() / "uvgrasp_obj_test";
  std::filesystem::create_directories(dir);
  for (int t = 0; t < 10; ++t) {
    Mesh m = make_template(TemplateKind::Icosphere, rng.integer(0, 2));
    for (auto& v : m.vertices)
      v = v * rng.uniform(0.01, 2.0) + Vec3::Constant(rng.uniform(-1, 1));
    weld_positions(m);
    const auto path = dir / ("m" + std::to_string(t) + ".obj");
    save_obj(m, path);
    const auto back = load_obj(path);
    REQUIRE(back.vertex_count() == m.vertex_count());
    REQUIRE(back.face_count() == m.face_count());
    CHECK(back.position_count() == m.position_count());
    CHECK(back.faces == m.faces);
    for (std::size_t i = 0; i < m.vertex_count(); ++i) {
      CHECK((back.vertices[i] - m.vertices[i]).norm() <= 1e-6);
      CHECK((back.uv_template[i] - m.uv_template[i]).norm() <= 1e-6);
    }
  }
  std::filesystem::remove_all(dir);
}
