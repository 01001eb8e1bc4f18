#include "uvgrasp/obj_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

namespace {

[[noreturn]] void
parse_error(std::size_t line, const std::string& what)
{
  fail(ErrorCode::ParseError, "OBJ line " + std::to_string(line) + ": " + what);
}

double
parse_number(const std::string& token, std::size_t line)
{
  double value = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    parse_error(line, "invalid number '" + token + "'");
  return value;
}

// Resolves a 1-based (or negative, relative) OBJ index.
std::uint32_t
resolve_index(const std::string& token, std::size_t count, std::size_t line)
{
  long long raw = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), raw);
  if (ec != std::errc() || ptr != token.data() + token.size())
    parse_error(line, "invalid index '" + token + "'");
  if (raw == 0)
    parse_error(line, "index 0 is invalid (OBJ indices are 1-based)");
  const long long resolved = raw > 0 ? raw - 1 : static_cast<long long>(count) + raw;
  if (resolved < 0 || resolved >= static_cast<long long>(count))
    parse_error(line, "index " + token + " out of range");
  return static_cast<std::uint32_t>(resolved);
}

} // namespace

Mesh
read_obj(std::istream& in)
{
  std::vector<Vec3> positions;
  std::vector<Vec2> texcoords;
  struct Corner
  {
    std::uint32_t v, vt;
  };
  std::vector<std::array<Corner, 3>> face_corners;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag))
      continue;
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;)
      tokens.push_back(t);

    if (tag == "v") {
      if (tokens.size() < 3)
        parse_error(line_no, "vertex record needs three coordinates");
      positions.emplace_back(parse_number(tokens[0], line_no), parse_number(tokens[1], line_no),
                             parse_number(tokens[2], line_no));
    } else if (tag == "vt") {
      if (tokens.size() < 2)
        parse_error(line_no, "texture record needs two coordinates");
      texcoords.emplace_back(parse_number(tokens[0], line_no), parse_number(tokens[1], line_no));
    } else if (tag == "f") {
      if (tokens.size() != 3)
        parse_error(line_no, "only triangular faces are supported");
      std::array<Corner, 3> corners{};
      for (int k = 0; k < 3; ++k) {
        const auto& tok = tokens[k];
        const auto slash = tok.find('/');
        corners[k].v = resolve_index(tok.substr(0, slash), positions.size(), line_no);
        if (slash == std::string::npos)
          fail(ErrorCode::MissingUV, "OBJ line " + std::to_string(line_no) + ": face corner has no texture index");
        const auto slash2 = tok.find('/', slash + 1);
        const auto vt_tok = tok.substr(slash + 1, slash2 == std::string::npos ? std::string::npos : slash2 - slash - 1);
        if (vt_tok.empty())
          fail(ErrorCode::MissingUV, "OBJ line " + std::to_string(line_no) + ": face corner has no texture index");
        corners[k].vt = resolve_index(vt_tok, texcoords.size(), line_no);
      }
      face_corners.push_back(corners);
    }
    // Other records (vn, o, g, s, usemtl, mtllib) carry nothing we keep.
  }

  // One mesh vertex per distinct (texture, position) pair, ordered by
  // texture index so files written by write_obj keep their vertex order.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> pair_index;
  for (const auto& fc : face_corners)
    for (const auto& c : fc)
      pair_index.emplace(std::make_pair(c.vt, c.v), 0);

  Mesh mesh;
  mesh.vertices.reserve(pair_index.size());
  mesh.uv_template.reserve(pair_index.size());
  mesh.position_ids.reserve(pair_index.size());
  std::uint32_t next = 0;
  for (auto& [key, idx] : pair_index) {
    idx = next++;
    mesh.vertices.push_back(positions[key.second]);
    mesh.uv_template.push_back(texcoords[key.first]);
    mesh.position_ids.push_back(key.second);
  }
  mesh.faces.reserve(face_corners.size());
  for (const auto& fc : face_corners) {
    Face f{};
    for (int k = 0; k < 3; ++k)
      f[k] = pair_index.at({ fc[k].vt, fc[k].v });
    mesh.faces.push_back(f);
  }
  return mesh;
}

Mesh
load_obj(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::IoError, "cannot open " + path.string());
  return read_obj(in);
}

void
write_obj(std::ostream& out, const Mesh& mesh)
{
  mesh.validate();
  if (!mesh.has_uv())
    fail(ErrorCode::MissingUV, "mesh has no UV template to write");

  std::unordered_map<std::uint32_t, std::uint32_t> obj_position;
  std::vector<std::uint32_t> vertex_to_v(mesh.vertex_count());
  char buf[128];
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    auto [it, inserted] = obj_position.try_emplace(mesh.position_id(i), static_cast<std::uint32_t>(obj_position.size()));
    if (inserted) {
      const auto& p = mesh.vertices[i];
      std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
      out << buf;
    }
    vertex_to_v[i] = it->second;
  }
  for (const auto& uv : mesh.uv_template) {
    std::snprintf(buf, sizeof buf, "vt %.9g %.9g\n", uv.x(), uv.y());
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << 'f';
    for (auto idx : f)
      out << ' ' << vertex_to_v[idx] + 1 << '/' << idx + 1;
    out << '\n';
  }
}

void
save_obj(const Mesh& mesh, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  write_obj(out, mesh);
  if (!out)
    fail(ErrorCode::IoError, "write failed for " + path.string());
}

} // namespace uvgrasp
