#include "uvgrasp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

std::size_t
Mesh::position_count() const
{
  if (position_ids.empty())
    return vertices.size();
  std::vector<std::uint32_t> ids(position_ids);
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

void
Mesh::validate() const
{
  const auto n = vertices.size();
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (auto idx : faces[f])
      if (idx >= n)
        fail(ErrorCode::InvalidArgument,
             "face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
               " but mesh has " + std::to_string(n) + " vertices");
  if (!uv_template.empty() && uv_template.size() != n)
    fail(ErrorCode::InvalidArgument, "uv_template size does not match vertex count");
  if (!position_ids.empty() && position_ids.size() != n)
    fail(ErrorCode::InvalidArgument, "position_ids size does not match vertex count");
}

bool
is_watertight(const Mesh& mesh)
{
  if (mesh.faces.empty())
    return false;
  std::unordered_map<std::uint64_t, int> edge_count;
  edge_count.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      auto a = mesh.position_id(f[k]);
      auto b = mesh.position_id(f[(k + 1) % 3]);
      if (a == b)
        return false;
      if (a > b)
        std::swap(a, b);
      ++edge_count[(static_cast<std::uint64_t>(a) << 32) | b];
    }
  }
  return std::all_of(edge_count.begin(), edge_count.end(),
                     [](const auto& kv) { return kv.second == 2; });
}

void
require_watertight(const Mesh& mesh)
{
  if (!is_watertight(mesh))
    fail(ErrorCode::NotWatertight, "mesh is not watertight (some edge is not shared by exactly two faces)");
}

Aabb
bounding_box(std::span<const Vec3> points)
{
  Aabb box;
  for (const auto& p : points)
    box.extend(p);
  return box;
}

Vec3
centroid(std::span<const Vec3> points)
{
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points)
    sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

double
signed_volume(const Mesh& mesh)
{
  double six_v = 0.0;
  for (const auto& f : mesh.faces) {
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    six_v += a.dot(b.cross(c));
  }
  return six_v / 6.0;
}

double
vertex_sampling_gap(const Mesh& mesh)
{
  double gap = 0.0;
  for (const auto& f : mesh.faces) {
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    const double la = (b - c).norm();
    const double lb = (c - a).norm();
    const double lc = (a - b).norm();
    const double twice_area = (b - a).cross(c - a).norm();
    if (twice_area <= 0.0) {
      gap = std::max(gap, 0.5 * std::max({ la, lb, lc }));
      continue;
    }
    gap = std::max(gap, la * lb * lc / (2.0 * twice_area));
  }
  return gap;
}

Mesh
transformed(const Mesh& mesh, const RigidTransform& transform)
{
  Mesh out = mesh;
  for (auto& v : out.vertices)
    v = transform.apply(v);
  return out;
}

void
weld_positions(Mesh& mesh)
{
  if (mesh.position_ids.empty())
    return;
  std::unordered_map<std::uint32_t, std::pair<Vec3, int>> groups;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    auto& g = groups.try_emplace(mesh.position_ids[i], Vec3::Zero(), 0).first->second;
    g.first += mesh.vertices[i];
    ++g.second;
  }
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& g = groups.at(mesh.position_ids[i]);
    if (g.second > 1)
      mesh.vertices[i] = g.first / static_cast<double>(g.second);
  }
}

void
CameraIntrinsics::validate() const
{
  if (!(fx > 0.0) || !(fy > 0.0))
    fail(ErrorCode::InvalidArgument, "camera focal lengths must be positive");
  if (width < 1 || height < 1)
    fail(ErrorCode::InvalidArgument, "camera image size must be at least 1x1");
}

Uvd
project(const Vec3& point, const CameraIntrinsics& camera)
{
  const double z = point.z();
  if (!(z > 0.0))
    fail(ErrorCode::NonPositiveDepth, "cannot project point with depth " + std::to_string(z));
  return { camera.fx * point.x() / z + camera.cx, camera.fy * point.y() / z + camera.cy, z };
}

Vec3
unproject(const Uvd& uvd, const CameraIntrinsics& camera)
{
  if (!(uvd.d > 0.0))
    fail(ErrorCode::NonPositiveDepth, "cannot unproject depth " + std::to_string(uvd.d));
  return { (uvd.u - camera.cx) * uvd.d / camera.fx, (uvd.v - camera.cy) * uvd.d / camera.fy, uvd.d };
}

} // namespace uvgrasp
