#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace uvgrasp {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

// Lengths are meters throughout the library. Millimeter and centimeter
// values only appear at metric/threshold boundaries.
inline constexpr double kMetersPerMillimeter = 1e-3;
inline constexpr double kMetersPerCentimeter = 1e-2;

// Indexed triangle mesh with a per-vertex UV template.
//
// A closed surface cannot be unwrapped onto the plane without seams, so
// vertices on a UV seam are duplicated. `position_ids` maps every vertex to
// the id of its geometric position; duplicates share an id. An empty
// `position_ids` means every vertex is its own position.
struct Mesh
{
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec2> uv_template;
  std::vector<std::uint32_t> position_ids;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }

  // Number of distinct geometric positions (seam duplicates counted once).
  std::size_t position_count() const;

  std::uint32_t position_id(std::size_t vertex) const
  {
    return position_ids.empty() ? static_cast<std::uint32_t>(vertex)
                                : position_ids[vertex];
  }

  bool has_uv() const { return uv_template.size() == vertices.size(); }

  // Throws InvalidArgument when a face index or the UV/position-id arrays
  // are inconsistent with the vertex count.
  void validate() const;
};

// Every edge (over position ids) is shared by exactly two faces.
bool
is_watertight(const Mesh& mesh);

// Throws NotWatertight when is_watertight() is false.
void
require_watertight(const Mesh& mesh);

struct Aabb
{
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p)
  {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  bool contains(const Vec3& p) const
  {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

Aabb
bounding_box(std::span<const Vec3> points);

Vec3
centroid(std::span<const Vec3> points);

// Signed enclosed volume by the divergence theorem (positive for outward
// oriented closed meshes).
double
signed_volume(const Mesh& mesh);

// Largest circumradius over faces; every surface point lies within this
// distance of some vertex.
double
vertex_sampling_gap(const Mesh& mesh);

struct RigidTransform
{
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

Mesh
transformed(const Mesh& mesh, const RigidTransform& transform);

// Replaces every vertex of a position group with the group mean so seam
// duplicates coincide exactly.
void
weld_positions(Mesh& mesh);

// Pinhole camera. Image coordinates are pixels, pixel (i, j) has its center
// at (i + 0.5, j + 0.5).
struct CameraIntrinsics
{
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
};

// Image-plane coordinates (pixels) plus camera depth (meters).
struct Uvd
{
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

Uvd
project(const Vec3& point, const CameraIntrinsics& camera);

Vec3
unproject(const Uvd& uvd, const CameraIntrinsics& camera);

} // namespace uvgrasp
