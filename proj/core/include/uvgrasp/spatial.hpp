#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uvgrasp/geometry.hpp"

namespace uvgrasp {

struct NearestVertex
{
  double distance = 0.0;
  std::uint32_t index = 0;
};

// Exact nearest-neighbour queries over a fixed point set (kd-tree).
// Equal distances resolve to the lowest point index, so results match a
// brute-force scan bit for bit.
class NearestVertexIndex
{
public:
  explicit NearestVertexIndex(std::vector<Vec3> points);

  // Throws EmptyMesh when the index holds no points.
  NearestVertex nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

private:
  struct Node
  {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  int build(std::uint32_t begin, std::uint32_t end, int depth);
  void search(int node, const Vec3& q, double& best_d2, std::uint32_t& best_idx) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

NearestVertex
nearest_vertex_distance(const Vec3& p, const Mesh& target);

// Ray-parity inside test for a closed triangle mesh.
//
// The primary ray runs along +x and is answered through a uniform grid over
// the (y, z) plane. A ray that grazes an edge or vertex is re-cast along up to
// eight deterministic perturbed directions. Points on the surface are
// outside.
class InsideTester
{
public:
  // Throws NotWatertight.
  explicit InsideTester(const Mesh& mesh);

  bool inside(const Vec3& p) const;

  const Aabb& bounds() const { return bounds_; }

  static constexpr int kMaxRetries = 8;

private:
  enum class Cast { Inside, Outside, Degenerate };

  Cast cast_axis(const Vec3& p) const;
  Cast cast_general(const Vec3& p, const Vec3& dir) const;
  std::size_t cell_index(int iy, int iz) const { return static_cast<std::size_t>(iz) * cells_y_ + iy; }

  std::vector<std::array<Vec3, 3>> triangles_;
  std::vector<Aabb> triangle_bounds_;
  Aabb bounds_;
  double eps_ = 0.0;
  int cells_y_ = 1;
  int cells_z_ = 1;
  double cell_size_y_ = 1.0;
  double cell_size_z_ = 1.0;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
};

bool
point_in_mesh(const Vec3& p, const Mesh& mesh);

// Object-side acceleration used by contact, penetration and metric code:
// a nearest-vertex index plus an inside tester built once per object.
class ObjectQuery
{
public:
  // Throws EmptyMesh for a vertex-less mesh. The inside tester only exists
  // for watertight objects; open meshes still answer distance queries.
  explicit ObjectQuery(const Mesh& object);

  const Mesh& mesh() const { return mesh_; }
  NearestVertex nearest(const Vec3& p) const { return index_.nearest(p); }

  // Throws NotWatertight when the object is not closed.
  bool inside(const Vec3& p) const;

private:
  Mesh mesh_;
  NearestVertexIndex index_;
  std::optional<InsideTester> tester_;
};

} // namespace uvgrasp
