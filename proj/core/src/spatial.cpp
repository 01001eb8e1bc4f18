#include "uvgrasp/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

namespace {

constexpr std::uint32_t kLeafSize = 8;

// Barycentric tolerance below which a hit counts as grazing an edge.
constexpr double kGrazeTolerance = 1e-10;

double
cross2(double ax, double ay, double bx, double by)
{
  return ax * by - ay * bx;
}

double
segment_distance(double px, double py, double ax, double ay, double bx, double by)
{
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

// Fixed, non-axis-aligned retry directions.
const std::array<Vec3, InsideTester::kMaxRetries>&
retry_directions()
{
  static const auto dirs = [] {
    std::array<Vec3, InsideTester::kMaxRetries> d;
    const double golden = 2.399963229728653; // golden angle, radians
    for (int k = 0; k < InsideTester::kMaxRetries; ++k) {
      const double phi = golden * (k + 1);
      const double tilt = 0.35 + 0.05 * k;
      d[k] = Vec3(1.0, tilt * std::cos(phi), tilt * std::sin(phi)).normalized();
    }
    return d;
  }();
  return dirs;
}

} // namespace

NearestVertexIndex::NearestVertexIndex(std::vector<Vec3> points)
  : points_(std::move(points))
{
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points_.size()), 0);
  }
}

int
NearestVertexIndex::build(std::uint32_t begin, std::uint32_t end, int depth)
{
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{ begin, end, -1, -1, 0, 0.0 });
  if (end - begin <= kLeafSize)
    return id;

  Aabb box;
  for (auto i = begin; i < end; ++i)
    box.extend(points_[order_[i]]);
  int axis = 0;
  box.extent().maxCoeff(&axis);

  const auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  auto& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void
NearestVertexIndex::search(int node_id, const Vec3& q, double& best_d2, std::uint32_t& best_idx) const
{
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      const auto idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int near_child = diff < 0.0 ? node.left : node.right;
  const int far_child = diff < 0.0 ? node.right : node.left;
  search(near_child, q, best_d2, best_idx);
  if (diff * diff <= best_d2)
    search(far_child, q, best_d2, best_idx);
}

NearestVertex
NearestVertexIndex::nearest(const Vec3& query) const
{
  if (points_.empty())
    fail(ErrorCode::EmptyMesh, "nearest-vertex query against an empty point set");
  double best_d2 = std::numeric_limits<double>::infinity();
  std::uint32_t best_idx = std::numeric_limits<std::uint32_t>::max();
  search(0, query, best_d2, best_idx);
  return { std::sqrt(best_d2), best_idx };
}

NearestVertex
nearest_vertex_distance(const Vec3& p, const Mesh& target)
{
  if (target.vertices.empty())
    fail(ErrorCode::EmptyMesh, "target mesh has no vertices");
  return NearestVertexIndex(target.vertices).nearest(p);
}

InsideTester::InsideTester(const Mesh& mesh)
{
  mesh.validate();
  require_watertight(mesh);

  triangles_.reserve(mesh.faces.size());
  triangle_bounds_.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    std::array<Vec3, 3> tri{ mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]] };
    Aabb tb;
    for (const auto& p : tri)
      tb.extend(p);
    bounds_.extend(tb.min);
    bounds_.extend(tb.max);
    triangles_.push_back(tri);
    triangle_bounds_.push_back(tb);
  }
  const double diag = bounds_.extent().norm();
  eps_ = 1e-10 * std::max(diag, 1e-6);

  const auto n = triangles_.size();
  const int cells = std::clamp(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n) / 2.0))), 1, 256);
  cells_y_ = cells;
  cells_z_ = cells;
  const Vec3 ext = bounds_.extent();
  cell_size_y_ = std::max(ext.y(), 1e-12) / cells_y_;
  cell_size_z_ = std::max(ext.z(), 1e-12) / cells_z_;

  auto cell_range = [&](const Aabb& tb, int& y0, int& y1, int& z0, int& z1) {
    y0 = std::clamp(static_cast<int>(std::floor((tb.min.y() - bounds_.min.y()) / cell_size_y_)), 0, cells_y_ - 1);
    y1 = std::clamp(static_cast<int>(std::floor((tb.max.y() - bounds_.min.y()) / cell_size_y_)), 0, cells_y_ - 1);
    z0 = std::clamp(static_cast<int>(std::floor((tb.min.z() - bounds_.min.z()) / cell_size_z_)), 0, cells_z_ - 1);
    z1 = std::clamp(static_cast<int>(std::floor((tb.max.z() - bounds_.min.z()) / cell_size_z_)), 0, cells_z_ - 1);
  };

  std::vector<std::uint32_t> counts(static_cast<std::size_t>(cells_y_) * cells_z_ + 1, 0);
  for (const auto& tb : triangle_bounds_) {
    int y0, y1, z0, z1;
    cell_range(tb, y0, y1, z0, z1);
    for (int iz = z0; iz <= z1; ++iz)
      for (int iy = y0; iy <= y1; ++iy)
        ++counts[cell_index(iy, iz) + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  cell_start_ = counts;
  cell_items_.resize(cell_start_.back());
  std::vector<std::uint32_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
  for (std::uint32_t t = 0; t < triangle_bounds_.size(); ++t) {
    int y0, y1, z0, z1;
    cell_range(triangle_bounds_[t], y0, y1, z0, z1);
    for (int iz = z0; iz <= z1; ++iz)
      for (int iy = y0; iy <= y1; ++iy)
        cell_items_[cursor[cell_index(iy, iz)]++] = t;
  }
}

InsideTester::Cast
InsideTester::cast_axis(const Vec3& p) const
{
  const int iy = std::clamp(static_cast<int>(std::floor((p.y() - bounds_.min.y()) / cell_size_y_)), 0, cells_y_ - 1);
  const int iz = std::clamp(static_cast<int>(std::floor((p.z() - bounds_.min.z()) / cell_size_z_)), 0, cells_z_ - 1);
  const auto cell = cell_index(iy, iz);

  int crossings = 0;
  for (auto k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
    const auto t = cell_items_[k];
    const auto& tb = triangle_bounds_[t];
    if (tb.max.x() < p.x() - eps_ || p.y() < tb.min.y() || p.y() > tb.max.y() || p.z() < tb.min.z() ||
        p.z() > tb.max.z())
      continue;
    const auto& [a, b, c] = triangles_[t];
    const double abx = b.y() - a.y(), aby = b.z() - a.z();
    const double acx = c.y() - a.y(), acy = c.z() - a.z();
    const double apx = p.y() - a.y(), apy = p.z() - a.z();
    const double area = cross2(abx, aby, acx, acy);
    const double scale = std::hypot(abx, aby) * std::hypot(acx, acy);
    if (std::abs(area) <= 1e-14 * scale) {
      // Triangle is edge-on to the ray; only a point on its projected
      // outline can graze it.
      const double off = std::min({ segment_distance(p.y(), p.z(), a.y(), a.z(), b.y(), b.z()),
                                    segment_distance(p.y(), p.z(), b.y(), b.z(), c.y(), c.z()),
                                    segment_distance(p.y(), p.z(), c.y(), c.z(), a.y(), a.z()) });
      if (off <= eps_)
        return Cast::Degenerate;
      continue;
    }
    const double w1 = cross2(apx, apy, acx, acy) / area;
    const double w2 = cross2(abx, aby, apx, apy) / area;
    const double w0 = 1.0 - w1 - w2;
    if (w0 < -kGrazeTolerance || w1 < -kGrazeTolerance || w2 < -kGrazeTolerance)
      continue;
    const double x = w0 * a.x() + w1 * b.x() + w2 * c.x();
    if (std::abs(x - p.x()) <= eps_)
      return Cast::Outside; // on the surface
    if (w0 < kGrazeTolerance || w1 < kGrazeTolerance || w2 < kGrazeTolerance) {
      if (x > p.x())
        return Cast::Degenerate;
      continue;
    }
    if (x > p.x())
      ++crossings;
  }
  return (crossings % 2 == 1) ? Cast::Inside : Cast::Outside;
}

InsideTester::Cast
InsideTester::cast_general(const Vec3& p, const Vec3& dir) const
{
  int crossings = 0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& [a, b, c] = triangles_[t];
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    const Vec3 s = p - a;
    if (std::abs(det) <= 1e-14 * e1.norm() * e2.norm()) {
      const Vec3 n = e1.cross(e2);
      const double nn = n.norm();
      if (nn > 0.0 && std::abs(s.dot(n)) / nn <= eps_)
        return Cast::Degenerate; // ray runs inside the triangle's plane
      continue;
    }
    const double inv = 1.0 / det;
    const double u = s.dot(h) * inv;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (u < -kGrazeTolerance || v < -kGrazeTolerance || u + v > 1.0 + kGrazeTolerance)
      continue;
    const double dist = e2.dot(q) * inv;
    if (std::abs(dist) <= eps_)
      return Cast::Outside;
    if (dist < 0.0)
      continue;
    if (u < kGrazeTolerance || v < kGrazeTolerance || u + v > 1.0 - kGrazeTolerance)
      return Cast::Degenerate;
    ++crossings;
  }
  return (crossings % 2 == 1) ? Cast::Inside : Cast::Outside;
}

bool
InsideTester::inside(const Vec3& p) const
{
  if (!bounds_.contains(p))
    return false;
  Cast result = cast_axis(p);
  for (int k = 0; result == Cast::Degenerate && k < kMaxRetries; ++k)
    result = cast_general(p, retry_directions()[k]);
  return result == Cast::Inside;
}

bool
point_in_mesh(const Vec3& p, const Mesh& mesh)
{
  return InsideTester(mesh).inside(p);
}

ObjectQuery::ObjectQuery(const Mesh& object)
  : mesh_(object)
  , index_(object.vertices)
{
  if (object.vertices.empty())
    fail(ErrorCode::EmptyMesh, "object mesh has no vertices");
  if (is_watertight(object))
    tester_.emplace(object);
}

bool
ObjectQuery::inside(const Vec3& p) const
{
  if (!tester_)
    fail(ErrorCode::NotWatertight, "object mesh is not watertight; inside tests are undefined");
  return tester_->inside(p);
}

} // namespace uvgrasp
