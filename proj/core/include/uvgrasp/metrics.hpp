#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uvgrasp/geometry.hpp"
#include "uvgrasp/spatial.hpp"

namespace uvgrasp {

// Sparse linear map from vertex positions to joint positions. Rows have
// non-negative weights summing to one.
class JointRegressor
{
public:
  using Row = std::vector<std::pair<std::uint32_t, double>>;

  // Throws InvalidArgument when a weight is negative, a row sum is off by
  // more than 1e-6, or an index is >= vertex_count.
  JointRegressor(std::size_t vertex_count, std::vector<Row> rows);

  std::size_t joint_count() const { return rows_.size(); }
  std::size_t vertex_count() const { return vertex_count_; }
  const std::vector<Row>& rows() const { return rows_; }

  // Errors: CountMismatch.
  std::vector<Vec3> regress(std::span<const Vec3> vertices) const;

  // Text asset: header "J N", then J rows of N whitespace-separated weights.
  static JointRegressor load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

private:
  std::size_t vertex_count_;
  std::vector<Row> rows_;
};

// Optional similarity (Procrustes) alignment before the error is measured.
enum class Alignment { None, Procrustes };

// Least-squares similarity transform of `source` onto `target` (rotation,
// uniform scale, translation), applied to `source`.
std::vector<Vec3>
procrustes_align(std::span<const Vec3> source, std::span<const Vec3> target);

// Mean per-vertex Euclidean error in centimeters. Errors: CountMismatch.
double
mpvpe(const Mesh& pred, const Mesh& gt, Alignment alignment = Alignment::None);

// Mean per-joint Euclidean error in centimeters. Errors: CountMismatch.
double
mpjpe(const Mesh& pred, const Mesh& gt, const JointRegressor& regressor, Alignment alignment = Alignment::None);

// Maximum nearest-object-vertex distance over hand vertices inside the
// object, in millimeters; 0 without penetration. Errors: NotWatertight.
double
penetration_depth(const Mesh& hand, const ObjectQuery& object);

double
penetration_depth(const Mesh& hand, const Mesh& object);

// Occupancy grid over the object's bounding box.
struct VoxelGrid
{
  Aabb bounds;
  int resolution = 80;

  Vec3 voxel_size() const { return bounds.extent() / static_cast<double>(resolution); }
  double voxel_volume() const
  {
    const Vec3 s = voxel_size();
    return s.x() * s.y() * s.z();
  }
  Vec3 center(int i, int j, int k) const
  {
    const Vec3 s = voxel_size();
    return bounds.min + Vec3((i + 0.5) * s.x(), (j + 0.5) * s.y(), (k + 0.5) * s.z());
  }
};

inline constexpr int kSivResolution = 80;

enum class SivMode {
  // Voxel counts when its center lies inside both solids.
  VoxelCenterInBoth,
  // Voxel counts when it holds a hand vertex that lies inside the object.
  VoxelsWithInsideHandVertices,
};

struct SivOptions
{
  int resolution = kSivResolution;
  SivMode mode = SivMode::VoxelCenterInBoth;
};

// Solid intersection volume in cubic centimeters. Errors: NotWatertight.
double
solid_intersection_volume(const Mesh& hand, const ObjectQuery& object, const SivOptions& options = {});

double
solid_intersection_volume(const Mesh& hand, const Mesh& object, const SivOptions& options = {});

// Metric report with the JSON keys mpjpe_cm, mpvpe_cm, pd_mm, siv_cm3,
// contact_iou. Absent metrics serialize as null.
struct MetricReport
{
  std::optional<double> mpjpe_cm;
  std::optional<double> mpvpe_cm;
  std::optional<double> pd_mm;
  std::optional<double> siv_cm3;
  std::optional<double> contact_iou;

  std::string to_json() const;
  std::string to_key_value() const;
};

} // namespace uvgrasp
