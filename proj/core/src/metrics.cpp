#include "uvgrasp/metrics.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

namespace {

constexpr double kCubicCentimetersPerCubicMeter = 1e6;

double
mean_distance(std::span<const Vec3> a, std::span<const Vec3> b)
{
  if (a.empty())
    return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += (a[i] - b[i]).norm();
  return sum / static_cast<double>(a.size());
}

double
aligned_error_cm(std::span<const Vec3> pred, std::span<const Vec3> gt, Alignment alignment)
{
  if (alignment == Alignment::Procrustes) {
    const auto aligned = procrustes_align(pred, gt);
    return mean_distance(aligned, gt) / kMetersPerCentimeter;
  }
  return mean_distance(pred, gt) / kMetersPerCentimeter;
}

} // namespace

JointRegressor::JointRegressor(std::size_t vertex_count, std::vector<Row> rows)
  : vertex_count_(vertex_count)
  , rows_(std::move(rows))
{
  for (std::size_t j = 0; j < rows_.size(); ++j) {
    double sum = 0.0;
    for (const auto& [idx, w] : rows_[j]) {
      if (idx >= vertex_count_)
        fail(ErrorCode::InvalidArgument, "regressor row " + std::to_string(j) + " references vertex out of range");
      if (w < 0.0)
        fail(ErrorCode::InvalidArgument, "regressor row " + std::to_string(j) + " has a negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      fail(ErrorCode::InvalidArgument, "regressor row " + std::to_string(j) + " does not sum to 1");
  }
}

std::vector<Vec3>
JointRegressor::regress(std::span<const Vec3> vertices) const
{
  if (vertices.size() != vertex_count_)
    fail(ErrorCode::CountMismatch, "regressor expects " + std::to_string(vertex_count_) + " vertices, got " +
                                     std::to_string(vertices.size()));
  std::vector<Vec3> joints;
  joints.reserve(rows_.size());
  for (const auto& row : rows_) {
    Vec3 j = Vec3::Zero();
    for (const auto& [idx, w] : row)
      j += w * vertices[idx];
    joints.push_back(j);
  }
  return joints;
}

JointRegressor
JointRegressor::load(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::IoError, "cannot open " + path.string());
  std::size_t joints = 0, vertices = 0;
  if (!(in >> joints >> vertices))
    fail(ErrorCode::ParseError, "regressor header must be 'J N'");
  std::vector<Row> rows(joints);
  for (std::size_t j = 0; j < joints; ++j)
    for (std::size_t v = 0; v < vertices; ++v) {
      double w = 0.0;
      if (!(in >> w))
        fail(ErrorCode::ParseError, "regressor matrix truncated at row " + std::to_string(j));
      if (w != 0.0)
        rows[j].emplace_back(static_cast<std::uint32_t>(v), w);
    }
  return JointRegressor(vertices, std::move(rows));
}

void
JointRegressor::save(const std::filesystem::path& path) const
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  out << rows_.size() << ' ' << vertex_count_ << '\n';
  out.precision(17);
  for (const auto& row : rows_) {
    std::vector<double> dense(vertex_count_, 0.0);
    for (const auto& [idx, w] : row)
      dense[idx] = w;
    for (std::size_t v = 0; v < vertex_count_; ++v)
      out << (v ? " " : "") << dense[v];
    out << '\n';
  }
}

std::vector<Vec3>
procrustes_align(std::span<const Vec3> source, std::span<const Vec3> target)
{
  if (source.size() != target.size())
    fail(ErrorCode::CountMismatch, "procrustes alignment needs equal point counts");
  if (source.empty())
    return {};
  const Vec3 mu_s = centroid(source);
  const Vec3 mu_t = centroid(target);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 s = source[i] - mu_s;
    const Vec3 t = target[i] - mu_t;
    cov += t * s.transpose();
    var_s += s.squaredNorm();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d(2, 2) = -1.0;
  const Eigen::Matrix3d rotation = svd.matrixU() * d * svd.matrixV().transpose();
  const double scale = var_s > 0.0 ? (svd.singularValues().asDiagonal() * d).trace() / var_s : 1.0;
  std::vector<Vec3> out;
  out.reserve(source.size());
  for (const auto& p : source)
    out.push_back(scale * rotation * (p - mu_s) + mu_t);
  return out;
}

double
mpvpe(const Mesh& pred, const Mesh& gt, Alignment alignment)
{
  if (pred.vertex_count() != gt.vertex_count())
    fail(ErrorCode::CountMismatch, "MPVPE needs equal vertex counts");
  return aligned_error_cm(pred.vertices, gt.vertices, alignment);
}

double
mpjpe(const Mesh& pred, const Mesh& gt, const JointRegressor& regressor, Alignment alignment)
{
  if (pred.vertex_count() != gt.vertex_count())
    fail(ErrorCode::CountMismatch, "MPJPE needs equal vertex counts");
  const auto jp = regressor.regress(pred.vertices);
  const auto jg = regressor.regress(gt.vertices);
  return aligned_error_cm(jp, jg, alignment);
}

double
penetration_depth(const Mesh& hand, const ObjectQuery& object)
{
  double deepest = 0.0;
  for (const auto& v : hand.vertices)
    if (object.inside(v))
      deepest = std::max(deepest, object.nearest(v).distance);
  return deepest / kMetersPerMillimeter;
}

double
penetration_depth(const Mesh& hand, const Mesh& object)
{
  return penetration_depth(hand, ObjectQuery(object));
}

double
solid_intersection_volume(const Mesh& hand, const ObjectQuery& object, const SivOptions& options)
{
  if (options.resolution < 1)
    fail(ErrorCode::InvalidArgument, "SIV resolution must be at least 1");
  VoxelGrid grid{ bounding_box(object.mesh().vertices), options.resolution };
  const Vec3 size = grid.voxel_size();
  const int r = grid.resolution;

  std::size_t count = 0;
  if (options.mode == SivMode::VoxelsWithInsideHandVertices) {
    std::set<std::size_t> voxels;
    for (const auto& v : hand.vertices) {
      if (!grid.bounds.contains(v) || !object.inside(v))
        continue;
      std::array<int, 3> ijk{};
      for (int a = 0; a < 3; ++a)
        ijk[a] = std::clamp(static_cast<int>(std::floor((v[a] - grid.bounds.min[a]) / size[a])), 0, r - 1);
      voxels.insert((static_cast<std::size_t>(ijk[2]) * r + ijk[1]) * r + ijk[0]);
    }
    count = voxels.size();
  } else {
    const InsideTester hand_solid(hand);
    const Aabb& hb = hand_solid.bounds();
    // Voxel index range whose centers fall inside the hand's bounds.
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((hb.min[a] - grid.bounds.min[a]) / size[a] - 0.5)));
      hi[a] = std::min(r - 1, static_cast<int>(std::ceil((hb.max[a] - grid.bounds.min[a]) / size[a] - 0.5)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const Vec3 c = grid.center(i, j, k);
          if (hand_solid.inside(c) && object.inside(c))
            ++count;
        }
  }
  return static_cast<double>(count) * grid.voxel_volume() * kCubicCentimetersPerCubicMeter;
}

double
solid_intersection_volume(const Mesh& hand, const Mesh& object, const SivOptions& options)
{
  return solid_intersection_volume(hand, ObjectQuery(object), options);
}

std::string
MetricReport::to_json() const
{
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["mpjpe_cm"] = opt(mpjpe_cm);
  j["mpvpe_cm"] = opt(mpvpe_cm);
  j["pd_mm"] = opt(pd_mm);
  j["siv_cm3"] = opt(siv_cm3);
  j["contact_iou"] = opt(contact_iou);
  return j.dump(2);
}

std::string
MetricReport::to_key_value() const
{
  std::ostringstream out;
  out.precision(10);
  auto line = [&](const char* key, const std::optional<double>& v) {
    out << key << '=';
    if (v)
      out << *v;
    else
      out << "null";
    out << '\n';
  };
  line("mpjpe_cm", mpjpe_cm);
  line("mpvpe_cm", mpvpe_cm);
  line("pd_mm", pd_mm);
  line("siv_cm3", siv_cm3);
  line("contact_iou", contact_iou);
  return out.str();
}

} // namespace uvgrasp
