#include "uvgrasp/latent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "binary_io.hpp"
#include "uvgrasp/error.hpp"

namespace uvgrasp {

namespace {

// Eigenvalues below this fraction of the largest count as zero.
// Relative to the largest Gram eigenvalue; double-precision noise sits near 1e-16.
constexpr double kRankTolerance = 1e-12;

void
orthonormalize(Eigen::MatrixXd& basis)
{
  // Two modified Gram-Schmidt passes keep the basis orthonormal to ~1e-15
  // even when the Gram-matrix directions lost a few digits.
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i)
        basis.col(j) -= basis.col(i).dot(basis.col(j)) * basis.col(i);
      basis.col(j).normalize();
    }
}

void
fix_sign(Eigen::Ref<Eigen::VectorXd> v)
{
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  if (v[arg] < 0.0)
    v = -v;
}

} // namespace

MapLayout::MapLayout(GridSize s, std::vector<std::uint8_t> mask)
  : size(s)
  , valid(std::move(mask))
{
  if (valid.size() != s.texel_count())
    fail(ErrorCode::DimensionMismatch, "layout mask does not match the grid size");
  slot_.assign(valid.size(), -1);
  for (std::size_t i = 0; i < valid.size(); ++i)
    if (valid[i]) {
      slot_[i] = static_cast<std::int64_t>(texels.size());
      texels.push_back(static_cast<std::uint32_t>(i));
    }
}

std::int64_t
MapLayout::slot(std::uint32_t texel) const
{
  return texel < slot_.size() ? slot_[texel] : -1;
}

Eigen::VectorXd
vectorize(const UVCoordinateMap& map, const MapLayout& layout)
{
  if (map.size != layout.size || map.valid != layout.valid)
    fail(ErrorCode::DimensionMismatch, "map grid or valid mask differs from the model layout");
  Eigen::VectorXd x(layout.vector_length());
  for (std::size_t s = 0; s < layout.texels.size(); ++s) {
    const auto& t = map.texels[layout.texels[s]];
    x[3 * s] = t.u;
    x[3 * s + 1] = t.v;
    x[3 * s + 2] = t.d;
  }
  return x;
}

UVCoordinateMap
devectorize(const Eigen::VectorXd& values, const MapLayout& layout)
{
  if (values.size() != layout.vector_length())
    fail(ErrorCode::DimensionMismatch, "vector length differs from the layout");
  UVCoordinateMap map(layout.size);
  map.valid = layout.valid;
  for (std::size_t s = 0; s < layout.texels.size(); ++s)
    map.texels[layout.texels[s]] = { values[3 * s], values[3 * s + 1], values[3 * s + 2] };
  return map;
}

Eigen::VectorXd
object_descriptor(const Mesh& object, int points)
{
  if (object.vertices.empty())
    fail(ErrorCode::EmptyMesh, "object descriptor needs vertices");
  if (points < 1)
    fail(ErrorCode::InvalidArgument, "descriptor needs at least one sample point");
  const auto& vs = object.vertices;
  const Vec3 c = centroid(vs);
  const Vec3 ext = bounding_box(vs).extent();

  Eigen::VectorXd out(6 + 3 * points);
  out.segment<3>(0) = c;
  out.segment<3>(3) = ext;

  // Farthest-point sampling seeded at the vertex farthest from the centroid;
  // ties go to the lowest index.
  std::vector<double> d2(vs.size(), std::numeric_limits<double>::infinity());
  std::size_t pick = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const double d = (vs[i] - c).squaredNorm();
    if (d > best) {
      best = d;
      pick = i;
    }
  }
  for (int p = 0; p < points; ++p) {
    out.segment<3>(6 + 3 * p) = vs[pick];
    std::size_t next = pick;
    best = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      d2[i] = std::min(d2[i], (vs[i] - vs[pick]).squaredNorm());
      if (d2[i] > best) {
        best = d2[i];
        next = i;
      }
    }
    pick = next;
  }
  return out;
}

std::vector<Uvd>
LatentDecoder::decode_texels(const LatentCode& z, const Mesh& object, std::span<const std::uint32_t> texels) const
{
  const auto map = decode(z, object);
  std::vector<Uvd> out;
  out.reserve(texels.size());
  for (auto t : texels) {
    if (layout().slot(t) < 0)
      fail(ErrorCode::InvalidArgument, "texel " + std::to_string(t) + " is not part of the decoder layout");
    out.push_back(map.texels[t]);
  }
  return out;
}

Eigen::MatrixXd
LatentDecoder::texel_jacobian(const LatentCode& z, const Mesh& object, std::span<const std::uint32_t> texels,
                              double step) const
{
  Eigen::MatrixXd jac(3 * static_cast<Eigen::Index>(texels.size()), z.size());
  LatentCode zp = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    zp[j] = z[j] + step;
    const auto hi = decode_texels(zp, object, texels);
    zp[j] = z[j] - step;
    const auto lo = decode_texels(zp, object, texels);
    zp[j] = z[j];
    for (std::size_t i = 0; i < texels.size(); ++i) {
      jac(3 * i, j) = (hi[i].u - lo[i].u) / (2.0 * step);
      jac(3 * i + 1, j) = (hi[i].v - lo[i].v) / (2.0 * step);
      jac(3 * i + 2, j) = (hi[i].d - lo[i].d) / (2.0 * step);
    }
  }
  return jac;
}

LinearLatentModel::LinearLatentModel(MapLayout layout, Eigen::VectorXd mean, Eigen::MatrixXd basis,
                                     Eigen::VectorXd scales)
  : layout_(std::move(layout))
  , mean_(std::move(mean))
  , basis_(std::move(basis))
  , scales_(std::move(scales))
{
  if (mean_.size() != layout_.vector_length() || basis_.rows() != mean_.size())
    fail(ErrorCode::DimensionMismatch, "model mean/basis length differs from the layout");
  if (scales_.size() != basis_.cols())
    fail(ErrorCode::DimensionMismatch, "one scale per basis direction is required");
  if (!(scales_.array() > 0.0).all())
    fail(ErrorCode::InvalidArgument, "basis scales must be positive");
}

void
LinearLatentModel::set_fit_statistics(Eigen::VectorXd explained_variance, double total_variance)
{
  explained_variance_ = std::move(explained_variance);
  total_variance_ = total_variance;
}

void
LinearLatentModel::check_code(const LatentCode& z) const
{
  if (z.size() != basis_.cols())
    fail(ErrorCode::DimensionMismatch, "latent code has " + std::to_string(z.size()) + " entries, model expects " +
                                         std::to_string(basis_.cols()));
}

LatentCode
LinearLatentModel::encode_vector(const Eigen::VectorXd& x) const
{
  if (x.size() != mean_.size())
    fail(ErrorCode::DimensionMismatch, "vector length differs from the model");
  return (basis_.transpose() * (x - mean_)).cwiseQuotient(scales_);
}

Eigen::VectorXd
LinearLatentModel::decode_vector(const LatentCode& z) const
{
  check_code(z);
  return mean_ + basis_ * z.cwiseProduct(scales_);
}

LatentCode
LinearLatentModel::encode(const UVCoordinateMap& map, const Mesh&) const
{
  return encode_vector(vectorize(map, layout_));
}

UVCoordinateMap
LinearLatentModel::decode(const LatentCode& z, const Mesh&) const
{
  return devectorize(decode_vector(z), layout_);
}

std::vector<Uvd>
LinearLatentModel::decode_texels(const LatentCode& z, const Mesh&, std::span<const std::uint32_t> texels) const
{
  check_code(z);
  const Eigen::VectorXd w = z.cwiseProduct(scales_);
  std::vector<Uvd> out;
  out.reserve(texels.size());
  for (auto t : texels) {
    const auto s = layout_.slot(t);
    if (s < 0)
      fail(ErrorCode::InvalidArgument, "texel " + std::to_string(t) + " is not part of the model layout");
    const Eigen::Index r = 3 * s;
    out.push_back({ mean_[r] + basis_.row(r).dot(w), mean_[r + 1] + basis_.row(r + 1).dot(w),
                    mean_[r + 2] + basis_.row(r + 2).dot(w) });
  }
  return out;
}

Eigen::MatrixXd
LinearLatentModel::texel_jacobian(const LatentCode& z, const Mesh&, std::span<const std::uint32_t> texels,
                                  double) const
{
  check_code(z);
  Eigen::MatrixXd jac(3 * static_cast<Eigen::Index>(texels.size()), basis_.cols());
  for (std::size_t i = 0; i < texels.size(); ++i) {
    const auto s = layout_.slot(texels[i]);
    if (s < 0)
      fail(ErrorCode::InvalidArgument, "texel " + std::to_string(texels[i]) + " is not part of the model layout");
    for (int c = 0; c < 3; ++c)
      jac.row(3 * i + c) = basis_.row(3 * s + c).cwiseProduct(scales_.transpose());
  }
  return jac;
}

LinearLatentModel
fit_linear_model(std::span<const UVCoordinateMap> samples, int k, bool whiten)
{
  if (k < 1)
    fail(ErrorCode::InvalidArgument, "latent dimension must be positive");
  if (samples.size() < static_cast<std::size_t>(k))
    fail(ErrorCode::TooFewSamples, std::to_string(samples.size()) + " samples cannot support " + std::to_string(k) +
                                     " latent dimensions");
  MapLayout layout(samples.front().size, samples.front().valid);
  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index len = layout.vector_length();

  Eigen::MatrixXd x(len, n);
  for (Eigen::Index i = 0; i < n; ++i)
    x.col(i) = vectorize(samples[i], layout);
  const Eigen::VectorXd mean = x.rowwise().mean();
  x.colwise() -= mean;

  // Eigen-decomposition of the n x n Gram matrix; directions are mapped back
  // through the data, which is cheaper than the len x len covariance.
  const Eigen::MatrixXd gram = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::RankDeficient, "eigen-decomposition of the sample Gram matrix failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double top = lambda[n - 1];
  const double kth = lambda[n - k];
  if (!(top > 0.0) || kth <= kRankTolerance * top)
    fail(ErrorCode::RankDeficient, "requested " + std::to_string(k) + " directions exceed the data rank");

  Eigen::MatrixXd basis(len, k);
  Eigen::VectorXd variance(k);
  const double dof = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (int j = 0; j < k; ++j) {
    const Eigen::Index src = n - 1 - j;
    basis.col(j) = x * eig.eigenvectors().col(src) / std::sqrt(lambda[src]);
    variance[j] = lambda[src] / dof;
  }
  orthonormalize(basis);
  for (int j = 0; j < k; ++j)
    fix_sign(basis.col(j));

  Eigen::VectorXd scales = whiten ? Eigen::VectorXd(variance.cwiseSqrt()) : Eigen::VectorXd::Ones(k);
  LinearLatentModel model(std::move(layout), mean, std::move(basis), std::move(scales));
  model.set_fit_statistics(std::move(variance), gram.trace() / dof);
  return model;
}

void
save_llat(const LinearLatentModel& model, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  const auto k = static_cast<std::uint32_t>(model.latent_dim());
  const auto len = static_cast<std::uint32_t>(model.mean().size());
  out.write("LLAT", 4);
  detail::write_u32(out, k);
  detail::write_u32(out, len);
  for (Eigen::Index i = 0; i < model.mean().size(); ++i)
    detail::write_f64(out, model.mean()[i]);
  for (Eigen::Index r = 0; r < model.basis().rows(); ++r)
    for (Eigen::Index c = 0; c < model.basis().cols(); ++c)
      detail::write_f64(out, model.basis()(r, c));
  for (Eigen::Index i = 0; i < model.scales().size(); ++i)
    detail::write_f64(out, model.scales()[i]);
  if (!out)
    fail(ErrorCode::IoError, "write failed for " + path.string());
}

LinearLatentModel
load_llat(const std::filesystem::path& path, const MapLayout& layout)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::string_view(magic.data(), 4) != "LLAT")
    fail(ErrorCode::ParseError, "bad magic, expected 'LLAT'");
  const auto k = detail::read_u32(in);
  const auto len = detail::read_u32(in);
  if (k == 0 || len == 0)
    fail(ErrorCode::ParseError, "LLAT header has an empty dimension");
  if (static_cast<Eigen::Index>(len) != layout.vector_length())
    fail(ErrorCode::DimensionMismatch, "LLAT vector length " + std::to_string(len) + " differs from the layout (" +
                                         std::to_string(layout.vector_length()) + ")");
  Eigen::VectorXd mean(len);
  for (std::uint32_t i = 0; i < len; ++i)
    mean[i] = detail::read_f64(in);
  Eigen::MatrixXd basis(len, k);
  for (std::uint32_t r = 0; r < len; ++r)
    for (std::uint32_t c = 0; c < k; ++c)
      basis(r, c) = detail::read_f64(in);
  Eigen::VectorXd scales(k);
  for (std::uint32_t i = 0; i < k; ++i)
    scales[i] = detail::read_f64(in);
  return LinearLatentModel(layout, std::move(mean), std::move(basis), std::move(scales));
}

} // namespace uvgrasp
