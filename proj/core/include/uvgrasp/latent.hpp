#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "uvgrasp/geometry.hpp"
#include "uvgrasp/uv_map.hpp"

namespace uvgrasp {

using LatentCode = Eigen::VectorXd;

inline constexpr int kDefaultLatentDim = 128;

// Which texels of a UV grid a decoder produces. Vectors over a layout hold
// (u, v, d) for each listed texel in row-major texel order.
struct MapLayout
{
  GridSize size;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint32_t> texels;

  MapLayout() = default;
  MapLayout(GridSize s, std::vector<std::uint8_t> mask);

  Eigen::Index vector_length() const { return 3 * static_cast<Eigen::Index>(texels.size()); }
  // Position of a grid texel in `texels`, or -1 when not part of the layout.
  std::int64_t slot(std::uint32_t texel) const;

private:
  std::vector<std::int64_t> slot_;
};

// Errors: DimensionMismatch when the map's size or valid mask differs.
Eigen::VectorXd
vectorize(const UVCoordinateMap& map, const MapLayout& layout);

UVCoordinateMap
devectorize(const Eigen::VectorXd& values, const MapLayout& layout);

// Fixed-length object conditioning: centroid, bounding-box extents and a
// farthest-point subsample of the vertices (3 + 3 + 3 * points values).
// Missing points (tiny objects) repeat the last chosen vertex.
Eigen::VectorXd
object_descriptor(const Mesh& object, int points = 32);

class LatentDecoder
{
public:
  virtual ~LatentDecoder() = default;

  virtual int latent_dim() const = 0;
  virtual const MapLayout& layout() const = 0;

  virtual LatentCode encode(const UVCoordinateMap& map, const Mesh& object) const = 0;
  virtual UVCoordinateMap decode(const LatentCode& z, const Mesh& object) const = 0;

  // (u, v, d) of the requested grid texels, which must belong to the layout.
  // The default decodes the full map.
  virtual std::vector<Uvd> decode_texels(const LatentCode& z, const Mesh& object,
                                         std::span<const std::uint32_t> texels) const;

  // Jacobian of decode_texels w.r.t. z: row 3 * i + c is channel c of texel
  // i. The default uses central differences with the given step.
  virtual Eigen::MatrixXd texel_jacobian(const LatentCode& z, const Mesh& object,
                                         std::span<const std::uint32_t> texels, double step = 1e-6) const;
};

// x = mean + sum_k z_k * scale_k * basis_k over the layout vector, with an
// orthonormal basis. Scales are per-direction sample standard deviations for
// a whitened model (unit prior variance per latent axis) or all ones.
// The object is accepted for interface parity and does not enter the map.
class LinearLatentModel final : public LatentDecoder
{
public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  LinearLatentModel(MapLayout layout, Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd scales);

  int latent_dim() const override { return static_cast<int>(basis_.cols()); }
  const MapLayout& layout() const override { return layout_; }

  const Eigen::VectorXd& mean() const { return mean_; }
  const RowMatrix& basis() const { return basis_; }  // vector_length x k
  const Eigen::VectorXd& scales() const { return scales_; }

  // Variance along each basis direction and the total variance of the data
  // the model was fit on; empty/zero for loaded models.
  const Eigen::VectorXd& explained_variance() const { return explained_variance_; }
  double total_variance() const { return total_variance_; }
  void set_fit_statistics(Eigen::VectorXd explained_variance, double total_variance);

  // Least-squares coefficients after mean subtraction.
  LatentCode encode(const UVCoordinateMap& map, const Mesh& object) const override;
  UVCoordinateMap decode(const LatentCode& z, const Mesh& object) const override;
  std::vector<Uvd> decode_texels(const LatentCode& z, const Mesh& object,
                                 std::span<const std::uint32_t> texels) const override;
  Eigen::MatrixXd texel_jacobian(const LatentCode& z, const Mesh& object, std::span<const std::uint32_t> texels,
                                 double step = 1e-6) const override;

  LatentCode encode_vector(const Eigen::VectorXd& x) const;
  Eigen::VectorXd decode_vector(const LatentCode& z) const;

private:
  void check_code(const LatentCode& z) const;

  MapLayout layout_;
  Eigen::VectorXd mean_;
  RowMatrix basis_;  // row-major: texel decodes read contiguous rows
  Eigen::VectorXd scales_;
  Eigen::VectorXd explained_variance_;
  double total_variance_ = 0.0;
};

// Mean plus the top-k principal directions of the centered samples. Each
// direction's largest-magnitude entry is made positive.
// Errors: TooFewSamples (fewer than k samples), DimensionMismatch (sizes or
// masks differ), RankDeficient (k exceeds the numerical rank).
LinearLatentModel
fit_linear_model(std::span<const UVCoordinateMap> samples, int k = kDefaultLatentDim, bool whiten = true);

// Binary "LLAT": magic, u32 latent dim k, u32 vector length L, float64 mean
// (L), float64 basis row-major (L x k), then float64 scales (k). The layout
// is not stored; loading takes it from a map with the same grid and mask.
void
save_llat(const LinearLatentModel& model, const std::filesystem::path& path);

// Errors: ParseError, DimensionMismatch (layout length differs from L).
LinearLatentModel
load_llat(const std::filesystem::path& path, const MapLayout& layout);

} // namespace uvgrasp
