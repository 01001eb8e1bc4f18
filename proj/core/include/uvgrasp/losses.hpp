#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "uvgrasp/contact.hpp"
#include "uvgrasp/geometry.hpp"
#include "uvgrasp/image.hpp"
#include "uvgrasp/spatial.hpp"
#include "uvgrasp/uv_map.hpp"

namespace uvgrasp {

// Composite-loss weights: contact (lambda1), texture (lambda2), SSIM inside
// the texture term (lambda3) and KL (lambda4).
struct LossWeights
{
  double contact = 10.0;
  double texture = 10.0;
  double ssim = 10.0;
  double kl = 0.001;

  // Throws InvalidArgument on a negative weight.
  void validate() const;
};

// Diagonal Gaussian q(z) = N(mean, diag(stddev^2)).
struct GaussianPosterior
{
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

// Real-valued grid, e.g. a predicted contact probability map.
struct RealGrid
{
  GridSize size;
  std::vector<double> values;
};

RealGrid
to_real_grid(const ContactMask& mask);

// All L1 terms below are means, so they do not scale with resolution.

// Mean |pred - gt| over the three channels of texels valid in gt.
// Errors: DimensionMismatch.
double
loss_p(const UVCoordinateMap& pred, const UVCoordinateMap& gt);

// Mean |grad pred - grad gt| over both difference directions, restricted to
// texels whose gt gradient is valid. Errors: DimensionMismatch.
double
loss_grad(const UVCoordinateMap& pred, const UVCoordinateMap& gt);

// Mean |pred - gt| over all texels. Errors: DimensionMismatch.
double
loss_contact(const RealGrid& pred, const RealGrid& gt);

// Mean absolute per-coordinate vertex difference. Errors: CountMismatch.
double
loss_vertices(const Mesh& pred, const Mesh& gt);

struct SsimOptions
{
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean SSIM over all fully contained Gaussian windows of one channel plane.
// Errors: DimensionMismatch, TooSmall.
double
ssim_plane(std::span<const double> a, std::span<const double> b, int width, int height, const SsimOptions& options = {});

// Channel-averaged SSIM of two RGB images.
double
ssim(const Image& a, const Image& b, const SsimOptions& options = {});

// Mean absolute pixel difference over all channels.
double
loss_pixel(const Image& rendered, const Image& masked_target);

// loss_pixel + ssim_weight * (1 - ssim).
double
loss_texture(const Image& rendered, const Image& masked_target, double ssim_weight = 10.0);

// Hand vertices inside the object (optionally restricted to candidates)
// with their nearest object vertex.
struct PenetrationSet
{
  std::vector<std::uint32_t> vertices;
  std::vector<NearestVertex> nearest;
  std::size_t tested = 0;  // vertices that went through the inside test

  double mean_distance() const;
  double max_distance() const;
};

PenetrationSet
find_penetrations(std::span<const Vec3> hand_vertices, const ObjectQuery& object,
                  const ContactVertexSet* candidates = nullptr);

// Mean nearest-object-vertex distance (meters) over penetrating vertices;
// zero when none penetrate. Errors: NotWatertight.
double
loss_penetration(const Mesh& hand, const ObjectQuery& object, const ContactVertexSet* candidates = nullptr);

double
loss_penetration(const Mesh& hand, const Mesh& object, const ContactVertexSet* candidates = nullptr);

// KL(q || N(0, I)). Errors: InvalidArgument for non-positive stddev or
// mismatched lengths.
double
kl_standard_normal(const GaussianPosterior& q);

// 0.5 * |z|^2, the negative log-density of N(0, I) up to a constant.
double
inference_prior_penalty(const Eigen::VectorXd& z);

// Terms of the image-to-UV training objective.
struct Rgb2UvTerms
{
  double coordinate = 0.0;
  double gradient = 0.0;
  double contact = 0.0;
  double vertices = 0.0;
  double texture = 0.0;

  double total(const LossWeights& w) const
  {
    return coordinate + gradient + w.contact * contact + vertices + w.texture * texture;
  }
};

// Terms of the conditional-VAE training objective.
struct GraspTerms
{
  double coordinate = 0.0;
  double gradient = 0.0;
  double vertices = 0.0;
  double kl = 0.0;
  double penetration = 0.0;

  double total(const LossWeights& w) const { return coordinate + gradient + vertices + w.kl * kl + penetration; }
};

struct Rgb2UvInputs
{
  const UVCoordinateMap& pred_map;
  const UVCoordinateMap& gt_map;
  const RealGrid& pred_contact;
  const RealGrid& gt_contact;
  const Mesh& pred_mesh;
  const Mesh& gt_mesh;
  const Image& rendered;
  const Image& masked_target;
};

Rgb2UvTerms
rgb2uv_terms(const Rgb2UvInputs& in, const LossWeights& weights);

struct GraspInputs
{
  const UVCoordinateMap& pred_map;
  const UVCoordinateMap& gt_map;
  const Mesh& pred_mesh;
  const Mesh& gt_mesh;
  const GaussianPosterior& posterior;
  const ObjectQuery& object;
};

GraspTerms
grasp_terms(const GraspInputs& in);

} // namespace uvgrasp
