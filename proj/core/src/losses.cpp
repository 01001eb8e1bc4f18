#include "uvgrasp/losses.hpp"

#include <cmath>

#include "uvgrasp/error.hpp"

namespace uvgrasp {

namespace {

void
require_same_size(GridSize a, GridSize b)
{
  if (a != b)
    fail(ErrorCode::DimensionMismatch, "grids differ in size: " + std::to_string(a.width) + "x" +
                                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                         std::to_string(b.height));
}

double
abs_diff(const Uvd& a, const Uvd& b)
{
  return std::abs(a.u - b.u) + std::abs(a.v - b.v) + std::abs(a.d - b.d);
}

std::vector<double>
gaussian_kernel(int size, double sigma)
{
  std::vector<double> k(static_cast<std::size_t>(size));
  const double c = 0.5 * (size - 1);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& v : k)
    v /= sum;
  return k;
}

// Separable "valid" filtering: output is (w - n + 1) x (h - n + 1).
std::vector<double>
filter_valid(const std::vector<double>& img, int w, int h, const std::vector<double>& k)
{
  const int n = static_cast<int>(k.size());
  const int ow = w - n + 1;
  const int oh = h - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

} // namespace

void
LossWeights::validate() const
{
  if (contact < 0.0 || texture < 0.0 || ssim < 0.0 || kl < 0.0)
    fail(ErrorCode::InvalidArgument, "loss weights must be non-negative");
}

RealGrid
to_real_grid(const ContactMask& mask)
{
  RealGrid g{ mask.size, std::vector<double>(mask.bits.size()) };
  for (std::size_t i = 0; i < mask.bits.size(); ++i)
    g.values[i] = mask.bits[i] ? 1.0 : 0.0;
  return g;
}

double
loss_p(const UVCoordinateMap& pred, const UVCoordinateMap& gt)
{
  require_same_size(pred.size, gt.size);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.texels.size(); ++i) {
    if (!gt.valid[i])
      continue;
    sum += abs_diff(pred.texels[i], gt.texels[i]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / (3.0 * static_cast<double>(n));
}

double
loss_grad(const UVCoordinateMap& pred, const UVCoordinateMap& gt)
{
  require_same_size(pred.size, gt.size);
  const auto gg = gradient(gt);
  const auto gp = gradient(pred, gt.valid);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gg.valid.size(); ++i) {
    if (!gg.valid[i])
      continue;
    sum += abs_diff(gp.dx[i], gg.dx[i]) + abs_diff(gp.dy[i], gg.dy[i]);
    ++n;
  }
  return n == 0 ? 0.0 : sum / (6.0 * static_cast<double>(n));
}

double
loss_contact(const RealGrid& pred, const RealGrid& gt)
{
  require_same_size(pred.size, gt.size);
  if (pred.values.size() != gt.values.size())
    fail(ErrorCode::DimensionMismatch, "contact grids differ in length");
  if (gt.values.empty())
    return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.values.size(); ++i)
    sum += std::abs(pred.values[i] - gt.values[i]);
  return sum / static_cast<double>(gt.values.size());
}

double
loss_vertices(const Mesh& pred, const Mesh& gt)
{
  if (pred.vertex_count() != gt.vertex_count())
    fail(ErrorCode::CountMismatch, "vertex loss needs equal vertex counts");
  if (gt.vertices.empty())
    return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < gt.vertices.size(); ++i)
    sum += (pred.vertices[i] - gt.vertices[i]).cwiseAbs().sum();
  return sum / (3.0 * static_cast<double>(gt.vertices.size()));
}

double
ssim_plane(std::span<const double> a, std::span<const double> b, int width, int height, const SsimOptions& options)
{
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (a.size() != n || b.size() != n)
    fail(ErrorCode::DimensionMismatch, "SSIM planes differ in size");
  if (width < options.window || height < options.window)
    fail(ErrorCode::TooSmall, "SSIM needs images of at least " + std::to_string(options.window) + "x" +
                                std::to_string(options.window));

  const auto k = gaussian_kernel(options.window, options.sigma);
  std::vector<double> va(a.begin(), a.end()), vb(b.begin(), b.end());
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, width, height, k);
  const auto mu_b = filter_valid(vb, width, height, k);
  const auto e_aa = filter_valid(aa, width, height, k);
  const auto e_bb = filter_valid(bb, width, height, k);
  const auto e_ab = filter_valid(ab, width, height, k);

  const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
  const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double var_a = e_aa[i] - ma * ma;
    const double var_b = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return sum / static_cast<double>(mu_a.size());
}

double
ssim(const Image& a, const Image& b, const SsimOptions& options)
{
  if (a.width != b.width || a.height != b.height)
    fail(ErrorCode::DimensionMismatch, "SSIM images differ in size");
  const auto n = a.pixels.size();
  double total = 0.0;
  std::vector<double> pa(n), pb(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a.pixels[i][c];
      pb[i] = b.pixels[i][c];
    }
    total += ssim_plane(pa, pb, a.width, a.height, options);
  }
  return total / 3.0;
}

double
loss_pixel(const Image& rendered, const Image& masked_target)
{
  if (rendered.width != masked_target.width || rendered.height != masked_target.height)
    fail(ErrorCode::DimensionMismatch, "pixel loss images differ in size");
  if (rendered.pixels.empty())
    return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < rendered.pixels.size(); ++i)
    sum += (rendered.pixels[i] - masked_target.pixels[i]).abs().sum();
  return sum / (3.0 * static_cast<double>(rendered.pixels.size()));
}

double
loss_texture(const Image& rendered, const Image& masked_target, double ssim_weight)
{
  return loss_pixel(rendered, masked_target) + ssim_weight * (1.0 - ssim(masked_target, rendered));
}

double
PenetrationSet::mean_distance() const
{
  if (nearest.empty())
    return 0.0;
  double sum = 0.0;
  for (const auto& n : nearest)
    sum += n.distance;
  return sum / static_cast<double>(nearest.size());
}

double
PenetrationSet::max_distance() const
{
  double m = 0.0;
  for (const auto& n : nearest)
    m = std::max(m, n.distance);
  return m;
}

PenetrationSet
find_penetrations(std::span<const Vec3> hand_vertices, const ObjectQuery& object, const ContactVertexSet* candidates)
{
  PenetrationSet set;
  auto test = [&](std::uint32_t i) {
    ++set.tested;
    if (object.inside(hand_vertices[i])) {
      set.vertices.push_back(i);
      set.nearest.push_back(object.nearest(hand_vertices[i]));
    }
  };
  if (candidates) {
    for (auto i : candidates->indices)
      if (i < hand_vertices.size())
        test(i);
  } else {
    for (std::uint32_t i = 0; i < hand_vertices.size(); ++i)
      test(i);
  }
  return set;
}

double
loss_penetration(const Mesh& hand, const ObjectQuery& object, const ContactVertexSet* candidates)
{
  return find_penetrations(hand.vertices, object, candidates).mean_distance();
}

double
loss_penetration(const Mesh& hand, const Mesh& object, const ContactVertexSet* candidates)
{
  return loss_penetration(hand, ObjectQuery(object), candidates);
}

double
kl_standard_normal(const GaussianPosterior& q)
{
  if (q.mean.size() != q.stddev.size())
    fail(ErrorCode::InvalidArgument, "posterior mean and stddev lengths differ");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.mean.size(); ++i) {
    const double s = q.stddev[i];
    if (!(s > 0.0))
      fail(ErrorCode::InvalidArgument, "posterior stddev must be positive");
    const double var = s * s;
    kl += q.mean[i] * q.mean[i] + var - std::log(var) - 1.0;
  }
  return 0.5 * kl;
}

double
inference_prior_penalty(const Eigen::VectorXd& z)
{
  return 0.5 * z.squaredNorm();
}

Rgb2UvTerms
rgb2uv_terms(const Rgb2UvInputs& in, const LossWeights& weights)
{
  weights.validate();
  Rgb2UvTerms t;
  t.coordinate = loss_p(in.pred_map, in.gt_map);
  t.gradient = loss_grad(in.pred_map, in.gt_map);
  t.contact = loss_contact(in.pred_contact, in.gt_contact);
  t.vertices = loss_vertices(in.pred_mesh, in.gt_mesh);
  t.texture = loss_texture(in.rendered, in.masked_target, weights.ssim);
  return t;
}

GraspTerms
grasp_terms(const GraspInputs& in)
{
  GraspTerms t;
  t.coordinate = loss_p(in.pred_map, in.gt_map);
  t.gradient = loss_grad(in.pred_map, in.gt_map);
  t.vertices = loss_vertices(in.pred_mesh, in.gt_mesh);
  t.kl = kl_standard_normal(in.posterior);
  t.penetration = loss_penetration(in.pred_mesh, in.object);
  return t;
}

} // namespace uvgrasp
