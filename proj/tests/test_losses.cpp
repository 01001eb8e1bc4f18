#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "uvgrasp/error.hpp"
#include "uvgrasp/losses.hpp"
#include "uvgrasp/scene.hpp"

using namespace uvgrasp;

namespace {

UVCoordinateMap
all_valid(UVCoordinateMap m)
{
  std::fill(m.valid.begin(), m.valid.end(), 1);
  return m;
}

} // namespace

TEST_CASE("property: SSIM plane matches the direct windowed oracle")
{
  testgen::Rng rng(1);
  for (int t = 0; t < 6; ++t) {
    const int w = rng.integer(11, 24), h = rng.integer(11, 20);
    std::vector<double> a(w * h), b(w * h);
    for (int i = 0; i < w * h; ++i) {
      a[i] = rng.uniform();
      b[i] = rng.coin(0.5) ? a[i] + rng.normal(0.0, 0.1) : rng.uniform();
    }
    SsimOptions o;
    CHECK(ssim_plane(a, b, w, h, o) == doctest::Approx(oracle::ssim(a, b, w, h, o)).epsilon(1e-9));
  }
}

TEST_CASE("SSIM of constant images has a closed form")
{
  const double p = 0.3, q = 0.7;
  const Image a(16, 16, Rgb::Constant(p)), b(16, 16, Rgb::Constant(q));
  const double c1 = 1e-4;
  CHECK(ssim(a, b) == doctest::Approx((2 * p * q + c1) / (p * p + q * q + c1)).epsilon(1e-9));
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("SSIM properties and errors")
{
  testgen::Rng rng(2);
  const auto a = testgen::random_image(rng, 20, 18);
  const auto b = testgen::random_image(rng, 20, 18);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) < 1.0);
  CHECK_THROWS_AS(ssim(a, Image(20, 17)), Error);
  try {
    ssim(Image(10, 30), Image(10, 30));
    FAIL("expected TooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooSmall);
  }
}

TEST_CASE("pixel and texture losses")
{
  const Image a(12, 12, Rgb(0.2, 0.4, 0.6)), b(12, 12, Rgb(0.3, 0.4, 0.3));
  CHECK(loss_pixel(a, b) == doctest::Approx((0.1 + 0.0 + 0.3) / 3.0).epsilon(1e-12));
  CHECK(loss_texture(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  const double expect = loss_pixel(a, b) + 10.0 * (1.0 - ssim(b, a));
  CHECK(loss_texture(a, b) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("KL matches numerical integration in one dimension")
{
  for (auto [m, s] : { std::pair{ 0.0, 1.0 }, std::pair{ 0.7, 0.5 }, std::pair{ -1.2, 2.0 } }) {
    const double integral = oracle::kl_numeric(m, s);
    GaussianPosterior post{ Eigen::VectorXd::Constant(1, m), Eigen::VectorXd::Constant(1, s) };
    CHECK(kl_standard_normal(post) == doctest::Approx(integral).epsilon(1e-5));
  }
}

TEST_CASE("KL is additive over dimensions and zero only at the prior")
{
  GaussianPosterior p{ Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4) };
  CHECK(kl_standard_normal(p) == 0.0);
  p.mean << 0.5, 0, 0, -1;
  p.stddev << 1, 2, 0.5, 1;
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    sum += kl_standard_normal({ p.mean.segment(i, 1), p.stddev.segment(i, 1) });
  CHECK(kl_standard_normal(p) == doctest::Approx(sum).epsilon(1e-12));
  CHECK(kl_standard_normal(p) > 0.0);
  p.stddev[1] = 0.0;
  CHECK_THROWS_AS(kl_standard_normal(p), Error);
  CHECK_THROWS_AS(kl_standard_normal({ Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(3) }), Error);
  CHECK(inference_prior_penalty(Eigen::Vector3d(1, 2, 2)) == 4.5);
}

TEST_CASE("coordinate loss only counts texels valid in the ground truth")
{
  UVCoordinateMap gt({ 2, 1 }), pred({ 2, 1 });
  gt.valid = { 1, 0 };
  gt.texels = { { 1, 2, 3 }, { 0, 0, 0 } };
  pred.texels = { { 2, 2, 0 }, { 100, 100, 100 } };
  CHECK(loss_p(pred, gt) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(loss_p(pred, UVCoordinateMap({ 1, 2 })), Error);
}

TEST_CASE("property: gradient loss matches forward-difference oracle")
{
  testgen::Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const GridSize size{ rng.integer(3, 9), rng.integer(3, 9) };
    const auto gt = testgen::random_map(rng, size, 0.8);
    auto pred = testgen::random_map(rng, size, 0.3);
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y + 1 < size.height; ++y)
      for (int x = 0; x + 1 < size.width; ++x) {
        if (!gt.is_valid(x, y) || !gt.is_valid(x + 1, y) || !gt.is_valid(x, y + 1))
          continue;
        const auto d = [&](const UVCoordinateMap& m, int x1, int y1) {
          const auto& a = m.at(x1, y1);
          const auto& b = m.at(x, y);
          return Eigen::Vector3d(a.u - b.u, a.v - b.v, a.d - b.d);
        };
        sum += (d(pred, x + 1, y) - d(gt, x + 1, y)).cwiseAbs().sum();
        sum += (d(pred, x, y + 1) - d(gt, x, y + 1)).cwiseAbs().sum();
        ++n;
      }
    const double expected = n == 0 ? 0.0 : sum / (6.0 * n);
    CHECK(loss_grad(pred, gt) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("gradient loss ignores a constant offset")
{
  testgen::Rng rng(9);
  const auto gt = all_valid(testgen::random_map(rng, { 8, 8 }));
  auto pred = gt;
  for (auto& t : pred.texels) {
    t.u += 3.0;
    t.d -= 0.1;
  }
  CHECK(loss_grad(pred, gt) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loss_p(pred, gt) == doctest::Approx(3.1 / 3.0).epsilon(1e-12));
}

TEST_CASE("contact and vertex losses")
{
  RealGrid a{ { 2, 2 }, { 0, 1, 0.5, 0 } }, b{ { 2, 2 }, { 0, 0, 1, 0 } };
  CHECK(loss_contact(a, b) == doctest::Approx(0.375).epsilon(1e-12));
  ContactMask m({ 2, 1 });
  m.bits = { 1, 0 };
  CHECK(to_real_grid(m).values == std::vector<double>{ 1.0, 0.0 });

  Mesh p, g;
  g.vertices = { Vec3(0, 0, 0), Vec3(1, 1, 1) };
  p.vertices = { Vec3(0.3, 0, 0), Vec3(1, 1, 0.4) };
  CHECK(loss_vertices(p, g) == doctest::Approx(0.9 / 6.0).epsilon(1e-12));
  p.vertices.pop_back();
  CHECK_THROWS_AS(loss_vertices(p, g), Error);
}

TEST_CASE("penetration loss is the mean depth over penetrating vertices")
{
  const auto sphere = make_sphere(0.03, 4);
  const ObjectQuery q(sphere);
  Mesh hand;
  const auto below = [&](std::size_t i, double d) -> Vec3 { return sphere.vertices[i] - d * sphere.vertices[i].normalized(); };
  hand.vertices = { below(2, 0.001), below(40, 0.003), Vec3(0.5, 0, 0) };
  CHECK(loss_penetration(hand, q) == doctest::Approx(0.002).epsilon(1e-9));
  ContactVertexSet only_first;
  only_first.indices = { 0 };
  CHECK(loss_penetration(hand, q, &only_first) == doctest::Approx(0.001).epsilon(1e-9));
  hand.vertices = { Vec3(0.5, 0, 0) };
  CHECK(loss_penetration(hand, q) == 0.0);
}

TEST_CASE("composite objectives vanish on a perfect prediction")
{
  SceneSpec spec;
  spec.seed = 4;
  const auto b = make_scene(spec);
  const auto grid = to_real_grid(b.contact_mask);
  const ObjectQuery q(b.object);
  const Rgb2UvInputs in{ b.uv_map, b.uv_map, grid, grid, b.hand, b.hand, b.image, b.image };
  const auto t = rgb2uv_terms(in, {});
  CHECK(t.total({}) == doctest::Approx(0.0).epsilon(1e-12));

  const GaussianPosterior prior{ Eigen::VectorXd::Zero(8), Eigen::VectorXd::Ones(8) };
  const auto g = grasp_terms({ b.uv_map, b.uv_map, b.hand, b.hand, prior, q });
  CHECK(g.total({}) == 0.0);
}

TEST_CASE("composite totals follow the weights")
{
  Rgb2UvTerms t{ 1, 2, 3, 4, 5 };
  LossWeights w;
  CHECK(t.total(w) == doctest::Approx(1 + 2 + 30 + 4 + 50));
  GraspTerms g{ 1, 2, 3, 1000, 5 };
  CHECK(g.total(w) == doctest::Approx(1 + 2 + 3 + 1 + 5));
  w.kl = -1;
  CHECK_THROWS_AS(w.validate(), Error);
}
