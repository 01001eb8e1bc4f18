#include <benchmark/benchmark.h>

#include <random>

#include "uvgrasp/contact.hpp"
#include "uvgrasp/metrics.hpp"
#include "uvgrasp/optimizer.hpp"
#include "uvgrasp/render.hpp"
#include "uvgrasp/scene.hpp"

using namespace uvgrasp;

namespace {

const SceneBundle&
scene()
{
  static const SceneBundle b = [] {
    SceneSpec spec;
    spec.seed = 1;
    spec.penetration_mm = 2.0;
    return make_scene(spec);
  }();
  return b;
}

std::vector<Vec3>
query_points(const Mesh& around, int n)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> jitter(0.0, 0.01);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const auto& v = around.vertices[static_cast<std::size_t>(i) % around.vertices.size()];
    pts.push_back(v + Vec3(jitter(rng), jitter(rng), jitter(rng)));
  }
  return pts;
}

void
BM_NearestVertex(benchmark::State& state)
{
  const auto object = make_sphere(0.03, static_cast<int>(state.range(0)));
  const ObjectQuery q(object);
  const auto pts = query_points(object, 4096);
  for (auto _ : state)
    for (const auto& p : pts)
      benchmark::DoNotOptimize(q.nearest(p));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pts.size()));
  state.counters["object_vertices"] = static_cast<double>(object.vertex_count());
}
BENCHMARK(BM_NearestVertex)->Arg(3)->Arg(5);

void
BM_InsideTest(benchmark::State& state)
{
  const auto object = make_sphere(0.03, static_cast<int>(state.range(0)));
  const ObjectQuery q(object);
  const auto pts = query_points(object, 4096);
  for (auto _ : state)
    for (const auto& p : pts)
      benchmark::DoNotOptimize(q.inside(p));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pts.size()));
}
BENCHMARK(BM_InsideTest)->Arg(3)->Arg(5);

void
BM_RasterizeCoordinateMap(benchmark::State& state)
{
  const auto& b = scene();
  const GridSize size{ static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) };
  for (auto _ : state)
    benchmark::DoNotOptimize(rasterize_coordinate_map(b.hand, b.camera, size));
}
BENCHMARK(BM_RasterizeCoordinateMap)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void
BM_ContactMask(benchmark::State& state)
{
  const auto& b = scene();
  for (auto _ : state) {
    const auto c = contact_vertices(b.hand, b.object);
    benchmark::DoNotOptimize(rasterize_contact_mask(c, b.hand, b.spec.uv_size));
  }
}
BENCHMARK(BM_ContactMask)->Unit(benchmark::kMillisecond);

void
BM_SolidIntersectionVolume(benchmark::State& state)
{
  const auto& b = scene();
  const ObjectQuery q(b.object);
  const SivOptions opt{ static_cast<int>(state.range(0)), SivMode::VoxelCenterInBoth };
  for (auto _ : state)
    benchmark::DoNotOptimize(solid_intersection_volume(b.hand, q, opt));
}
BENCHMARK(BM_SolidIntersectionVolume)->Arg(40)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

void
BM_Render(benchmark::State& state)
{
  const auto& b = scene();
  const int threads = static_cast<int>(state.range(0));
  const auto mode = threads == 0 ? RenderMode::Serial : RenderMode::Parallel;
  for (auto _ : state)
    benchmark::DoNotOptimize(render(b.hand, b.texture, b.camera, mode, threads));
}
BENCHMARK(BM_Render)->Arg(0)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void
BM_GraspObjectiveGradient(benchmark::State& state)
{
  static const LinearLatentModel model = [] {
    SceneSpec family;
    family.seed = 1000;
    return fit_linear_model(sample_pose_family(family, 160, family.pose_amplitude), kDefaultLatentDim);
  }();
  const auto& b = scene();
  const auto tmpl = make_template(TemplateKind::CapsuleHand, b.spec.hand_subdivision);
  std::optional<ContactVertexSet> cand;
  if (state.range(0))
    cand = restrict_penetration_candidates(b.contact_mask, tmpl);
  const GraspProblem p(model, tmpl, b.camera, b.object, 1000.0, cand);
  const auto z = model.encode(b.uv_map, b.object);
  for (auto _ : state)
    benchmark::DoNotOptimize(p.evaluate(z, true));
  state.counters["restricted"] = static_cast<double>(state.range(0));
}
BENCHMARK(BM_GraspObjectiveGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
