#include "uvgrasp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "uvgrasp/error.hpp"
#include "uvgrasp/metrics.hpp"

namespace uvgrasp {

namespace {

double
penetration_depth_mm(const std::vector<Vec3>& vertices, const ObjectQuery& object)
{
  return find_penetrations(vertices, object, nullptr).max_distance() / kMetersPerMillimeter;
}

} // namespace

void
OptimizerConfig::validate() const
{
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(tolerance > 0.0))
    fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (max_iterations < 0)
    fail(ErrorCode::InvalidArgument, "max iterations must be non-negative");
  if (!(penetration_weight >= 0.0))
    fail(ErrorCode::InvalidArgument, "penetration weight must be non-negative");
  if (max_halvings < 0)
    fail(ErrorCode::InvalidArgument, "max halvings must be non-negative");
}

GraspProblem::GraspProblem(const LatentDecoder& decoder, const Mesh& hand_template, const CameraIntrinsics& camera,
                           const Mesh& object, double penetration_weight,
                           std::optional<ContactVertexSet> candidates)
  : decoder_(decoder)
  , template_(hand_template)
  , camera_(camera)
  , object_(object)
  , weight_(penetration_weight)
  , candidates_(std::move(candidates))
  , sampler_(decoder.layout().size, decoder.layout().valid, hand_template.uv_template)
{
  camera_.validate();
  template_.validate();
  if (!template_.has_uv())
    fail(ErrorCode::MissingUV, "hand template has no UV coordinates");
  if (weight_ > 0.0)
    require_watertight(object);

  std::unordered_map<std::uint32_t, std::uint32_t> slot_of;
  tap_slots_.resize(sampler_.vertex_count());
  for (std::size_t i = 0; i < sampler_.vertex_count(); ++i)
    for (const auto& tap : sampler_.taps(i)) {
      auto [it, inserted] = slot_of.try_emplace(tap.texel, static_cast<std::uint32_t>(texels_.size()));
      if (inserted)
        texels_.push_back(tap.texel);
      tap_slots_[i].push_back(it->second);
    }

  std::unordered_map<std::uint32_t, std::size_t> group_of;
  std::vector<std::vector<std::uint32_t>> groups;
  for (std::size_t i = 0; i < template_.vertex_count(); ++i) {
    auto [it, inserted] = group_of.try_emplace(template_.position_id(i), groups.size());
    if (inserted)
      groups.emplace_back();
    groups[it->second].push_back(static_cast<std::uint32_t>(i));
  }
  groups_ = std::move(groups);
}

std::vector<Vec3>
GraspProblem::hand_vertices(const LatentCode& z) const
{
  const auto values = decoder_.decode_texels(z, object_.mesh(), texels_);
  std::vector<Vec3> raw(template_.vertex_count());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Uvd acc{ 0.0, 0.0, 0.0 };
    const auto& taps = sampler_.taps(i);
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const auto& p = values[tap_slots_[i][t]];
      acc.u += taps[t].weight * p.u;
      acc.v += taps[t].weight * p.v;
      acc.d += taps[t].weight * p.d;
    }
    raw[i] = unproject(acc, camera_);
  }
  std::vector<Vec3> out(raw.size());
  for (const auto& g : groups_) {
    Vec3 mean = Vec3::Zero();
    for (auto i : g)
      mean += raw[i];
    mean /= static_cast<double>(g.size());
    for (auto i : g)
      out[i] = g.size() > 1 ? mean : raw[i];
  }
  return out;
}

Mesh
GraspProblem::hand_mesh(const LatentCode& z) const
{
  Mesh m;
  m.vertices = hand_vertices(z);
  m.faces = template_.faces;
  m.uv_template = template_.uv_template;
  m.position_ids = template_.position_ids;
  return m;
}

GraspProblem::Evaluation
GraspProblem::evaluate(const LatentCode& z, bool with_gradient) const
{
  if (z.size() != decoder_.latent_dim())
    fail(ErrorCode::DimensionMismatch, "latent code length differs from the decoder");
  Evaluation ev;
  ev.vertices = hand_vertices(z);
  ev.prior = inference_prior_penalty(z);
  if (weight_ > 0.0) {
    ev.inside = find_penetrations(ev.vertices, object_, candidates_ ? &*candidates_ : nullptr);
    ev.penetration = ev.inside.mean_distance();
  }
  ev.objective = ev.prior + weight_ * ev.penetration;
  if (!std::isfinite(ev.objective))
    fail(ErrorCode::NonFiniteObjective, "objective is not finite");
  if (!with_gradient)
    return ev;

  ev.gradient = z;
  const auto n = ev.inside.vertices.size();
  if (n == 0)
    return ev;

  // dL/d(texel uvd), accumulated through welding, bilinear taps and the
  // unprojection Jacobian.
  std::vector<std::uint32_t> used;
  std::unordered_map<std::uint32_t, std::size_t> used_slot;
  std::vector<Eigen::Vector3d> accum;
  const auto values = decoder_.decode_texels(z, object_.mesh(), texels_);

  std::unordered_map<std::uint32_t, std::size_t> group_of_vertex;
  for (std::size_t g = 0; g < groups_.size(); ++g)
    for (auto i : groups_[g])
      group_of_vertex[i] = g;

  const double scale = weight_ / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto vi = ev.inside.vertices[k];
    const Vec3 diff = ev.vertices[vi] - object_.mesh().vertices[ev.inside.nearest[k].index];
    const double dist = diff.norm();
    if (dist == 0.0)
      continue;
    const Vec3 dp = scale * diff / dist;
    const auto& group = groups_[group_of_vertex.at(vi)];
    const double share = 1.0 / static_cast<double>(group.size());
    for (auto j : group) {
      const auto& taps = sampler_.taps(j);
      Uvd s{ 0.0, 0.0, 0.0 };
      for (std::size_t t = 0; t < taps.size(); ++t) {
        const auto& p = values[tap_slots_[j][t]];
        s.u += taps[t].weight * p.u;
        s.v += taps[t].weight * p.v;
        s.d += taps[t].weight * p.d;
      }
      // Transposed unprojection Jacobian applied to dp.
      const Eigen::Vector3d duvd(share * dp.x() * s.d / camera_.fx, share * dp.y() * s.d / camera_.fy,
                                 share * (dp.x() * (s.u - camera_.cx) / camera_.fx +
                                          dp.y() * (s.v - camera_.cy) / camera_.fy + dp.z()));
      for (std::size_t t = 0; t < taps.size(); ++t) {
        const auto texel = taps[t].texel;
        auto [it, inserted] = used_slot.try_emplace(texel, used.size());
        if (inserted) {
          used.push_back(texel);
          accum.push_back(Eigen::Vector3d::Zero());
        }
        accum[it->second] += taps[t].weight * duvd;
      }
    }
  }
  if (used.empty())
    return ev;
  const Eigen::MatrixXd jac = decoder_.texel_jacobian(z, object_.mesh(), used);
  Eigen::VectorXd flat(3 * static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i)
    flat.segment<3>(3 * static_cast<Eigen::Index>(i)) = accum[i];
  ev.gradient += jac.transpose() * flat;
  return ev;
}

OptimizationResult
optimize(const LatentCode& init, const GraspProblem& problem, const OptimizerConfig& config)
{
  config.validate();
  if (!init.allFinite())
    fail(ErrorCode::InvalidArgument, "initial latent code has non-finite entries");

  auto pd_of = [&](const GraspProblem::Evaluation& ev) {
    if (problem.penetration_weight() > 0.0 && !problem.candidates())
      return ev.inside.max_distance() / kMetersPerMillimeter;
    return penetration_depth_mm(ev.vertices, problem.object());
  };

  OptimizationResult result;
  result.z = init;
  auto current = problem.evaluate(result.z, true);
  result.trace.push_back(current.objective);
  result.trace_pd_mm.push_back(pd_of(current));

  while (result.iterations < config.max_iterations) {
    double step = config.learning_rate;
    bool accepted = false;
    LatentCode candidate;
    GraspProblem::Evaluation next;
    for (int halving = 0; halving <= config.max_halvings; ++halving, step *= 0.5) {
      candidate = result.z - step * current.gradient;
      next = problem.evaluate(candidate, true);
      if (next.objective <= current.objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      break;
    ++result.iterations;
    const double change = current.objective - next.objective;
    result.z = std::move(candidate);
    current = std::move(next);
    result.trace.push_back(current.objective);
    result.trace_pd_mm.push_back(pd_of(current));
    if (change < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RefineResult
refine_grasp(const UVCoordinateMap& map, const LatentDecoder& decoder, const Mesh& hand_template,
             const CameraIntrinsics& camera, const Mesh& object, const OptimizerConfig& config,
             const ContactMask* contact_mask)
{
  config.validate();
  RefineResult out;
  out.z0 = decoder.encode(map, object);

  std::optional<ContactVertexSet> candidates;
  if (config.restrict_candidates && config.effective_penetration_weight() > 0.0) {
    if (contact_mask) {
      candidates = restrict_penetration_candidates(*contact_mask, hand_template);
    } else {
      const GraspProblem probe(decoder, hand_template, camera, object, 0.0);
      const auto hand0 = probe.hand_mesh(out.z0);
      const auto contacts = contact_vertices(hand0, object);
      candidates =
        restrict_penetration_candidates(rasterize_contact_mask(contacts, hand_template, decoder.layout().size),
                                        hand_template);
    }
  }
  const GraspProblem problem(decoder, hand_template, camera, object, config.effective_penetration_weight(),
                             candidates);

  const ObjectQuery& query = problem.object();
  const auto hand0 = problem.hand_mesh(out.z0);
  out.report.pd_mm_initial = penetration_depth(hand0, query);
  out.report.siv_cm3_initial = solid_intersection_volume(hand0, query);

  out.optimization = optimize(out.z0, problem, config);
  out.z = out.optimization.z;
  out.map = decoder.decode(out.z, object);
  out.hand = problem.hand_mesh(out.z);

  out.report.objective_initial = out.optimization.trace.front();
  out.report.objective_final = out.optimization.trace.back();
  out.report.pd_mm_final = penetration_depth(out.hand, query);
  out.report.siv_cm3_final = solid_intersection_volume(out.hand, query);
  out.report.iterations = out.optimization.iterations;
  out.report.candidate_count = candidates ? candidates->size() : hand_template.vertex_count();
  out.report.latent_shift = (out.z - out.z0).norm();
  return out;
}

} // namespace uvgrasp
