#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uvgrasp/contact.hpp"
#include "uvgrasp/geometry.hpp"
#include "uvgrasp/latent.hpp"
#include "uvgrasp/losses.hpp"
#include "uvgrasp/spatial.hpp"
#include "uvgrasp/uv_map.hpp"

namespace uvgrasp {

struct OptimizerConfig
{
  double learning_rate = 1e-6;
  // Stop once successive accepted objectives differ by less than this.
  double tolerance = 1e-6;
  int max_iterations = 10000;
  // Evaluate the penetration term only on vertices under the dilated
  // contact mask.
  bool restrict_candidates = false;
  double penetration_weight = 1.0;
  // Drops the penetration term (prior-only refinement).
  bool hand_only = false;
  // Halvings of a rejected step before the loop gives up.
  int max_halvings = 20;

  double effective_penetration_weight() const { return hand_only ? 0.0 : penetration_weight; }
  // Throws InvalidArgument.
  void validate() const;
};

// Penalized objective 0.5 |z|^2 + w * L_pene(hand(z)) where hand(z) is the
// template reconstructed from the decoded map.
class GraspProblem
{
public:
  // `candidates` restricts the penetration term when non-null.
  // Errors: NotWatertight (object), NoValidSupport (template vs layout).
  GraspProblem(const LatentDecoder& decoder, const Mesh& hand_template, const CameraIntrinsics& camera,
               const Mesh& object, double penetration_weight,
               std::optional<ContactVertexSet> candidates = std::nullopt);

  struct Evaluation
  {
    double objective = 0.0;
    double prior = 0.0;
    double penetration = 0.0;  // L_pene in meters (unweighted)
    PenetrationSet inside;
    std::vector<Vec3> vertices;
    Eigen::VectorXd gradient;  // empty unless requested
  };

  // Errors: DimensionMismatch, NonFiniteObjective.
  Evaluation evaluate(const LatentCode& z, bool with_gradient) const;
  double objective(const LatentCode& z) const { return evaluate(z, false).objective; }
  Eigen::VectorXd gradient(const LatentCode& z) const { return evaluate(z, true).gradient; }

  // Welded hand vertices decoded from z.
  std::vector<Vec3> hand_vertices(const LatentCode& z) const;
  Mesh hand_mesh(const LatentCode& z) const;

  const ObjectQuery& object() const { return object_; }
  const LatentDecoder& decoder() const { return decoder_; }
  const Mesh& hand_template() const { return template_; }
  const CameraIntrinsics& camera() const { return camera_; }
  double penetration_weight() const { return weight_; }
  const std::optional<ContactVertexSet>& candidates() const { return candidates_; }

private:
  const LatentDecoder& decoder_;
  Mesh template_;
  CameraIntrinsics camera_;
  ObjectQuery object_;
  double weight_;
  std::optional<ContactVertexSet> candidates_;

  VertexSampler sampler_;
  std::vector<std::uint32_t> texels_;                   // unique tap texels
  std::vector<std::vector<std::uint32_t>> tap_slots_;  // per vertex, into texels_
  std::vector<std::vector<std::uint32_t>> groups_;     // vertices per position id
};

struct OptimizationResult
{
  LatentCode z;
  // Accepted objective values, starting with the initial one.
  std::vector<double> trace;
  // Penetration depth (mm, all vertices) of each accepted iterate.
  std::vector<double> trace_pd_mm;
  int iterations = 0;
  bool converged = false;
};

// Gradient descent with step halving. Inside-set membership and nearest
// object vertices are frozen within an iteration.
// Errors: NonFiniteObjective, InvalidArgument (config or non-finite init).
OptimizationResult
optimize(const LatentCode& init, const GraspProblem& problem, const OptimizerConfig& config);

struct RefineReport
{
  double objective_initial = 0.0;
  double objective_final = 0.0;
  double pd_mm_initial = 0.0;
  double pd_mm_final = 0.0;
  double siv_cm3_initial = 0.0;
  double siv_cm3_final = 0.0;
  int iterations = 0;
  std::size_t candidate_count = 0;  // vertices the penetration term scans
  double latent_shift = 0.0;        // |z* - z0|
};

struct RefineResult
{
  Mesh hand;
  UVCoordinateMap map;
  LatentCode z0;
  LatentCode z;
  OptimizationResult optimization;
  RefineReport report;
};

// encode -> optimize -> decode -> reconstruct. With restrict_candidates the
// candidates come from `contact_mask`, or from the contacts of the initial
// decoded hand when no mask is given. SIV uses the default 80^3 grid.
RefineResult
refine_grasp(const UVCoordinateMap& map, const LatentDecoder& decoder, const Mesh& hand_template,
             const CameraIntrinsics& camera, const Mesh& object, const OptimizerConfig& config,
             const ContactMask* contact_mask = nullptr);

} // namespace uvgrasp
