#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uvgrasp/contact.hpp"
#include "uvgrasp/geometry.hpp"
#include "uvgrasp/image.hpp"
#include "uvgrasp/metrics.hpp"
#include "uvgrasp/render.hpp"
#include "uvgrasp/uv_map.hpp"

namespace uvgrasp {

enum class TemplateKind { CapsuleHand, Icosphere, Box };

// "capsule_hand", "icosphere", "box". Errors: UnknownKind.
TemplateKind
parse_template_kind(std::string_view name);
std::string
to_string(TemplateKind kind);

// Closed, UV-unwrapped template mesh. Icosphere: unit sphere from a
// subdivided icosahedron net. Box: unit cube [-1, 1]^3 from a subdivided
// cross net. Capsule hand: palm plus five separated finger ellipsoids, in
// meters, palm centered at the origin, fingers along +y, thickness along z.
// Errors: UnknownKind, InvalidArgument (negative subdivision).
Mesh
make_template(TemplateKind kind, int subdivision);

Mesh
make_template(std::string_view kind, int subdivision);

Mesh
make_sphere(double radius, int subdivision);

// Axis-aligned box centered at the origin, tessellated so no edge exceeds
// `max_edge` (meters) along the box axes.
Mesh
make_box(const Vec3& half_extents, double max_edge);

enum class ObjectKind { Sphere, Box };

ObjectKind
parse_object_kind(std::string_view name);
std::string
to_string(ObjectKind kind);

struct SceneSpec
{
  std::uint64_t seed = 0;
  TemplateKind hand_kind = TemplateKind::CapsuleHand;
  int hand_subdivision = 2;
  ObjectKind object_kind = ObjectKind::Sphere;
  double sphere_radius = 0.03;                              // meters
  Vec3 box_half_extents = Vec3(0.03, 0.025, 0.02);        // meters
  // Sphere: icosphere subdivision. Box: maximum edge length in meters.
  int sphere_subdivision = 5;
  double box_max_edge = 0.001;
  // Hand placement in the camera frame before the seeded pose perturbation.
  RigidTransform hand_pose = default_hand_pose();
  // Deformation amplitude (meters) of the seeded smooth field applied to the
  // hand; 0 keeps the template shape.
  double pose_amplitude = 0.004;
  double penetration_mm = 0.0;
  // Unit approach direction of the object towards the hand (camera frame);
  // seeded around +z -> -z when absent.
  std::optional<Vec3> approach;
  GridSize uv_size = kDefaultUVResolution;
  CameraIntrinsics camera = default_camera();

  static RigidTransform default_hand_pose();
  static CameraIntrinsics default_camera();
  // Errors: InvalidArgument.
  void validate() const;
};

struct SceneExpectations
{
  double penetration_mm = 0.0;     // target depth of the deepest hand vertex
  double sampling_gap_mm = 0.0;    // measured PD lies in [target, target + gap]
  std::optional<double> siv_cm3;  // only when closed-form
};

struct SceneBundle
{
  SceneSpec spec;
  Mesh hand;
  Mesh object;
  CameraIntrinsics camera;
  UVCoordinateMap uv_map;
  ContactVertexSet contacts;
  ContactMask contact_mask;
  TextureMap texture;
  Image image;
  std::vector<std::uint8_t> silhouette;
  SceneExpectations expected;
};

// Errors: InfeasiblePenetration, InvalidArgument, UnknownKind.
SceneBundle
make_scene(const SceneSpec& spec);

// Hand of the scene spec (template, pose, seeded deformation) without the
// object.
Mesh
make_posed_hand(const SceneSpec& spec);

// Posed template deformed by a seeded rigid perturbation plus a smooth
// low-frequency displacement field of the given amplitude (meters).
Mesh
deform_hand(const Mesh& posed, std::uint64_t seed, std::uint64_t stream, double amplitude);

// n seeded smooth deformations of the posed hand template, each rasterized
// to a UV map. Sample i uses stream i of spec.seed.
std::vector<UVCoordinateMap>
sample_pose_family(const SceneSpec& spec, int n, double amplitude);

// Joint regressor for a capsule-hand-like template: one joint per connected
// component (its centroid) plus each component's two extreme vertices along
// its longest axis.
JointRegressor
make_landmark_regressor(const Mesh& hand);

// Directory layout: hand.obj, object.obj, uv.uvcm, contact.cmsk,
// texture.png, image.png, camera.txt, regressor.txt, manifest.json.
void
write_bundle(const SceneBundle& bundle, const std::filesystem::path& dir);

// Inverse of the camera file written by write_bundle: "fx fy cx cy W H".
// Errors: ParseError, IoError.
CameraIntrinsics
load_camera(const std::filesystem::path& path);

void
save_camera(const CameraIntrinsics& camera, const std::filesystem::path& path);

std::string
spec_to_json(const SceneSpec& spec);

// Errors: ParseError, UnknownKind.
SceneSpec
spec_from_json(const std::string& text);

} // namespace uvgrasp
