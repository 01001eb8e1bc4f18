#include "uvgrasp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "uvgrasp/error.hpp"
#include "uvgrasp/obj_io.hpp"

namespace uvgrasp {

namespace {

using json = nlohmann::json;

// A closed surface described as a planar net: every patch (triangle or quad)
// names its corners both as surface positions and as UV net corners.
struct Net
{
  std::vector<Vec3> positions;
  std::vector<Vec2> uvs;
  struct Patch
  {
    std::vector<std::uint32_t> pos;
    std::vector<std::uint32_t> uv;
  };
  std::vector<Patch> patches;
};

using Key = std::vector<std::pair<std::uint32_t, std::int64_t>>;

Key
make_key(const std::vector<std::uint32_t>& ids, const std::vector<std::int64_t>& weights)
{
  Key key;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (weights[i] != 0)
      key.emplace_back(ids[i], weights[i]);
  std::sort(key.begin(), key.end());
  return key;
}

// Subdivides every patch n times per side. Points are identified by their
// integer corner weights, so a point shared by two patches is computed from
// the same sorted terms and comes out bit-identical. `shape` maps the flat
// interpolated point onto the surface.
template<class Shape>
Mesh
subdivide_net(const Net& net, int n, Shape&& shape)
{
  std::map<Key, std::uint32_t> vertex_of_uv;
  std::map<Key, std::uint32_t> id_of_pos;
  Mesh mesh;

  auto point = [&](const Net::Patch& patch, const std::vector<std::int64_t>& w, double denom) {
    const Key uv_key = make_key(patch.uv, w);
    auto it = vertex_of_uv.find(uv_key);
    if (it != vertex_of_uv.end())
      return it->second;
    const Key pos_key = make_key(patch.pos, w);
    Vec3 p = Vec3::Zero();
    for (const auto& [id, wt] : pos_key)
      p += (static_cast<double>(wt) / denom) * net.positions[id];
    Vec2 uv = Vec2::Zero();
    for (const auto& [id, wt] : uv_key)
      uv += (static_cast<double>(wt) / denom) * net.uvs[id];
    const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
    auto [pit, inserted] = id_of_pos.try_emplace(pos_key, static_cast<std::uint32_t>(id_of_pos.size()));
    mesh.vertices.push_back(shape(p));
    mesh.uv_template.push_back(uv);
    mesh.position_ids.push_back(pit->second);
    vertex_of_uv.emplace(uv_key, idx);
    return idx;
  };

  for (const auto& patch : net.patches) {
    if (patch.pos.size() == 3) {
      const double denom = n;
      auto at = [&](int i, int j) { return point(patch, { n - i - j, i, j }, denom); };
      for (int j = 0; j < n; ++j)
        for (int i = 0; i + j < n; ++i) {
          mesh.faces.push_back({ at(i, j), at(i + 1, j), at(i, j + 1) });
          if (i + j + 1 < n)
            mesh.faces.push_back({ at(i + 1, j), at(i + 1, j + 1), at(i, j + 1) });
        }
    } else {
      const double denom = static_cast<double>(n) * n;
      auto at = [&](int i, int j) {
        const std::int64_t a = n - i, b = i, c = n - j, d = j;
        return point(patch, { a * c, b * c, b * d, a * d }, denom);
      };
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          mesh.faces.push_back({ at(i, j), at(i + 1, j), at(i + 1, j + 1) });
          mesh.faces.push_back({ at(i, j), at(i + 1, j + 1), at(i, j + 1) });
        }
    }
  }

  // Nets are star-shaped around the origin; orient every face outwards.
  for (auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    if ((b - a).cross(c - a).dot(a + b + c) < 0.0)
      std::swap(f[1], f[2]);
  }
  return mesh;
}

// Icosahedron as a strip of five columns: north cap, two middle triangles and
// south cap per column. 12 positions, 22 net corners. Net coordinates are
// normalized to [0, 1]^2.
Net
icosahedron_net()
{
  Net net;
  const double lat = std::atan(0.5);
  net.positions.push_back(Vec3(0, 0, 1));
  for (int i = 0; i < 5; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 5.0;
    net.positions.push_back(Vec3(std::cos(lat) * std::cos(a), std::cos(lat) * std::sin(a), std::sin(lat)));
  }
  for (int i = 0; i < 5; ++i) {
    const double a = 2.0 * std::numbers::pi * (i + 0.5) / 5.0;
    net.positions.push_back(Vec3(std::cos(lat) * std::cos(a), std::cos(lat) * std::sin(a), -std::sin(lat)));
  }
  net.positions.push_back(Vec3(0, 0, -1));
  auto upper = [](int i) { return static_cast<std::uint32_t>(1 + i % 5); };
  auto lower = [](int i) { return static_cast<std::uint32_t>(6 + i % 5); };

  const double s = 1.0 / 5.5;
  const double h = 1.0 / 3.0;
  // Net corners: N0..N4, U0..U5, L0..L5, S0..S4.
  for (int i = 0; i < 5; ++i)
    net.uvs.push_back(Vec2(s * (i + 0.5), 0.0));
  for (int i = 0; i <= 5; ++i)
    net.uvs.push_back(Vec2(s * i, h));
  for (int i = 0; i <= 5; ++i)
    net.uvs.push_back(Vec2(s * (i + 0.5), 2 * h));
  for (int i = 0; i < 5; ++i)
    net.uvs.push_back(Vec2(s * (i + 1), 1.0));
  auto n_uv = [](int i) { return static_cast<std::uint32_t>(i); };
  auto u_uv = [](int i) { return static_cast<std::uint32_t>(5 + i); };
  auto l_uv = [](int i) { return static_cast<std::uint32_t>(11 + i); };
  auto s_uv = [](int i) { return static_cast<std::uint32_t>(17 + i); };

  for (int i = 0; i < 5; ++i) {
    net.patches.push_back({ { 0, upper(i), upper(i + 1) }, { n_uv(i), u_uv(i), u_uv(i + 1) } });
    net.patches.push_back({ { upper(i), lower(i), upper(i + 1) }, { u_uv(i), l_uv(i), u_uv(i + 1) } });
    net.patches.push_back({ { upper(i + 1), lower(i), lower(i + 1) }, { u_uv(i + 1), l_uv(i), l_uv(i + 1) } });
    net.patches.push_back({ { lower(i), 11, lower(i + 1) }, { l_uv(i), s_uv(i), l_uv(i + 1) } });
  }
  return net;
}

// Cube [-1, 1]^3 as a cross: top in column 1 row 0, left/front/right/back in
// row 1, bottom in column 1 row 2. Net corners are the 5 x 4 lattice points.
Net
cube_net()
{
  Net net;
  for (int i = 0; i < 8; ++i)
    net.positions.push_back(Vec3(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1));
  auto corner = [](int x, int y, int z) { return static_cast<std::uint32_t>((x > 0) | ((y > 0) << 1) | ((z > 0) << 2)); };
  for (int row = 0; row <= 3; ++row)
    for (int col = 0; col <= 4; ++col)
      net.uvs.push_back(Vec2(col / 4.0, row / 3.0));
  auto lattice = [](int col, int row) { return static_cast<std::uint32_t>(row * 5 + col); };

  // Each face: net cell and the surface point of local corner (s, t).
  struct NetFace
  {
    int col, row;
    Vec3 (*at)(int s, int t);
  };
  const NetFace faces[] = {
    { 1, 1, [](int s, int t) { return Vec3(2 * s - 1, 2 * t - 1, -1); } },   // front z = -1
    { 2, 1, [](int s, int t) { return Vec3(1, 2 * t - 1, 2 * s - 1); } },    // right x = +1
    { 3, 1, [](int s, int t) { return Vec3(1 - 2 * s, 2 * t - 1, 1); } },    // back z = +1
    { 0, 1, [](int s, int t) { return Vec3(-1, 2 * t - 1, 1 - 2 * s); } },   // left x = -1
    { 1, 0, [](int s, int t) { return Vec3(2 * s - 1, -1, 1 - 2 * t); } },   // top y = -1
    { 1, 2, [](int s, int t) { return Vec3(2 * s - 1, 1, 2 * t - 1); } },    // bottom y = +1
  };
  for (const auto& f : faces) {
    Net::Patch p;
    const int local[4][2] = { { 0, 0 }, { 1, 0 }, { 1, 1 }, { 0, 1 } };
    for (const auto& [s, t] : local) {
      const Vec3 c = f.at(s, t);
      p.pos.push_back(corner(static_cast<int>(c.x()), static_cast<int>(c.y()), static_cast<int>(c.z())));
      p.uv.push_back(lattice(f.col + s, f.row + t));
    }
    net.patches.push_back(std::move(p));
  }
  return net;
}

// Affinely maps a net's UVs into the rectangle [origin, origin + size].
void
place_uvs(Mesh& mesh, const Vec2& origin, const Vec2& size)
{
  for (auto& uv : mesh.uv_template)
    uv = origin + uv.cwiseProduct(size);
}

void
append(Mesh& dst, const Mesh& src)
{
  const auto offset = static_cast<std::uint32_t>(dst.vertices.size());
  std::uint32_t pos_offset = 0;
  for (auto id : dst.position_ids)
    pos_offset = std::max(pos_offset, id + 1);
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  dst.uv_template.insert(dst.uv_template.end(), src.uv_template.begin(), src.uv_template.end());
  for (std::size_t i = 0; i < src.vertex_count(); ++i)
    dst.position_ids.push_back(pos_offset + src.position_id(i));
  for (const auto& f : src.faces)
    dst.faces.push_back({ f[0] + offset, f[1] + offset, f[2] + offset });
}

// Cube-sphere ellipsoid with n x n quads per cube face. The cross net's
// convex corners are axis-aligned right angles, which keeps a covered texel
// among every vertex's bilinear neighbours.
Mesh
ellipsoid(int n, const Vec3& center, const Vec3& semi_axes)
{
  Mesh m = subdivide_net(cube_net(), n, [&](const Vec3& p) { return Vec3(p.normalized().cwiseProduct(semi_axes)); });
  for (auto& v : m.vertices)
    v += center;
  return m;
}

constexpr double kUvMargin = 0.01;

Mesh
capsule_hand(int subdivision)
{
  // Palm across the upper half of the atlas, fingers in a 3 x 2 grid below.
  Mesh hand = ellipsoid(4 + 4 * subdivision, Vec3::Zero(), Vec3(0.045, 0.05, 0.012));
  place_uvs(hand, Vec2(kUvMargin, kUvMargin), Vec2(1.0 - 2 * kUvMargin, 0.47 - kUvMargin));

  struct Finger
  {
    Vec3 center;
    Vec3 semi_axes;
  };
  // Neighbouring fingers keep a 2 mm gap at their widest point.
  const Finger fingers[] = {
    { Vec3(-0.030, 0.052 + 0.030, 0.0), Vec3(0.009, 0.030, 0.008) },
    { Vec3(-0.010, 0.052 + 0.036, 0.0), Vec3(0.009, 0.036, 0.008) },
    { Vec3(0.010, 0.052 + 0.034, 0.0), Vec3(0.009, 0.034, 0.008) },
    { Vec3(0.030, 0.052 + 0.027, 0.0), Vec3(0.008, 0.027, 0.007) },
    { Vec3(-0.077, 0.0, 0.0), Vec3(0.028, 0.010, 0.009) },
  };
  const double top = 0.47 + kUvMargin;
  const double cell_w = (1.0 - 4 * kUvMargin) / 3.0;
  const double cell_h = (1.0 - top - 2 * kUvMargin) / 2.0;
  for (int f = 0; f < 5; ++f) {
    Mesh m = ellipsoid(2 + 2 * subdivision, fingers[f].center, fingers[f].semi_axes);
    const int col = f % 3;
    const int row = f / 3;
    place_uvs(m, Vec2(kUvMargin + col * (cell_w + kUvMargin), top + row * (cell_h + kUvMargin)),
              Vec2(cell_w, cell_h));
    append(hand, m);
  }
  return hand;
}

std::mt19937_64
make_rng(std::uint64_t seed, std::uint64_t stream)
{
  std::seed_seq seq{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32) };
  return std::mt19937_64(seq);
}

Eigen::Matrix3d
axis_angle(const Vec3& w)
{
  const double angle = w.norm();
  if (angle == 0.0)
    return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

constexpr std::uint64_t kSceneStream = 0xffffffffull;
constexpr std::uint64_t kPlacementStream = 0xfffffffeull;

Mesh
hand_template_for(const SceneSpec& spec)
{
  switch (spec.hand_kind) {
    case TemplateKind::CapsuleHand:
      return make_template(TemplateKind::CapsuleHand, spec.hand_subdivision);
    case TemplateKind::Icosphere: {
      Mesh m = make_template(TemplateKind::Icosphere, spec.hand_subdivision);
      for (auto& v : m.vertices)
        v *= 0.05;
      return m;
    }
    case TemplateKind::Box: {
      Mesh m = make_template(TemplateKind::Box, spec.hand_subdivision);
      for (auto& v : m.vertices)
        v = v.cwiseProduct(Vec3(0.05, 0.04, 0.015));
      return m;
    }
  }
  fail(ErrorCode::UnknownKind, "unknown hand template");
}

// Smallest t at which p - t * dir enters the ball of radius r at the origin.
std::optional<double>
ball_entry(const Vec3& q, const Vec3& dir, double r)
{
  const double b = q.dot(dir);
  const double disc = b * b - (q.squaredNorm() - r * r);
  if (disc < 0.0)
    return std::nullopt;
  return b - std::sqrt(disc);
}

// Same for the axis-aligned box [-h, h] (slab test).
std::optional<double>
box_entry(const Vec3& q, const Vec3& dir, const Vec3& h)
{
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (std::abs(q[a]) > h[a])
        return std::nullopt;
      continue;
    }
    // q[a] - t * dir[a] in [-h, h]
    double lo = (q[a] - h[a]) / dir[a];
    double hi = (q[a] + h[a]) / dir[a];
    if (lo > hi)
      std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (t0 > t1)
    return std::nullopt;
  return t0;
}

TextureMap
procedural_texture(GridSize size, std::uint64_t seed)
{
  auto rng = make_rng(seed, kSceneStream - 2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const Rgb base(0.80, 0.62, 0.52);
  std::array<double, 6> ph{};
  for (auto& p : ph)
    p = phase(rng);
  TextureMap tex(size, Rgb::Zero(), true);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      const Vec2 uv = texel_center(x, y, size);
      const double a = std::sin(2 * std::numbers::pi * 3 * uv.x() + ph[0]) * std::cos(2 * std::numbers::pi * 2 * uv.y() + ph[1]);
      const double b = std::sin(2 * std::numbers::pi * 7 * uv.y() + ph[2]);
      const double c = std::cos(2 * std::numbers::pi * 5 * (uv.x() + uv.y()) + ph[3]);
      Rgb col = base + Rgb(0.15 * a + 0.04 * c, 0.12 * b, 0.1 * a * b + 0.05 * c);
      tex.texels[static_cast<std::size_t>(y) * size.width + x] = col.max(0.0).min(1.0);
    }
  return tex;
}

json
vec_json(const Vec3& v)
{
  return json::array({ v.x(), v.y(), v.z() });
}

Vec3
json_vec(const json& j)
{
  if (!j.is_array() || j.size() != 3)
    fail(ErrorCode::ParseError, "expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

} // namespace

TemplateKind
parse_template_kind(std::string_view name)
{
  if (name == "capsule_hand")
    return TemplateKind::CapsuleHand;
  if (name == "icosphere")
    return TemplateKind::Icosphere;
  if (name == "box")
    return TemplateKind::Box;
  fail(ErrorCode::UnknownKind, "unknown template kind '" + std::string(name) + "'");
}

std::string
to_string(TemplateKind kind)
{
  switch (kind) {
    case TemplateKind::CapsuleHand:
      return "capsule_hand";
    case TemplateKind::Icosphere:
      return "icosphere";
    case TemplateKind::Box:
      return "box";
  }
  return "unknown";
}

ObjectKind
parse_object_kind(std::string_view name)
{
  if (name == "sphere")
    return ObjectKind::Sphere;
  if (name == "box")
    return ObjectKind::Box;
  fail(ErrorCode::UnknownKind, "unknown object kind '" + std::string(name) + "'");
}

std::string
to_string(ObjectKind kind)
{
  return kind == ObjectKind::Sphere ? "sphere" : "box";
}

Mesh
make_template(TemplateKind kind, int subdivision)
{
  if (subdivision < 0)
    fail(ErrorCode::InvalidArgument, "subdivision must be non-negative");
  if (subdivision > 8)
    fail(ErrorCode::InvalidArgument, "subdivision above 8 is not supported");
  switch (kind) {
    case TemplateKind::Icosphere: {
      // Net corners land on texel centers of the default 256 grid (44 x 80
      // texels per net cell), so the 60 degree tips keep sampling support.
      Mesh m = subdivide_net(icosahedron_net(), 1 << subdivision, [](const Vec3& p) { return Vec3(p.normalized()); });
      place_uvs(m, Vec2(7.5 / 256.0, 7.5 / 256.0), Vec2(242.0 / 256.0, 240.0 / 256.0));
      return m;
    }
    case TemplateKind::Box: {
      Mesh m = subdivide_net(cube_net(), 1 << subdivision, [](const Vec3& p) { return p; });
      place_uvs(m, Vec2(kUvMargin, kUvMargin), Vec2(1.0 - 2 * kUvMargin, 1.0 - 2 * kUvMargin));
      return m;
    }
    case TemplateKind::CapsuleHand:
      return capsule_hand(subdivision);
  }
  fail(ErrorCode::UnknownKind, "unknown template kind");
}

Mesh
make_template(std::string_view kind, int subdivision)
{
  return make_template(parse_template_kind(kind), subdivision);
}

Mesh
make_sphere(double radius, int subdivision)
{
  if (!(radius > 0.0))
    fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
  Mesh m = make_template(TemplateKind::Icosphere, subdivision);
  for (auto& v : m.vertices)
    v *= radius;
  return m;
}

Mesh
make_box(const Vec3& half_extents, double max_edge)
{
  if (!(half_extents.array() > 0.0).all() || !(max_edge > 0.0))
    fail(ErrorCode::InvalidArgument, "box dimensions and edge length must be positive");
  const int n = std::max(1, static_cast<int>(std::ceil(2.0 * half_extents.maxCoeff() / max_edge - 1e-9)));
  Mesh m = subdivide_net(cube_net(), n, [&](const Vec3& p) { return Vec3(p.cwiseProduct(half_extents)); });
  place_uvs(m, Vec2(kUvMargin, kUvMargin), Vec2(1.0 - 2 * kUvMargin, 1.0 - 2 * kUvMargin));
  return m;
}

RigidTransform
SceneSpec::default_hand_pose()
{
  // Fingers point up in the image, palm facing the camera half a meter away.
  RigidTransform t;
  t.rotation = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitZ()).toRotationMatrix();
  t.translation = Vec3(-0.03, 0.037, 0.5);
  return t;
}

CameraIntrinsics
SceneSpec::default_camera()
{
  return CameraIntrinsics{ 600.0, 600.0, 128.0, 128.0, 256, 256 };
}

void
SceneSpec::validate() const
{
  camera.validate();
  if (hand_subdivision < 0)
    fail(ErrorCode::InvalidArgument, "hand subdivision must be non-negative");
  if (!(penetration_mm >= 0.0))
    fail(ErrorCode::InvalidArgument, "target penetration must be non-negative");
  if (!(pose_amplitude >= 0.0))
    fail(ErrorCode::InvalidArgument, "pose amplitude must be non-negative");
  if (object_kind == ObjectKind::Sphere && !(sphere_radius > 0.0))
    fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
  if (object_kind == ObjectKind::Box && (!(box_half_extents.array() > 0.0).all() || !(box_max_edge > 0.0)))
    fail(ErrorCode::InvalidArgument, "box dimensions must be positive");
  if (sphere_subdivision < 0)
    fail(ErrorCode::InvalidArgument, "sphere subdivision must be non-negative");
  if (uv_size.width < 1 || uv_size.height < 1)
    fail(ErrorCode::EmptyResolution, "UV resolution must be at least 1x1");
  if (approach && !(approach->norm() > 0.0))
    fail(ErrorCode::InvalidArgument, "approach direction must be non-zero");
}

Mesh
deform_hand(const Mesh& posed, std::uint64_t seed, std::uint64_t stream, double amplitude)
{
  Mesh out = posed;
  if (amplitude == 0.0)
    return out;
  auto rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Vec3 center = bounding_box(posed.vertices).center();
  constexpr double kLength = 0.1;  // meters per half period of the lowest mode

  const Vec3 omega(normal(rng), normal(rng), normal(rng));
  const Vec3 shift(normal(rng), normal(rng), normal(rng));
  const Eigen::Matrix3d rot = axis_angle(omega * (amplitude / 0.05));

  struct Mode
  {
    Vec3 k;
    Vec3 sin_coef;
    Vec3 cos_coef;
  };
  std::vector<Mode> modes;
  // Seven modes with six coefficients each keep the family well inside a
  // 128-dimensional linear latent space.
  for (int kx = 0; kx <= 1; ++kx)
    for (int ky = 0; ky <= 1; ++ky)
      for (int kz = 0; kz <= 1; ++kz) {
        if (kx + ky + kz == 0)
          continue;
        Mode m;
        m.k = Vec3(kx, ky, kz);
        const double scale = amplitude / (m.k.norm() * std::sqrt(7.0));
        m.sin_coef = scale * Vec3(normal(rng), normal(rng), normal(rng));
        m.cos_coef = scale * Vec3(normal(rng), normal(rng), normal(rng));
        modes.push_back(m);
      }

  for (auto& v : out.vertices) {
    const Vec3 r = v - center;
    Vec3 disp = Vec3::Zero();
    for (const auto& m : modes) {
      const double arg = std::numbers::pi * m.k.dot(r) / kLength;
      disp += m.sin_coef * std::sin(arg) + m.cos_coef * std::cos(arg);
    }
    v = center + rot * (r + disp) + amplitude * shift;
  }
  return out;
}

Mesh
make_posed_hand(const SceneSpec& spec)
{
  spec.validate();
  return deform_hand(transformed(hand_template_for(spec), spec.hand_pose), spec.seed, kSceneStream,
                     spec.pose_amplitude);
}

std::vector<UVCoordinateMap>
sample_pose_family(const SceneSpec& spec, int n, double amplitude)
{
  spec.validate();
  if (n < 0)
    fail(ErrorCode::InvalidArgument, "sample count must be non-negative");
  if (!(amplitude >= 0.0))
    fail(ErrorCode::InvalidArgument, "amplitude must be non-negative");
  const Mesh posed = transformed(hand_template_for(spec), spec.hand_pose);
  std::vector<UVCoordinateMap> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(rasterize_coordinate_map(deform_hand(posed, spec.seed, static_cast<std::uint64_t>(i), amplitude),
                                           spec.camera, spec.uv_size));
  return out;
}

SceneBundle
make_scene(const SceneSpec& spec)
{
  spec.validate();
  SceneBundle b;
  b.spec = spec;
  b.camera = spec.camera;
  b.hand = make_posed_hand(spec);

  auto rng = make_rng(spec.seed, kPlacementStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 dir;
  if (spec.approach) {
    dir = spec.approach->normalized();
  } else {
    dir = Vec3(0.3 * normal(rng), 0.3 * normal(rng), -1.0).normalized();
  }
  // Aim at the palm with a little jitter, starting a meter away.
  const Vec3 palm = spec.hand_pose.apply(Vec3::Zero());
  const Vec3 target = palm + 0.01 * Vec3(normal(rng), normal(rng), 0.0);
  const Vec3 start = target - dir;
  const double delta = spec.penetration_mm * kMetersPerMillimeter;

  Mesh local;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  std::optional<double> entry;
  if (spec.object_kind == ObjectKind::Sphere) {
    if (delta >= spec.sphere_radius)
      fail(ErrorCode::InfeasiblePenetration, "target penetration reaches the sphere center");
    local = make_sphere(spec.sphere_radius, spec.sphere_subdivision);
    for (const auto& v : b.hand.vertices) {
      const auto t = ball_entry(v - start, dir, spec.sphere_radius - delta);
      if (t && (!entry || *t < *entry))
        entry = t;
    }
    double inner = spec.sphere_radius;
    for (const auto& f : local.faces) {
      const Vec3& a = local.vertices[f[0]];
      const Vec3 n = (local.vertices[f[1]] - a).cross(local.vertices[f[2]] - a).normalized();
      inner = std::min(inner, std::abs(n.dot(a)));
    }
    b.expected.sampling_gap_mm =
      (vertex_sampling_gap(local) + (spec.sphere_radius - inner)) / kMetersPerMillimeter;
  } else {
    if (delta >= spec.box_half_extents.minCoeff())
      fail(ErrorCode::InfeasiblePenetration, "target penetration exceeds the box half-extent");
    local = make_box(spec.box_half_extents, spec.box_max_edge);
    rot = axis_angle(0.4 * Vec3(normal(rng), normal(rng), normal(rng)));
    const Vec3 shrunk = spec.box_half_extents - Vec3::Constant(delta);
    const Vec3 ldir = rot.transpose() * dir;
    for (const auto& v : b.hand.vertices) {
      const auto t = box_entry(rot.transpose() * (v - start), ldir, shrunk);
      if (t && (!entry || *t < *entry))
        entry = t;
    }
    b.expected.sampling_gap_mm = vertex_sampling_gap(local) / kMetersPerMillimeter;
  }
  if (!entry)
    fail(ErrorCode::InvalidArgument, "approach line misses the hand");
  RigidTransform place;
  place.rotation = rot;
  place.translation = start + *entry * dir;
  b.object = transformed(local, place);
  b.expected.penetration_mm = spec.penetration_mm;

  b.uv_map = rasterize_coordinate_map(b.hand, b.camera, spec.uv_size);
  b.contacts = contact_vertices(b.hand, b.object);
  b.contact_mask = rasterize_contact_mask(b.contacts, b.hand, spec.uv_size);
  b.texture = procedural_texture(spec.uv_size, spec.seed);
  auto rendered = render(b.hand, b.texture, b.camera);
  b.image = std::move(rendered.color);
  b.silhouette = std::move(rendered.silhouette);
  return b;
}

JointRegressor
make_landmark_regressor(const Mesh& hand)
{
  // Connected components over position ids.
  std::vector<std::uint32_t> parent(hand.vertex_count());
  for (std::uint32_t i = 0; i < parent.size(); ++i)
    parent[i] = i;
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b)
      parent[std::max(a, b)] = std::min(a, b);
  };
  std::unordered_map<std::uint32_t, std::uint32_t> first_of_position;
  for (std::uint32_t i = 0; i < hand.vertex_count(); ++i) {
    auto [it, inserted] = first_of_position.try_emplace(hand.position_id(i), i);
    if (!inserted)
      unite(i, it->second);
  }
  for (const auto& f : hand.faces) {
    unite(f[0], f[1]);
    unite(f[0], f[2]);
  }
  std::map<std::uint32_t, std::vector<std::uint32_t>> components;
  for (std::uint32_t i = 0; i < hand.vertex_count(); ++i)
    components[find(i)].push_back(i);

  std::vector<JointRegressor::Row> rows;
  for (const auto& [root, members] : components) {
    JointRegressor::Row centroid_row;
    for (auto i : members)
      centroid_row.emplace_back(i, 1.0 / static_cast<double>(members.size()));
    rows.push_back(std::move(centroid_row));
    Aabb box;
    for (auto i : members)
      box.extend(hand.vertices[i]);
    int axis = 0;
    box.extent().maxCoeff(&axis);
    auto lo = members.front(), hi = members.front();
    for (auto i : members) {
      if (hand.vertices[i][axis] < hand.vertices[lo][axis])
        lo = i;
      if (hand.vertices[i][axis] > hand.vertices[hi][axis])
        hi = i;
    }
    rows.push_back({ { lo, 1.0 } });
    rows.push_back({ { hi, 1.0 } });
  }
  return JointRegressor(hand.vertex_count(), std::move(rows));
}

void
save_camera(const CameraIntrinsics& camera, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %d %d\n", camera.fx, camera.fy, camera.cx, camera.cy,
                camera.width, camera.height);
  out << buf;
}

CameraIntrinsics
load_camera(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::IoError, "cannot open " + path.string());
  CameraIntrinsics c;
  double w = 0.0, h = 0.0;
  if (!(in >> c.fx >> c.fy >> c.cx >> c.cy >> w >> h))
    fail(ErrorCode::ParseError, "camera file needs six numbers: fx fy cx cy W H");
  if (w != std::floor(w) || h != std::floor(h))
    fail(ErrorCode::ParseError, "camera image size must be integral");
  c.width = static_cast<int>(w);
  c.height = static_cast<int>(h);
  c.validate();
  return c;
}

std::string
spec_to_json(const SceneSpec& spec)
{
  json j;
  j["seed"] = spec.seed;
  j["hand_kind"] = to_string(spec.hand_kind);
  j["hand_subdivision"] = spec.hand_subdivision;
  j["object_kind"] = to_string(spec.object_kind);
  j["sphere_radius"] = spec.sphere_radius;
  j["box_half_extents"] = vec_json(spec.box_half_extents);
  j["sphere_subdivision"] = spec.sphere_subdivision;
  j["box_max_edge"] = spec.box_max_edge;
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      rot.push_back(spec.hand_pose.rotation(r, c));
  j["hand_pose"] = { { "rotation", rot }, { "translation", vec_json(spec.hand_pose.translation) } };
  j["pose_amplitude"] = spec.pose_amplitude;
  j["penetration_mm"] = spec.penetration_mm;
  j["approach"] = spec.approach ? vec_json(*spec.approach) : json(nullptr);
  j["uv_size"] = { spec.uv_size.width, spec.uv_size.height };
  j["camera"] = { { "fx", spec.camera.fx }, { "fy", spec.camera.fy },       { "cx", spec.camera.cx },
                  { "cy", spec.camera.cy }, { "width", spec.camera.width }, { "height", spec.camera.height } };
  return j.dump(2);
}

SceneSpec
spec_from_json(const std::string& text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("scene spec: ") + e.what());
  }
  SceneSpec s;
  try {
    if (j.contains("seed"))
      s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("hand_kind"))
      s.hand_kind = parse_template_kind(j["hand_kind"].get<std::string>());
    if (j.contains("hand_subdivision"))
      s.hand_subdivision = j["hand_subdivision"].get<int>();
    if (j.contains("object_kind"))
      s.object_kind = parse_object_kind(j["object_kind"].get<std::string>());
    if (j.contains("sphere_radius"))
      s.sphere_radius = j["sphere_radius"].get<double>();
    if (j.contains("box_half_extents"))
      s.box_half_extents = json_vec(j["box_half_extents"]);
    if (j.contains("sphere_subdivision"))
      s.sphere_subdivision = j["sphere_subdivision"].get<int>();
    if (j.contains("box_max_edge"))
      s.box_max_edge = j["box_max_edge"].get<double>();
    if (j.contains("hand_pose")) {
      const auto& p = j["hand_pose"];
      const auto& rot = p.at("rotation");
      if (!rot.is_array() || rot.size() != 9)
        fail(ErrorCode::ParseError, "hand_pose.rotation needs 9 numbers");
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          s.hand_pose.rotation(r, c) = rot[3 * r + c].get<double>();
      s.hand_pose.translation = json_vec(p.at("translation"));
    }
    if (j.contains("pose_amplitude"))
      s.pose_amplitude = j["pose_amplitude"].get<double>();
    if (j.contains("penetration_mm"))
      s.penetration_mm = j["penetration_mm"].get<double>();
    if (j.contains("approach") && !j["approach"].is_null())
      s.approach = json_vec(j["approach"]);
    if (j.contains("uv_size")) {
      const auto& g = j["uv_size"];
      s.uv_size = GridSize{ g.at(0).get<int>(), g.at(1).get<int>() };
    }
    if (j.contains("camera")) {
      const auto& c = j["camera"];
      s.camera = CameraIntrinsics{ c.at("fx").get<double>(), c.at("fy").get<double>(), c.at("cx").get<double>(),
                                   c.at("cy").get<double>(), c.at("width").get<int>(),  c.at("height").get<int>() };
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

void
write_bundle(const SceneBundle& bundle, const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  save_obj(bundle.hand, dir / "hand.obj");
  save_obj(bundle.object, dir / "object.obj");
  save_uvcm(bundle.uv_map, dir / "uv.uvcm");
  save_cmsk(bundle.contact_mask, dir / "contact.cmsk");
  save_texture_png(bundle.texture, dir / "texture.png");
  save_png(bundle.image, dir / "image.png");
  save_camera(bundle.camera, dir / "camera.txt");
  make_landmark_regressor(bundle.hand).save(dir / "regressor.txt");

  json m;
  m["spec"] = json::parse(spec_to_json(bundle.spec));
  m["expected"] = { { "penetration_mm", bundle.expected.penetration_mm },
                    { "sampling_gap_mm", bundle.expected.sampling_gap_mm },
                    { "siv_cm3", bundle.expected.siv_cm3 ? json(*bundle.expected.siv_cm3) : json(nullptr) } };
  m["counts"] = { { "hand_vertices", bundle.hand.vertex_count() },
                  { "hand_faces", bundle.hand.face_count() },
                  { "object_vertices", bundle.object.vertex_count() },
                  { "contact_vertices", bundle.contacts.size() },
                  { "valid_texels", bundle.uv_map.valid_count() } };
  m["files"] = { "hand.obj", "object.obj", "uv.uvcm", "contact.cmsk", "texture.png", "image.png", "camera.txt",
                 "regressor.txt" };
  std::ofstream out(dir / "manifest.json");
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

} // namespace uvgrasp
