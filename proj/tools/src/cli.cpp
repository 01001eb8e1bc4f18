#include "uvgrasp_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uvgrasp/contact.hpp"
#include "uvgrasp/error.hpp"
#include "uvgrasp/image.hpp"
#include "uvgrasp/latent.hpp"
#include "uvgrasp/metrics.hpp"
#include "uvgrasp/obj_io.hpp"
#include "uvgrasp/optimizer.hpp"
#include "uvgrasp/render.hpp"
#include "uvgrasp/scene.hpp"
#include "uvgrasp/uv_map.hpp"
#include "uvgrasp/version.hpp"

namespace uvgrasp::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Everything a subcommand records about one run.
struct RunManifest
{
  RunManifest() = default;
  RunManifest(std::string name, std::map<std::string, std::string> in = {})
    : subcommand(std::move(name))
    , inputs(std::move(in))
  {}

  std::string subcommand;
  std::map<std::string, std::string> inputs;
  json config = json::object();
  std::vector<fs::path> outputs;
};

void
write_text(const fs::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out)
    fail(ErrorCode::IoError, "write failed for " + path.string());
}

void
ensure_dir(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void
ensure_parent(const fs::path& file)
{
  if (file.has_parent_path())
    ensure_dir(file.parent_path());
}

// A finished subcommand: its manifest and where to write it.
struct Written
{
  RunManifest manifest;
  fs::path path;
};

void
write_manifest(const RunManifest& m, const fs::path& path, double seconds)
{
  json j;
  j["subcommand"] = m.subcommand;
  j["inputs"] = m.inputs;
  j["config"] = m.config;
  json outs = json::array();
  for (const auto& p : m.outputs) {
    if (!fs::exists(p))
      fail(ErrorCode::IoError, "expected output " + p.string() + " is missing");
    outs.push_back(p.string());
  }
  j["outputs"] = outs;
  j["wall_time_s"] = seconds;
  j["library_version"] = std::string(version());
  write_text(path, j.dump(2) + "\n");
}

std::string
format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json
refine_report_json(const RefineReport& r)
{
  json j;
  j["objective_initial"] = r.objective_initial;
  j["objective_final"] = r.objective_final;
  j["pd_mm_initial"] = r.pd_mm_initial;
  j["pd_mm_final"] = r.pd_mm_final;
  j["siv_cm3_initial"] = r.siv_cm3_initial;
  j["siv_cm3_final"] = r.siv_cm3_final;
  j["iterations"] = r.iterations;
  j["candidate_count"] = r.candidate_count;
  j["latent_shift"] = r.latent_shift;
  return j;
}

struct GenArgs
{
  std::string spec;
  std::uint64_t seed = 0;
  std::string kind = "capsule_hand";
  std::string object = "sphere";
  double pene_mm = 0.0;
  int subdivision = 2;
  int res = 256;
  int samples = 0;
  std::string out;
};

struct EncodeArgs
{
  std::string hand, camera, out;
  int res = 256;
};

struct ContactArgs
{
  std::string hand, object, out;
  double threshold_mm = kContactThresholdMm;
  int res = 256;
};

struct MetricsArgs
{
  std::string pred, gt, object, regressor, out;
  int siv_res = kSivResolution;
  int res = 256;
};

struct FitArgs
{
  std::string samples, out;
  int k = kDefaultLatentDim;
  bool no_whiten = false;
};

struct OptimizeArgs
{
  std::string uv, model, object, hand_template, camera, contact, out;
  double lr = 1e-6;
  double tol = 1e-6;
  int max_iter = 10000;
  double weight = 1.0;
  bool hand_only = false;
  bool restrict_candidates = false;
};

struct RenderArgs
{
  std::string hand, texture, camera, out;
  int threads = 1;
};

struct ExtractArgs
{
  std::string image, uv, out;
};

Written
cmd_gen(const GenArgs& a, std::ostream& out)
{
  RunManifest m{ "gen" };
  SceneSpec spec;
  if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in)
      fail(ErrorCode::IoError, "cannot open " + a.spec);
    std::stringstream buf;
    buf << in.rdbuf();
    spec = spec_from_json(buf.str());
    m.inputs["spec"] = a.spec;
  } else {
    spec.seed = a.seed;
    spec.hand_kind = parse_template_kind(a.kind);
    spec.object_kind = parse_object_kind(a.object);
    spec.penetration_mm = a.pene_mm;
    spec.hand_subdivision = a.subdivision;
    spec.uv_size = GridSize{ a.res, a.res };
  }
  if (a.samples < 0)
    fail(ErrorCode::InvalidArgument, "--samples must be non-negative");
  m.config = json::parse(spec_to_json(spec));
  m.config["samples"] = a.samples;

  const fs::path dir(a.out);
  const auto bundle = make_scene(spec);
  write_bundle(bundle, dir);
  for (const char* f : { "hand.obj", "object.obj", "uv.uvcm", "contact.cmsk", "texture.png", "image.png",
                         "camera.txt", "regressor.txt", "manifest.json" })
    m.outputs.push_back(dir / f);

  if (a.samples > 0) {
    const auto maps = sample_pose_family(spec, a.samples, spec.pose_amplitude);
    ensure_dir(dir / "samples");
    for (std::size_t i = 0; i < maps.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%05zu.uvcm", i);
      save_uvcm(maps[i], dir / "samples" / name);
      m.outputs.push_back(dir / "samples" / name);
    }
  }
  out << "wrote bundle to " << dir.string() << " (expected pd " << bundle.expected.penetration_mm << " mm, gap "
      << bundle.expected.sampling_gap_mm << " mm)\n";
  return { std::move(m), dir / "run_manifest.json" };
}

Written
cmd_encode(const EncodeArgs& a, std::ostream& out)
{
  RunManifest m{ "encode", { { "hand", a.hand }, { "camera", a.camera } } };
  m.config["res"] = a.res;
  const auto hand = load_obj(a.hand);
  const auto camera = load_camera(a.camera);
  const auto map = rasterize_coordinate_map(hand, camera, GridSize{ a.res, a.res });
  ensure_parent(a.out);
  save_uvcm(map, a.out);
  m.outputs.push_back(a.out);
  out << "encoded " << map.valid_count() << " valid texels\n";
  return { std::move(m), a.out + ".manifest.json" };
}

Written
cmd_contact(const ContactArgs& a, std::ostream& out)
{
  RunManifest m{ "contact", { { "hand", a.hand }, { "object", a.object } } };
  m.config["threshold_mm"] = a.threshold_mm;
  m.config["res"] = a.res;
  const auto hand = load_obj(a.hand);
  const auto object = load_obj(a.object);
  const auto contacts = contact_vertices(hand, object, a.threshold_mm);
  const auto mask = rasterize_contact_mask(contacts, hand, GridSize{ a.res, a.res });
  ensure_parent(a.out);
  save_cmsk(mask, a.out);
  m.outputs.push_back(a.out);
  out << contacts.size() << " contact vertices\n";
  return { std::move(m), a.out + ".manifest.json" };
}

Written
cmd_metrics(const MetricsArgs& a, std::ostream& out)
{
  RunManifest m{ "metrics", { { "pred", a.pred }, { "gt", a.gt }, { "object", a.object } } };
  m.config["siv_res"] = a.siv_res;
  m.config["res"] = a.res;
  const auto pred = load_obj(a.pred);
  const auto gt = load_obj(a.gt);
  const auto object = load_obj(a.object);
  const ObjectQuery query(object);

  MetricReport r;
  r.mpvpe_cm = mpvpe(pred, gt);
  if (!a.regressor.empty()) {
    m.inputs["regressor"] = a.regressor;
    r.mpjpe_cm = mpjpe(pred, gt, JointRegressor::load(a.regressor));
  }
  r.pd_mm = penetration_depth(pred, query);
  SivOptions siv;
  siv.resolution = a.siv_res;
  r.siv_cm3 = solid_intersection_volume(pred, query, siv);
  const GridSize size{ a.res, a.res };
  r.contact_iou = mask_iou(rasterize_contact_mask(contact_vertices(pred, query), pred, size),
                           rasterize_contact_mask(contact_vertices(gt, query), gt, size));
  ensure_parent(a.out);
  write_text(a.out, r.to_json() + "\n");
  m.outputs.push_back(a.out);
  out << r.to_key_value();
  return { std::move(m), a.out + ".manifest.json" };
}

Written
cmd_fit(const FitArgs& a, std::ostream& out)
{
  RunManifest m{ "fit", { { "samples", a.samples } } };
  m.config["k"] = a.k;
  m.config["whiten"] = !a.no_whiten;
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(a.samples, ec))
    if (e.path().extension() == ".uvcm")
      files.push_back(e.path());
  if (ec)
    fail(ErrorCode::IoError, "cannot list " + a.samples + ": " + ec.message());
  std::sort(files.begin(), files.end());
  if (files.empty())
    fail(ErrorCode::TooFewSamples, "no .uvcm files in " + a.samples);
  std::vector<UVCoordinateMap> maps;
  maps.reserve(files.size());
  for (const auto& f : files)
    maps.push_back(load_uvcm(f));
  const auto model = fit_linear_model(maps, a.k, !a.no_whiten);
  ensure_parent(a.out);
  save_llat(model, a.out);
  m.outputs.push_back(a.out);
  m.config["sample_count"] = files.size();
  const double explained = model.explained_variance().sum() / model.total_variance();
  m.config["explained_variance_fraction"] = explained;
  out << "fitted " << a.k << " directions on " << files.size() << " samples, explained variance "
      << explained << "\n";
  return { std::move(m), a.out + ".manifest.json" };
}

Written
cmd_optimize(const OptimizeArgs& a, std::ostream& out)
{
  RunManifest m{ "optimize",
                 { { "uv", a.uv }, { "model", a.model }, { "object", a.object }, { "template", a.hand_template },
                   { "camera", a.camera } } };
  OptimizerConfig config;
  config.learning_rate = a.lr;
  config.tolerance = a.tol;
  config.max_iterations = a.max_iter;
  config.penetration_weight = a.weight;
  config.hand_only = a.hand_only;
  config.restrict_candidates = a.restrict_candidates;
  config.validate();
  m.config = { { "lr", a.lr },
               { "tol", a.tol },
               { "max_iter", a.max_iter },
               { "penetration_weight", a.weight },
               { "hand_only", a.hand_only },
               { "restrict_candidates", config.restrict_candidates } };

  const auto map = load_uvcm(a.uv);
  const auto model = load_llat(a.model, MapLayout(map.size, map.valid));
  const auto object = load_obj(a.object);
  const auto hand_template = load_obj(a.hand_template);
  const auto camera = load_camera(a.camera);
  std::optional<ContactMask> mask;
  if (!a.contact.empty()) {
    m.inputs["contact"] = a.contact;
    mask = load_cmsk(a.contact);
  }

  const auto result = refine_grasp(map, model, hand_template, camera, object, config, mask ? &*mask : nullptr);

  const fs::path dir(a.out);
  ensure_dir(dir);
  save_obj(result.hand, dir / "hand.obj");
  save_uvcm(result.map, dir / "uv.uvcm");
  std::string csv = "iteration,objective,pd_mm\n";
  for (std::size_t i = 0; i < result.optimization.trace.size(); ++i)
    csv += std::to_string(i) + "," + format_double(result.optimization.trace[i]) + "," +
           format_double(result.optimization.trace_pd_mm[i]) + "\n";
  write_text(dir / "trace.csv", csv);
  json report = refine_report_json(result.report);
  report["converged"] = result.optimization.converged;
  write_text(dir / "report.json", report.dump(2) + "\n");
  for (const char* f : { "hand.obj", "uv.uvcm", "trace.csv", "report.json" })
    m.outputs.push_back(dir / f);
  out << "pd " << result.report.pd_mm_initial << " -> " << result.report.pd_mm_final << " mm after "
      << result.report.iterations << " iterations\n";
  return { std::move(m), dir / "run_manifest.json" };
}

Written
cmd_render(const RenderArgs& a, std::ostream& out)
{
  RunManifest m{ "render", { { "hand", a.hand }, { "texture", a.texture }, { "camera", a.camera } } };
  m.config["threads"] = a.threads;
  const auto hand = load_obj(a.hand);
  const auto texture = load_texture_png(a.texture);
  const auto camera = load_camera(a.camera);
  const auto r =
    render(hand, texture, camera, a.threads > 1 ? RenderMode::Parallel : RenderMode::Serial, a.threads);
  ensure_parent(a.out);
  save_png(r.color, a.out);
  m.outputs.push_back(a.out);
  out << "silhouette area " << r.silhouette_area() << " px\n";
  return { std::move(m), a.out + ".manifest.json" };
}

Written
cmd_extract_texture(const ExtractArgs& a, std::ostream& out)
{
  RunManifest m{ "extract-texture", { { "image", a.image }, { "uv", a.uv } } };
  const auto image = load_png(a.image);
  const auto map = load_uvcm(a.uv);
  const auto texture = extract_texture(image, map);
  ensure_parent(a.out);
  save_texture_png(texture, a.out);
  m.outputs.push_back(a.out);
  std::size_t present = 0;
  for (auto p : texture.present)
    present += p;
  out << present << " texels extracted\n";
  return { std::move(m), a.out + ".manifest.json" };
}

std::string
escape(const std::string& s)
{
  std::string r;
  for (char c : s) {
    if (c == '"' || c == '\\')
      r += '\\';
    r += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return r;
}

void
error_line(std::ostream& err, std::string_view code, const std::string& message)
{
  err << "error: code=" << code << " message=\"" << escape(message) << "\"" << std::endl;
}

} // namespace

int
run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Synthetic hand-object grasp toolkit on UV coordinate maps" };
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic hand-object scene bundle");
  g->add_option("--spec", gen.spec, "Scene spec JSON (overrides the flags below)")->check(CLI::ExistingFile);
  g->add_option("--seed", gen.seed, "Scene seed")->capture_default_str();
  g->add_option("--kind", gen.kind, "Hand template: capsule_hand, icosphere or box")->capture_default_str();
  g->add_option("--object", gen.object, "Object kind: sphere or box")->capture_default_str();
  g->add_option("--pene-mm", gen.pene_mm, "Target penetration depth in mm")->capture_default_str();
  g->add_option("--subdivision", gen.subdivision, "Hand template subdivision level")->capture_default_str();
  g->add_option("--res", gen.res, "UV grid resolution")->capture_default_str();
  g->add_option("--samples", gen.samples, "Also write N pose-family UV maps to <out>/samples")
    ->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  EncodeArgs enc;
  auto* e = app.add_subcommand("encode", "Rasterize a hand mesh into a UV coordinate map");
  e->add_option("--hand", enc.hand, "Hand OBJ with texture coordinates")->required()->check(CLI::ExistingFile);
  e->add_option("--camera", enc.camera, "Camera file: fx fy cx cy W H")->required()->check(CLI::ExistingFile);
  e->add_option("--res", enc.res, "UV grid resolution")->capture_default_str();
  e->add_option("--out", enc.out, "Output .uvcm")->required();

  ContactArgs con;
  auto* c = app.add_subcommand("contact", "Contact mask of a hand against an object");
  c->add_option("--hand", con.hand, "Hand OBJ")->required()->check(CLI::ExistingFile);
  c->add_option("--object", con.object, "Object OBJ")->required()->check(CLI::ExistingFile);
  c->add_option("--threshold-mm", con.threshold_mm, "Contact distance in mm")->capture_default_str();
  c->add_option("--res", con.res, "UV grid resolution")->capture_default_str();
  c->add_option("--out", con.out, "Output .cmsk")->required();

  MetricsArgs met;
  auto* mt = app.add_subcommand("metrics", "MPJPE, MPVPE, PD, SIV and contact IoU of a predicted hand");
  mt->add_option("--pred", met.pred, "Predicted hand OBJ")->required()->check(CLI::ExistingFile);
  mt->add_option("--gt", met.gt, "Ground-truth hand OBJ")->required()->check(CLI::ExistingFile);
  mt->add_option("--object", met.object, "Object OBJ")->required()->check(CLI::ExistingFile);
  mt->add_option("--regressor", met.regressor, "Joint regressor text file (enables MPJPE)")
    ->check(CLI::ExistingFile);
  mt->add_option("--siv-res", met.siv_res, "Voxels per axis for SIV")->capture_default_str();
  mt->add_option("--res", met.res, "UV grid resolution for contact IoU")->capture_default_str();
  mt->add_option("--out", met.out, "Output report JSON")->required();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit a linear latent model to UV coordinate maps");
  f->add_option("--samples", fit.samples, "Directory of .uvcm samples")->required()->check(CLI::ExistingDirectory);
  f->add_option("--k", fit.k, "Latent dimension")->capture_default_str();
  f->add_flag("--no-whiten", fit.no_whiten, "Keep unit scales instead of per-direction deviations");
  f->add_option("--out", fit.out, "Output .llat")->required();

  OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "Refine a grasp in latent space against an object");
  o->add_option("--uv", opt.uv, "Input UV coordinate map")->required()->check(CLI::ExistingFile);
  o->add_option("--model", opt.model, "Latent model .llat")->required()->check(CLI::ExistingFile);
  o->add_option("--object", opt.object, "Object OBJ")->required()->check(CLI::ExistingFile);
  o->add_option("--template", opt.hand_template, "Hand template OBJ (UVs and topology)")
    ->required()
    ->check(CLI::ExistingFile);
  o->add_option("--camera", opt.camera, "Camera file: fx fy cx cy W H")->required()->check(CLI::ExistingFile);
  o->add_option("--contact", opt.contact,
                "Contact mask for --restrict (default: contacts of the initial decoded hand)")
    ->check(CLI::ExistingFile);
  o->add_option("--lr", opt.lr, "Learning rate")->capture_default_str();
  o->add_option("--tol", opt.tol, "Stop when the objective changes by less than this")->capture_default_str();
  o->add_option("--max-iter", opt.max_iter, "Iteration limit")->capture_default_str();
  o->add_option("--penetration-weight", opt.weight, "Weight of the penetration term")->capture_default_str();
  o->add_flag("--hand-only", opt.hand_only, "Drop the penetration term");
  o->add_flag("--restrict", opt.restrict_candidates,
              "Restrict the penetration search to the dilated contact region");
  o->add_option("--out", opt.out, "Output directory")->required();

  RenderArgs ren;
  auto* r = app.add_subcommand("render", "Render a textured hand mesh");
  r->add_option("--hand", ren.hand, "Hand OBJ")->required()->check(CLI::ExistingFile);
  r->add_option("--texture", ren.texture, "Texture PNG (alpha marks present texels)")
    ->required()
    ->check(CLI::ExistingFile);
  r->add_option("--camera", ren.camera, "Camera file: fx fy cx cy W H")->required()->check(CLI::ExistingFile);
  r->add_option("--threads", ren.threads, "Render threads; 1 renders serially")->capture_default_str();
  r->add_option("--out", ren.out, "Output PNG")->required();

  ExtractArgs ext;
  auto* x = app.add_subcommand("extract-texture", "Sample an image into UV texture space");
  x->add_option("--image", ext.image, "Input PNG")->required()->check(CLI::ExistingFile);
  x->add_option("--uv", ext.uv, "UV coordinate map")->required()->check(CLI::ExistingFile);
  x->add_option("--out", ext.out, "Output texture PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s, out, err);
  } catch (const CLI::ParseError& pe) {
    error_line(err, "InvalidArgument", pe.what());
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Written w;
    if (g->parsed())
      w = cmd_gen(gen, out);
    else if (e->parsed())
      w = cmd_encode(enc, out);
    else if (c->parsed())
      w = cmd_contact(con, out);
    else if (mt->parsed())
      w = cmd_metrics(met, out);
    else if (f->parsed())
      w = cmd_fit(fit, out);
    else if (o->parsed())
      w = cmd_optimize(opt, out);
    else if (r->parsed())
      w = cmd_render(ren, out);
    else
      w = cmd_extract_texture(ext, out);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    write_manifest(w.manifest, w.path, elapsed.count());
  } catch (const Error& ex) {
    error_line(err, to_string(ex.code()), ex.what());
    return 1;
  } catch (const std::exception& ex) {
    error_line(err, "Internal", ex.what());
    return 1;
  }
  return 0;
}

} // namespace uvgrasp::cli
