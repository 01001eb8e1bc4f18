#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uvgrasp_cli/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result
{
  int code;
  std::string out;
  std::string err;
};

Result
run(std::vector<std::string> args)
{
  args.insert(args.begin(), "uvgrasp");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = uvgrasp::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return { code, out.str(), err.str() };
}

std::string
slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

std::string
last_line(const std::string& s)
{
  auto end = s.find_last_not_of('\n');
  if (end == std::string::npos)
    return {};
  const auto start = s.rfind('\n', end);
  return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

// gen -> encode -> contact -> fit -> optimize -> metrics -> render -> extract-texture.
void
pipeline(const fs::path& root)
{
  fs::remove_all(root);
  const auto scene = root / "scene";
  const auto s = scene.string();
  REQUIRE(run({ "gen", "--seed", "3", "--pene-mm", "2", "--subdivision", "0", "--res", "128", "--samples", "70",
                "--out", s })
            .code == 0);
  REQUIRE(run({ "encode", "--hand", s + "/hand.obj", "--camera", s + "/camera.txt", "--res", "128", "--out",
                (root / "enc.uvcm").string() })
            .code == 0);
  REQUIRE(run({ "contact", "--hand", s + "/hand.obj", "--object", s + "/object.obj", "--res", "128", "--out",
                (root / "contact.cmsk").string() })
            .code == 0);
  REQUIRE(run({ "fit", "--samples", s + "/samples", "--k", "48", "--out", (root / "model.llat").string() }).code == 0);
  REQUIRE(run({ "optimize", "--uv", (root / "enc.uvcm").string(), "--model", (root / "model.llat").string(),
                "--object", s + "/object.obj", "--template", s + "/hand.obj", "--camera", s + "/camera.txt",
                "--lr", "0.1", "--penetration-weight", "1000", "--max-iter", "100", "--out",
                (root / "opt").string() })
            .code == 0);
  REQUIRE(run({ "optimize", "--uv", (root / "enc.uvcm").string(), "--model", (root / "model.llat").string(),
                "--object", s + "/object.obj", "--template", s + "/hand.obj", "--camera", s + "/camera.txt",
                "--contact", (root / "contact.cmsk").string(), "--restrict", "--lr", "0.1",
                "--penetration-weight", "1000", "--max-iter", "100", "--out", (root / "opt_restricted").string() })
            .code == 0);
  REQUIRE(run({ "metrics", "--pred", (root / "opt/hand.obj").string(), "--gt", s + "/hand.obj", "--object",
                s + "/object.obj", "--regressor", s + "/regressor.txt", "--siv-res", "40", "--res", "128", "--out",
                (root / "metrics.json").string() })
            .code == 0);
  REQUIRE(run({ "render", "--hand", s + "/hand.obj", "--texture", s + "/texture.png", "--camera",
                s + "/camera.txt", "--threads", "3", "--out", (root / "render.png").string() })
            .code == 0);
  REQUIRE(run({ "extract-texture", "--image", s + "/image.png", "--uv", s + "/uv.uvcm", "--out",
                (root / "tex.png").string() })
            .code == 0);
}

} // namespace

TEST_CASE("pipeline runs end to end and reruns are bit-identical")
{
  const auto tmp = fs::temp_directory_path();
  const auto a = tmp / "uvgrasp_cli_a";
  const auto b = tmp / "uvgrasp_cli_b";
  pipeline(a);
  pipeline(b);

  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file())
      continue;
    const auto rel = fs::relative(entry.path(), a);
    const auto name = rel.filename().string();
    if (name.find("manifest") != std::string::npos)
      continue;
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 20);

  const auto report = nlohmann::json::parse(slurp(a / "opt/report.json"));
  CHECK(report["pd_mm_initial"].get<double>() > 0.0);
  CHECK(report["pd_mm_final"].get<double>() <= report["pd_mm_initial"].get<double>());
  const auto restricted = nlohmann::json::parse(slurp(a / "opt_restricted/report.json"));
  CHECK(restricted["candidate_count"].get<int>() < report["candidate_count"].get<int>());
  const auto metrics = nlohmann::json::parse(slurp(a / "metrics.json"));
  for (const char* key : { "mpjpe_cm", "mpvpe_cm", "pd_mm", "siv_cm3", "contact_iou" })
    CHECK(metrics[key].is_number());

  const auto manifest = nlohmann::json::parse(slurp(a / "opt/run_manifest.json"));
  CHECK(manifest["subcommand"] == "optimize");
  CHECK(manifest["outputs"].size() >= 4);
  for (const auto& p : manifest["outputs"])
    CHECK(fs::exists(p.get<std::string>()));
  CHECK(manifest["wall_time_s"].get<double>() >= 0.0);
  CHECK(manifest.contains("library_version"));
  CHECK(fs::exists(a / "metrics.json.manifest.json"));

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("library errors exit 1 with a structured last line")
{
  const auto dir = fs::temp_directory_path() / "uvgrasp_cli_err";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.obj") << "v 0 zero 0\n";
    std::ofstream(dir / "cam.txt") << "100 100 32 32 64 64\n";
  }
  const auto r = run({ "encode", "--hand", (dir / "bad.obj").string(), "--camera", (dir / "cam.txt").string(),
                       "--out", (dir / "x.uvcm").string() });
  CHECK(r.code == 1);
  CHECK(last_line(r.err).rfind("error: code=ParseError message=\"", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "x.uvcm"));

  const auto g = run({ "gen", "--pene-mm", "40", "--out", (dir / "g").string() });
  CHECK(g.code == 1);
  CHECK(last_line(g.err).rfind("error: code=InfeasiblePenetration", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("usage errors exit 2")
{
  CHECK(run({}).code == 2);
  CHECK(run({ "frobnicate" }).code == 2);
  CHECK(run({ "encode", "--hand" }).code == 2);
  CHECK(run({ "gen", "--seed", "x", "--out", "/tmp/none" }).code == 2);
  const auto h = run({ "--help" });
  CHECK(h.code == 0);
  CHECK(h.out.find("optimize") != std::string::npos);
}

TEST_CASE("the built binary runs gen and rejects bad usage")
{
  const std::string bin = UVGRASP_BIN;
  const auto dir = fs::temp_directory_path() / "uvgrasp_cli_bin";
  fs::remove_all(dir);
  const std::string cmd = "\"" + bin + "\" gen --seed 1 --subdivision 0 --res 64 --out \"" + dir.string() + "\" > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "run_manifest.json"));
  CHECK(std::system(("\"" + bin + "\" encode > /dev/null 2>&1").c_str()) != 0);
  fs::remove_all(dir);
}
