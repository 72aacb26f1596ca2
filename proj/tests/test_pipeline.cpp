#include "zipr/generators.hpp"
#include "zipr/obj_io.hpp"
#include "zipr/pipeline.hpp"
#include "zipr/ribbon.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zipr;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zipr_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::string& args) {
  static int n = 0;
  const fs::path base = fs::temp_directory_path() / ("zipr_cli_" + std::to_string(++n));
  const std::string cmd = std::string(ZIPR_CLI) + " " + args + " >" + base.string() + ".out 2>" + base.string() + ".err";
  const int status = std::system(cmd.c_str());
  CliResult r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(base.string() + ".out"),
        read_text(base.string() + ".err")};
  fs::remove(base.string() + ".out");
  fs::remove(base.string() + ".err");
  return r;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return files;
}

void full_run(const fs::path& dir, const std::string& fixture, const std::string& spec_json) {
  ASSERT_EQ(cli("generate " + fixture + " " + dir.string()).code, 0);
  ASSERT_EQ(cli("param " + dir.string()).code, 0);
  std::string spec_arg;
  if (!spec_json.empty()) {
    write_text(dir.parent_path() / (dir.filename().string() + "_spec.json"), spec_json);
    spec_arg = " --spec " + (dir.parent_path() / (dir.filename().string() + "_spec.json")).string();
  }
  ASSERT_EQ(cli("spiral " + dir.string() + spec_arg).code, 0);
  ASSERT_EQ(cli("ribbon " + dir.string()).code, 0);
  ASSERT_EQ(cli("export " + dir.string() + " --bed 1000x600 --format svg").code, 0);
}

}  // namespace

TEST(Pipeline, StagesRefuseMissingInputs) {
  const fs::path dir = scratch("order");
  auto expect_order = [](auto&& f, const std::string& msg) {
    try {
      f();
      FAIL() << "expected stage_order";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "stage_order");
      EXPECT_EQ(std::string(e.what()), msg);
    }
  };
  expect_order([&] { run_param(dir); }, "run decompose first");
  const Fixture fx = make_fixture("cylinder");
  run_decompose(dir, fx.mesh, fx.seg);
  expect_order([&] { run_spiral(dir); }, "run param first");
  expect_order([&] { run_ribbon(dir); }, "run spiral first");
  expect_order([&] { run_export(dir); }, "run ribbon first");
}

TEST(Pipeline, StatusTracksStages) {
  const fs::path dir = scratch("status");
  const Fixture fx = make_fixture("cylinder");
  run_decompose(dir, fx.mesh, fx.seg);
  run_param(dir);
  json st = project::artifact_status(dir);
  EXPECT_EQ(st["param"], "ready");
  EXPECT_EQ(st["spiral"], "stale");
  // upstream rewrite clears downstream
  run_decompose(dir, fx.mesh, fx.seg);
  st = project::artifact_status(dir);
  EXPECT_EQ(st["decompose"], "ready");
  EXPECT_EQ(st["param"], "stale");
  EXPECT_FALSE(fs::exists(dir / project::kCharts));
}

TEST(Cli, StageOrderMessage) {
  const fs::path dir = scratch("cli_order");
  ASSERT_EQ(cli("generate cylinder " + dir.string()).code, 0);
  const CliResult r = cli("spiral " + dir.string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("run param first"), std::string::npos) << r.err;
}

TEST(Cli, ClosedSphereParamFailsWithAnnulusDiagnostic) {
  const fs::path dir = scratch("sphere");
  const SurfaceMesh s = make_uv_sphere(16, 8);
  std::ofstream(dir / project::kMesh) << [&] {
    std::ostringstream o;
    write_obj(o, s.positions(), s.faces());
    return o.str();
  }();
  const CliResult r = cli("param " + dir.string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("annulus"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(fs::exists(dir / project::kCharts));
}

TEST(Cli, CheckPrintsTopology) {
  const fs::path dir = scratch("check");
  ASSERT_EQ(cli("generate cylinder " + dir.string()).code, 0);
  const CliResult r = cli("check " + (dir / project::kMesh).string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["boundary_loops"], 2);
  EXPECT_EQ(j["faces"], 2000);
  EXPECT_EQ(cli("check " + (dir / "missing.obj").string()).code, 1);
}

TEST(Cli, BadBedIsRejected) {
  const fs::path dir = scratch("bed");
  const CliResult r = cli("export " + dir.string() + " --bed 1000by600");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("WIDTHxHEIGHT"), std::string::npos) << r.err;
}

TEST(Cli, RepeatedParamIsByteIdentical) {
  const fs::path dir = scratch("param_twice");
  ASSERT_EQ(cli("generate t-shape " + dir.string()).code, 0);
  ASSERT_EQ(cli("param " + dir.string()).code, 0);
  const std::string first = read_text(dir / project::kCharts);
  ASSERT_EQ(cli("param " + dir.string()).code, 0);
  EXPECT_EQ(first, read_text(dir / project::kCharts));
}

TEST(Cli, IdenticalRunsAreByteIdentical) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  full_run(a, "t-shape", "");
  full_run(b, "t-shape", "");
  const auto sa = snapshot(a), sb = snapshot(b);
  EXPECT_EQ(sa.size(), 15u);
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto& [name, text] : sa) {
    ASSERT_TRUE(sb.count(name)) << name;
    EXPECT_TRUE(text == sb.at(name)) << name << " differs";
  }
}

TEST(Cli, DeletingDownstreamLeavesUpstreamUntouched) {
  const fs::path dir = scratch("isolation");
  full_run(dir, "two-part", "");
  const auto before = snapshot(dir);
  fs::remove(dir / project::kPlanSvg);
  fs::remove(dir / project::kRibbon);
  fs::remove(dir / project::kFlat);
  ASSERT_EQ(cli("ribbon " + dir.string()).code, 0);
  ASSERT_EQ(cli("export " + dir.string()).code, 0);
  EXPECT_EQ(before, snapshot(dir));
}

TEST(Cli, RewritingAStageClearsLaterArtifacts) {
  const fs::path dir = scratch("rewrite");
  full_run(dir, "cylinder", "");
  ASSERT_EQ(cli("spiral " + dir.string()).code, 0);
  EXPECT_TRUE(fs::exists(dir / project::kCurve));
  EXPECT_FALSE(fs::exists(dir / project::kRibbon));
  EXPECT_FALSE(fs::exists(dir / project::kPlanSvg));
  EXPECT_FALSE(fs::exists(dir / project::kPlanReport));
}

// Unrolled helix band: width pitch * cos(angle) with pitch h / w.
TEST(Cli, CylinderRunGivesAStraightConstantWidthStrip) {
  const fs::path dir = scratch("cylinder");
  const int w = 8;
  full_run(dir, "cylinder", R"({"windings": [8]})");
  const std::string svg = read_text(dir / project::kPlanSvg);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  const json plan = json::parse(read_text(dir / project::kPlanReport));
  EXPECT_EQ(plan["pieces"], 1);

  const Ribbon rb = ribbon_from_json(json::parse(read_text(dir / project::kRibbonData)),
                                     load_mesh((dir / project::kRibbon).string()));
  const SurfaceMesh flat = load_mesh((dir / project::kFlat).string());
  ASSERT_EQ(flat.num_vertices(), rb.mesh.num_vertices());
  std::vector<Vec2> fp;
  for (const Vec3& p : flat.positions()) fp.push_back(p.head<2>());

  // 40-gon prism: polygonal circumference
  const double circumference = 40 * 2 * std::sin(M_PI / 40), pitch = 3.0 / w;
  const double expected = pitch * std::cos(std::atan2(pitch, circumference));
  std::vector<int> left, right;
  double length = 0.0;
  for (int v = 0; v < rb.mesh.num_vertices(); ++v) {
    if (rb.arc[v] < 0) continue;
    (rb.side[v] == RibbonSide::Left ? left : right).push_back(v);
    length = std::max(length, rb.arc[v]);
  }
  auto by_arc = [&](int a, int c) { return rb.arc[a] < rb.arc[c]; };
  std::sort(left.begin(), left.end(), by_arc);
  const Vec2 o = fp[left.front()];
  const Vec2 axis = (fp[left.back()] - o).normalized();
  auto dist = [&](int v) {
    const Vec2 d = fp[v] - o;
    return std::abs(axis.x() * d.y() - axis.y() * d.x());
  };
  for (int v : left) EXPECT_LE(dist(v), 0.01 * expected);
  int checked = 0;
  for (int v : right) {
    if (rb.arc[v] < length / w) continue;  // first winding borders the open boundary
    EXPECT_NEAR(dist(v), expected, 0.01 * expected);
    ++checked;
  }
  EXPECT_GE(checked, 20);
}
