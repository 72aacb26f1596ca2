#include "zipr/generators.hpp"
#include "zipr/obj_io.hpp"
#include "zipr/pipeline.hpp"
#include "zipr/service.hpp"

#include "CLI11.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zipr;

namespace {

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error("bad_json", path + ": " + e.what());
  }
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zipr: zipper-ribbon design pipeline"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "solver threads")->check(CLI::PositiveNumber);

  std::string mesh_path, seg_path, project, config_path, spec_path, bed = "1000x600", format = "svg", fixture;
  std::string data_dir, bind = "127.0.0.1";
  int samples = 0, port = 8080;
  double spacing = 5.0, marker_interval = 50.0, seam_allowance = 0.0;

  auto* check = app.add_subcommand("check", "load and validate a mesh");
  check->add_option("mesh", mesh_path)->required();

  auto* decompose = app.add_subcommand("decompose", "validate a segmentation and start a project");
  decompose->add_option("mesh", mesh_path)->required();
  decompose->add_option("--seg", seg_path, "segmentation JSON");
  decompose->add_option("--project", project, "project directory (default: the mesh's directory)");

  auto* param = app.add_subcommand("param", "solve the seamless parameterization");
  param->add_option("project", project)->required();
  param->add_option("--config", config_path, "solver config JSON");

  auto* spiral = app.add_subcommand("spiral", "trace the spiral curve");
  spiral->add_option("project", project)->required();
  spiral->add_option("--spec", spec_path, "SpiralSpec JSON");

  auto* ribbon = app.add_subcommand("ribbon", "remesh along rulings and unfold");
  ribbon->add_option("project", project)->required();
  ribbon->add_option("--samples", samples, "ruling samples per period (0: automatic)");

  auto* exp = app.add_subcommand("export", "split, pack and write the cut plan");
  exp->add_option("project", project)->required();
  exp->add_option("--bed", bed, "bed size WxH in mm");
  exp->add_option("--format", format)->check(CLI::IsMember({"svg", "dxf"}));
  exp->add_option("--spacing", spacing, "gap between pieces in mm");
  exp->add_option("--marker-interval", marker_interval, "marker spacing in mm");
  exp->add_option("--seam-allowance", seam_allowance, "flap width on cut rulings in mm");

  auto* serve = app.add_subcommand("serve", "host the design service");
  serve->add_option("--port", port);
  serve->add_option("--bind", bind);
  serve->add_option("--data", data_dir, "data directory")->envname("ZIPR_DATA");

  auto* generate = app.add_subcommand("generate", "write a generated fixture project");
  generate->add_option("fixture", fixture)->required();
  generate->add_option("project", project)->required();

  CLI11_PARSE(app, argc, argv);
  Eigen::setNbThreads(threads);

  try {
    if (*check) {
      print(check_mesh(load_mesh(mesh_path)));
    } else if (*decompose) {
      const SurfaceMesh mesh = load_mesh(mesh_path);
      const Segmentation seg = seg_path.empty() ? Segmentation{} : segmentation_from_json(read_json_file(seg_path));
      if (project.empty()) project = fs::absolute(mesh_path).parent_path().string();
      print(run_decompose(project, mesh, seg));
    } else if (*param) {
      const json cfg = config_path.empty() ? json(nullptr) : read_json_file(config_path);
      print(run_param(project, param_options_from_json(cfg)));
    } else if (*spiral) {
      std::optional<SpiralSpec> spec;
      if (!spec_path.empty()) spec = spiral_spec_from_json(read_json_file(spec_path));
      json out = run_spiral(project, spec);
      out.erase("polyline");
      print(out);
    } else if (*ribbon) {
      RibbonConfig cfg;
      cfg.samples_per_period = samples;
      print(run_ribbon(project, cfg)["report"]);
    } else if (*exp) {
      ExportOptions o;
      parse_bed(bed, o.plan.bed_width, o.plan.bed_height);
      o.plan.spacing = spacing;
      o.plan.marker_interval = marker_interval;
      o.plan.seam_allowance = seam_allowance;
      o.format = format;
      run_export(project, o);
      print(json::parse(read_text(fs::path(project) / project::kPlanReport)));
    } else if (*serve) {
      if (data_dir.empty()) data_dir = "zipr-data";
      DesignService svc(data_dir);
      std::cerr << "serving on " << bind << ":" << port << " data " << data_dir << "\n";
      if (!svc.listen(bind, port)) throw Error("io", "cannot listen on " + bind + ":" + std::to_string(port));
    } else if (*generate) {
      const Fixture fx = make_fixture(fixture);
      print(run_decompose(project, fx.mesh, fx.seg));
    }
  } catch (const Error& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
