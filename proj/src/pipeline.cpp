#include "zipr/pipeline.hpp"

#include "zipr/obj_io.hpp"
#include "zipr/spiral.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

namespace zipr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace project {

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Decompose: return "decompose";
    case Stage::Param: return "param";
    case Stage::Spiral: return "spiral";
    case Stage::Ribbon: return "ribbon";
    case Stage::Export: return "export";
  }
  return "?";
}

std::vector<std::string> stage_outputs(Stage s) {
  switch (s) {
    case Stage::Decompose: return {kMesh, kDecompReport};
    case Stage::Param: return {kCharts, kSolverReport};
    case Stage::Spiral: return {kCurve, kCurveObj, kQualityReport};
    case Stage::Ribbon: return {kRibbon, kFlat, kRibbonData, kRibbonReport};
    case Stage::Export: return {kPlanReport};
  }
  return {};
}

json artifact_status(const fs::path& dir) {
  json j = json::object();
  for (Stage s : {Stage::Decompose, Stage::Param, Stage::Spiral, Stage::Ribbon, Stage::Export}) {
    bool ready = true;
    for (const auto& f : stage_outputs(s)) ready = ready && fs::exists(dir / f);
    j[stage_name(s)] = ready ? "ready" : "stale";
  }
  return j;
}

}  // namespace project

using namespace project;

namespace {

constexpr Stage kOrder[] = {Stage::Decompose, Stage::Param, Stage::Spiral, Stage::Ribbon, Stage::Export};

void invalidate_after(const fs::path& dir, Stage s) {
  bool later = false;
  for (Stage t : kOrder) {
    if (later) {
      for (const auto& f : stage_outputs(t)) fs::remove(dir / f);
      if (t == Stage::Export) {
        fs::remove(dir / kPlanSvg);
        fs::remove(dir / kPlanDxf);
      }
    }
    if (t == s) later = true;
  }
}

void require(const fs::path& dir, Stage s) {
  for (const auto& f : stage_outputs(s))
    if (!fs::exists(dir / f)) throw Error("stage_order", "run " + stage_name(s) + " first");
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw Error("bad_json", p.filename().string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

// Inputs of the later stages, rebuilt from the project files.
struct Loaded {
  Decomposition d;
  ChartCut cut;
  Charts charts;
};

Segmentation load_seg(const fs::path& dir) {
  if (!fs::exists(dir / kSeg)) return {};
  return segmentation_from_json(read_json(dir / kSeg));
}

Loaded load_charts(const fs::path& dir) {
  require(dir, Stage::Param);
  Loaded l;
  l.d = apply_segmentation(load_mesh((dir / kMesh).string()), load_seg(dir));
  l.cut = cut_into_charts(l.d);
  const Eigen::VectorXd X = charts_x_from_json(read_json(dir / kCharts), l.cut.mesh.num_vertices());
  l.charts = measure_charts(l.cut, X);
  return l;
}

SpiralSpec load_spec(const fs::path& dir) {
  if (!fs::exists(dir / kSpec)) return {};
  return spiral_spec_from_json(read_json(dir / kSpec));
}

std::string obj_text(const std::vector<Vec3>& P, const std::vector<Tri>& F) {
  std::ostringstream o;
  write_obj(o, P, F);
  return o.str();
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("io", "write failed: " + path.string());
}

json mesh_arrays(const std::vector<Vec3>& P, const std::vector<Tri>& F) {
  std::vector<double> pos;
  for (const Vec3& p : P) pos.insert(pos.end(), {p.x(), p.y(), p.z()});
  std::vector<int> idx;
  for (const Tri& t : F) idx.insert(idx.end(), {t[0], t[1], t[2]});
  return {{"positions", pos}, {"indices", idx}};
}

json mesh_arrays(const std::vector<Vec2>& P, const std::vector<Tri>& F) {
  std::vector<double> pos;
  for (const Vec2& p : P) pos.insert(pos.end(), {p.x(), p.y()});
  std::vector<int> idx;
  for (const Tri& t : F) idx.insert(idx.end(), {t[0], t[1], t[2]});
  return {{"positions", pos}, {"indices", idx}};
}

json check_mesh(const SurfaceMesh& m) {
  // components over face adjacency
  std::vector<int> parent(m.num_faces());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int h = 0; h < m.num_halfedges(); ++h)
    if (m.twin(h) >= 0) parent[find(h / 3)] = find(m.twin(h) / 3);
  int components = 0;
  for (int f = 0; f < m.num_faces(); ++f) components += find(f) == f;
  const int loops = static_cast<int>(boundary_loops(m).size());
  const int chi = m.euler_characteristic();
  json j;
  j["vertices"] = m.num_vertices();
  j["faces"] = m.num_faces();
  j["edges"] = m.num_edges();
  j["boundary_loops"] = loops;
  j["components"] = components;
  j["euler_characteristic"] = chi;
  if (components == 1) j["genus"] = (2 - chi - loops) / 2;
  j["area"] = m.total_area();
  j["bounding_box_diagonal"] = m.bounding_box_diagonal();
  j["mean_edge_length"] = m.mean_edge_length();
  return j;
}

json run_decompose(const fs::path& dir, const SurfaceMesh& mesh, const Segmentation& seg) {
  const Decomposition d = apply_segmentation(mesh, seg);
  fs::create_directories(dir);
  invalidate_after(dir, Stage::Decompose);
  write_text(dir / kMesh, obj_text(mesh.positions(), mesh.faces()));
  write_json(dir / kSeg, to_json(seg));
  const json summary = decomposition_summary(d);
  write_json(dir / kDecompReport, summary);
  return summary;
}

ParamOptions param_options_from_json(const json& j) {
  ParamOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw Error("bad_config", "parameterization options must be an object");
  json solver = j;
  if (j.contains("constraints")) {
    const json& c = j["constraints"];
    if (!c.is_object()) throw Error("bad_config", "constraints must be an object");
    o.constraints.cylinder = c.value("cylinder", true);
    o.constraints.straight = c.value("straight", true);
    o.constraints.interface = c.value("interface", true);
    solver.erase("constraints");
  }
  o.solver = solver_config_from_json(solver);
  return o;
}

Decomposition load_decomposition(const fs::path& dir) {
  if (!fs::exists(dir / kMesh)) throw Error("stage_order", "run decompose first");
  return apply_segmentation(load_mesh((dir / kMesh).string()), load_seg(dir));
}

json run_param(const fs::path& dir, const ParamOptions& opts, const std::function<void(int, double)>& progress) {
  const Decomposition d = load_decomposition(dir);
  const Parameterization p = parameterize(d, opts.solver, opts.constraints, progress);
  invalidate_after(dir, Stage::Param);
  json report = to_json(p.report);
  report.erase("seconds");
  report["config"] = to_json(opts.solver);
  report["constraints"] = {{"cylinder", opts.constraints.cylinder},
                           {"straight", opts.constraints.straight},
                           {"interface", opts.constraints.interface}};
  write_json(dir / kCharts, charts_to_json(p.charts));
  write_json(dir / kSolverReport, report);
  return report;
}

json run_spiral(const fs::path& dir, const std::optional<SpiralSpec>& given) {
  const Loaded l = load_charts(dir);
  const SpiralSpec spec = given ? *given : load_spec(dir);
  const SpiralPlan plan = plan_lines(spec, l.d, l.cut, l.charts);
  const SurfaceCurve curve = trace_curve(plan, l.d, l.cut, l.charts);
  const CurveQuality q = curve_quality(curve, plan, l.d, l.cut, l.charts);
  invalidate_after(dir, Stage::Spiral);
  write_json(dir / kSpec, to_json(spec));
  write_json(dir / kCurve, {{"plan", to_json(plan)}, {"curve", to_json(curve)}});
  std::vector<Vec3> pts;
  for (const CurveSample& s : curve.samples) pts.push_back(s.position);
  write_polyline_obj((dir / kCurveObj).string(), pts);
  const json quality = to_json(q);
  write_json(dir / kQualityReport, quality);
  std::vector<double> flat;
  for (const Vec3& p : pts) flat.insert(flat.end(), {p.x(), p.y(), p.z()});
  return {{"polyline", flat}, {"quality", quality}, {"warnings", plan.warnings}};
}

json run_ribbon(const fs::path& dir, const RibbonConfig& cfg) {
  require(dir, Stage::Spiral);
  const Loaded l = load_charts(dir);
  const SpiralPlan plan = plan_lines(load_spec(dir), l.d, l.cut, l.charts);
  const SurfaceCurve curve = trace_curve(plan, l.d, l.cut, l.charts);
  const CurveStrip strip = cut_along_curve(l.d.mesh, curve);
  const Ribbon rb = remesh_rulings(strip, plan, l.d, l.cut, l.charts, cfg);
  const DevelopableReport dev = check_developable(rb.mesh);
  const FlatRibbon fl = unfold(rb);
  const Deviation dv = surface_deviation(rb.mesh, l.d.mesh);
  const auto overlaps = detect_overlaps(fl.positions, fl.faces);
  double zl = 0.0, zr = 0.0;
  for (const auto& p : rb.pairs) {
    zl += rb.mesh.halfedge_length(p[0]);
    zr += rb.mesh.halfedge_length(p[1]);
  }
  invalidate_after(dir, Stage::Ribbon);
  write_text(dir / kRibbon, obj_text(rb.mesh.positions(), rb.mesh.faces()));
  std::vector<Vec3> flat3;
  for (const Vec2& p : fl.positions) flat3.push_back(Vec3(p.x(), p.y(), 0.0));
  write_text(dir / kFlat, obj_text(flat3, fl.faces));
  write_json(dir / kRibbonData, ribbon_to_json(rb));
  json report;
  report["developable"] = to_json(dev);
  report["vertices"] = rb.mesh.num_vertices();
  report["faces"] = rb.mesh.num_faces();
  report["rulings"] = rb.rulings.size();
  report["folded_faces"] = rb.folded;
  report["samples_per_period"] = rb.samples_per_period;
  report["deviation"] = {{"max", dv.max}, {"mean", dv.mean}, {"samples", dv.samples},
                         {"relative_max", dv.max / l.d.mesh.bounding_box_diagonal()}};
  report["overlapping_face_pairs"] = overlaps.size();
  report["zipper"] = {{"left", zl}, {"right", zr}, {"pairs", rb.pairs.size()}};
  write_json(dir / kRibbonReport, report);
  return {{"report", report},
          {"ribbon", mesh_arrays(rb.mesh.positions(), rb.mesh.faces())},
          {"flat", mesh_arrays(fl.positions, fl.faces)}};
}

void parse_bed(const std::string& text, double& w, double& h) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("no x");
    size_t used = 0;
    w = std::stod(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("width");
    const std::string rest = text.substr(x + 1);
    h = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("height");
  } catch (const std::exception&) {
    throw Error("bad_argument", "bed must be WIDTHxHEIGHT in mm, got '" + text + "'");
  }
  if (!(w > 0 && h > 0)) throw Error("bad_argument", "bed dimensions must be positive");
}

ExportOptions export_options_from_json(const json& j) {
  ExportOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw Error("bad_argument", "export options must be an object");
  try {
    if (j.contains("bed")) {
      const json& b = j["bed"];
      if (b.is_string()) {
        parse_bed(b.get<std::string>(), o.plan.bed_width, o.plan.bed_height);
      } else {
        o.plan.bed_width = b.at("width").get<double>();
        o.plan.bed_height = b.at("height").get<double>();
      }
    }
    o.plan.spacing = j.value("spacing", o.plan.spacing);
    o.plan.marker_interval = j.value("marker_interval", o.plan.marker_interval);
    o.plan.seam_allowance = j.value("seam_allowance", o.plan.seam_allowance);
    o.split.resolve_overlaps = j.value("resolve_overlaps", o.split.resolve_overlaps);
    o.format = j.value("format", o.format);
  } catch (const json::exception& e) {
    throw Error("bad_argument", std::string("malformed export options: ") + e.what());
  }
  return o;
}

std::string run_export(const fs::path& dir, const ExportOptions& opts) {
  if (opts.format != "svg" && opts.format != "dxf") throw Error("bad_argument", "format must be svg or dxf");
  require(dir, Stage::Ribbon);
  const Ribbon rb = ribbon_from_json(read_json(dir / kRibbonData), load_mesh((dir / kRibbon).string()));
  const FlatRibbon fl = unfold(rb);
  SplitPolicy pol = opts.split;
  pol.bed_width = opts.plan.bed_width;
  pol.bed_height = opts.plan.bed_height;
  pol.spacing = opts.plan.spacing;
  const SplitResult split = split_ribbon(rb, fl, pol);
  const CutPlan plan = make_cut_plan(rb, split, opts.plan);
  const std::string text = opts.format == "svg" ? emit_svg(plan) : emit_dxf(plan);
  invalidate_after(dir, Stage::Ribbon);
  write_text(dir / (opts.format == "svg" ? kPlanSvg : kPlanDxf), text);
  json meta = plan_metadata(plan);
  meta["format"] = opts.format;
  write_json(dir / kPlanReport, meta);
  return text;
}

}  // namespace zipr
