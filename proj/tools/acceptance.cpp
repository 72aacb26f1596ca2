// Acceptance run: one line per criterion, exit status 1 when any fails.
#include "zipr/constraints.hpp"
#include "zipr/distortion.hpp"
#include "zipr/generators.hpp"
#include "zipr/layout.hpp"
#include "zipr/pipeline.hpp"
#include "zipr/ribbon.hpp"
#include "zipr/solver.hpp"
#include "zipr/spiral.hpp"
#include "zipr/tutte.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace zipr;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct Model {
  Decomposition d;
  Parameterization p;
};

const Model& model(const std::string& name, const ConstraintOptions& opts = {}) {
  static std::map<std::string, std::unique_ptr<Model>> cache;
  const std::string key = name + (opts.interface ? "" : "/no-int");
  auto& m = cache[key];
  if (!m) {
    const Fixture fx = make_fixture(name);
    m = std::make_unique<Model>();
    m->d = apply_segmentation(fx.mesh, fx.seg);
    m->p = parameterize(m->d, SolverConfig{}, opts);
  }
  return *m;
}

struct Built {
  SpiralPlan plan;
  SurfaceCurve curve;
  CurveQuality quality;
  Ribbon ribbon;
};

Built build(const Model& m, std::vector<int> windings, int samples = 0) {
  SpiralSpec spec;
  spec.windings = std::move(windings);
  Built b;
  b.plan = plan_lines(spec, m.d, m.p.cut, m.p.charts);
  b.curve = trace_curve(b.plan, m.d, m.p.cut, m.p.charts);
  b.quality = curve_quality(b.curve, b.plan, m.d, m.p.cut, m.p.charts);
  RibbonConfig rc;
  rc.samples_per_period = samples;
  b.ribbon = remesh_rulings(cut_along_curve(m.d.mesh, b.curve), b.plan, m.d, m.p.cut, m.p.charts, rc);
  return b;
}

// ---- isometry floor

Outcome isometry_floor() {
  Outcome o;
  const Fixture fx = make_fixture("cylinder");
  const auto t0 = std::chrono::steady_clock::now();
  const Parameterization p = parameterize(apply_segmentation(fx.mesh, fx.seg), SolverConfig{});
  const double secs = seconds_since(t0);
  const ConstraintSystem raw = build_constraints(p.cut);
  const double residual = max_residual(raw, p.charts.X);
  // unrolled prism: every chart edge keeps its 3D length, period is the polygon perimeter
  double edge_err = 0.0;
  const SurfaceMesh& m = p.cut.mesh;
  for (int h = 0; h < m.num_halfedges(); ++h) {
    const int a = m.tail(h), b = m.tip(h);
    const double l3 = (m.position(a) - m.position(b)).norm();
    const double l2 = (p.charts.X.segment<2>(2 * a) - p.charts.X.segment<2>(2 * b)).norm();
    edge_err = std::max(edge_err, std::abs(l2 - l3) / l3);
  }
  const double perimeter = 40 * 2 * std::sin(M_PI / 40);
  o.detail << "faces=" << m.num_faces() << " mean_D=" << p.report.d_mean << " residual=" << residual
           << " edge_err=" << edge_err << " period_err=" << std::abs(p.charts.period[0] - perimeter)
           << " time=" << secs << "s";
  o.require(m.num_faces() == 2000, "2000 triangles");
  o.require(p.report.d_mean <= 4.0 + 1e-3, "mean D");
  o.require(residual <= 1e-8, "residual");
  o.require(edge_err <= 1e-6, "unrolling");
  o.require(std::abs(p.charts.period[0] - perimeter) <= 1e-9, "period");
  o.require(secs <= 5.0, "time");
  return o;
}

// ---- convergence anchor

Outcome convergence_anchor() {
  Outcome o;
  const Fixture fx = make_fixture("t-shape-30k");
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  const auto t0 = std::chrono::steady_clock::now();
  const Parameterization p = parameterize(d, SolverConfig{});
  const double secs = seconds_since(t0);
  bool monotone = true;
  for (size_t i = 1; i < p.report.energy.size(); ++i) monotone = monotone && p.report.energy[i] <= p.report.energy[i - 1];
  const DistortionEnergy en(p.cut.mesh.positions(), p.cut.mesh.faces());
  const int final_flips = en.count_flips(p.charts.X);
  o.detail << "faces=" << p.cut.mesh.num_faces() << " parts=" << d.parts.size() << " iterations=" << p.report.iterations
           << " converged=" << p.report.converged << " time=" << secs << "s monotone=" << monotone
           << " max_flips=" << p.report.max_flips;
  o.require(std::abs(p.cut.mesh.num_faces() - 30000) <= 300 && d.parts.size() > 1, "30k multi-part");
  o.require(p.report.converged && p.report.iterations <= 50, "iterations");
  o.require(secs <= 60.0, "time");
  o.require(monotone, "monotone");
  o.require(p.report.max_flips == 0 && final_flips == 0, "flips");
  return o;
}

// ---- gradient correctness

Outcome gradient_check() {
  Outcome o;
  const ChartCut cut = cut_into_charts(apply_segmentation(make_tube(5, 5, 1.0, 1.5, 0.0, 3), Segmentation{}));
  const DistortionEnergy en(cut.mesh.positions(), cut.mesh.faces());
  const Eigen::VectorXd X0 = tutte_initialize(cut);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double lo = X0.minCoeff(), hi = X0.maxCoeff();
  const double h = 1e-6 * (hi - lo);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd X;
    for (double amp = 0.08;; amp *= 0.5) {
      X = X0;
      for (int i = 0; i < X.size(); ++i) X[i] += amp * u(rng);
      if (en.count_flips(X) == 0) break;
    }
    Eigen::VectorXd g;
    en.energy_gradient(X, g);
    Eigen::VectorXd fd(X.size());
    for (int i = 0; i < X.size(); ++i) {
      Eigen::VectorXd a = X, b = X;
      a[i] += h;
      b[i] -= h;
      fd[i] = (en.energy(a) - en.energy(b)) / (2 * h);
    }
    worst = std::max(worst, (fd - g).norm() / g.norm());
  }
  o.detail << "triangles=" << en.num_faces() << " states=100 worst_rel_err=" << worst;
  o.require(en.num_faces() == 50, "fixture size");
  o.require(worst <= 1e-5, "gradient");
  return o;
}

// ---- constraint equivalence

Outcome constraint_equivalence() {
  Outcome o;
  int disagreements = 0, trials = 0;
  for (const Fixture& fx : {make_tube_chain(6, 4, 2, 1.0, 2.0), make_t_shape(16, 4)}) {
    const ChartCut cut = cut_into_charts(apply_segmentation(fx.mesh, fx.seg));
    const ConstraintSystem sys = build_constraints(cut);
    const ConstraintSystem red = eliminate_redundant(sys);
    const Eigen::MatrixXd N = Eigen::FullPivLU<Eigen::MatrixXd>(Eigen::MatrixXd(red.C)).kernel();
    std::mt19937 rng(31);
    std::normal_distribution<double> nd;
    const int n = static_cast<int>(sys.C.cols());
    for (int t = 0; t < 100; ++t) {
      // one vector from the reduced solution set, one generic
      Eigen::VectorXd coef(N.cols());
      for (int i = 0; i < coef.size(); ++i) coef[i] = nd(rng);
      const Eigen::VectorXd X = N * coef;
      Eigen::VectorXd Y(n);
      for (int i = 0; i < n; ++i) Y[i] = nd(rng);
      for (const Eigen::VectorXd* v : std::array<const Eigen::VectorXd*, 2>{&X, &Y}) {
        const bool zr = max_residual(red, *v) <= 1e-12, zs = max_residual(sys, *v) <= 1e-12;
        disagreements += zr != zs;
        ++trials;
      }
      disagreements += !(max_residual(red, X) <= 1e-12);
    }
    o.detail << "rows " << sys.num_rows() << "->" << red.num_rows() << "; ";
  }
  o.detail << "vectors=" << trials << " disagreements=" << disagreements;
  o.require(disagreements == 0, "equivalence");
  return o;
}

// ---- spiral uniformity

Outcome spiral_uniformity() {
  Outcome o;
  const Model& cyl = model("cylinder");
  for (int w : {3, 8, 20}) {
    SpiralSpec spec;
    spec.windings = {w};
    const SpiralPlan plan = plan_lines(spec, cyl.d, cyl.p.cut, cyl.p.charts);
    const SurfaceCurve c = trace_curve(plan, cyl.d, cyl.p.cut, cyl.p.charts);
    const CurveQuality q = curve_quality(c, plan, cyl.d, cyl.p.cut, cyl.p.charts);
    // closed-form helix: spacing h / w
    const double mean_err = std::abs(q.spacing_mean - 3.0 / w) / (3.0 / w);
    o.detail << "w=" << w << " cv=" << q.spacing_cv << " mean_err=" << mean_err << "; ";
    o.require(q.spacing_cv <= 0.01, "cv w=" + std::to_string(w));
    o.require(mean_err <= 0.01, "helix spacing w=" + std::to_string(w));
  }
  const Model& t = model("t-shape");
  const SpiralPlan probe = plan_lines({}, t.d, t.p.cut, t.p.charts);
  const int q = probe.traversal[1];
  const double l = t.p.charts.period[q];
  SpiralSpec spec;
  spec.windings = {2, 2, 2};
  spec.turns.assign(3, std::nullopt);
  spec.turns[q] = std::array<double, 2>{0.3 * l, 0.8 * l};
  const SpiralPlan plan = plan_lines(spec, t.d, t.p.cut, t.p.charts);
  const PartChart& pc = t.p.cut.charts[q];
  const double x0 = t.p.charts.X[2 * pc.seam_right.front()], y0 = t.p.charts.X[2 * pc.seam_right.front() + 1];
  std::vector<double> xs;
  for (const ParamLine& line : plan.lines) {
    if (line.part != q || line.index == 0) continue;
    for (const Vec2& e : {line.a, line.b})
      if (std::abs(e.y() - y0) < 1e-12) {
        const double r = std::fmod(e.x() - x0, l);
        const double wr = r < 0 ? r + l : r;
        xs.push_back(wr);
        xs.push_back(wr + l);
      }
  }
  std::sort(xs.begin(), xs.end());
  double worst = xs.size() == 4 ? 0.0 : INFINITY;
  for (size_t i = 1; i < xs.size(); ++i) worst = std::max(worst, std::abs(xs[i] - xs[i - 1] - 0.5 * l));
  o.detail << "fermat_hits=" << xs.size() << " spacing_err=" << worst;
  o.require(worst <= 1e-6, "fermat");
  return o;
}

// ---- developability and zip pairing over the test models

struct Case {
  std::string name;
  std::vector<int> windings;
};

const std::vector<Case> kModels = {{"cylinder", {3}},      {"noisy-tube", {3}},  {"two-part", {3, 3}},
                                   {"two-part", {}},       {"three-chain", {}}, {"t-shape", {2, 2, 2}},
                                   {"bent-tube", {8}},     {"blob", {10}}};

Outcome developability() {
  Outcome o;
  int interior = 0;
  double worst = 0.0;
  for (const Case& c : kModels) {
    const Built b = build(model(c.name), c.windings);
    const Ribbon& rb = b.ribbon;
    interior += static_cast<int>(check_developable(rb.mesh).interior_vertices.size());
    const FlatRibbon fl = unfold(rb);
    for (int h = 0; h < rb.mesh.num_halfedges(); ++h) {
      const int a = rb.mesh.tail(h), v = rb.mesh.tip(h);
      const double l3 = (rb.mesh.position(a) - rb.mesh.position(v)).norm();
      worst = std::max(worst, std::abs((fl.positions[a] - fl.positions[v]).norm() - l3) / l3);
    }
  }
  // cylinder strip: straight left side, right side at constant distance
  const int w = 3;
  const Built b = build(model("cylinder"), {w}, 64);
  const Ribbon& rb = b.ribbon;
  const FlatRibbon fl = unfold(rb);
  const double pitch = 3.0 / w, circumference = 40 * 2 * std::sin(M_PI / 40);
  const double expected = pitch * std::cos(std::atan2(pitch, circumference));
  std::vector<int> left, right;
  for (int v = 0; v < rb.mesh.num_vertices(); ++v)
    if (rb.arc[v] >= 0) (rb.side[v] == RibbonSide::Left ? left : right).push_back(v);
  std::sort(left.begin(), left.end(), [&](int a, int c) { return rb.arc[a] < rb.arc[c]; });
  const Vec2 origin = fl.positions[left.front()];
  const Vec2 axis = (fl.positions[left.back()] - origin).normalized();
  double straight = 0.0, width_err = 0.0;
  for (int v : left) straight = std::max(straight, std::abs(cross2(axis, fl.positions[v] - origin)));
  for (int v : right)
    if (rb.arc[v] >= b.curve.length / w)
      width_err = std::max(width_err, std::abs(std::abs(cross2(axis, fl.positions[v] - origin)) - expected));
  o.detail << "models=" << kModels.size() << " interior_vertices=" << interior << " max_edge_err=" << worst
           << " strip_bow=" << straight / expected << " width_err=" << width_err / expected;
  o.require(interior == 0, "interior vertices");
  o.require(worst <= 1e-9, "edge lengths");
  o.require(straight <= 0.01 * expected && width_err <= 0.01 * expected, "cylinder strip");
  return o;
}

Outcome zip_pairing() {
  Outcome o;
  double side_err = 0.0, pair_err = 0.0;
  for (const Case& c : kModels) {
    const Built b = build(model(c.name), c.windings);
    double left = 0.0, right = 0.0;
    for (const auto& pr : b.ribbon.pairs) {
      const double a = b.ribbon.mesh.halfedge_length(pr[0]), r = b.ribbon.mesh.halfedge_length(pr[1]);
      pair_err = std::max(pair_err, std::abs(a - r) / std::max(a, r));
      left += a;
      right += r;
    }
    side_err = std::max(side_err, std::abs(left - right) / left);
  }
  o.detail << "models=" << kModels.size() << " side_rel_err=" << side_err << " pair_rel_err=" << pair_err;
  o.require(side_err <= 1e-6, "sides");
  o.require(pair_err <= 1e-9, "pairs");
  return o;
}

// ---- piece economy

constexpr double kEps = 1e-9;

bool proper_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(b - a, c - a), d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c), d4 = cross2(d - c, b - c);
  return ((d1 > kEps && d2 < -kEps) || (d1 < -kEps && d2 > kEps)) &&
         ((d3 > kEps && d4 < -kEps) || (d3 < -kEps && d4 > kEps));
}

bool strictly_inside(const Vec2& p, const std::array<Vec2, 3>& t) {
  const double s = cross2(t[1] - t[0], t[2] - t[0]) > 0 ? 1.0 : -1.0;
  for (int k = 0; k < 3; ++k)
    if (s * cross2(t[(k + 1) % 3] - t[k], p - t[k]) <= kEps) return false;
  return true;
}

bool overlap(const std::array<Vec2, 3>& f, const std::array<Vec2, 3>& g) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (proper_cross(f[i], f[(i + 1) % 3], g[j], g[(j + 1) % 3])) return true;
  for (int i = 0; i < 3; ++i)
    if (strictly_inside(f[i], g) || strictly_inside(g[i], f)) return true;
  return false;
}

Outcome piece_economy() {
  Outcome o;
  const Built b = build(model("blob"), {30});
  const Ribbon& rb = b.ribbon;
  const SplitResult split = split_ribbon(rb, unfold(rb));
  const CutPlan plan = make_cut_plan(rb, split, PlanOptions{});
  struct Placed {
    std::array<Vec2, 3> t;
    int piece, sheet;
  };
  std::vector<Placed> tris;
  bool in_bed = true;
  for (const Placement& pl : plan.placements) {
    const Piece& pc = split.pieces[pl.piece];
    std::map<int, Vec2> at;
    for (size_t k = 0; k < pc.vertices.size(); ++k) {
      const Vec2 q = place_point(pl, plan.pieces[pl.piece], pc.positions[k]);
      in_bed = in_bed && q.x() >= -kEps && q.y() >= -kEps && q.x() <= plan.bed_width + kEps &&
               q.y() <= plan.bed_height + kEps;
      at[pc.vertices[k]] = q;
    }
    for (int f : pc.faces) {
      const Tri& t = rb.mesh.face(f);
      tris.push_back({{at[t[0]], at[t[1]], at[t[2]]}, pl.piece, pl.sheet});
    }
  }
  // bucket by bounding box, then test every candidate pair exactly
  const double cell = 10.0;
  std::map<std::tuple<int, int, int>, std::vector<int>> grid;
  for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
    Vec2 lo = tris[i].t[0], hi = tris[i].t[0];
    for (const Vec2& p : tris[i].t) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    for (int x = static_cast<int>(std::floor(lo.x() / cell)); x <= static_cast<int>(std::floor(hi.x() / cell)); ++x)
      for (int y = static_cast<int>(std::floor(lo.y() / cell)); y <= static_cast<int>(std::floor(hi.y() / cell)); ++y)
        grid[{tris[i].sheet, x, y}].push_back(i);
  }
  std::set<std::pair<int, int>> bad;
  for (const auto& [key, ids] : grid)
    for (size_t i = 0; i < ids.size(); ++i)
      for (size_t j = i + 1; j < ids.size(); ++j)
        if (overlap(tris[ids[i]].t, tris[ids[j]].t)) bad.insert({std::min(ids[i], ids[j]), std::max(ids[i], ids[j])});
  o.detail << "pieces=" << split.pieces.size() << " sheets=" << plan.sheets << " bed=" << plan.bed_width << "x"
           << plan.bed_height << " triangles=" << tris.size() << " overlapping_pairs=" << bad.size()
           << " in_bed=" << in_bed;
  o.require(split.pieces.size() <= 7, "piece count");
  o.require(bad.empty(), "disjoint");
  o.require(in_bed, "in bed");
  return o;
}

// ---- marker contract

Outcome marker_contract() {
  Outcome o;
  const int segments = 200;
  const double length = 10000.0, step = length / segments;
  std::vector<Vec3> P;
  std::vector<Tri> F;
  for (int i = 0; i <= segments; ++i) {
    P.push_back(Vec3(i * step, 0, 0));
    P.push_back(Vec3(i * step, 40.0, 0));
  }
  for (int i = 0; i < segments; ++i) {
    F.push_back({2 * i, 2 * i + 2, 2 * i + 3});
    F.push_back({2 * i, 2 * i + 3, 2 * i + 1});
  }
  Ribbon rb;
  rb.mesh = SurfaceMesh(P, F);
  for (int i = 0; i < segments; ++i) rb.pairs.push_back({3 * (2 * i), 3 * (2 * i + 1) + 1});
  for (int i = 0; i <= segments; ++i) rb.rulings.push_back({2 * i, 2 * i + 1});
  rb.zip_start = 0;
  rb.zip_end = 2 * segments;
  rb.side.assign(rb.mesh.num_vertices(), RibbonSide::Left);
  rb.part.assign(rb.mesh.num_vertices(), 0);
  rb.arc.assign(rb.mesh.num_vertices(), -1.0);
  PlanOptions opt;
  opt.marker_interval = 50.0;
  const CutPlan plan = make_cut_plan(rb, split_ribbon(rb, unfold(rb)), opt);
  int count[2] = {0, 0};
  for (const PlanPiece& p : plan.pieces)
    for (const Marker& m : p.markers) ++count[m.side];
  o.detail << "zipper_length=" << plan.zipper_length << " interval=50 markers_per_side=" << count[0] << "/" << count[1];
  o.require(count[0] == 201 && count[1] == 201 && plan.markers_per_side == 201, "201 per side");
  return o;
}

// ---- determinism

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text(e.path());
  return files;
}

Outcome determinism(const std::string& cli) {
  Outcome o;
  std::vector<std::map<std::string, std::string>> runs;
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = fs::temp_directory_path() / ("zipr_acceptance_run" + std::to_string(r));
    fs::remove_all(dir);
    bool ok = true;
    for (const std::string& step : {"generate t-shape", "param", "spiral", "ribbon", "export"}) {
      std::string cmd = cli + " " + step + " " + dir.string();
      if (step == std::string("export")) cmd += " --bed 1000x600 --format svg";
      cmd += " >/dev/null";
      ok = ok && std::system(cmd.c_str()) == 0;
    }
    o.require(ok, "cli run " + std::to_string(r));
    runs.push_back(ok ? snapshot(dir) : std::map<std::string, std::string>{});
  }
  int differing = 0;
  for (const auto& [name, text] : runs[0])
    if (!runs[1].count(name) || runs[1].at(name) != text) ++differing;
  o.detail << "files=" << runs[0].size() << " differing=" << differing;
  o.require(!runs[0].empty() && runs[0].size() == runs[1].size() && differing == 0, "byte identical");
  return o;
}

// ---- inter-cylinder smoothness

// Rotation by pi plus translation: x_a + x_b is the same for every vertex pair
// of an interface run. Returns the largest departure.
double transition_fit(const Parameterization& p) {
  const Eigen::VectorXd& X = p.charts.X;
  std::map<std::pair<int, int>, int> run_of;
  std::vector<int> parent;
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  for (const TransitionEdge& te : p.cut.transitions) {
    const int id = static_cast<int>(parent.size());
    parent.push_back(id);
    for (const auto& key : {std::pair{te.pa, te.qa}, std::pair{te.pb, te.qb}}) {
      const auto [it, fresh] = run_of.emplace(key, id);
      if (!fresh) parent[find(id)] = find(it->second);
    }
  }
  std::map<int, std::vector<Vec2>> sums;
  for (size_t e = 0; e < p.cut.transitions.size(); ++e) {
    const TransitionEdge& te = p.cut.transitions[e];
    for (const auto& [a, b] : {std::pair{te.pa, te.qa}, std::pair{te.pb, te.qb}})
      sums[find(static_cast<int>(e))].push_back(X.segment<2>(2 * a) + X.segment<2>(2 * b));
  }
  double worst = 0.0;
  for (const auto& [run, s] : sums) {
    Vec2 t = Vec2::Zero();
    for (const Vec2& v : s) t += v;
    t /= static_cast<double>(s.size());
    // vertex deviation under the fitted map x_b = t - x_a
    for (const Vec2& v : s) worst = std::max(worst, (v - t).norm());
  }
  return worst;
}

double kink_ratio(const Built& b) {
  double worst = 0.0;
  for (double a : b.quality.crossing_turning) worst = std::max(worst, a);
  return b.quality.turning_median > 0 ? worst / b.quality.turning_median : INFINITY;
}

Outcome smoothness() {
  Outcome o;
  const Model& on = model("two-part");
  ConstraintOptions off_opts;
  off_opts.interface = false;
  const Model& off = model("two-part", off_opts);
  const double fit = transition_fit(on.p);
  const double ratio_on = kink_ratio(build(on, {3, 3}));
  const double ratio_off = kink_ratio(build(off, {3, 3}));
  o.detail << "int_fit_dev=" << fit << " seam_turning/median: int_on=" << ratio_on << " int_off=" << ratio_off;
  o.require(fit <= 1e-8, "fit");
  o.require(ratio_off >= 5.0, "kink ratio >= 5");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : ZIPR_CLI;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"isometry-floor", isometry_floor},
      {"convergence-anchor", convergence_anchor},
      {"gradient-correctness", gradient_check},
      {"constraint-equivalence", constraint_equivalence},
      {"spiral-uniformity", spiral_uniformity},
      {"developable-unfolding", developability},
      {"zip-pairing", zip_pairing},
      {"piece-economy", piece_economy},
      {"marker-contract", marker_contract},
      {"determinism", [&] { return determinism(cli); }},
      {"inter-cylinder-smoothness", smoothness},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
