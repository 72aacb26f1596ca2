#include "zipr/generators.hpp"
#include "zipr/layout.hpp"
#include "zipr/solver.hpp"

#include <gtest/gtest.h>

#include <random>
#include <regex>

using namespace zipr;

namespace {

struct Rect {
  double x0, y0, x1, y1;
};

Rect box(const Placement& p) { return {p.offset.x(), p.offset.y(), p.offset.x() + p.width, p.offset.y() + p.height}; }

// gap between two axis-aligned rectangles, negative when they overlap
double gap(const Rect& a, const Rect& b) {
  const double gx = std::max(a.x0 - b.x1, b.x0 - a.x1), gy = std::max(a.y0 - b.y1, b.y0 - a.y1);
  return std::max(gx, gy);
}

void expect_valid_packing(const std::vector<Placement>& pl, double W, double H, double s) {
  for (size_t i = 0; i < pl.size(); ++i) {
    const Rect r = box(pl[i]);
    EXPECT_GE(r.x0, s - 1e-9);
    EXPECT_GE(r.y0, s - 1e-9);
    EXPECT_LE(r.x1, W - s + 1e-9);
    EXPECT_LE(r.y1, H - s + 1e-9);
    for (size_t j = i + 1; j < pl.size(); ++j)
      if (pl[i].sheet == pl[j].sheet) EXPECT_GE(gap(r, box(pl[j])), s - 1e-9) << i << " " << j;
  }
}

// Straight zipper strip: bottom edge is the left tape, top edge the right tape,
// every rung a ruling.
Ribbon straight_ribbon(double length, double width, int segments) {
  std::vector<Vec3> P;
  std::vector<Tri> F;
  const double step = length / segments;
  for (int i = 0; i <= segments; ++i) {
    P.push_back(Vec3(i * step, 0, 0));
    P.push_back(Vec3(i * step, width, 0));
  }
  for (int i = 0; i < segments; ++i) {
    const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * i + 2, t1 = 2 * i + 3;
    F.push_back({b0, b1, t1});
    F.push_back({b0, t1, t0});
  }
  Ribbon rb;
  rb.mesh = SurfaceMesh(P, F);
  for (int i = 0; i < segments; ++i) rb.pairs.push_back({3 * (2 * i), 3 * (2 * i + 1) + 1});
  for (int i = 0; i <= segments; ++i) rb.rulings.push_back({2 * i, 2 * i + 1});
  rb.zip_start = 0;
  rb.zip_end = 2 * segments;
  const int n = rb.mesh.num_vertices();
  rb.side.assign(n, RibbonSide::Left);
  rb.part.assign(n, 0);
  rb.arc.assign(n, -1.0);
  return rb;
}

CutPlan straight_plan(double allowance = 0.0) {
  const Ribbon rb = straight_ribbon(10000.0, 40.0, 200);
  const SplitResult s = split_ribbon(rb, unfold(rb));
  PlanOptions opt;
  opt.seam_allowance = allowance;
  return make_cut_plan(rb, s, opt);
}

std::string group(const std::string& svg, const std::string& id) {
  const auto a = svg.find("<g id=\"" + id + "\"");
  const auto b = svg.find("</g>", a);
  return svg.substr(a, b - a);
}

std::vector<std::vector<Vec2>> parse_paths(const std::string& g) {
  std::vector<std::vector<Vec2>> out;
  const std::regex path("<path d=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(g.begin(), g.end(), path); it != std::sregex_iterator(); ++it) {
    std::istringstream in((*it)[1].str());
    std::vector<Vec2> pts;
    std::string tok;
    while (in >> tok) {
      if (tok == "Z") break;
      double x, y;
      in >> x >> y;
      pts.push_back(Vec2(x, y));
    }
    out.push_back(pts);
  }
  return out;
}

double distance_to_outline(const PlanPiece& p, const Vec2& q) {
  double best = 1e300;
  for (const auto& loop : p.outline)
    for (size_t k = 0; k < loop.size(); ++k) {
      const Vec2 a = loop[k], b = loop[(k + 1) % loop.size()];
      const double t = std::clamp((q - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
      best = std::min(best, (q - (a + t * (b - a))).norm());
    }
  return best;
}

}  // namespace

TEST(Pack, OneSmallPieceSitsAtTheMargin) {
  const auto pl = pack_pieces({Vec2(50, 20)}, 1000, 600, 5);
  ASSERT_EQ(pl.size(), 1u);
  EXPECT_EQ(pl[0].sheet, 0);
  EXPECT_EQ(pl[0].quarter_turns, 0);
  EXPECT_DOUBLE_EQ(pl[0].offset.x(), 5.0);
  EXPECT_DOUBLE_EQ(pl[0].offset.y(), 5.0);
}

TEST(Pack, TwoTallStripsShareOneBed) {
  const auto pl = pack_pieces({Vec2(100, 400), Vec2(100, 400)}, 600, 400, 5);
  ASSERT_EQ(pl.size(), 2u);
  expect_valid_packing(pl, 600, 400, 5);
  EXPECT_EQ(pl[0].sheet, 0);
  EXPECT_EQ(pl[1].sheet, 0);
  // neither fits upright with the margins, so both are turned
  EXPECT_EQ(pl[0].quarter_turns, 1);
  EXPECT_EQ(pl[1].quarter_turns, 1);
}

TEST(Pack, OversizePieceIsNamed) {
  try {
    pack_pieces({Vec2(10, 10), Vec2(700, 700)}, 600, 400, 5);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "piece_too_large");
    EXPECT_NE(std::string(e.what()).find("piece 1"), std::string::npos);
  }
}

TEST(Pack, RandomPiecesAreDisjointAndDeterministic) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(5, 300);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> sizes;
    for (int i = 0; i < 25; ++i) sizes.push_back(Vec2(d(rng), d(rng)));
    const auto a = pack_pieces(sizes, 800, 500, 4);
    expect_valid_packing(a, 800, 500, 4);
    const auto b = pack_pieces(sizes, 800, 500, 4);
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].offset, b[i].offset);
      EXPECT_EQ(a[i].sheet, b[i].sheet);
      const double w = a[i].quarter_turns ? sizes[i].y() : sizes[i].x();
      EXPECT_DOUBLE_EQ(a[i].width, w);
    }
  }
}

TEST(Markers, CountIsFloorPlusOne) {
  EXPECT_EQ(marker_count(10000.0, 50.0), 201);
  EXPECT_EQ(marker_count(10049.0, 50.0), 201);
  EXPECT_EQ(marker_count(49.0, 50.0), 1);
  EXPECT_THROW(marker_count(10.0, 0.0), Error);
}

TEST(Markers, TenMetreZipper) {
  const CutPlan plan = straight_plan();
  EXPECT_NEAR(plan.zipper_length, 10000.0, 1e-6);
  EXPECT_EQ(plan.markers_per_side, 201);
  std::vector<std::vector<double>> arcs(2);
  for (const PlanPiece& p : plan.pieces)
    for (const Marker& m : p.markers) {
      arcs[m.side].push_back(m.arc);
      EXPECT_LE(distance_to_outline(p, m.a), 1e-9);
      EXPECT_NEAR((m.b - m.a).norm(), 3.0, 1e-9);
    }
  EXPECT_EQ(arcs[0].size(), 201u);
  std::sort(arcs[0].begin(), arcs[0].end());
  std::sort(arcs[1].begin(), arcs[1].end());
  EXPECT_EQ(arcs[0], arcs[1]);
  for (size_t k = 0; k < arcs[0].size(); ++k) EXPECT_NEAR(arcs[0][k], 50.0 * k, 1e-9);
}

TEST(Plan, PiecesArePackedOnSheets) {
  const CutPlan plan = straight_plan();
  EXPECT_GT(plan.pieces.size(), 1u);
  EXPECT_EQ(plan.sew.size() + 1, plan.pieces.size());
  expect_valid_packing(plan.placements, plan.bed_width, plan.bed_height, plan.spacing);
  for (const Placement& pl : plan.placements)
    for (const auto& loop : plan.pieces[pl.piece].outline)
      for (const Vec2& p : loop) {
        const Vec2 q = place_point(pl, plan.pieces[pl.piece], p);
        EXPECT_GE(q.x(), pl.offset.x() - 1e-9);
        EXPECT_LE(q.x(), pl.offset.x() + pl.width + 1e-9);
        EXPECT_GE(q.y(), pl.offset.y() - 1e-9);
        EXPECT_LE(q.y(), pl.offset.y() + pl.height + 1e-9);
      }
}

TEST(Plan, SeamAllowanceAddsFlapsOnCutRulings) {
  const CutPlan a = straight_plan(0.0), b = straight_plan(10.0);
  ASSERT_EQ(a.pieces.size(), b.pieces.size());
  size_t extra = 0;
  for (size_t i = 0; i < a.pieces.size(); ++i)
    extra += b.pieces[i].outline[0].size() - a.pieces[i].outline[0].size();
  EXPECT_EQ(extra, 4 * a.sew.size());
  expect_valid_packing(b.placements, b.bed_width, b.bed_height, b.spacing);
  EXPECT_EQ(b.markers_per_side, a.markers_per_side);
}

TEST(Svg, UnitSquareIsOneClosedPath) {
  CutPlan plan;
  PlanPiece sq;
  sq.outline = {{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}};
  sq.width = sq.height = 1;
  plan.pieces = {sq};
  plan.placements = pack_pieces({Vec2(1, 1)}, plan.bed_width, plan.bed_height, plan.spacing);
  plan.sheets = 1;
  const std::string svg = emit_svg(plan);
  EXPECT_NE(svg.find("width=\"1000.000000mm\""), std::string::npos);
  EXPECT_NE(svg.find("viewBox=\"0 0 1000.000000 600.000000\""), std::string::npos);
  const auto paths = parse_paths(group(svg, "cut"));
  ASSERT_EQ(paths.size(), 1u);
  ASSERT_EQ(paths[0].size(), 4u);
  EXPECT_NE(group(svg, "cut").find(" Z\""), std::string::npos);
  // unit edges in user units, y flipped
  EXPECT_NEAR((paths[0][1] - paths[0][0]).norm(), 1.0, 1e-9);
  EXPECT_NEAR(paths[0][0].x(), 5.0, 1e-9);
  EXPECT_NEAR(paths[0][0].y(), 595.0, 1e-9);
}

TEST(Svg, ReimportReproducesOutlines) {
  const CutPlan plan = straight_plan();
  const std::string svg = emit_svg(plan);
  const auto paths = parse_paths(group(svg, "cut"));
  const double total_h = plan.sheets * plan.bed_height + (plan.sheets - 1) * 20.0;
  size_t k = 0;
  for (const Placement& pl : plan.placements)
    for (const auto& loop : plan.pieces[pl.piece].outline) {
      ASSERT_LT(k, paths.size());
      ASSERT_EQ(paths[k].size(), loop.size());
      for (size_t i = 0; i < loop.size(); ++i) {
        Vec2 q = place_point(pl, plan.pieces[pl.piece], loop[i]);
        q.y() = total_h - (q.y() + pl.sheet * (plan.bed_height + 20.0));
        EXPECT_LE((paths[k][i] - q).norm(), 1e-6);
      }
      ++k;
    }
  EXPECT_EQ(k, paths.size());
  size_t markers = 0;
  for (const PlanPiece& p : plan.pieces) markers += p.markers.size();
  EXPECT_EQ(parse_paths(group(svg, "mark")).size(), markers);
}

TEST(Svg, MetadataIsEmbedded) {
  const CutPlan plan = straight_plan();
  const std::string svg = emit_svg(plan);
  const auto a = svg.find("<metadata id=\"plan\">") + 20, b = svg.find("</metadata>");
  const nlohmann::json j = nlohmann::json::parse(svg.substr(a, b - a));
  EXPECT_EQ(j, plan_metadata(plan));
  EXPECT_EQ(j["marker_count"], 402);
  EXPECT_EQ(j["pieces"], plan.pieces.size());
}

TEST(Dxf, R12StructureAndLayers) {
  const CutPlan plan = straight_plan();
  const std::string dxf = emit_dxf(plan);
  EXPECT_NE(dxf.find("AC1009"), std::string::npos);
  auto count = [&](const std::string& s) {
    size_t n = 0;
    for (size_t p = dxf.find(s); p != std::string::npos; p = dxf.find(s, p + 1)) ++n;
    return n;
  };
  size_t loops = 0, markers = 0, labels = 0, vertices = 0;
  for (const PlanPiece& p : plan.pieces) {
    loops += p.outline.size();
    for (const auto& l : p.outline) vertices += l.size();
    markers += p.markers.size();
    labels += p.labels.size();
  }
  EXPECT_EQ(count("\nPOLYLINE\n"), loops);
  EXPECT_EQ(count("\nVERTEX\n"), vertices);
  EXPECT_EQ(count("\nLINE\n"), markers);
  EXPECT_EQ(count("\nTEXT\n"), labels);
  EXPECT_EQ(dxf.substr(dxf.size() - 6), "0\nEOF\n");
}

TEST(Plan, BlobPlanIsValid) {
  const Fixture fx = make_fixture("blob");
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  const Parameterization p = parameterize(d, SolverConfig{});
  SpiralSpec spec;
  spec.windings = {10};
  const SpiralPlan sp = plan_lines(spec, d, p.cut, p.charts);
  const CurveStrip strip = cut_along_curve(d.mesh, trace_curve(sp, d, p.cut, p.charts));
  const Ribbon rb = remesh_rulings(strip, sp, d, p.cut, p.charts);
  const SplitResult s = split_ribbon(rb, unfold(rb));
  const CutPlan plan = make_cut_plan(rb, s);
  expect_valid_packing(plan.placements, plan.bed_width, plan.bed_height, plan.spacing);
  double total = 0.0;
  for (const auto& pr : rb.pairs) total += rb.mesh.halfedge_length(pr[0]);
  EXPECT_NEAR(plan.zipper_length, total, 1e-9 * total);
  EXPECT_EQ(plan.markers_per_side, marker_count(total, 50.0));
  int per_side[2] = {0, 0};
  for (const PlanPiece& pc : plan.pieces)
    for (const Marker& m : pc.markers) {
      ++per_side[m.side];
      EXPECT_LE(distance_to_outline(pc, m.a), 1e-9);
    }
  EXPECT_EQ(per_side[0], plan.markers_per_side);
  EXPECT_EQ(per_side[1], plan.markers_per_side);
}
