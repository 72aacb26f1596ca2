#include "zipr/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace zipr {

using nlohmann::json;

namespace {

constexpr double kSheetGap = 20.0;  // mm between sheets in the emitted files

std::string mm(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

struct Fit {
  bool ok = false;
  int q = 0;
  double w = 0.0, h = 0.0;
};

Fit orient(const Vec2& size, double W, double H) {
  const bool a = size.x() <= W && size.y() <= H;
  const bool b = size.y() <= W && size.x() <= H;
  if (!a && !b) return {};
  // landscape when both fit, keeps shelves low
  if (a && (!b || size.y() <= size.x())) return {true, 0, size.x(), size.y()};
  return {true, 1, size.y(), size.x()};
}

// Boundary loops of a face set, interior on the left.
std::vector<std::vector<int>> piece_loops(const SurfaceMesh& m, const std::vector<char>& in) {
  auto outside = [&](int h) { return m.twin(h) < 0 || !in[m.face_of(m.twin(h))]; };
  std::vector<char> used(m.num_halfedges(), 0);
  std::vector<std::vector<int>> loops;
  for (int f = 0; f < m.num_faces(); ++f) {
    if (!in[f]) continue;
    for (int k = 0; k < 3; ++k) {
      const int h0 = 3 * f + k;
      if (used[h0] || !outside(h0)) continue;
      std::vector<int> loop;
      int h = h0;
      while (!used[h]) {
        used[h] = 1;
        loop.push_back(h);
        int g = m.next(h);
        while (!outside(g)) g = m.next(m.twin(g));
        h = g;
      }
      loops.push_back(std::move(loop));
    }
  }
  return loops;
}

Vec2 rotate_q(const Vec2& p, int q, double h) { return q ? Vec2(h - p.y(), p.x()) : p; }

}  // namespace

int marker_count(double zipper_length, double interval) {
  if (!(interval > 0)) throw Error("bad_argument", "marker interval must be positive");
  return static_cast<int>(std::floor(zipper_length / interval + 1e-9)) + 1;
}

std::vector<Placement> pack_pieces(const std::vector<Vec2>& sizes, double W, double H, double s) {
  const double iw = W - 2 * s, ih = H - 2 * s;
  if (!(iw > 0 && ih > 0)) throw Error("bad_bed", "bed is smaller than twice the spacing");
  std::vector<Fit> fit(sizes.size());
  for (size_t i = 0; i < sizes.size(); ++i) {
    fit[i] = orient(sizes[i], iw, ih);
    if (!fit[i].ok)
      throw Error("piece_too_large", "piece " + std::to_string(i) + " (" + mm(sizes[i].x()) + " x " +
                                         mm(sizes[i].y()) + " mm) does not fit the bed");
  }
  std::vector<int> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fit[a].h > fit[b].h; });

  std::vector<Placement> out(sizes.size());
  int sheet = 0;
  double x = s, y = s, shelf = 0.0;
  for (int i : order) {
    const Fit& f = fit[i];
    if (x + f.w > W - s + 1e-9) {  // next shelf
      x = s;
      y += shelf + s;
      shelf = 0.0;
    }
    if (y + f.h > H - s + 1e-9) {  // next sheet
      ++sheet;
      x = s;
      y = s;
      shelf = 0.0;
    }
    Placement& p = out[i];
    p.piece = i;
    p.sheet = sheet;
    p.quarter_turns = f.q;
    p.offset = Vec2(x, y);
    p.width = f.w;
    p.height = f.h;
    x += f.w + s;
    shelf = std::max(shelf, f.h);
  }
  return out;
}

Vec2 place_point(const Placement& pl, const PlanPiece& piece, const Vec2& p) {
  return rotate_q(p, pl.quarter_turns, piece.height) + pl.offset;
}

CutPlan make_cut_plan(const Ribbon& rb, const SplitResult& split, const PlanOptions& opt) {
  const SurfaceMesh& m = rb.mesh;
  CutPlan plan;
  plan.bed_width = opt.bed_width;
  plan.bed_height = opt.bed_height;
  plan.spacing = opt.spacing;
  plan.marker_interval = opt.marker_interval;
  plan.seam_allowance = opt.seam_allowance;

  const int np = static_cast<int>(split.pieces.size());
  std::vector<int> owner(m.num_faces(), -1);
  std::vector<std::map<int, int>> local(np);
  for (int i = 0; i < np; ++i) {
    const Piece& pc = split.pieces[i];
    for (int f : pc.faces) owner[f] = i;
    for (size_t k = 0; k < pc.vertices.size(); ++k) local[i][pc.vertices[k]] = static_cast<int>(k);
  }
  auto at = [&](int piece, int v) -> Vec2 { return split.pieces[piece].positions[local[piece].at(v)]; };

  std::set<std::pair<int, int>> sewn;
  for (const SewPair& sp : split.sew) sewn.insert({std::min(sp.a, sp.b), std::max(sp.a, sp.b)});

  plan.pieces.resize(np);
  std::vector<Vec2> shift(np, Vec2::Zero());  // moves allowance flaps back to the min corner
  for (int i = 0; i < np; ++i) {
    PlanPiece& pp = plan.pieces[i];
    pp.width = split.pieces[i].width;
    pp.height = split.pieces[i].height;
    std::vector<char> in(m.num_faces(), 0);
    for (int f : split.pieces[i].faces) in[f] = 1;
    for (const auto& loop : piece_loops(m, in)) {
      std::vector<Vec2> poly;
      for (int h : loop) {
        const int a = m.tail(h), b = m.tip(h);
        const Vec2 pa = at(i, a), pb = at(i, b);
        poly.push_back(pa);
        if (opt.seam_allowance > 0 && m.twin(h) >= 0 && sewn.count({std::min(a, b), std::max(a, b)})) {
          const Vec2 d = (pb - pa).normalized();
          const Vec2 out(d.y(), -d.x());
          poly.push_back(pa + opt.seam_allowance * out);
          poly.push_back(pb + opt.seam_allowance * out);
        }
      }
      pp.outline.push_back(std::move(poly));
    }
    if (opt.seam_allowance > 0) {
      Vec2 lo = Vec2::Constant(1e300), hi = Vec2::Constant(-1e300);
      for (const auto& l : pp.outline)
        for (const Vec2& p : l) {
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
        }
      pp.width = hi.x() - lo.x();
      pp.height = hi.y() - lo.y();
      shift[i] = -lo;
      for (auto& l : pp.outline)
        for (Vec2& p : l) p -= lo;
    }
  }
  auto pos = [&](int piece, int v) -> Vec2 { return at(piece, v) + shift[piece]; };

  // zipper markers at equal arc length on both tapes
  double total = 0.0;
  for (const auto& p : rb.pairs) total += m.halfedge_length(p[0]);
  plan.zipper_length = total;
  const int count = rb.pairs.empty() ? 0 : marker_count(total, opt.marker_interval);
  plan.markers_per_side = count;
  if (count > 0) {
    size_t c = 0;
    double start = 0.0;
    for (int k = 0; k < count; ++k) {
      const double s = std::min(k * opt.marker_interval, total);
      while (c + 1 < rb.pairs.size() && start + m.halfedge_length(rb.pairs[c][0]) < s) {
        start += m.halfedge_length(rb.pairs[c][0]);
        ++c;
      }
      for (int side = 0; side < 2; ++side) {
        const int h = rb.pairs[c][side];
        const double len = m.halfedge_length(h);
        const double t = std::clamp(len > 0 ? (s - start) / len : 0.0, 0.0, 1.0);
        const int i = owner[m.face_of(h)];
        // left tape runs with its halfedges, right tape against them
        const int from = side == 0 ? m.tail(h) : m.tip(h), to = side == 0 ? m.tip(h) : m.tail(h);
        const Vec2 pa = pos(i, from), pb = pos(i, to);
        const Vec2 p = pa + t * (pb - pa);
        Vec2 d = (pos(i, m.tip(h)) - pos(i, m.tail(h))).normalized();
        const Vec2 inward(-d.y(), d.x());
        Marker mk;
        mk.a = p;
        mk.b = p + opt.marker_length * inward;
        mk.side = side;
        mk.index = k;
        mk.arc = s;
        plan.pieces[i].markers.push_back(mk);
      }
    }
  }

  for (const SewPair& sp : split.sew) {
    plan.sew.push_back({sp.label, sp.piece_a, sp.piece_b, sp.length});
    for (int i : {sp.piece_a, sp.piece_b})
      plan.pieces[i].labels.push_back({0.5 * (pos(i, sp.a) + pos(i, sp.b)), "S" + std::to_string(sp.label)});
  }
  for (int i = 0; i < np; ++i) {
    Vec2 c = Vec2::Zero();
    for (const Vec2& p : split.pieces[i].positions) c += p;
    if (!split.pieces[i].positions.empty()) c /= static_cast<double>(split.pieces[i].positions.size());
    plan.pieces[i].labels.insert(plan.pieces[i].labels.begin(), {c + shift[i], "P" + std::to_string(i + 1)});
  }

  std::vector<Vec2> sizes;
  for (const PlanPiece& pp : plan.pieces) sizes.push_back(Vec2(pp.width, pp.height));
  plan.placements = pack_pieces(sizes, opt.bed_width, opt.bed_height, opt.spacing);
  for (const Placement& p : plan.placements) plan.sheets = std::max(plan.sheets, p.sheet + 1);
  return plan;
}

json plan_metadata(const CutPlan& plan) {
  json j;
  j["bed"] = {{"width", plan.bed_width}, {"height", plan.bed_height}};
  j["spacing"] = plan.spacing;
  j["sheets"] = plan.sheets;
  j["pieces"] = plan.pieces.size();
  j["zipper_length"] = plan.zipper_length;
  j["marker_interval"] = plan.marker_interval;
  j["markers_per_side"] = plan.markers_per_side;
  j["marker_count"] = 2 * plan.markers_per_side;
  j["seam_allowance"] = plan.seam_allowance;
  json sew = json::array();
  for (const SewInfo& s : plan.sew)
    sew.push_back({{"label", s.label}, {"piece_a", s.piece_a}, {"piece_b", s.piece_b}, {"length", s.length}});
  j["sew"] = sew;
  json pl = json::array();
  for (const Placement& p : plan.placements)
    pl.push_back({{"piece", p.piece},
                  {"sheet", p.sheet},
                  {"quarter_turns", p.quarter_turns},
                  {"x", p.offset.x()},
                  {"y", p.offset.y()},
                  {"width", p.width},
                  {"height", p.height}});
  j["placements"] = pl;
  return j;
}

namespace {

// Sheet s occupies y in [s (H + gap), s (H + gap) + H] of the output, y up.
Vec2 sheet_point(const CutPlan& plan, const Placement& pl, const Vec2& p) {
  const Vec2 w = place_point(pl, plan.pieces[pl.piece], p);
  return Vec2(w.x(), w.y() + pl.sheet * (plan.bed_height + kSheetGap));
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string emit_svg(const CutPlan& plan) {
  const int sheets = std::max(plan.sheets, 1);
  const double total_h = sheets * plan.bed_height + (sheets - 1) * kSheetGap;
  auto flip = [&](const Vec2& p) { return Vec2(p.x(), total_h - p.y()); };
  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << mm(plan.bed_width) << "mm\" height=\""
    << mm(total_h) << "mm\" viewBox=\"0 0 " << mm(plan.bed_width) << " " << mm(total_h) << "\">\n";
  o << "<metadata id=\"plan\">" << xml_escape(plan_metadata(plan).dump()) << "</metadata>\n";
  o << "<g id=\"cut\" fill=\"none\" stroke=\"#ff0000\" stroke-width=\"0.1\">\n";
  for (const Placement& pl : plan.placements)
    for (const auto& loop : plan.pieces[pl.piece].outline) {
      o << "<path d=\"";
      for (size_t k = 0; k < loop.size(); ++k) {
        const Vec2 q = flip(sheet_point(plan, pl, loop[k]));
        o << (k ? " L " : "M ") << mm(q.x()) << " " << mm(q.y());
      }
      o << " Z\"/>\n";
    }
  o << "</g>\n<g id=\"mark\" fill=\"none\" stroke=\"#0000ff\" stroke-width=\"0.1\">\n";
  for (const Placement& pl : plan.placements)
    for (const Marker& mk : plan.pieces[pl.piece].markers) {
      const Vec2 a = flip(sheet_point(plan, pl, mk.a)), b = flip(sheet_point(plan, pl, mk.b));
      o << "<path d=\"M " << mm(a.x()) << " " << mm(a.y()) << " L " << mm(b.x()) << " " << mm(b.y()) << "\"/>\n";
    }
  o << "</g>\n<g id=\"label\" fill=\"#000000\" font-family=\"sans-serif\" font-size=\"4\" text-anchor=\"middle\">\n";
  for (const Placement& pl : plan.placements)
    for (const Label& lb : plan.pieces[pl.piece].labels) {
      const Vec2 a = flip(sheet_point(plan, pl, lb.at));
      o << "<text x=\"" << mm(a.x()) << "\" y=\"" << mm(a.y()) << "\">" << xml_escape(lb.text) << "</text>\n";
    }
  o << "</g>\n</svg>\n";
  return o.str();
}

std::string emit_dxf(const CutPlan& plan) {
  std::ostringstream o;
  auto pair = [&](int code, const std::string& v) { o << code << "\n" << v << "\n"; };
  pair(0, "SECTION");
  pair(2, "HEADER");
  pair(9, "$ACADVER");
  pair(1, "AC1009");
  pair(0, "ENDSEC");
  pair(0, "SECTION");
  pair(2, "TABLES");
  pair(0, "TABLE");
  pair(2, "LAYER");
  pair(70, "3");
  const std::pair<const char*, int> layers[] = {{"CUT", 1}, {"MARK", 5}, {"LABEL", 7}};
  for (const auto& [name, color] : layers) {
    pair(0, "LAYER");
    pair(2, name);
    pair(70, "0");
    pair(62, std::to_string(color));
    pair(6, "CONTINUOUS");
  }
  pair(0, "ENDTAB");
  pair(0, "ENDSEC");
  pair(0, "SECTION");
  pair(2, "ENTITIES");
  for (const Placement& pl : plan.placements)
    for (const auto& loop : plan.pieces[pl.piece].outline) {
      pair(0, "POLYLINE");
      pair(8, "CUT");
      pair(66, "1");
      pair(70, "1");
      for (const Vec2& p : loop) {
        const Vec2 q = sheet_point(plan, pl, p);
        pair(0, "VERTEX");
        pair(8, "CUT");
        pair(10, mm(q.x()));
        pair(20, mm(q.y()));
      }
      pair(0, "SEQEND");
      pair(8, "CUT");
    }
  for (const Placement& pl : plan.placements)
    for (const Marker& mk : plan.pieces[pl.piece].markers) {
      const Vec2 a = sheet_point(plan, pl, mk.a), b = sheet_point(plan, pl, mk.b);
      pair(0, "LINE");
      pair(8, "MARK");
      pair(10, mm(a.x()));
      pair(20, mm(a.y()));
      pair(11, mm(b.x()));
      pair(21, mm(b.y()));
    }
  for (const Placement& pl : plan.placements)
    for (const Label& lb : plan.pieces[pl.piece].labels) {
      const Vec2 a = sheet_point(plan, pl, lb.at);
      pair(0, "TEXT");
      pair(8, "LABEL");
      pair(10, mm(a.x()));
      pair(20, mm(a.y()));
      pair(40, "4");
      pair(1, lb.text);
    }
  pair(0, "ENDSEC");
  pair(0, "EOF");
  return o.str();
}

}  // namespace zipr
