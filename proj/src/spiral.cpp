#include "zipr/spiral.hpp"

#include "zipr/obj_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

namespace zipr {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad_spec(const std::string& msg) { throw Error("bad_spiral_spec", msg); }

Vec3 barycentric(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 v0 = b - a, v1 = c - a, v2 = p - a;
  const double den = v0.x() * v1.y() - v1.x() * v0.y();
  const double l1 = (v2.x() * v1.y() - v1.x() * v2.y()) / den;
  const double l2 = (v0.x() * v2.y() - v2.x() * v0.y()) / den;
  return Vec3(1.0 - l1 - l2, l1, l2);
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Representative of x + k*period closest to target.
double nearest_copy(double x, double period, double target) {
  return x + std::round((target - x) / period) * period;
}

double wrap(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0) r += period;
  return r;
}

struct ChartFrame {
  double x0 = 0.0, y_bot = 0.0, y_top = 0.0, period = 1.0;
};

ChartFrame frame_of(const ChartCut& cut, const Charts& charts, int part) {
  const PartChart& pc = cut.charts[part];
  ChartFrame f;
  f.x0 = charts.X[2 * pc.seam_right.front()];
  f.y_bot = charts.X[2 * pc.seam_right.front() + 1];
  f.y_top = charts.X[2 * pc.seam_right.back() + 1];
  f.period = charts.period[part];
  return f;
}

std::vector<const InterfaceArc*> arcs_between(const Decomposition& d, int p, int q) {
  std::vector<const InterfaceArc*> out;
  const CylinderPart& part = d.parts[p];
  if (part.transition_loop < 0) return out;
  for (const InterfaceArc& a : part.loops[part.transition_loop].arcs)
    if (a.neighbor == q) out.push_back(&a);
  return out;
}

const InterfaceArc* longest_arc(const std::vector<const InterfaceArc*>& arcs) {
  const InterfaceArc* best = nullptr;
  for (const InterfaceArc* a : arcs)
    if (!best || a->end - a->start > best->end - best->start) best = a;
  return best;
}

Crossing make_crossing(const Decomposition& d, const ChartCut& cut, const Charts& charts, int p, int q, double s) {
  const auto arcs = arcs_between(d, p, q);
  const InterfaceArc* arc = nullptr;
  const double tol = 1e-12 * std::max(1.0, d.parts[p].loops[d.parts[p].transition_loop].length);
  for (const InterfaceArc* a : arcs)
    if (s >= a->start - tol && s <= a->end + tol) {
      arc = a;
      break;
    }
  if (!arc) {
    std::string ranges;
    for (const InterfaceArc* a : arcs)
      ranges += " [" + format_double(a->start) + ", " + format_double(a->end) + "]";
    bad_spec("crossing " + format_double(s) + " between parts " + std::to_string(p) + " and " + std::to_string(q) +
             " lies outside the shared interface arcs" + ranges);
  }
  const SurfaceMesh& m = d.mesh;
  Crossing c;
  c.from = p;
  c.to = q;
  c.s = s;
  double acc = arc->start;
  const int n = static_cast<int>(arc->halfedges.size());
  for (int i = 0; i < n; ++i) {
    const int h = arc->halfedges[i];
    const double len = m.halfedge_length(h);
    if (i == n - 1 || s <= acc + len) {
      c.halfedge = h;
      c.t = std::clamp((s - acc) / len, 0.0, 1.0);
      break;
    }
    acc += len;
  }
  const int h = c.halfedge, t = m.twin(h);
  auto uv = [&](int chart_v) { return Vec2(charts.X[2 * chart_v], charts.X[2 * chart_v + 1]); };
  c.uv_from = (1.0 - c.t) * uv(cut.corner_vertex[h]) + c.t * uv(cut.corner_vertex[m.next(h)]);
  c.uv_to = (1.0 - c.t) * uv(cut.corner_vertex[m.next(t)]) + c.t * uv(cut.corner_vertex[t]);
  c.position = (1.0 - c.t) * m.position(m.tail(h)) + c.t * m.position(m.tip(h));
  return c;
}

// Circular distance of two x values, in [0, period/2].
double circular_gap(double a, double b, double period) {
  const double g = wrap(b - a, period);
  return std::min(g, period - g);
}

bool segments_touch(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1, double eps, bool& endpoints_only) {
  const Vec2 r = p1 - p0, s = q1 - q0;
  const double den = cross2(r, s);
  const double scale = std::max(r.norm(), s.norm());
  endpoints_only = false;
  if (std::abs(den) <= 1e-14 * scale * scale) {
    // parallel: only collinear overlaps matter
    if (std::abs(cross2(q0 - p0, r)) > eps * scale * r.norm()) return false;
    const double rr = r.squaredNorm();
    if (rr == 0.0) return false;
    double t0 = (q0 - p0).dot(r) / rr, t1 = (q1 - p0).dot(r) / rr;
    if (t0 > t1) std::swap(t0, t1);
    const double lo = std::max(0.0, t0), hi = std::min(1.0, t1);
    if (lo > hi + eps) return false;
    endpoints_only = hi - lo <= eps;
    return true;
  }
  const double t = cross2(q0 - p0, s) / den, u = cross2(q0 - p0, r) / den;
  if (t < -eps || t > 1 + eps || u < -eps || u > 1 + eps) return false;
  const bool t_end = t <= eps || t >= 1 - eps, u_end = u <= eps || u >= 1 - eps;
  endpoints_only = t_end && u_end;
  return true;
}

void check_simple(const SpiralPlan& plan, const Charts& charts, const Decomposition& d) {
  const int n = static_cast<int>(plan.lines.size());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const ParamLine& A = plan.lines[i];
      const ParamLine& B = plan.lines[j];
      if (A.part != B.part) continue;
      const double l = charts.period[A.part];
      const double lo = std::min(A.a.x(), A.b.x()) - std::max(B.a.x(), B.b.x());
      const double hi = std::max(A.a.x(), A.b.x()) - std::min(B.a.x(), B.b.x());
      for (int k = static_cast<int>(std::floor(lo / l)) - 1; k <= static_cast<int>(std::ceil(hi / l)) + 1; ++k) {
        if (i == j && k == 0) continue;
        const Vec2 off(k * l, 0.0);
        bool ends = false;
        if (!segments_touch(A.a, A.b, B.a + off, B.b + off, 1e-9, ends)) continue;
        // consecutive lines meet at their shared endpoint
        if (ends && k == 0 && j == i + 1 && (A.b - B.a).norm() <= 1e-9 * l) continue;
        throw Error("self_intersecting_curve", "spiral lines " + std::to_string(i) + " and " + std::to_string(j) +
                                                   " of part " + std::to_string(A.part) + " intersect" +
                                                   (k ? " (period copy " + std::to_string(k) + ")" : ""));
      }
    }
  const double scale = d.mesh.bounding_box_diagonal();
  for (size_t a = 0; a < plan.crossings.size(); ++a)
    for (size_t b = a + 1; b < plan.crossings.size(); ++b)
      if ((plan.crossings[a].position - plan.crossings[b].position).norm() <= 1e-9 * scale)
        throw Error("self_intersecting_curve",
                    "transition crossings " + std::to_string(a) + " and " + std::to_string(b) + " coincide");
}

}  // namespace

std::string to_string(BoundaryRole role) {
  switch (role) {
    case BoundaryRole::Start: return "start";
    case BoundaryRole::End: return "end";
    case BoundaryRole::FermatTurn: return "fermat-turn";
  }
  return "";
}

SpiralSpec spiral_spec_from_json(const json& j) {
  SpiralSpec s;
  try {
    if (!j.is_object()) bad_spec("spiral spec must be a JSON object");
    if (j.contains("traversal")) s.traversal = j.at("traversal").get<std::vector<int>>();
    if (j.contains("windings")) s.windings = j.at("windings").get<std::vector<int>>();
    if (j.contains("crossings"))
      for (const json& c : j.at("crossings")) {
        if (c.is_null())
          s.crossings.emplace_back();
        else
          s.crossings.emplace_back(c.get<double>());
      }
    if (j.contains("turns"))
      for (const json& t : j.at("turns")) {
        if (t.is_null())
          s.turns.emplace_back();
        else
          s.turns.emplace_back(t.get<std::array<double, 2>>());
      }
    if (j.contains("start")) s.start = j.at("start").get<double>();
  } catch (const json::exception& e) {
    bad_spec(std::string("malformed spiral spec: ") + e.what());
  }
  return s;
}

json to_json(const SpiralSpec& s) {
  json j;
  j["traversal"] = s.traversal;
  j["windings"] = s.windings;
  json c = json::array();
  for (const auto& x : s.crossings) c.push_back(x ? json(*x) : json());
  j["crossings"] = c;
  json t = json::array();
  for (const auto& x : s.turns) t.push_back(x ? json(*x) : json());
  j["turns"] = t;
  j["start"] = s.start;
  return j;
}

SpiralPlan plan_lines(const SpiralSpec& spec, const Decomposition& d, const ChartCut& cut, const Charts& charts) {
  const int np = static_cast<int>(d.parts.size());
  SpiralPlan plan;
  plan.traversal = spec.traversal.empty() ? d.traversal : spec.traversal;
  const TraversalCheck tc = validate_traversal(d, plan.traversal);
  if (!tc.ok) throw Error("bad_traversal", tc.message);
  if (!spec.windings.empty() && static_cast<int>(spec.windings.size()) != np)
    bad_spec("windings must list one count per part (" + std::to_string(np) + ")");
  plan.windings = spec.windings.empty() ? std::vector<int>(np, 1) : spec.windings;
  for (int p = 0; p < np; ++p)
    if (plan.windings[p] < 1) bad_spec("part " + std::to_string(p) + " needs at least one winding");
  const int steps = np - 1;
  if (!spec.crossings.empty() && static_cast<int>(spec.crossings.size()) != steps)
    bad_spec("crossings must list one value per traversal step (" + std::to_string(steps) + ")");
  if (!spec.turns.empty() && static_cast<int>(spec.turns.size()) != np)
    bad_spec("turns must list one entry per part (" + std::to_string(np) + ")");

  std::vector<ChartFrame> fr;
  for (int p = 0; p < np; ++p) fr.push_back(frame_of(cut, charts, p));
  const auto& trav = plan.traversal;
  plan.roles.assign(np, BoundaryRole::FermatTurn);
  plan.roles[trav.front()] = BoundaryRole::Start;
  if (np > 1) plan.roles[trav.back()] = BoundaryRole::End;
  plan.turns.assign(np, {0.0, 0.0});

  for (int p = 0; p < np; ++p)
    if (!spec.turns.empty() && spec.turns[p]) {
      if (plan.roles[p] != BoundaryRole::FermatTurn)
        bad_spec("part " + std::to_string(p) + " is not a Fermat part; its open boundary is a " +
                 to_string(plan.roles[p]));
      for (double x : *spec.turns[p])
        if (x < 0.0 || x > fr[p].period)
          bad_spec("turn point " + format_double(x) + " of part " + std::to_string(p) + " is outside [0, " +
                   format_double(fr[p].period) + "]");
    }

  if (np == 1) {
    const int p = trav[0];
    const ChartFrame& f = fr[p];
    if (spec.start < 0.0 || spec.start > f.period)
      bad_spec("start " + format_double(spec.start) + " is outside [0, " + format_double(f.period) + "]");
    const Vec2 a(f.x0 + spec.start, f.y_bot);
    plan.lines.push_back({p, 1, a, Vec2(a.x() + plan.windings[p] * f.period, f.y_top)});
    check_simple(plan, charts, d);
    return plan;
  }

  // crossings: user values, then Fermat scans, then arc midpoints
  std::vector<std::optional<double>> s(steps);
  for (int k = 0; k < steps; ++k)
    if (!spec.crossings.empty() && spec.crossings[k]) s[k] = *spec.crossings[k];
  auto default_s = [&](int k) {
    const InterfaceArc* a = longest_arc(arcs_between(d, trav[k], trav[k + 1]));
    return 0.5 * (a->start + a->end);
  };
  constexpr int kScan = 512;
  for (int i = 1; i + 1 < np; ++i) {
    const int q = trav[i];
    if (!spec.turns.empty() && spec.turns[q]) continue;
    auto candidates = [&](int k) {
      std::vector<double> c;
      if (s[k]) return std::vector<double>{*s[k]};
      const InterfaceArc* a = longest_arc(arcs_between(d, trav[k], trav[k + 1]));
      for (int j = 0; j < kScan; ++j) c.push_back(a->start + (j + 0.5) * (a->end - a->start) / kScan);
      return c;
    };
    const std::vector<double> cin = candidates(i - 1), cout = candidates(i);
    std::vector<double> xin, xout;
    for (double v : cin) xin.push_back(make_crossing(d, cut, charts, trav[i - 1], q, v).uv_to.x());
    for (double v : cout) xout.push_back(make_crossing(d, cut, charts, q, trav[i + 1], v).uv_from.x());
    const double l = fr[q].period, mid_in = default_s(i - 1), mid_out = default_s(i);
    double best = kInf, best_tie = kInf;
    size_t bi = 0, bo = 0;
    for (size_t a = 0; a < cin.size(); ++a)
      for (size_t b = 0; b < cout.size(); ++b) {
        const double err = std::abs(circular_gap(xin[a], xout[b], l) - 0.5 * l);
        const double tie = std::abs(cin[a] - mid_in) + std::abs(cout[b] - mid_out);
        if (err < best - 1e-9 * l || (err <= best + 1e-9 * l && tie < best_tie)) {
          best = std::min(best, err);
          best_tie = tie;
          bi = a;
          bo = b;
        }
      }
    s[i - 1] = cin[bi];
    s[i] = cout[bo];
    // refine one free crossing within its grid cell
    const int free_k = cout.size() > 1 ? i : cin.size() > 1 ? i - 1 : -1;
    if (free_k >= 0 && best > 0.0) {
      const InterfaceArc* a = longest_arc(arcs_between(d, trav[free_k], trav[free_k + 1]));
      const double h = (a->end - a->start) / kScan;
      auto err = [&](double v) {
        const double xi = free_k == i - 1 ? make_crossing(d, cut, charts, trav[i - 1], q, v).uv_to.x() : xin[bi];
        const double xo = free_k == i ? make_crossing(d, cut, charts, q, trav[i + 1], v).uv_from.x() : xout[bo];
        return std::abs(circular_gap(xi, xo, l) - 0.5 * l);
      };
      double lo = std::max(a->start, *s[free_k] - h), hi = std::min(a->end, *s[free_k] + h);
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
        const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
        if (err(m1) <= err(m2))
          hi = m2;
        else
          lo = m1;
      }
      const double v = 0.5 * (lo + hi);
      if (err(v) < best) {
        best = err(v);
        s[free_k] = v;
      }
    }
    if (best > 1e-6 * l)
      plan.warnings.push_back("part " + std::to_string(q) + ": no crossing pair gives turn points half a period apart (closest gap " +
                              format_double(0.5 * l - best) + ", period " + format_double(l) + ")");
  }
  for (int k = 0; k < steps; ++k) {
    if (!s[k]) s[k] = default_s(k);
    plan.crossings.push_back(make_crossing(d, cut, charts, trav[k], trav[k + 1], *s[k]));
  }

  // lines
  {
    const int p = trav[0];
    const Vec2 c = plan.crossings[0].uv_from;
    plan.lines.push_back({p, 1, Vec2(c.x() - plan.windings[p] * fr[p].period, fr[p].y_bot), c});
  }
  for (int i = 1; i + 1 < np; ++i) {
    const int q = trav[i];
    const ChartFrame& f = fr[q];
    const double l = f.period, wl = plan.windings[q] * l;
    const Vec2 cin = plan.crossings[i - 1].uv_to, cout = plan.crossings[i].uv_from;
    double x1, x2;
    if (!spec.turns.empty() && spec.turns[q]) {
      x1 = nearest_copy(f.x0 + (*spec.turns[q])[0], l, cin.x() - wl);
      x2 = nearest_copy(f.x0 + (*spec.turns[q])[1], l, x1);
    } else {
      x1 = cin.x() - wl;
      x2 = nearest_copy(cout.x() - wl, l, x1);
      if (std::abs(std::abs(x2 - x1) - 0.5 * l) <= 1e-9 * l) x2 = x1 + std::copysign(0.5 * l, x2 - x1);
    }
    plan.turns[q] = {wrap(x1 - f.x0, l), wrap(x2 - f.x0, l)};
    if (!spec.turns.empty() && spec.turns[q] && std::abs(std::abs(x2 - x1) - 0.5 * l) > 1e-6 * l)
      plan.warnings.push_back("part " + std::to_string(q) + ": turn points are " + format_double(std::abs(x2 - x1)) +
                              " apart, not half the period " + format_double(l));
    const double xe = nearest_copy(cout.x(), l, x2 + wl);
    const Vec2 t1(x1, f.y_bot), t2(x2, f.y_bot);
    plan.lines.push_back({q, 1, cin, t1});
    if (std::abs(x2 - x1) > 0.0) plan.lines.push_back({q, 0, t1, t2});
    plan.lines.push_back({q, 2, t2, Vec2(xe, cout.y())});
  }
  {
    const int p = trav.back();
    const Vec2 c = plan.crossings.back().uv_to;
    plan.lines.push_back({p, 1, c, Vec2(c.x() - plan.windings[p] * fr[p].period, fr[p].y_bot)});
  }
  check_simple(plan, charts, d);
  return plan;
}

json to_json(const SpiralPlan& plan) {
  json j;
  j["traversal"] = plan.traversal;
  j["windings"] = plan.windings;
  json roles = json::array();
  for (BoundaryRole r : plan.roles) roles.push_back(to_string(r));
  j["roles"] = roles;
  json cr = json::array();
  for (const Crossing& c : plan.crossings)
    cr.push_back({{"from", c.from},
                  {"to", c.to},
                  {"s", c.s},
                  {"uv_from", {c.uv_from.x(), c.uv_from.y()}},
                  {"uv_to", {c.uv_to.x(), c.uv_to.y()}},
                  {"position", {c.position.x(), c.position.y(), c.position.z()}}});
  j["crossings"] = cr;
  j["turns"] = plan.turns;
  json lines = json::array();
  for (const ParamLine& l : plan.lines)
    lines.push_back({{"part", l.part}, {"index", l.index}, {"a", {l.a.x(), l.a.y()}}, {"b", {l.b.x(), l.b.y()}}});
  j["lines"] = lines;
  j["warnings"] = plan.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// point location

ChartLocator::ChartLocator(const Decomposition& decomp, const ChartCut& cut, const Charts& charts)
    : decomp_(&decomp), cut_(&cut), charts_(&charts) {
  const int np = static_cast<int>(cut.charts.size());
  grids_.resize(np);
  for (int p = 0; p < np; ++p) {
    const auto& faces = cut.charts[p].faces;
    Grid& g = grids_[p];
    double xmin = kInf, ymin = kInf, xmax = -kInf, ymax = -kInf;
    for (int f : faces)
      for (int k = 0; k < 3; ++k) {
        const Vec2 u = corner_uv(f, k);
        xmin = std::min(xmin, u.x());
        xmax = std::max(xmax, u.x());
        ymin = std::min(ymin, u.y());
        ymax = std::max(ymax, u.y());
      }
    const double w = std::max(xmax - xmin, 1e-12), h = std::max(ymax - ymin, 1e-12);
    g.cell = std::sqrt(w * h / std::max<size_t>(1, faces.size()));
    g.nx = std::max(1, static_cast<int>(std::ceil(w / g.cell)));
    g.ny = std::max(1, static_cast<int>(std::ceil(h / g.cell)));
    g.x0 = xmin;
    g.y0 = ymin;
    g.xmax = xmax;
    g.cells.assign(static_cast<size_t>(g.nx) * g.ny, {});
    auto cx = [&](double x) { return std::clamp(static_cast<int>((x - g.x0) / g.cell), 0, g.nx - 1); };
    auto cy = [&](double y) { return std::clamp(static_cast<int>((y - g.y0) / g.cell), 0, g.ny - 1); };
    for (int f : faces) {
      double a = kInf, b = -kInf, c = kInf, e = -kInf;
      for (int k = 0; k < 3; ++k) {
        const Vec2 u = corner_uv(f, k);
        a = std::min(a, u.x());
        b = std::max(b, u.x());
        c = std::min(c, u.y());
        e = std::max(e, u.y());
      }
      for (int i = cx(a - 1e-9 * g.cell); i <= cx(b + 1e-9 * g.cell); ++i)
        for (int j = cy(c - 1e-9 * g.cell); j <= cy(e + 1e-9 * g.cell); ++j) g.cells[j * g.nx + i].push_back(f);
    }
  }
}

Vec2 ChartLocator::corner_uv(int face, int k) const {
  const int v = cut_->corner_vertex[3 * face + k];
  return Vec2(charts_->X[2 * v], charts_->X[2 * v + 1]);
}

std::vector<ChartLocator::Hit> ChartLocator::locate_all(int part, const Vec2& uv, double tol) const {
  const Grid& g = grids_[part];
  const double l = charts_->period[part];
  std::vector<Hit> hits;
  const double slack = 1e-9 * g.cell;
  const int k0 = static_cast<int>(std::ceil((uv.x() - g.xmax - slack) / l));
  const int k1 = static_cast<int>(std::floor((uv.x() - g.x0 + slack) / l));
  for (int k = k0; k <= k1; ++k) {
    const Vec2 p(uv.x() - k * l, uv.y());
    const int i = std::clamp(static_cast<int>((p.x() - g.x0) / g.cell), 0, g.nx - 1);
    const int j = std::clamp(static_cast<int>((p.y() - g.y0) / g.cell), 0, g.ny - 1);
    for (int f : g.cells[j * g.nx + i]) {
      const Vec3 b = barycentric(p, corner_uv(f, 0), corner_uv(f, 1), corner_uv(f, 2));
      if (b.minCoeff() >= -tol) hits.push_back({f, b, k * l});
    }
  }
  return hits;
}

ChartLocator::Hit ChartLocator::locate(int part, const Vec2& uv, double tol) const {
  auto hits = locate_all(part, uv, tol);
  if (hits.empty())
    throw Error("point_location", "point (" + format_double(uv.x()) + ", " + format_double(uv.y()) +
                                      ") lies outside the chart of part " + std::to_string(part));
  // most interior
  return *std::max_element(hits.begin(), hits.end(),
                           [](const Hit& a, const Hit& b) { return a.bary.minCoeff() < b.bary.minCoeff(); });
}

Vec3 ChartLocator::lift(int part, const Vec2& uv) const {
  const Hit h = locate(part, uv);
  const Tri& t = decomp_->mesh.face(h.face);
  const auto& m = decomp_->mesh;
  return h.bary[0] * m.position(t[0]) + h.bary[1] * m.position(t[1]) + h.bary[2] * m.position(t[2]);
}

// ---------------------------------------------------------------------------
// tracing

namespace {

class Walker {
public:
  Walker(const Decomposition& d, const ChartLocator& loc, std::vector<CurveSample>& out)
      : d_(d), m_(d.mesh), loc_(loc), out_(out) {}

  // Walks line `li` from a to b; a is located preferring a face next to the last sample.
  void walk(const ParamLine& line, int li) {
    part_ = line.part;
    line_ = li;
    const Vec2 a = line.a, b = line.b;
    start(a);
    Vec2 pos = a;
    const int limit = 20 * m_.num_faces() + 1000;
    for (int iter = 0; iter < limit; ++iter) {
      const Vec3 lb = bary(face_, b - Vec2(shift_, 0));
      const double mag = std::max(1.0, lb.cwiseAbs().maxCoeff());
      if (lb.minCoeff() >= -kTol * mag) {
        subdivide(pos, b);
        emit(face_, shift_, b);
        return;
      }
      const Vec3 la = bary(face_, pos - Vec2(shift_, 0)).cwiseMax(0.0);
      double t_exit = kInf;
      for (int k = 0; k < 3; ++k)
        if (lb[k] < -kTol * mag && lb[k] < la[k]) t_exit = std::min(t_exit, la[k] / (la[k] - lb[k]));
      const Vec2 q = pos + t_exit * (b - pos);
      Vec3 lq = bary(face_, q - Vec2(shift_, 0));
      subdivide(pos, q);
      int zeros = 0, zk = -1;
      for (int k = 0; k < 3; ++k)
        if (lq[k] <= kVertexTol) {
          ++zeros;
          zk = k;
        }
      if (zeros <= 1) {
        if (zk < 0) {
          int km = 0;
          lq.minCoeff(&km);
          zk = km;
        }
        emit(face_, shift_, q);
        const int h = 3 * face_ + (zk + 1) % 3;
        const int tw = m_.twin(h);
        if (tw < 0 || d_.face_part[tw / 3] != part_ || d_.edge_is_transition[m_.edge_of(h)]) {
          if ((q - b).norm() <= 1e-9 * scale()) return;
          throw Error("point_location", "spiral line " + std::to_string(line_) + " leaves the chart of part " +
                                            std::to_string(part_) + " at (" + format_double(q.x()) + ", " +
                                            format_double(q.y()) + ")");
        }
        const int g = tw / 3;
        const int ca = (zk + 1) % 3;                 // corner of tail(h) in face_
        const int cg = (tw % 3 + 1) % 3;             // corner of tail(h) in g
        shift_ += loc_.corner_uv(face_, ca).x() - loc_.corner_uv(g, cg).x();
        face_ = g;
        pos = q;
        continue;
      }
      // through a vertex
      int cv = 0;
      lq.maxCoeff(&cv);
      const int v = m_.face(face_)[cv];
      const Vec2 at = loc_.corner_uv(face_, cv) + Vec2(shift_, 0);
      emit(face_, shift_, at);
      if ((at - b).norm() <= 1e-9 * scale()) return;
      const Vec2 dir = b - at;
      int best = -1;
      double best_score = -kInf, best_shift = 0.0;
      for (int g : m_.vertex_faces(v)) {
        if (d_.face_part[g] != part_) continue;
        const int c = corner_of(g, v);
        const double sg = shift_ + loc_.corner_uv(face_, cv).x() - loc_.corner_uv(g, c).x();
        const Vec2 o = loc_.corner_uv(g, c);
        const Vec2 e1 = loc_.corner_uv(g, (c + 1) % 3) - o, e2 = loc_.corner_uv(g, (c + 2) % 3) - o;
        const double s1 = cross2(e1, dir) / (e1.norm() * dir.norm());
        const double s2 = cross2(dir, e2) / (e2.norm() * dir.norm());
        const double score = std::min(s1, s2);
        if (score > best_score) {
          best_score = score;
          best = g;
          best_shift = sg;
        }
      }
      if (best < 0 || best_score < -1e-9)
        throw Error("point_location", "spiral line " + std::to_string(line_) + " leaves the chart of part " +
                                          std::to_string(part_) + " at a vertex");
      fan(face_, best, v, false);
      face_ = best;
      shift_ = best_shift;
      pos = loc_.corner_uv(best, corner_of(best, v)) + Vec2(shift_, 0);
    }
    throw Error("point_location", "tracing spiral line " + std::to_string(line_) + " did not terminate");
  }

private:
  static constexpr double kTol = 1e-10;
  static constexpr double kVertexTol = 1e-9;

  double scale() const { return 1.0 + loc_.period(part_); }

  int corner_of(int f, int v) const {
    const Tri& t = m_.face(f);
    return t[0] == v ? 0 : t[1] == v ? 1 : 2;
  }

  Vec3 bary(int f, const Vec2& p) const {
    return barycentric(p, loc_.corner_uv(f, 0), loc_.corner_uv(f, 1), loc_.corner_uv(f, 2));
  }

  Vec3 position(int f, const Vec3& b) const {
    const Tri& t = m_.face(f);
    return b[0] * m_.position(t[0]) + b[1] * m_.position(t[1]) + b[2] * m_.position(t[2]);
  }

  void emit(int f, double shift, const Vec2& uv) {
    CurveSample s;
    s.face = f;
    s.bary = bary(f, uv - Vec2(shift, 0)).cwiseMax(0.0);
    s.bary /= s.bary.sum();
    s.position = position(f, s.bary);
    s.part = part_;
    s.line = line_;
    s.uv = uv;
    out_.push_back(s);
  }

  void emit_vertex(int f, int v) {
    CurveSample s;
    s.face = f;
    s.bary = Vec3::Zero();
    s.bary[corner_of(f, v)] = 1.0;
    s.position = m_.position(v);
    s.part = d_.face_part[f];
    s.line = line_;
    s.uv = loc_.corner_uv(f, corner_of(f, v));
    out_.push_back(s);
  }

  void subdivide(const Vec2& from, const Vec2& to) {
    const Tri& t = m_.face(face_);
    const double h = 0.25 * (m_.position(t[0]) - m_.position(t[1])).norm() / 3.0 +
                     0.25 * (m_.position(t[1]) - m_.position(t[2])).norm() / 3.0 +
                     0.25 * (m_.position(t[2]) - m_.position(t[0])).norm() / 3.0;
    const Vec3 pa = position(face_, bary(face_, from - Vec2(shift_, 0)));
    const Vec3 pb = position(face_, bary(face_, to - Vec2(shift_, 0)));
    const int n = static_cast<int>(std::ceil((pb - pa).norm() / h));
    for (int i = 1; i < n; ++i) emit(face_, shift_, from + (to - from) * (static_cast<double>(i) / n));
  }

  // Faces around v from f to g (exclusive of f), each receiving a sample at v.
  void fan(int f, int g, int v, bool cross_parts) {
    if (f == g) return;
    std::map<int, int> parent;
    std::deque<int> queue{f};
    parent[f] = -1;
    while (!queue.empty() && !parent.count(g)) {
      const int x = queue.front();
      queue.pop_front();
      const int c = corner_of(x, v);
      for (int h : {3 * x + c, 3 * x + (c + 2) % 3}) {
        const int tw = m_.twin(h);
        if (tw < 0) continue;
        const int y = tw / 3;
        if (!cross_parts && (d_.face_part[y] != part_ || d_.edge_is_transition[m_.edge_of(h)])) continue;
        if (parent.count(y)) continue;
        parent[y] = x;
        queue.push_back(y);
      }
    }
    if (!parent.count(g)) throw Error("point_location", "faces around a curve vertex are not connected");
    std::vector<int> path;
    for (int x = g; x != f; x = parent[x]) path.push_back(x);
    std::reverse(path.begin(), path.end());
    for (int x : path) emit_vertex(x, v);
  }

  void start(const Vec2& a) {
    auto hits = loc_.locate_all(part_, a);
    if (hits.empty()) hits.push_back(loc_.locate(part_, a));
    const int prev = out_.empty() ? -1 : out_.back().face;
    auto adjacent = [&](int f) {
      if (prev < 0 || f == prev) return true;
      for (int k = 0; k < 3; ++k)
        if (m_.twin(3 * f + k) >= 0 && m_.twin(3 * f + k) / 3 == prev) return true;
      return false;
    };
    const ChartLocator::Hit* pick = nullptr;
    for (const auto& h : hits)
      if (adjacent(h.face) && (!pick || h.bary.minCoeff() > pick->bary.minCoeff())) pick = &h;
    if (!pick) {
      pick = &hits.front();
      for (const auto& h : hits)
        if (h.bary.minCoeff() > pick->bary.minCoeff()) pick = &h;
      // join through a shared vertex
      const Tri& tp = m_.face(prev);
      const Tri& tf = m_.face(pick->face);
      int shared = -1;
      for (int x : tp)
        for (int y : tf)
          if (x == y) shared = x;
      if (shared < 0) throw Error("point_location", "consecutive spiral lines do not meet");
      const int save = part_;
      fan(prev, pick->face, shared, true);
      part_ = save;
      out_.pop_back();  // the fan ends with pick->face, sampled again below
    }
    face_ = pick->face;
    shift_ = pick->shift;
    emit(face_, shift_, a);
  }

  const Decomposition& d_;
  const SurfaceMesh& m_;
  const ChartLocator& loc_;
  std::vector<CurveSample>& out_;
  int part_ = 0, line_ = 0, face_ = -1;
  double shift_ = 0.0;
};

}  // namespace

SurfaceCurve trace_curve(const SpiralPlan& plan, const Decomposition& d, const ChartCut& cut, const Charts& charts) {
  const ChartLocator loc(d, cut, charts);
  SurfaceCurve c;
  Walker w(d, loc, c.samples);
  for (size_t i = 0; i < plan.lines.size(); ++i) w.walk(plan.lines[i], static_cast<int>(i));
  for (size_t i = 1; i < c.samples.size(); ++i) c.length += (c.samples[i].position - c.samples[i - 1].position).norm();
  return c;
}

json to_json(const SurfaceCurve& c) {
  json faces = json::array(), bary = json::array(), pos = json::array(), part = json::array(), line = json::array(),
       uv = json::array();
  for (const CurveSample& s : c.samples) {
    faces.push_back(s.face);
    bary.push_back({s.bary[0], s.bary[1], s.bary[2]});
    pos.push_back({s.position.x(), s.position.y(), s.position.z()});
    part.push_back(s.part);
    line.push_back(s.line);
    uv.push_back({s.uv.x(), s.uv.y()});
  }
  return {{"face", faces}, {"bary", bary}, {"position", pos}, {"part", part},
          {"line", line},  {"uv", uv},     {"length", c.length}};
}

// ---------------------------------------------------------------------------
// quality

namespace {

std::vector<Vec3> vertex_normals(const SurfaceMesh& m) {
  std::vector<Vec3> n(m.num_vertices(), Vec3::Zero());
  for (int f = 0; f < m.num_faces(); ++f) {
    const Tri& t = m.face(f);
    const Vec3 a = (m.position(t[1]) - m.position(t[0])).cross(m.position(t[2]) - m.position(t[0]));
    for (int v : t) n[v] += a;
  }
  for (Vec3& v : n)
    if (v.norm() > 0) v.normalize();
  return n;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + k, v.end());
  double m = v[k];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + k));
  return m;
}

}  // namespace

CurveQuality curve_quality(const SurfaceCurve& curve, const SpiralPlan& plan, const Decomposition& d,
                           const ChartCut& cut, const Charts& charts, int rulings_per_period) {
  CurveQuality q;
  q.length = curve.length;
  const ChartLocator loc(d, cut, charts);

  // spacing between adjacent windings along vertical rulings
  std::vector<double> gaps;
  for (size_t p = 0; p < cut.charts.size(); ++p) {
    const ChartFrame f = frame_of(cut, charts, static_cast<int>(p));
    const double l = f.period;
    for (int j = 0; j < rulings_per_period; ++j) {
      const double x = f.x0 + (j + 0.5) * l / rulings_per_period;
      std::vector<double> ys;
      for (const ParamLine& line : plan.lines) {
        if (static_cast<size_t>(line.part) != p || line.index == 0) continue;
        const double xa = std::min(line.a.x(), line.b.x()), xb = std::max(line.a.x(), line.b.x());
        for (double xs = nearest_copy(x, l, xa) - l; xs <= xb + l; xs += l) {
          if (xs < xa || xs > xb) continue;
          ys.push_back(line.a.y() + (xs - line.a.x()) / (line.b.x() - line.a.x()) * (line.b.y() - line.a.y()));
        }
      }
      std::sort(ys.begin(), ys.end());
      for (size_t i = 0; i + 1 < ys.size(); ++i) {
        if (ys[i + 1] - ys[i] <= 1e-12 * (f.y_top - f.y_bot)) continue;
        gaps.push_back((loc.lift(static_cast<int>(p), Vec2(x, ys[i + 1])) - loc.lift(static_cast<int>(p), Vec2(x, ys[i]))).norm());
      }
    }
  }
  q.spacing_samples = static_cast<int>(gaps.size());
  if (!gaps.empty()) {
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    q.spacing_mean = mean;
    q.spacing_std = std::sqrt(var / gaps.size());
    q.spacing_cv = q.spacing_std / mean;
    q.spacing_min = *std::min_element(gaps.begin(), gaps.end());
    q.spacing_max = *std::max_element(gaps.begin(), gaps.end());
  }

  // geodesic turning on an arc-length resampling
  const SurfaceMesh& m = d.mesh;
  const std::vector<Vec3> vn = vertex_normals(m);
  const size_t n = curve.samples.size();
  std::vector<double> arc(n, 0.0);
  std::vector<Vec3> nrm(n);
  for (size_t i = 0; i < n; ++i) {
    const CurveSample& s = curve.samples[i];
    const Tri& t = m.face(s.face);
    nrm[i] = (s.bary[0] * vn[t[0]] + s.bary[1] * vn[t[1]] + s.bary[2] * vn[t[2]]).normalized();
    if (i) arc[i] = arc[i - 1] + (s.position - curve.samples[i - 1].position).norm();
  }
  q.resample_step = 0.5 * m.mean_edge_length();
  std::vector<Vec3> rp, rn;
  std::vector<double> rs;
  size_t seg = 0;
  for (double s = 0.0; n > 1 && s <= arc.back(); s += q.resample_step) {
    while (seg + 2 < n && arc[seg + 1] < s) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double t = len > 0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
    rp.push_back((1 - t) * curve.samples[seg].position + t * curve.samples[seg + 1].position);
    rn.push_back(((1 - t) * nrm[seg] + t * nrm[seg + 1]).normalized());
    rs.push_back(s);
  }
  for (size_t i = 1; i + 1 < rp.size(); ++i) {
    const Vec3& nn = rn[i];
    Vec3 a = rp[i] - rp[i - 1], b = rp[i + 1] - rp[i];
    a -= a.dot(nn) * nn;
    b -= b.dot(nn) * nn;
    q.turning.push_back(std::atan2(a.cross(b).norm(), a.dot(b)));
  }
  if (!q.turning.empty()) {
    q.turning_median = median(q.turning);
    q.turning_max = *std::max_element(q.turning.begin(), q.turning.end());
  }
  q.histogram_edges = {0, 0.5, 1, 2, 5, 10, 20, 45, 90, 180};
  q.histogram.assign(q.histogram_edges.size() - 1, 0);
  for (double a : q.turning) {
    const double deg = a * 180.0 / M_PI;
    for (size_t b = 0; b + 1 < q.histogram_edges.size(); ++b)
      if (deg < q.histogram_edges[b + 1] || b + 2 == q.histogram_edges.size()) {
        ++q.histogram[b];
        break;
      }
  }
  // turning near each transition crossing
  for (size_t i = 1; i < n; ++i) {
    if (curve.samples[i].part == curve.samples[i - 1].part) continue;
    const double s = arc[i];
    double worst = 0.0;
    for (size_t k = 0; k < q.turning.size(); ++k)
      if (std::abs(rs[k + 1] - s) <= 2.0 * q.resample_step) worst = std::max(worst, q.turning[k]);
    q.crossing_turning.push_back(worst);
  }
  return q;
}

json to_json(const CurveQuality& q) {
  return {{"length", q.length},
          {"spacing", {{"samples", q.spacing_samples},
                       {"mean", q.spacing_mean},
                       {"std", q.spacing_std},
                       {"cv", q.spacing_cv},
                       {"min", q.spacing_min},
                       {"max", q.spacing_max}}},
          {"turning", {{"resample_step", q.resample_step},
                       {"median", q.turning_median},
                       {"max", q.turning_max},
                       {"histogram_edges_deg", q.histogram_edges},
                       {"histogram", q.histogram},
                       {"at_crossings", q.crossing_turning}}}};
}

}  // namespace zipr
