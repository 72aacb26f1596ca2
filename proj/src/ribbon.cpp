#include "zipr/ribbon.hpp"

#include "zipr/obj_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace zipr {

using nlohmann::json;

namespace {

constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct CutPoint {
  int vertex = -1;  // mesh vertex, or
  int edge = -1;    // mesh edge, t measured from edge(e)[0]
  double t = 0.0;
  int id = -1;      // vertex of the split mesh
};

bool same_point(const CutPoint& a, const CutPoint& b) {
  if (a.vertex >= 0 || b.vertex >= 0) return a.vertex == b.vertex;
  return a.edge == b.edge && std::abs(a.t - b.t) <= 1e-12;
}

// -1 for interior samples
bool classify(const SurfaceMesh& m, const CurveSample& s, CutPoint& out) {
  const Tri& f = m.face(s.face);
  int small = 0, k_small = -1;
  for (int k = 0; k < 3; ++k)
    if (s.bary[k] <= kTol) {
      ++small;
      k_small = k;
    }
  if (small == 0) return false;
  out = CutPoint{};
  if (small >= 2) {
    int k;
    s.bary.maxCoeff(&k);
    out.vertex = f[k];
    return true;
  }
  const int a = f[(k_small + 1) % 3], b = f[(k_small + 2) % 3];
  const double wa = s.bary[(k_small + 1) % 3], wb = s.bary[(k_small + 2) % 3];
  const double tb = wb / (wa + wb);
  out.edge = m.find_edge(a, b);
  const auto& e = m.edge(out.edge);
  out.t = e[0] == a ? tb : 1.0 - tb;
  if (out.t <= kTol) {
    out.vertex = e[0];
    out.edge = -1;
  } else if (out.t >= 1.0 - kTol) {
    out.vertex = e[1];
    out.edge = -1;
  }
  return true;
}

std::vector<int> incident_faces(const SurfaceMesh& m, const CutPoint& p) {
  if (p.vertex >= 0) {
    auto f = m.vertex_faces(p.vertex);
    std::sort(f.begin(), f.end());
    return f;
  }
  const int h = m.edge_halfedge(p.edge);
  std::vector<int> f{m.face_of(h)};
  if (m.twin(h) >= 0) f.push_back(m.face_of(m.twin(h)));
  std::sort(f.begin(), f.end());
  return f;
}

// Edge containing both points, or -1.
int shared_edge(const SurfaceMesh& m, const CutPoint& a, const CutPoint& b) {
  if (a.vertex >= 0 && b.vertex >= 0) return m.find_edge(a.vertex, b.vertex);
  if (a.edge >= 0 && b.edge >= 0) return a.edge == b.edge ? a.edge : -1;
  const CutPoint& v = a.vertex >= 0 ? a : b;
  const CutPoint& e = a.vertex >= 0 ? b : a;
  const auto& ends = m.edge(e.edge);
  return ends[0] == v.vertex || ends[1] == v.vertex ? e.edge : -1;
}

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Ear clipping of a convex polygon (collinear points allowed), best smallest
// angle first.
void triangulate_convex(const std::vector<int>& poly, const std::vector<Vec2>& xy, std::vector<Tri>& out) {
  std::vector<int> p = poly;
  double scale = 0.0;
  for (size_t i = 0; i < p.size(); ++i) scale = std::max(scale, (xy[p[i]] - xy[p[0]]).squaredNorm());
  auto area2 = [&](const std::vector<int>& q) {
    double a = 0.0;
    for (size_t i = 0; i < q.size(); ++i) a += cross2(xy[q[i]], xy[q[(i + 1) % q.size()]]);
    return a;
  };
  double total = area2(p);
  while (p.size() > 3) {
    const int n = static_cast<int>(p.size());
    int best = -1;
    double best_q = -kInf;
    for (int i = 0; i < n; ++i) {
      const Vec2& a = xy[p[(i + n - 1) % n]];
      const Vec2& b = xy[p[i]];
      const Vec2& c = xy[p[(i + 1) % n]];
      // the rest must keep some area, or collinear points are left over
      if (cross2(b - a, c - b) <= 1e-14 * scale || total - cross2(b - a, c - a) <= 1e-12 * scale) continue;
      const Vec2 e0 = b - a, e1 = c - b, e2 = a - c;
      const double q = 2.0 * cross2(e0, e1) / std::max({e0.squaredNorm(), e1.squaredNorm(), e2.squaredNorm()});
      if (q > best_q) {
        best_q = q;
        best = i;
      }
    }
    if (best < 0) throw Error("strip_triangulation", "face polygon has no ear");
    out.push_back({p[(best + n - 1) % n], p[best], p[(best + 1) % n]});
    p.erase(p.begin() + best);
    total = area2(p);
  }
  out.push_back({p[0], p[1], p[2]});
}

void split_polygon(const std::vector<int>& poly, std::vector<std::array<int, 2>> chords, const std::vector<Vec2>& xy,
                   std::vector<Tri>& out) {
  while (!chords.empty()) {
    const auto c = chords.back();
    chords.pop_back();
    auto ia = std::find(poly.begin(), poly.end(), c[0]);
    auto ib = std::find(poly.begin(), poly.end(), c[1]);
    if (ia == poly.end() || ib == poly.end()) continue;
    size_t i = ia - poly.begin(), j = ib - poly.begin();
    if (i > j) std::swap(i, j);
    if (j - i < 2 || (i == 0 && j == poly.size() - 1)) continue;  // already a side
    std::vector<int> p1(poly.begin() + i, poly.begin() + j + 1);
    std::vector<int> p2(poly.begin() + j, poly.end());
    p2.insert(p2.end(), poly.begin(), poly.begin() + i + 1);
    std::vector<std::array<int, 2>> c1, c2;
    auto in = [](const std::vector<int>& p, int v) { return std::find(p.begin(), p.end(), v) != p.end(); };
    for (const auto& d : chords) {
      if (in(p1, d[0]) && in(p1, d[1]))
        c1.push_back(d);
      else
        c2.push_back(d);
    }
    split_polygon(p1, c1, xy, out);
    split_polygon(p2, c2, xy, out);
    return;
  }
  triangulate_convex(poly, xy, out);
}

int count_components(const SurfaceMesh& m) {
  const int nf = m.num_faces();
  std::vector<int> comp(nf, -1);
  int n = 0;
  for (int s = 0; s < nf; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = n;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      for (int k = 0; k < 3; ++k) {
        const int t = m.twin(3 * f + k);
        if (t >= 0 && comp[t / 3] < 0) {
          comp[t / 3] = n;
          stack.push_back(t / 3);
        }
      }
    }
    ++n;
  }
  return n;
}

}  // namespace

CurveStrip cut_along_curve(const SurfaceMesh& m, const SurfaceCurve& curve) {
  std::vector<CutPoint> pts;
  for (const CurveSample& s : curve.samples) {
    CutPoint p;
    if (!classify(m, s, p)) continue;
    if (!pts.empty() && same_point(pts.back(), p)) continue;
    pts.push_back(p);
  }
  if (pts.size() < 2) throw Error("curve_endpoint_interior", "curve does not reach the open boundary");
  auto on_boundary = [&](const CutPoint& p) {
    return p.vertex >= 0 ? m.is_boundary_vertex(p.vertex) : m.is_boundary_edge(p.edge);
  };
  if (!on_boundary(pts.front()))
    throw Error("curve_endpoint_interior", "curve starts inside the surface, not on an open boundary");
  if (!on_boundary(pts.back()))
    throw Error("curve_endpoint_interior", "curve ends inside the surface, not on an open boundary");

  // new vertices on edges
  std::vector<Vec3> pos = m.positions();
  std::map<int, std::vector<std::pair<double, int>>> on_edge;
  std::vector<int> vertex_use(m.num_vertices(), 0);
  for (CutPoint& p : pts) {
    if (p.vertex >= 0) {
      if (vertex_use[p.vertex]++) throw Error("curve_not_simple", "curve passes vertex " + std::to_string(p.vertex) + " twice");
      p.id = p.vertex;
      continue;
    }
    auto& list = on_edge[p.edge];
    for (const auto& q : list)
      if (std::abs(q.first - p.t) <= 1e-12)
        throw Error("curve_not_simple", "curve crosses edge " + std::to_string(p.edge) + " twice at the same point");
    const auto& e = m.edge(p.edge);
    p.id = static_cast<int>(pos.size());
    pos.push_back((1.0 - p.t) * m.position(e[0]) + p.t * m.position(e[1]));
    list.push_back({p.t, p.id});
  }
  for (auto& [e, list] : on_edge) std::sort(list.begin(), list.end());

  auto chain = [&](int e) {
    std::vector<int> c{m.edge(e)[0]};
    if (auto it = on_edge.find(e); it != on_edge.end())
      for (const auto& q : it->second) c.push_back(q.second);
    c.push_back(m.edge(e)[1]);
    return c;
  };

  std::set<std::pair<int, int>> cut;
  std::map<int, std::vector<std::array<int, 2>>> chords;
  auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const CutPoint &a = pts[i], &b = pts[i + 1];
    if (const int e = shared_edge(m, a, b); e >= 0) {
      const auto c = chain(e);
      auto ia = std::find(c.begin(), c.end(), a.id) - c.begin();
      auto ib = std::find(c.begin(), c.end(), b.id) - c.begin();
      if (ia > ib) std::swap(ia, ib);
      if (ib - ia != 1) throw Error("curve_not_simple", "curve runs over another curve point on edge " + std::to_string(e));
      cut.insert(key(a.id, b.id));
      continue;
    }
    const auto fa = incident_faces(m, a), fb = incident_faces(m, b);
    std::vector<int> common;
    std::set_intersection(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(common));
    if (common.size() != 1)
      throw Error("curve_not_simple", "consecutive curve points " + std::to_string(i) + ", " + std::to_string(i + 1) +
                                          " do not share exactly one face");
    chords[common[0]].push_back({a.id, b.id});
    cut.insert(key(a.id, b.id));
  }

  std::vector<Tri> faces;
  for (int f = 0; f < m.num_faces(); ++f) {
    const Tri& t = m.face(f);
    bool split = chords.count(f) > 0;
    for (int k = 0; k < 3 && !split; ++k) split = on_edge.count(m.edge_of(3 * f + k)) > 0;
    if (!split) {
      faces.push_back(t);
      continue;
    }
    std::vector<int> poly;
    for (int k = 0; k < 3; ++k) {
      auto c = chain(m.edge_of(3 * f + k));
      if (c.front() != t[k]) std::reverse(c.begin(), c.end());
      poly.insert(poly.end(), c.begin(), c.end() - 1);
    }
    // plane coordinates of the face
    const Vec3 o = m.position(t[0]);
    const Vec3 u = (m.position(t[1]) - o).normalized();
    const Vec3 n = u.cross(m.position(t[2]) - o).normalized();
    const Vec3 v = n.cross(u);
    std::vector<Vec2> xy(pos.size());
    for (int id : poly) xy[id] = Vec2((pos[id] - o).dot(u), (pos[id] - o).dot(v));
    std::vector<std::array<int, 2>> ch;
    if (auto it = chords.find(f); it != chords.end()) ch = it->second;
    std::reverse(ch.begin(), ch.end());
    split_polygon(poly, ch, xy, faces);
  }

  SurfaceMesh split(std::move(pos), std::move(faces));
  std::vector<char> is_cut(split.num_edges(), 0);
  for (const auto& [a, b] : cut) {
    const int e = split.find_edge(a, b);
    if (e < 0) throw Error("strip_triangulation", "curve edge missing after splitting");
    is_cut[e] = 1;
  }
  EdgeCut ec = cut_edges(split, is_cut);

  CurveStrip out;
  const int np = static_cast<int>(pts.size());
  out.left.assign(np, -1);
  out.right.assign(np, -1);
  for (const CutPoint& p : pts) out.points.push_back(split.position(p.id));
  for (int i = 0; i + 1 < np; ++i) {
    const int a = pts[i].id, b = pts[i + 1].id;
    const int h = split.find_halfedge(a, b), g = split.find_halfedge(b, a);
    if (h >= 0) {
      if (out.left[i] < 0) out.left[i] = ec.corner_vertex[h];
      out.left[i + 1] = ec.corner_vertex[split.next(h)];
    }
    if (g >= 0) {
      if (out.right[i] < 0) out.right[i] = ec.corner_vertex[split.next(g)];
      out.right[i + 1] = ec.corner_vertex[g];
    }
    if (h >= 0 && g >= 0) {
      out.pairs.push_back({h, g});
      out.left_length += ec.mesh.halfedge_length(h);
      out.right_length += ec.mesh.halfedge_length(g);
    }
  }
  out.mesh = std::move(ec.mesh);
  const int comps = count_components(out.mesh);
  const int loops = static_cast<int>(boundary_loops(out.mesh).size());
  if (comps != 1 || loops != 1 || out.mesh.euler_characteristic() != 1)
    throw Error("strip_not_disk", "cut surface has " + std::to_string(comps) + " components, " + std::to_string(loops) +
                                      " boundary loops and Euler characteristic " +
                                      std::to_string(out.mesh.euler_characteristic()));
  return out;
}

// ---------------------------------------------------------------------------
// ruling remesh

namespace {

struct Frame {
  double x0 = 0.0, y_bot = 0.0, y_top = 0.0, l = 1.0;
  int n = 8;
  double phase = 0.5;
  double step() const { return l / n; }
};

int grid_index(const Frame& f, double x) {
  const double j = (x - f.x0) / f.step() - f.phase;
  const double r = std::round(j);
  if (std::abs(j - r) > 1e-7) return -1;
  long long k = static_cast<long long>(r) % f.n;
  if (k < 0) k += f.n;
  return static_cast<int>(k);
}

// grid abscissae strictly inside (lo, hi), ascending
std::vector<double> grid_between(const Frame& f, double lo, double hi) {
  std::vector<double> xs;
  const double s = f.step();
  const long long j0 = static_cast<long long>(std::ceil((lo - f.x0) / s - f.phase));
  const long long j1 = static_cast<long long>(std::floor((hi - f.x0) / s - f.phase));
  for (long long j = j0; j <= j1; ++j) {
    const double x = f.x0 + (static_cast<double>(j) + f.phase) * s;
    if (x > lo + 1e-9 * s && x < hi - 1e-9 * s) xs.push_back(x);
  }
  return xs;
}

struct CurveVertex {
  int part = 0;
  Vec2 uv = Vec2::Zero();
  Vec3 pos = Vec3::Zero();
  int line = 0;
  int dir = 0;  // +1 / -1 along x; 0 on a boundary run
  int grid = -1;
  double arc = 0.0;
  int crossing = -1;  // junction between parts
};

struct Node {
  int cv = -1;
  RibbonSide side = RibbonSide::Boundary;
  int part = 0;
  Vec2 uv = Vec2::Zero();
  Vec3 pos = Vec3::Zero();
  int grid = -1;
  int crossing = -1;
};

// Plane coordinates of a polygon: chart coordinates, carried into the next
// part through the half-turn at each crossing, period copies chosen for
// continuity.
bool develop(const std::vector<int>& poly, const std::vector<Node>& cyc, const SpiralPlan& plan,
             const std::vector<double>& period, std::vector<Vec2>& F) {
  struct Map {
    double s = 1.0;
    Vec2 c = Vec2::Zero();
  };
  std::map<int, Map> maps;
  const int n = static_cast<int>(poly.size());
  F.assign(n, Vec2::Zero());
  auto place = [&](int part, const Vec2& uv, const Vec2* prev) {
    const Map& m = maps.at(part);
    Vec2 f = m.s * uv + m.c;
    if (prev) f.x() += std::round((prev->x() - f.x()) / period[part]) * period[part];
    return f;
  };
  for (int i = 0; i < n; ++i) {
    const Node& v = cyc[poly[i]];
    const Vec2* prev = i > 0 ? &F[i - 1] : nullptr;
    if (maps.empty()) maps[v.part] = Map{};
    if (v.crossing >= 0) {
      const Crossing& c = plan.crossings[v.crossing];
      if (maps.count(c.from)) {
        F[i] = place(c.from, c.uv_from, prev);
        if (!maps.count(c.to)) {
          const double s = -maps[c.from].s;
          maps[c.to] = Map{s, F[i] - s * c.uv_to};
        }
      } else if (maps.count(c.to)) {
        F[i] = place(c.to, c.uv_to, prev);
        const double s = -maps[c.to].s;
        maps[c.from] = Map{s, F[i] - s * c.uv_from};
      } else {
        return false;
      }
      continue;
    }
    if (!maps.count(v.part)) return false;
    F[i] = place(v.part, v.uv, prev);
  }
  return true;
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(b - a, c - a), d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c), d4 = cross2(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

bool simple_ccw(const std::vector<Vec2>& F) {
  const int n = static_cast<int>(F.size());
  double area = 0.0;
  for (int i = 0; i < n; ++i) area += cross2(F[i], F[(i + 1) % n]);
  if (!(area > 0.0)) return false;
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(F[i], F[(i + 1) % n], F[j], F[(j + 1) % n])) return false;
    }
  return true;
}

bool in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross2(b - a, p - a) >= 0 && cross2(c - b, p - b) >= 0 && cross2(a - c, p - c) >= 0;
}

// Triangle agrees with the source orientation and has no collapsed edge.
bool good_tri(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& ns, double tol) {
  if ((a - b).norm() < tol || (b - c).norm() < tol || (c - a).norm() < tol) return false;
  const Vec3 nr = (b - a).cross(c - a);
  return nr.dot(ns) > tol * tol * ns.norm();
}

// Minimum total 3D diagonal length over diagonals inside the plane polygon.
bool planar_min_weight(const std::vector<int>& poly, const std::vector<Vec2>& F, const std::vector<Vec3>& P,
                       const std::vector<Vec3>& N, std::vector<Tri>& out) {
  const int n = static_cast<int>(poly.size());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, (P[poly[i]] - P[poly[0]]).norm());
  const double tol = 1e-9 * scale, penalty = 1e3 * scale;
  auto inside = [&](int i, int j) {
    if (j - i == 1 || (i == 0 && j == n - 1)) return true;
    const Vec2 &a = F[i], &b = F[j];
    // in the interior angle at i
    const Vec2 &pv = F[(i + n - 1) % n], &nx = F[(i + 1) % n];
    const bool convex = cross2(a - pv, nx - a) > 0;
    const double s1 = cross2(nx - a, b - a), s2 = cross2(b - a, pv - a);
    if (convex ? !(s1 > 0 && s2 > 0) : !(s1 > 0 || s2 > 0)) return false;
    const double len2 = (b - a).squaredNorm();
    for (int k = 0; k < n; ++k) {
      const int k1 = (k + 1) % n;
      if (k != i && k != j) {
        // vertex on the diagonal
        const Vec2 d = F[k] - a;
        const double t = d.dot(b - a) / len2;
        if (t > 0 && t < 1 && std::abs(cross2(b - a, d)) <= 1e-12 * len2) return false;
      }
      if (k == i || k1 == i || k == j || k1 == j) continue;
      if (segments_cross(a, b, F[k], F[k1])) return false;
    }
    return true;
  };
  std::vector<char> ok(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) ok[i * n + j] = inside(i, j);
  auto w = [&](int i, int j) {
    if (j - i == 1 || (i == 0 && j == n - 1)) return 0.0;
    return (P[poly[i]] - P[poly[j]]).norm();
  };
  std::vector<double> cost(static_cast<size_t>(n) * n, kInf);
  std::vector<int> arg(static_cast<size_t>(n) * n, -1);
  for (int i = 0; i + 1 < n; ++i) cost[i * n + i + 1] = 0.0;
  for (int gap = 2; gap < n; ++gap)
    for (int i = 0; i + gap < n; ++i) {
      const int j = i + gap;
      if (!ok[i * n + j]) continue;
      double best = kInf;
      for (int k = i + 1; k < j; ++k) {
        if (!ok[i * n + k] || !ok[k * n + j]) continue;
        if (cross2(F[k] - F[i], F[j] - F[i]) <= 0) continue;
        const int a = poly[i], b = poly[k], e = poly[j];
        const double c = cost[i * n + k] + cost[k * n + j] + w(i, k) + w(k, j) +
                         (good_tri(P[a], P[b], P[e], N[a] + N[b] + N[e], tol) ? 0.0 : penalty);
        if (c < best) {
          best = c;
          arg[i * n + j] = k;
        }
      }
      cost[i * n + j] = best;
    }
  if (!(cost[n - 1] < kInf)) return false;
  std::vector<std::pair<int, int>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (j - i < 2) continue;
    const int k = arg[i * n + j];
    out.push_back({poly[i], poly[k], poly[j]});
    stack.push_back({i, k});
    stack.push_back({k, j});
  }
  return true;
}

// Ear clipping followed by Delaunay edge flips; false if clipping gets stuck.
bool planar_triangulation(const std::vector<int>& poly, const std::vector<Vec2>& F, std::vector<Tri>& out) {
  const int n = static_cast<int>(poly.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::array<int, 3>> tris;
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    int best = -1;
    double best_q = -kInf;
    for (int i = 0; i < m; ++i) {
      const int a = idx[(i + m - 1) % m], b = idx[i], c = idx[(i + 1) % m];
      const double ar = cross2(F[b] - F[a], F[c] - F[a]);
      if (ar <= 0) continue;
      bool empty = true;
      for (int k = 0; k < m && empty; ++k) {
        const int v = idx[k];
        if (v == a || v == b || v == c) continue;
        if (F[v] == F[a] || F[v] == F[b] || F[v] == F[c]) continue;
        if (in_triangle(F[v], F[a], F[b], F[c])) empty = false;
      }
      if (!empty) continue;
      const double q = ar / std::max({(F[b] - F[a]).squaredNorm(), (F[c] - F[b]).squaredNorm(), (F[a] - F[c]).squaredNorm()});
      if (q > best_q) {
        best_q = q;
        best = i;
      }
    }
    if (best < 0) return false;
    tris.push_back({idx[(best + m - 1) % m], idx[best], idx[(best + 1) % m]});
    idx.erase(idx.begin() + best);
  }
  if (cross2(F[idx[1]] - F[idx[0]], F[idx[2]] - F[idx[0]]) <= 0) return false;
  tris.push_back({idx[0], idx[1], idx[2]});

  // Lawson flips on interior diagonals
  auto is_side = [&](int a, int b) { return (b - a + n) % n == 1 || (a - b + n) % n == 1; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool flipped = false;
    std::map<std::pair<int, int>, std::pair<int, int>> edge;  // directed edge -> (triangle, corner opposite)
    for (int t = 0; t < static_cast<int>(tris.size()); ++t)
      for (int k = 0; k < 3; ++k) edge[{tris[t][k], tris[t][(k + 1) % 3]}] = {t, (k + 2) % 3};
    std::vector<char> touched(tris.size(), 0);
    for (const auto& [e, tk] : edge) {
      const auto [a, b] = e;
      if (a > b || is_side(a, b)) continue;
      auto it = edge.find({b, a});
      if (it == edge.end()) continue;
      const int t0 = tk.first, t1 = it->second.first;
      if (touched[t0] || touched[t1]) continue;
      const int c = tris[t0][tk.second], d = tris[t1][it->second.second];
      // d inside the circumcircle of a, b, c
      const Vec2 pa = F[a] - F[d], pb = F[b] - F[d], pc = F[c] - F[d];
      const double det = pa.squaredNorm() * cross2(pb, pc) - pb.squaredNorm() * cross2(pa, pc) +
                         pc.squaredNorm() * cross2(pa, pb);
      if (det <= 1e-12 * std::pow(std::max({pa.squaredNorm(), pb.squaredNorm(), pc.squaredNorm()}), 2)) continue;
      // the new diagonal c-d must leave two positive triangles
      if (cross2(F[d] - F[c], F[a] - F[c]) <= 0 || cross2(F[c] - F[d], F[b] - F[d]) <= 0) continue;
      tris[t0] = {c, a, d};
      tris[t1] = {d, b, c};
      touched[t0] = touched[t1] = 1;
      flipped = true;
    }
    if (!flipped) break;
  }
  for (const auto& t : tris) out.push_back({poly[t[0]], poly[t[1]], poly[t[2]]});
  return true;
}

// Minimum total edge length in 3D; triangles that fold or collapse are heavily penalized.
void min_weight(const std::vector<int>& poly, const std::vector<Vec3>& P, const std::vector<Vec3>& N,
                std::vector<Tri>& out) {
  const int n = static_cast<int>(poly.size());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, (P[poly[i]] - P[poly[0]]).norm());
  const double tol = 1e-9 * scale, penalty = 1e3 * scale;
  auto w = [&](int i, int j) {
    if (j - i == 1 || (i == 0 && j == n - 1)) return 0.0;
    return (P[poly[i]] - P[poly[j]]).norm();
  };
  auto bad = [&](int i, int k, int j) {
    const int a = poly[i], b = poly[k], c = poly[j];
    return good_tri(P[a], P[b], P[c], N[a] + N[b] + N[c], tol) ? 0.0 : penalty;
  };
  std::vector<double> cost(static_cast<size_t>(n) * n, 0.0);
  std::vector<int> arg(static_cast<size_t>(n) * n, -1);
  for (int gap = 2; gap < n; ++gap)
    for (int i = 0; i + gap < n; ++i) {
      const int j = i + gap;
      double best = kInf;
      for (int k = i + 1; k < j; ++k) {
        const double c = cost[i * n + k] + cost[k * n + j] + w(i, k) + w(k, j) + bad(i, k, j);
        if (c < best) {
          best = c;
          arg[i * n + j] = k;
        }
      }
      cost[i * n + j] = best;
    }
  std::vector<std::pair<int, int>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (j - i < 2) continue;
    const int k = arg[i * n + j];
    out.push_back({poly[i], poly[k], poly[j]});
    stack.push_back({i, k});
    stack.push_back({k, j});
  }
}

void greedy_ears(std::vector<int> p, const std::vector<Vec3>& P, const std::vector<Vec3>& N, std::vector<Tri>& out) {
  double scale = 0.0;
  for (int v : p) scale = std::max(scale, (P[v] - P[p[0]]).norm());
  const double tol = 1e-9 * scale;
  while (p.size() > 3) {
    const int n = static_cast<int>(p.size());
    int best = 0;
    double bl = kInf;
    for (int i = 0; i < n; ++i) {
      const int a = p[(i + n - 1) % n], b = p[i], c = p[(i + 1) % n];
      double len = (P[a] - P[c]).norm();
      if (!good_tri(P[a], P[b], P[c], N[a] + N[b] + N[c], tol)) len += 1e3 * scale;
      if (len < bl) {
        bl = len;
        best = i;
      }
    }
    out.push_back({p[(best + n - 1) % n], p[best], p[(best + 1) % n]});
    p.erase(p.begin() + best);
  }
  out.push_back({p[0], p[1], p[2]});
}

}  // namespace

Ribbon remesh_rulings(const CurveStrip& strip, const SpiralPlan& plan, const Decomposition& d, const ChartCut& cut,
                      const Charts& charts, const RibbonConfig& cfg) {
  const int np = static_cast<int>(d.parts.size());
  const ChartLocator loc(d, cut, charts);
  const auto& lines = plan.lines;

  std::vector<Frame> fr(np);
  std::vector<int> lines_in_part(np, 0);
  for (const ParamLine& ln : lines)
    if (ln.index > 0) ++lines_in_part[ln.part];
  for (int p = 0; p < np; ++p) {
    const PartChart& pc = cut.charts[p];
    Frame& f = fr[p];
    f.x0 = charts.X[2 * pc.seam_right.front()];
    f.y_bot = charts.X[2 * pc.seam_right.front() + 1];
    f.y_top = charts.X[2 * pc.seam_right.back() + 1];
    f.l = charts.period[p];
    if (cfg.samples_per_period > 0) {
      f.n = cfg.samples_per_period;
    } else {
      const double width = charts.height[p] / (plan.windings[p] * std::max(1, lines_in_part[p]));
      const double winding = std::hypot(f.l, width);
      f.n = std::clamp(static_cast<int>(std::ceil(winding / (0.25 * width))), 8, 4096);
    }
    // keep grid abscissae away from line endpoints
    std::vector<double> special;
    for (const ParamLine& ln : lines)
      if (ln.part == p)
        for (double x : {ln.a.x(), ln.b.x()}) special.push_back((x - f.x0) / f.step());
    double best = -1.0;
    for (int k = 0; k < 64; ++k) {
      const double phi = (k + 0.5) / 64.0;
      double dmin = 1.0;
      for (double s : special) {
        const double r = s - phi - std::floor(s - phi);
        dmin = std::min(dmin, std::min(r, 1.0 - r));
      }
      if (dmin > best + 1e-12) {
        best = dmin;
        f.phase = phi;
      }
    }
  }

  // curve vertices: line endpoints and grid abscissae
  std::vector<CurveVertex> cvs;
  std::vector<std::vector<int>> line_cv(lines.size());
  size_t next_crossing = 0;
  for (size_t i = 0; i < lines.size(); ++i) {
    const ParamLine& ln = lines[i];
    const Frame& f = fr[ln.part];
    const double dx = ln.b.x() - ln.a.x();
    const int dir = dx > 0 ? 1 : -1;
    std::vector<double> xs = grid_between(f, std::min(ln.a.x(), ln.b.x()), std::max(ln.a.x(), ln.b.x()));
    if (dir < 0) std::reverse(xs.begin(), xs.end());
    std::vector<Vec2> uvs{ln.a};
    for (double x : xs) uvs.push_back(Vec2(x, ln.a.y() + (x - ln.a.x()) / dx * (ln.b.y() - ln.a.y())));
    uvs.push_back(ln.b);
    for (size_t j = 0; j < uvs.size(); ++j) {
      if (j == 0 && i > 0) {
        line_cv[i].push_back(static_cast<int>(cvs.size()) - 1);
        continue;
      }
      CurveVertex c;
      c.part = ln.part;
      c.uv = uvs[j];
      c.line = static_cast<int>(i);
      c.dir = ln.index == 0 ? 0 : dir;
      const bool last = j + 1 == uvs.size();
      if (j > 0 && !last) c.grid = grid_index(f, uvs[j].x());
      if (last && i + 1 < lines.size() && lines[i + 1].part != ln.part)
      {
        c.crossing = static_cast<int>(next_crossing);
        c.pos = plan.crossings.at(next_crossing++).position;
      }
      else
        c.pos = loc.lift(ln.part, uvs[j]);
      line_cv[i].push_back(static_cast<int>(cvs.size()));
      cvs.push_back(c);
    }
  }
  cvs.front().pos = strip.points.front();
  cvs.back().pos = strip.points.back();
  for (size_t c = 1; c < cvs.size(); ++c) cvs[c].arc = cvs[c - 1].arc + (cvs[c].pos - cvs[c - 1].pos).norm();

  auto loop_points = [&](int p, double y, double lo, double hi, bool ascending) {
    std::vector<Node> out;
    std::vector<double> xs = grid_between(fr[p], lo, hi);
    if (!ascending) std::reverse(xs.begin(), xs.end());
    for (double x : xs) {
      Node n;
      n.part = p;
      n.uv = Vec2(x, y);
      n.pos = loc.lift(p, n.uv);
      n.grid = grid_index(fr[p], x);
      out.push_back(n);
    }
    return out;
  };
  auto cv_node = [&](int c, RibbonSide side) {
    Node n;
    n.cv = c;
    n.side = side;
    n.part = cvs[c].part;
    n.uv = cvs[c].uv;
    n.pos = cvs[c].pos;
    n.grid = cvs[c].grid;
    n.crossing = cvs[c].crossing;
    return n;
  };

  std::vector<Node> cyc;
  const int nl = static_cast<int>(lines.size());
  // left side forward
  for (int i = 0; i < nl; ++i) {
    const auto& ids = line_cv[i];
    const ParamLine& ln = lines[i];
    if (ln.index == 0 && ln.b.x() < ln.a.x()) {
      for (Node& n : loop_points(ln.part, fr[ln.part].y_bot, ln.a.x(), ln.b.x() + fr[ln.part].l, true))
        cyc.push_back(n);
      cyc.push_back(cv_node(ids.back(), RibbonSide::Left));
      continue;
    }
    for (size_t j = i > 0 ? 1 : 0; j < ids.size(); ++j) {
      const bool inner = ln.index == 0 && j + 1 < ids.size();
      cyc.push_back(cv_node(ids[j], inner ? RibbonSide::Boundary : RibbonSide::Left));
    }
  }
  // end loop
  {
    const CurveVertex& e = cvs.back();
    const Frame& f = fr[e.part];
    const bool top = std::abs(e.uv.y() - f.y_top) < std::abs(e.uv.y() - f.y_bot);
    for (Node& n : top ? loop_points(e.part, f.y_top, e.uv.x() - f.l, e.uv.x(), false)
                       : loop_points(e.part, f.y_bot, e.uv.x(), e.uv.x() + f.l, true))
      cyc.push_back(n);
  }
  // right side backward
  for (int i = nl - 1; i >= 0; --i) {
    std::vector<int> ids(line_cv[i].rbegin(), line_cv[i].rend());
    const ParamLine& ln = lines[i];
    if (ln.index == 0 && ln.b.x() > ln.a.x()) {
      for (Node& n : loop_points(ln.part, fr[ln.part].y_bot, ln.b.x(), ln.a.x() + fr[ln.part].l, true))
        cyc.push_back(n);
      cyc.push_back(cv_node(ids.back(), RibbonSide::Right));
      continue;
    }
    for (size_t j = i < nl - 1 ? 1 : 0; j < ids.size(); ++j) {
      const bool inner = ln.index == 0 && j + 1 < ids.size();
      cyc.push_back(cv_node(ids[j], inner ? RibbonSide::Boundary : RibbonSide::Right));
    }
  }
  // start loop
  {
    const CurveVertex& s = cvs.front();
    for (Node& n : loop_points(s.part, fr[s.part].y_bot, s.uv.x(), s.uv.x() + fr[s.part].l, true)) cyc.push_back(n);
  }

  const int n = static_cast<int>(cyc.size());
  std::vector<int> lpos(cvs.size(), -1), rpos(cvs.size(), -1);
  for (int i = 0; i < n; ++i) {
    if (cyc[i].cv < 0) continue;
    if (cyc[i].side != RibbonSide::Right) lpos[cyc[i].cv] = i;
    if (cyc[i].side != RibbonSide::Left) rpos[cyc[i].cv] = i;
  }

  // rulings: consecutive levels at equal grid abscissa
  struct Level {
    double y;
    int lower, upper;
  };
  std::map<std::pair<int, int>, std::vector<Level>> levels;
  for (size_t c = 0; c < cvs.size(); ++c) {
    const CurveVertex& v = cvs[c];
    if (v.grid < 0 || v.dir == 0) continue;
    const int up = v.dir > 0 ? lpos[c] : rpos[c], lo = v.dir > 0 ? rpos[c] : lpos[c];
    levels[{v.part, v.grid}].push_back({v.uv.y(), lo, up});
  }
  for (int i = 0; i < n; ++i)
    if (cyc[i].grid >= 0 && (cyc[i].cv < 0 || cyc[i].side == RibbonSide::Boundary))
      levels[{cyc[i].part, cyc[i].grid}].push_back({cyc[i].uv.y(), i, i});
  std::vector<std::array<int, 2>> chords;
  for (auto& [k, lv] : levels) {
    std::sort(lv.begin(), lv.end(), [](const Level& a, const Level& b) { return a.y < b.y; });
    const double tiny = 1e-9 * std::max(1.0, charts.height[k.first]);
    for (size_t j = 0; j + 1 < lv.size(); ++j)
      if (lv[j + 1].y - lv[j].y > tiny) chords.push_back({lv[j].upper, lv[j + 1].lower});
  }

  // split the cycle along the chords
  std::vector<std::vector<int>> closing(n);
  Ribbon rb;
  for (const auto& c : chords) {
    const int i = std::min(c[0], c[1]), j = std::max(c[0], c[1]);
    if (j - i < 2 || (i == 0 && j == n - 1)) continue;
    closing[j].push_back(i);
    rb.rulings.push_back({c[0], c[1]});
  }
  std::vector<std::vector<int>> regions;
  std::vector<int> st;
  for (int i = 0; i < n; ++i) {
    st.push_back(i);
    auto& cl = closing[i];
    std::sort(cl.begin(), cl.end(), std::greater<int>());
    for (int j : cl) {
      std::vector<int> region{i};
      st.pop_back();
      while (!st.empty() && st.back() != j) {
        region.push_back(st.back());
        st.pop_back();
      }
      if (st.empty()) {
        const Node& a = cyc[i];
        throw Error("ruling_crosses_boundary", "ruling at part " + std::to_string(a.part) + " x = " +
                                                   format_double(a.uv.x()) + " crosses another ruling or the boundary");
      }
      region.push_back(j);
      std::reverse(region.begin(), region.end());
      regions.push_back(std::move(region));
      st.push_back(i);
    }
  }
  regions.push_back(st);

  std::vector<Vec3> P(n);
  for (int i = 0; i < n; ++i) P[i] = cyc[i].pos;
  std::vector<Tri> faces;
  std::vector<Vec3> src_normal(n);
  for (int i = 0; i < n; ++i) src_normal[i] = d.mesh.face_normal(loc.locate(cyc[i].part, cyc[i].uv).face);
  std::vector<double> periods(charts.period.begin(), charts.period.end());
  for (const auto& r : regions) {
    if (r.size() < 3) continue;
    std::vector<Vec2> F;
    if (develop(r, cyc, plan, periods, F) && simple_ccw(F)) {
      if (static_cast<int>(r.size()) <= cfg.exact_polygon_limit ? planar_min_weight(r, F, P, src_normal, faces)
                                                                 : planar_triangulation(r, F, faces))
        continue;
    }
    if (static_cast<int>(r.size()) <= cfg.exact_polygon_limit)
      min_weight(r, P, src_normal, faces);
    else
      greedy_ears(r, P, src_normal, faces);
  }

  rb.mesh = SurfaceMesh(P, faces, SurfaceMesh::Options{false});
  rb.cycle.resize(n);
  std::iota(rb.cycle.begin(), rb.cycle.end(), 0);
  for (const Node& v : cyc) {
    rb.side.push_back(v.side);
    rb.part.push_back(v.part);
    rb.arc.push_back(v.cv >= 0 ? cvs[v.cv].arc : -1.0);
  }
  for (size_t c = 0; c + 1 < cvs.size(); ++c) {
    if (lines[cvs[c + 1].line].index == 0) continue;
    const int h = rb.mesh.find_halfedge(lpos[c], lpos[c + 1]);
    const int g = rb.mesh.find_halfedge(rpos[c + 1], rpos[c]);
    if (h < 0 || g < 0) throw Error("ruling_crosses_boundary", "zipper edge " + std::to_string(c) + " is missing from the ribbon");
    rb.pairs.push_back({h, g});
  }
  rb.zip_start = lpos.front();
  rb.zip_end = lpos.back();
  for (int p = 0; p < np; ++p) rb.samples_per_period.push_back(fr[p].n);

  // faces against the source orientation
  for (int f = 0; f < rb.mesh.num_faces(); ++f) {
    const Tri& t = rb.mesh.face(f);
    const Vec3 nr = (P[t[1]] - P[t[0]]).cross(P[t[2]] - P[t[0]]);
    const Vec3 ns = src_normal[t[0]] + src_normal[t[1]] + src_normal[t[2]];
    if (nr.dot(ns) < 0.0) rb.folded.push_back(f);
  }
  return rb;
}

DevelopableReport check_developable(const SurfaceMesh& m) {
  DevelopableReport r;
  for (int v = 0; v < m.num_vertices(); ++v)
    if (!m.is_boundary_vertex(v)) r.interior_vertices.push_back(v);
  r.euler = m.euler_characteristic();
  r.boundary_loops = static_cast<int>(boundary_loops(m).size());
  r.components = count_components(m);
  r.ok = r.interior_vertices.empty() && r.euler == 1 && r.boundary_loops == 1 && r.components == 1;
  if (!r.interior_vertices.empty()) {
    r.message = std::to_string(r.interior_vertices.size()) + " interior vertices:";
    for (size_t i = 0; i < r.interior_vertices.size() && i < 20; ++i) r.message += " " + std::to_string(r.interior_vertices[i]);
  } else if (!r.ok) {
    r.message = "not a disk: " + std::to_string(r.components) + " components, " + std::to_string(r.boundary_loops) +
                " boundary loops, Euler characteristic " + std::to_string(r.euler);
  }
  return r;
}

json to_json(const DevelopableReport& r) {
  return json{{"ok", r.ok},
              {"interior_vertices", r.interior_vertices},
              {"euler", r.euler},
              {"boundary_loops", r.boundary_loops},
              {"components", r.components},
              {"message", r.message}};
}

namespace {
const char* side_name(RibbonSide s) {
  switch (s) {
    case RibbonSide::Left: return "left";
    case RibbonSide::Right: return "right";
    default: return "boundary";
  }
}
}  // namespace

json ribbon_to_json(const Ribbon& rb) {
  json sides = json::array();
  for (RibbonSide s : rb.side) sides.push_back(side_name(s));
  json arc = json::array();
  for (double a : rb.arc) arc.push_back(a);
  return json{{"vertices", rb.mesh.num_vertices()},
              {"faces", rb.mesh.num_faces()},
              {"cycle", rb.cycle},
              {"side", sides},
              {"part", rb.part},
              {"arc", arc},
              {"pairs", rb.pairs},
              {"rulings", rb.rulings},
              {"zip_start", rb.zip_start},
              {"zip_end", rb.zip_end},
              {"folded", rb.folded},
              {"samples_per_period", rb.samples_per_period}};
}

Ribbon ribbon_from_json(const json& j, SurfaceMesh mesh) {
  Ribbon rb;
  if (j.at("vertices").get<int>() != mesh.num_vertices() || j.at("faces").get<int>() != mesh.num_faces())
    throw Error("stale_artifact", "ribbon metadata does not match the ribbon mesh");
  rb.mesh = std::move(mesh);
  rb.cycle = j.at("cycle").get<std::vector<int>>();
  for (const auto& s : j.at("side")) {
    const std::string v = s.get<std::string>();
    rb.side.push_back(v == "left" ? RibbonSide::Left : v == "right" ? RibbonSide::Right : RibbonSide::Boundary);
  }
  rb.part = j.at("part").get<std::vector<int>>();
  for (const auto& a : j.at("arc")) rb.arc.push_back(a.get<double>());
  rb.pairs = j.at("pairs").get<std::vector<std::array<int, 2>>>();
  rb.rulings = j.at("rulings").get<std::vector<std::array<int, 2>>>();
  rb.zip_start = j.at("zip_start").get<int>();
  rb.zip_end = j.at("zip_end").get<int>();
  rb.folded = j.at("folded").get<std::vector<int>>();
  rb.samples_per_period = j.at("samples_per_period").get<std::vector<int>>();
  return rb;
}

}  // namespace zipr
