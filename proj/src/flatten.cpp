#include "zipr/ribbon.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

namespace zipr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + d1 / (d1 - d3) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + d2 / (d2 - d6) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && d4 - d3 >= 0 && d5 - d6 >= 0) return b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b);
  const double den = 1.0 / (va + vb + vc);
  return a + ab * (vb * den) + ac * (vc * den);
}

double tri_area(const Vec2& a, const Vec2& b, const Vec2& c) { return 0.5 * cross2(b - a, c - a); }

std::vector<Vec2> clip(const std::vector<Vec2>& poly, const Vec2& a, const Vec2& b) {
  std::vector<Vec2> out;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double sp = cross2(b - a, p - a), sq = cross2(b - a, q - a);
    if (sp >= 0) out.push_back(p);
    if ((sp >= 0) != (sq >= 0)) out.push_back(p + sp / (sp - sq) * (q - p));
  }
  return out;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  std::vector<Vec2> h(2 * pts.size());
  size_t k = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

struct Fit {
  bool ok = false;
  double angle = 0.0, width = 0.0, height = 0.0;
};

// Orientation from the hull edges with the smallest box that fits w x h in
// either orientation.
Fit fit_box(const std::vector<Vec2>& hull, double w, double h) {
  Fit best;
  double best_area = kInf;
  const size_t n = hull.size();
  for (size_t i = 0; i < std::max<size_t>(n, 1); ++i) {
    double ang = 0.0;
    if (n >= 2) {
      const Vec2 e = hull[(i + 1) % n] - hull[i];
      ang = -std::atan2(e.y(), e.x());
    }
    const double c = std::cos(ang), s = std::sin(ang);
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (const Vec2& p : hull) {
      const double x = c * p.x() - s * p.y(), y = s * p.x() + c * p.y();
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    double bw = x1 - x0, bh = y1 - y0;
    if (bh > bw) {
      std::swap(bw, bh);
      ang += 0.5 * M_PI;
    }
    const bool fits = bw <= std::max(w, h) && bh <= std::min(w, h);
    if (fits && bw * bh < best_area) {
      best_area = bw * bh;
      best = {true, ang, bw, bh};
    }
  }
  return best;
}

struct FaceGrid {
  double cell = 1.0;
  std::unordered_map<long long, std::vector<int>> cells;

  static long long key(long long i, long long j) { return (i << 32) ^ (j & 0xffffffffLL); }
  template <class F>
  void visit(const Vec2& lo, const Vec2& hi, F&& f) const {
    for (long long i = std::floor(lo.x() / cell); i <= std::floor(hi.x() / cell); ++i)
      for (long long j = std::floor(lo.y() / cell); j <= std::floor(hi.y() / cell); ++j) f(key(i, j));
  }
};

bool share_edge(const Tri& a, const Tri& b) {
  int common = 0;
  for (int x : a)
    for (int y : b) common += x == y;
  return common >= 2;
}

bool overlaps(const std::vector<Vec2>& P, const Tri& a, const Tri& b) {
  const double area = triangle_overlap_area(P[a[0]], P[a[1]], P[a[2]], P[b[0]], P[b[1]], P[b[2]]);
  const double ref = std::min(std::abs(tri_area(P[a[0]], P[a[1]], P[a[2]])), std::abs(tri_area(P[b[0]], P[b[1]], P[b[2]])));
  return area > 1e-9 * ref && area > 0.0;
}

}  // namespace

Deviation surface_deviation(const SurfaceMesh& ribbon, const SurfaceMesh& source, int k) {
  FaceGrid grid;
  grid.cell = std::max(2.0 * source.mean_edge_length(), 1e-12);
  for (int f = 0; f < source.num_faces(); ++f) {
    const Tri& t = source.face(f);
    Vec3 lo = source.position(t[0]).cwiseMin(source.position(t[1])).cwiseMin(source.position(t[2]));
    Vec3 hi = source.position(t[0]).cwiseMax(source.position(t[1])).cwiseMax(source.position(t[2]));
    for (long long i = std::floor(lo.x() / grid.cell); i <= std::floor(hi.x() / grid.cell); ++i)
      for (long long j = std::floor(lo.y() / grid.cell); j <= std::floor(hi.y() / grid.cell); ++j)
        for (long long l = std::floor(lo.z() / grid.cell); l <= std::floor(hi.z() / grid.cell); ++l)
          grid.cells[(i * 73856093LL) ^ (j * 19349663LL) ^ (l * 83492791LL)].push_back(f);
  }
  const double diag = source.bounding_box_diagonal();
  auto distance = [&](const Vec3& p) {
    double best = kInf;
    std::set<int> seen;
    for (int r = 1;; ++r) {
      const long long ci = std::floor(p.x() / grid.cell), cj = std::floor(p.y() / grid.cell),
                      cl = std::floor(p.z() / grid.cell);
      for (long long i = ci - r; i <= ci + r; ++i)
        for (long long j = cj - r; j <= cj + r; ++j)
          for (long long l = cl - r; l <= cl + r; ++l) {
            auto it = grid.cells.find((i * 73856093LL) ^ (j * 19349663LL) ^ (l * 83492791LL));
            if (it == grid.cells.end()) continue;
            for (int f : it->second) {
              if (!seen.insert(f).second) continue;
              const Tri& t = source.face(f);
              const Vec3 q = closest_on_triangle(p, source.position(t[0]), source.position(t[1]), source.position(t[2]));
              best = std::min(best, (q - p).norm());
            }
          }
      if (best <= r * grid.cell || r * grid.cell > 2.0 * diag) return best;
    }
  };
  Deviation dv;
  double sum = 0.0;
  for (int f = 0; f < ribbon.num_faces(); ++f) {
    const Tri& t = ribbon.face(f);
    for (int i = 0; i <= k; ++i)
      for (int j = 0; i + j <= k; ++j) {
        const double a = double(i) / k, b = double(j) / k;
        const Vec3 p = (1 - a - b) * ribbon.position(t[0]) + a * ribbon.position(t[1]) + b * ribbon.position(t[2]);
        const double d = distance(p);
        dv.max = std::max(dv.max, d);
        sum += d;
        ++dv.samples;
      }
  }
  dv.mean = dv.samples ? sum / dv.samples : 0.0;
  return dv;
}

FlatRibbon unfold(const Ribbon& ribbon) { return unfold(ribbon.mesh, ribbon.zip_start); }

FlatRibbon unfold(const SurfaceMesh& m, int root_vertex) {
  const DevelopableReport r = check_developable(m);
  if (!r.ok) throw Error("not_developable", r.message);
  FlatRibbon fl;
  fl.faces = m.faces();
  const int nf = m.num_faces();
  fl.positions.assign(m.num_vertices(), Vec2::Zero());
  fl.parent.assign(nf, -1);
  if (nf == 0) return fl;
  std::vector<char> placed(m.num_vertices(), 0), done(nf, 0);
  int root = 0;
  if (root_vertex >= 0) {
    auto fs = m.vertex_faces(root_vertex);
    root = *std::min_element(fs.begin(), fs.end());
  }
  auto place_third = [&](int h) {
    // corners a->b of halfedge h are placed; put the opposite corner on the left
    const int a = m.tail(h), b = m.tip(h), w = m.tip(m.next(h));
    if (placed[w]) return;
    const Vec3 e = m.position(b) - m.position(a);
    const Vec3 ex = e.normalized();
    const Vec3 aw = m.position(w) - m.position(a);
    const double along = aw.dot(ex), perp = (aw - along * ex).norm();
    const Vec2 d = (fl.positions[b] - fl.positions[a]).normalized();
    fl.positions[w] = fl.positions[a] + along * d + perp * Vec2(-d.y(), d.x());
    placed[w] = 1;
  };
  {
    const Tri& t = m.face(root);
    fl.positions[t[0]] = Vec2::Zero();
    fl.positions[t[1]] = Vec2(m.halfedge_length(3 * root), 0.0);
    placed[t[0]] = placed[t[1]] = 1;
    place_third(3 * root);
  }
  std::deque<int> queue{root};
  done[root] = 1;
  while (!queue.empty()) {
    const int f = queue.front();
    queue.pop_front();
    fl.order.push_back(f);
    std::vector<std::pair<int, int>> nb;
    for (int k = 0; k < 3; ++k) {
      const int t = m.twin(3 * f + k);
      if (t >= 0 && !done[t / 3]) nb.push_back({t / 3, t});
    }
    std::sort(nb.begin(), nb.end());
    for (const auto& [g, h] : nb) {
      if (done[g]) continue;
      done[g] = 1;
      fl.parent[g] = f;
      place_third(h);
      queue.push_back(g);
    }
  }
  return fl;
}

double triangle_overlap_area(const Vec2& a0, const Vec2& a1, const Vec2& a2, const Vec2& b0, const Vec2& b1,
                             const Vec2& b2) {
  std::vector<Vec2> p{a0, a1, a2};
  if (tri_area(a0, a1, a2) < 0) std::swap(p[1], p[2]);
  std::array<Vec2, 3> q{b0, b1, b2};
  if (tri_area(b0, b1, b2) < 0) std::swap(q[1], q[2]);
  for (int k = 0; k < 3 && !p.empty(); ++k) p = clip(p, q[k], q[(k + 1) % 3]);
  double area = 0.0;
  for (size_t i = 1; i + 1 < p.size(); ++i) area += tri_area(p[0], p[i], p[i + 1]);
  return std::max(0.0, area);
}

std::vector<std::array<int, 2>> detect_overlaps(const std::vector<Vec2>& P, const std::vector<Tri>& faces,
                                                const std::vector<int>& subset) {
  std::vector<int> fs = subset;
  if (fs.empty())
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) fs.push_back(f);
  double mean = 0.0;
  for (int f : fs)
    for (int k = 0; k < 3; ++k) mean += (P[faces[f][k]] - P[faces[f][(k + 1) % 3]]).norm();
  FaceGrid grid;
  grid.cell = std::max(2.0 * mean / std::max<size_t>(1, 3 * fs.size()), 1e-12);
  std::set<std::array<int, 2>> out;
  for (int f : fs) {
    const Tri& t = faces[f];
    const Vec2 lo = P[t[0]].cwiseMin(P[t[1]]).cwiseMin(P[t[2]]);
    const Vec2 hi = P[t[0]].cwiseMax(P[t[1]]).cwiseMax(P[t[2]]);
    std::set<int> cand;
    grid.visit(lo, hi, [&](long long k) {
      auto it = grid.cells.find(k);
      if (it != grid.cells.end()) cand.insert(it->second.begin(), it->second.end());
    });
    for (int g : cand)
      if (!share_edge(t, faces[g]) && overlaps(P, t, faces[g])) out.insert({std::min(f, g), std::max(f, g)});
    grid.visit(lo, hi, [&](long long k) { grid.cells[k].push_back(f); });
  }
  return {out.begin(), out.end()};
}

SplitResult split_ribbon(const Ribbon& rb, const FlatRibbon& fl, const SplitPolicy& pol) {
  const SurfaceMesh& m = rb.mesh;
  const int nf = m.num_faces();
  const double W = pol.bed_width - 2.0 * pol.spacing, H = pol.bed_height - 2.0 * pol.spacing;
  if (W <= 0 || H <= 0) throw Error("bad_bed", "bed is smaller than twice the spacing");
  std::set<std::pair<int, int>> ruling;
  for (const auto& r : rb.rulings) ruling.insert({std::min(r[0], r[1]), std::max(r[0], r[1])});
  auto is_ruling = [&](int h) {
    const int a = m.tail(h), b = m.tip(h);
    return ruling.count({std::min(a, b), std::max(a, b)}) > 0;
  };

  // atoms: face groups between rulings
  std::vector<int> atom(nf, -1);
  std::vector<std::vector<int>> atoms;
  for (int s = 0; s < nf; ++s) {
    if (atom[s] >= 0) continue;
    const int id = static_cast<int>(atoms.size());
    atoms.push_back({});
    std::vector<int> stack{s};
    atom[s] = id;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      atoms[id].push_back(f);
      for (int k = 0; k < 3; ++k) {
        const int t = m.twin(3 * f + k);
        if (t >= 0 && atom[t / 3] < 0 && !is_ruling(3 * f + k)) {
          atom[t / 3] = id;
          stack.push_back(t / 3);
        }
      }
    }
    std::sort(atoms[id].begin(), atoms[id].end());
  }

  auto points_of = [&](const std::vector<int>& faces) {
    std::vector<Vec2> pts;
    for (int f : faces)
      for (int v : m.face(f)) pts.push_back(fl.positions[v]);
    return pts;
  };
  double mean = 0.0;
  for (int f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) mean += (fl.positions[m.tail(3 * f + k)] - fl.positions[m.tip(3 * f + k)]).norm();
  const double cell = std::max(2.0 * mean / std::max(1, 3 * nf), 1e-12);

  struct Open {
    std::vector<int> faces;
    std::vector<Vec2> hull;
    FaceGrid grid;
  };
  std::vector<Open> open;
  std::vector<int> atom_piece(atoms.size(), -1);
  SplitResult res;

  int root = 0;
  if (rb.zip_start >= 0 && nf > 0) {
    auto fs = m.vertex_faces(rb.zip_start);
    root = atom[*std::min_element(fs.begin(), fs.end())];
  }
  auto add_faces = [&](Open& o, const std::vector<int>& faces) {
    for (int f : faces) {
      const Tri& t = m.face(f);
      const Vec2 lo = fl.positions[t[0]].cwiseMin(fl.positions[t[1]]).cwiseMin(fl.positions[t[2]]);
      const Vec2 hi = fl.positions[t[0]].cwiseMax(fl.positions[t[1]]).cwiseMax(fl.positions[t[2]]);
      o.grid.visit(lo, hi, [&](long long k) { o.grid.cells[k].push_back(f); });
      o.faces.push_back(f);
    }
  };
  auto conflicts = [&](const Open& o, const std::vector<int>& faces) {
    for (int f : faces) {
      const Tri& t = m.face(f);
      const Vec2 lo = fl.positions[t[0]].cwiseMin(fl.positions[t[1]]).cwiseMin(fl.positions[t[2]]);
      const Vec2 hi = fl.positions[t[0]].cwiseMax(fl.positions[t[1]]).cwiseMax(fl.positions[t[2]]);
      bool hit = false;
      o.grid.visit(lo, hi, [&](long long k) {
        if (hit) return;
        auto it = o.grid.cells.find(k);
        if (it == o.grid.cells.end()) return;
        for (int g : it->second)
          if (!share_edge(t, m.face(g)) && overlaps(fl.positions, t, m.face(g))) {
            hit = true;
            return;
          }
      });
      if (hit) return true;
    }
    return false;
  };
  auto new_piece = [&](int a) {
    const auto pts = points_of(atoms[a]);
    const std::vector<Vec2> hull = convex_hull(pts);
    if (!fit_box(hull, W, H).ok)
      throw Error("piece_too_large", "faces " + std::to_string(atoms[a].front()) + ".. between two rulings do not fit the " +
                                         std::to_string(pol.bed_width) + " x " + std::to_string(pol.bed_height) + " bed");
    Open o;
    o.grid.cell = cell;
    o.hull = hull;
    add_faces(o, atoms[a]);
    open.push_back(std::move(o));
    return static_cast<int>(open.size()) - 1;
  };

  // depth-first over the atom tree
  if (nf > 0) {
    atom_piece[root] = new_piece(root);
    std::vector<int> stack{root};
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      std::vector<std::pair<int, int>> children;  // (atom, halfedge in a)
      for (int f : atoms[a])
        for (int k = 0; k < 3; ++k) {
          const int t = m.twin(3 * f + k);
          if (t >= 0 && atom_piece[atom[t / 3]] < 0 && atom[t / 3] != a) children.push_back({atom[t / 3], 3 * f + k});
        }
      std::sort(children.begin(), children.end());
      children.erase(std::unique(children.begin(), children.end(),
                                 [](const auto& x, const auto& y) { return x.first == y.first; }),
                     children.end());
      for (auto it = children.rbegin(); it != children.rend(); ++it) {
        const auto [c, h] = *it;
        const int pa = atom_piece[a];
        Open& o = open[pa];
        std::vector<Vec2> pts = o.hull;
        for (const Vec2& p : points_of(atoms[c])) pts.push_back(p);
        std::vector<Vec2> hull = convex_hull(pts);
        const bool fits = fit_box(hull, W, H).ok && !(pol.resolve_overlaps && conflicts(o, atoms[c]));
        if (fits) {
          o.hull = std::move(hull);
          add_faces(o, atoms[c]);
          atom_piece[c] = pa;
        } else {
          atom_piece[c] = new_piece(c);
          SewPair sp;
          sp.a = m.tail(h);
          sp.b = m.tip(h);
          sp.piece_a = pa;
          sp.piece_b = atom_piece[c];
          sp.length = (fl.positions[sp.a] - fl.positions[sp.b]).norm();
          sp.label = static_cast<int>(res.sew.size()) + 1;
          res.sew.push_back(sp);
        }
        stack.push_back(c);
      }
    }
  }

  for (Open& o : open) {
    Piece pc;
    pc.faces = o.faces;
    std::sort(pc.faces.begin(), pc.faces.end());
    std::set<int> vs;
    for (int f : pc.faces)
      for (int v : m.face(f)) vs.insert(v);
    pc.vertices.assign(vs.begin(), vs.end());
    const Fit fit = fit_box(o.hull, W, H);
    pc.angle = fit.angle;
    const double c = std::cos(fit.angle), s = std::sin(fit.angle);
    Vec2 lo(kInf, kInf);
    for (int v : pc.vertices) {
      const Vec2& p = fl.positions[v];
      pc.positions.push_back(Vec2(c * p.x() - s * p.y(), s * p.x() + c * p.y()));
      lo = lo.cwiseMin(pc.positions.back());
    }
    Vec2 hi(-kInf, -kInf);
    for (Vec2& p : pc.positions) {
      p -= lo;
      hi = hi.cwiseMax(p);
    }
    pc.width = hi.x();
    pc.height = hi.y();
    for (int f : pc.faces) {
      const Tri& t = m.face(f);
      pc.area += tri_area(fl.positions[t[0]], fl.positions[t[1]], fl.positions[t[2]]);
    }
    res.pieces.push_back(std::move(pc));
  }
  return res;
}

}  // namespace zipr
