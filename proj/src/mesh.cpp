#include "zipr/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace zipr {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;
  }
};

std::string edge_name(int a, int b) {
  std::ostringstream os;
  os << "(" << std::min(a, b) << ", " << std::max(a, b) << ")";
  return os.str();
}

}  // namespace

SurfaceMesh::SurfaceMesh(std::vector<Vec3> positions, std::vector<Tri> faces)
    : SurfaceMesh(std::move(positions), std::move(faces), Options{}) {}

SurfaceMesh::SurfaceMesh(std::vector<Vec3> positions, std::vector<Tri> faces, Options opts)
    : positions_(std::move(positions)), faces_(std::move(faces)) {
  build(opts);
}

void SurfaceMesh::build(Options opts) {
  const int nv = num_vertices();
  const int nf = num_faces();
  std::vector<char> used(nv, 0);
  for (int f = 0; f < nf; ++f) {
    const Tri& t = faces_[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv) throw Error("bad_index", "face " + std::to_string(f) + " references a missing vertex");
      used[t[k]] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw Error("degenerate_face", "face " + std::to_string(f) + " repeats a vertex");
  }
  for (int v = 0; v < nv; ++v)
    if (!used[v]) throw Error("unreferenced_vertex", "vertex " + std::to_string(v) + " is not used by any face");

  if (opts.check_degenerate) {
    for (int f = 0; f < nf; ++f) {
      const Tri& t = faces_[f];
      const Vec3 e0 = positions_[t[1]] - positions_[t[0]];
      const Vec3 e1 = positions_[t[2]] - positions_[t[0]];
      const double scale = std::max({e0.squaredNorm(), e1.squaredNorm(), (e1 - e0).squaredNorm()});
      if (!(e0.cross(e1).norm() > 1e-14 * scale))
        throw Error("degenerate_face", "face " + std::to_string(f) + " has zero area");
    }
  }

  const int nh = 3 * nf;
  twin_.assign(nh, -1);
  outgoing_.assign(nv, {});
  std::unordered_map<long long, int> directed;
  directed.reserve(nh * 2);
  auto key = [nv](int a, int b) { return static_cast<long long>(a) * nv + b; };
  for (int h = 0; h < nh; ++h) {
    const int a = tail(h), b = tip(h);
    auto [it, inserted] = directed.emplace(key(a, b), h);
    if (!inserted)
      throw Error("non_manifold_edge", "non-manifold or inconsistently oriented edge " + edge_name(a, b));
    outgoing_[a].push_back(h);
  }
  edge_of_he_.assign(nh, -1);
  edges_.clear();
  edge_he_.clear();
  for (int h = 0; h < nh; ++h) {
    auto it = directed.find(key(tip(h), tail(h)));
    if (it != directed.end()) twin_[h] = it->second;
    if (edge_of_he_[h] >= 0) continue;
    const int e = static_cast<int>(edges_.size());
    edges_.push_back({std::min(tail(h), tip(h)), std::max(tail(h), tip(h))});
    edge_he_.push_back(h);
    edge_of_he_[h] = e;
    if (twin_[h] >= 0) edge_of_he_[twin_[h]] = e;
  }

  // Each vertex must have a single fan of faces.
  for (int v = 0; v < nv; ++v) {
    const auto& out = outgoing_[v];
    int nb = 0;
    for (int h : out) nb += twin_[h] < 0;
    if (nb > 1) throw Error("non_manifold_vertex", "vertex " + std::to_string(v) + " joins several fans");
    std::vector<int> comp(out.size());
    std::iota(comp.begin(), comp.end(), 0);
    std::function<int(int)> find = [&](int i) { return comp[i] == i ? i : comp[i] = find(comp[i]); };
    for (size_t i = 0; i < out.size(); ++i) {
      const int t = twin_[out[i]];
      if (t < 0) continue;
      const int nh = next(t);
      const size_t j = std::find(out.begin(), out.end(), nh) - out.begin();
      comp[find(static_cast<int>(i))] = find(static_cast<int>(j));
    }
    for (size_t i = 1; i < out.size(); ++i)
      if (find(static_cast<int>(i)) != find(0))
        throw Error("non_manifold_vertex", "vertex " + std::to_string(v) + " joins several fans");
  }
}

int SurfaceMesh::find_halfedge(int a, int b) const {
  for (int h : outgoing_[a])
    if (tip(h) == b) return h;
  return -1;
}

int SurfaceMesh::find_edge(int a, int b) const {
  int h = find_halfedge(a, b);
  if (h < 0) h = find_halfedge(b, a);
  return h < 0 ? -1 : edge_of_he_[h];
}

bool SurfaceMesh::is_boundary_vertex(int v) const {
  for (int h : outgoing_[v])
    if (twin_[h] < 0) return true;
  return false;
}

std::vector<int> SurfaceMesh::vertex_neighbors(int v) const {
  std::vector<int> out;
  for (int h : outgoing_[v]) {
    out.push_back(tip(h));
    const int p = prev(h);
    if (twin_[p] < 0) out.push_back(tail(p));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> SurfaceMesh::vertex_faces(int v) const {
  std::vector<int> out;
  for (int h : outgoing_[v]) out.push_back(h / 3);
  std::sort(out.begin(), out.end());
  return out;
}

double SurfaceMesh::edge_length(int e) const { return (positions_[edges_[e][0]] - positions_[edges_[e][1]]).norm(); }

double SurfaceMesh::halfedge_length(int h) const { return (positions_[tip(h)] - positions_[tail(h)]).norm(); }

double SurfaceMesh::face_area(int f) const { return 0.5 * face_normal(f).norm(); }

Vec3 SurfaceMesh::face_normal(int f) const {
  const Tri& t = faces_[f];
  return (positions_[t[1]] - positions_[t[0]]).cross(positions_[t[2]] - positions_[t[0]]);
}

double SurfaceMesh::total_area() const {
  double a = 0.0;
  for (int f = 0; f < num_faces(); ++f) a += face_area(f);
  return a;
}

double SurfaceMesh::mean_edge_length() const {
  if (edges_.empty()) return 0.0;
  double s = 0.0;
  for (int e = 0; e < num_edges(); ++e) s += edge_length(e);
  return s / num_edges();
}

double SurfaceMesh::bounding_box_diagonal() const {
  if (positions_.empty()) return 0.0;
  Vec3 lo = positions_[0], hi = positions_[0];
  for (const Vec3& p : positions_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

std::vector<BoundaryLoop> boundary_loops(const SurfaceMesh& mesh) {
  std::vector<int> out_boundary(mesh.num_vertices(), -1);
  for (int h = 0; h < mesh.num_halfedges(); ++h)
    if (mesh.is_boundary_halfedge(h)) out_boundary[mesh.tail(h)] = h;

  std::vector<char> seen(mesh.num_halfedges(), 0);
  std::vector<BoundaryLoop> loops;
  for (int h0 = 0; h0 < mesh.num_halfedges(); ++h0) {
    if (!mesh.is_boundary_halfedge(h0) || seen[h0]) continue;
    BoundaryLoop loop;
    int h = h0;
    do {
      seen[h] = 1;
      loop.halfedges.push_back(h);
      loop.vertices.push_back(mesh.tail(h));
      loop.length += mesh.halfedge_length(h);
      h = out_boundary[mesh.tip(h)];
    } while (h != h0);
    loops.push_back(std::move(loop));
  }
  return loops;
}

EdgeCut cut_edges(const SurfaceMesh& mesh, const std::vector<char>& edge_is_cut) {
  const int nh = mesh.num_halfedges();
  UnionFind uf(nh);
  for (int h = 0; h < nh; ++h) {
    const int t = mesh.twin(h);
    if (t < 0 || t < h || edge_is_cut[mesh.edge_of(h)]) continue;
    uf.unite(h, mesh.next(t));
    uf.unite(mesh.next(h), t);
  }
  // Order copies by original vertex, then by smallest corner.
  std::vector<std::tuple<int, int>> reps;
  for (int h = 0; h < nh; ++h)
    if (uf.find(h) == h) reps.emplace_back(mesh.tail(h), h);
  std::sort(reps.begin(), reps.end());
  std::unordered_map<int, int> rep_to_new;
  EdgeCut out;
  std::vector<Vec3> pos;
  for (auto [v, rep] : reps) {
    rep_to_new[rep] = static_cast<int>(out.orig_vertex.size());
    out.orig_vertex.push_back(v);
    pos.push_back(mesh.position(v));
  }
  out.corner_vertex.resize(nh);
  std::vector<Tri> faces(mesh.num_faces());
  for (int h = 0; h < nh; ++h) {
    const int nv = rep_to_new.at(uf.find(h));
    out.corner_vertex[h] = nv;
    faces[h / 3][h % 3] = nv;
  }
  out.mesh = SurfaceMesh(std::move(pos), std::move(faces), SurfaceMesh::Options{false});
  return out;
}

void validate_cut_path(const SurfaceMesh& mesh, const CutPath& path) {
  const auto& vs = path.vertices;
  if (vs.size() < 2) throw Error("path_too_short", "cut path needs at least one edge");
  for (int v : vs)
    if (v < 0 || v >= mesh.num_vertices()) throw Error("bad_index", "cut path references a missing vertex");
  const bool closed = path.closed();
  if (path.kind == CutKind::Curve && !closed && vs.size() < 3)
    throw Error("path_too_short", "an open curve-cut needs at least two edges");
  const size_t n_unique = closed ? vs.size() - 1 : vs.size();
  std::vector<int> sorted(vs.begin(), vs.begin() + n_unique);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error("self_intersecting_path", "cut path visits a vertex twice");
  for (size_t i = 0; i + 1 < vs.size(); ++i) {
    const int e = mesh.find_edge(vs[i], vs[i + 1]);
    if (e < 0) throw Error("path_not_connected", "no edge between path vertices " + edge_name(vs[i], vs[i + 1]));
    if (mesh.is_boundary_edge(e))
      throw Error("path_on_boundary", "cut path runs along boundary edge " + edge_name(vs[i], vs[i + 1]));
  }
  for (size_t i = 0; i < vs.size(); ++i) {
    const bool endpoint = !closed && (i == 0 || i + 1 == vs.size());
    const bool on_boundary = mesh.is_boundary_vertex(vs[i]);
    if (path.kind == CutKind::Seam && endpoint && !on_boundary)
      throw Error("seam_endpoint_interior", "seam endpoint " + std::to_string(vs[i]) + " is not on a boundary loop");
    if (on_boundary && !(path.kind == CutKind::Seam && endpoint))
      throw Error("site_touches_boundary", "cut path touches the boundary at vertex " + std::to_string(vs[i]));
  }
}

CutMesh cut_along_path(const SurfaceMesh& mesh, const CutPath& path) {
  validate_cut_path(mesh, path);
  const auto& vs = path.vertices;
  std::vector<char> is_cut(mesh.num_edges(), 0);
  for (size_t i = 0; i + 1 < vs.size(); ++i) is_cut[mesh.find_edge(vs[i], vs[i + 1])] = 1;
  EdgeCut ec = cut_edges(mesh, is_cut);

  Seam seam;
  seam.kind = path.kind;
  seam.path = vs;
  const size_t n = vs.size();
  for (size_t j = 0; j < n; ++j) {
    int left, right;
    if (j + 1 < n) {
      const int h = mesh.find_halfedge(vs[j], vs[j + 1]);
      const int t = mesh.find_halfedge(vs[j + 1], vs[j]);
      left = ec.corner_vertex[h];
      right = ec.corner_vertex[mesh.next(t)];
    } else {
      const int h = mesh.find_halfedge(vs[j - 1], vs[j]);
      const int t = mesh.find_halfedge(vs[j], vs[j - 1]);
      left = ec.corner_vertex[mesh.next(h)];
      right = ec.corner_vertex[t];
    }
    seam.left.push_back(left);
    seam.right.push_back(right);
  }
  CutMesh out{std::move(ec.mesh), std::move(ec.orig_vertex), {}};
  out.seams.push_back(std::move(seam));
  return out;
}

std::vector<Tri> glue_faces(const CutMesh& cut) {
  std::vector<Tri> faces = cut.mesh.faces();
  for (Tri& t : faces)
    for (int& v : t) v = cut.orig_vertex[v];
  return faces;
}

OpenBoundaryResult insert_hole(const SurfaceMesh& mesh, int vertex) {
  if (vertex < 0 || vertex >= mesh.num_vertices()) throw Error("bad_index", "hole site is not a vertex");
  if (mesh.is_boundary_vertex(vertex)) throw Error("site_touches_boundary", "hole site lies on the boundary");
  for (int u : mesh.vertex_neighbors(vertex))
    if (mesh.is_boundary_vertex(u))
      throw Error("site_touches_boundary", "hole around vertex " + std::to_string(vertex) + " touches the boundary");

  OpenBoundaryResult r;
  r.old_to_new.assign(mesh.num_vertices(), -1);
  std::vector<Vec3> pos;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (v == vertex) continue;
    r.old_to_new[v] = static_cast<int>(pos.size());
    r.new_to_old.push_back(v);
    pos.push_back(mesh.position(v));
  }
  std::vector<Tri> faces;
  for (const Tri& t : mesh.faces()) {
    if (t[0] == vertex || t[1] == vertex || t[2] == vertex) continue;
    faces.push_back({r.old_to_new[t[0]], r.old_to_new[t[1]], r.old_to_new[t[2]]});
  }
  r.mesh = SurfaceMesh(std::move(pos), std::move(faces));
  return r;
}

OpenBoundaryResult insert_slit(const SurfaceMesh& mesh, const CutPath& path) {
  if (path.kind != CutKind::Curve || path.closed())
    throw Error("bad_slit", "a slit must be an open curve-cut path");
  CutMesh cut = cut_along_path(mesh, path);
  OpenBoundaryResult r;
  r.new_to_old = cut.orig_vertex;
  r.old_to_new.assign(mesh.num_vertices(), -1);
  for (int v = 0; v < static_cast<int>(r.new_to_old.size()); ++v)
    if (r.old_to_new[r.new_to_old[v]] < 0) r.old_to_new[r.new_to_old[v]] = v;
  r.mesh = std::move(cut.mesh);
  return r;
}

std::vector<int> shortest_edge_path(const SurfaceMesh& mesh, const std::vector<int>& sources,
                                    const std::vector<char>& is_target,
                                    const std::vector<char>& forbidden_interior,
                                    const std::vector<char>& forbidden_edge) {
  const int nv = mesh.num_vertices();
  std::vector<double> dist(nv, std::numeric_limits<double>::infinity());
  std::vector<int> parent(nv, -1);
  std::vector<char> is_source(nv, 0), done(nv, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int s : sources) {
    is_source[s] = 1;
    dist[s] = 0.0;
    pq.emplace(0.0, s);
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (!is_source[u] && is_target[u]) {
      std::vector<int> path;
      for (int v = u; v >= 0; v = parent[v]) path.push_back(v);
      std::reverse(path.begin(), path.end());
      return path;
    }
    if (!is_source[u] && !forbidden_interior.empty() && forbidden_interior[u]) continue;
    for (int h : mesh.outgoing(u)) {
      for (int hh : {h, mesh.prev(h)}) {
        const int v = hh == h ? mesh.tip(h) : mesh.tail(hh);
        if (hh != h && !mesh.is_boundary_halfedge(hh)) continue;
        const int e = mesh.edge_of(hh);
        if (!forbidden_edge.empty() && forbidden_edge[e]) continue;
        if (is_source[v]) continue;
        const double nd = d + mesh.edge_length(e);
        if (nd < dist[v] || (nd == dist[v] && u < parent[v])) {
          dist[v] = nd;
          parent[v] = u;
          pq.emplace(nd, v);
        }
      }
    }
  }
  return {};
}

}  // namespace zipr
