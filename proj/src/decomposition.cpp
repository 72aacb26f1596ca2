#include "zipr/decomposition.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace zipr {

using nlohmann::json;

Segmentation segmentation_from_json(const json& j) {
  Segmentation seg;
  try {
    if (j.contains("loops")) seg.loops = j.at("loops").get<std::vector<std::vector<int>>>();
    if (j.contains("open_sites")) {
      for (const json& s : j.at("open_sites")) {
        OpenSite site;
        const std::string type = s.at("type").get<std::string>();
        if (type == "hole")
          site.type = OpenSite::Type::Hole;
        else if (type == "slit")
          site.type = OpenSite::Type::Slit;
        else
          throw Error("bad_segmentation", "unknown open site type '" + type + "'");
        site.ids = s.at("ids").get<std::vector<int>>();
        seg.open_sites.push_back(std::move(site));
      }
    }
    if (j.contains("traversal")) seg.traversal = j.at("traversal").get<std::vector<int>>();
    if (j.contains("names")) seg.names = j.at("names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error("bad_segmentation", std::string("malformed segmentation JSON: ") + e.what());
  }
  return seg;
}

json to_json(const Segmentation& seg) {
  json sites = json::array();
  for (const OpenSite& s : seg.open_sites)
    sites.push_back({{"type", s.type == OpenSite::Type::Hole ? "hole" : "slit"}, {"ids", s.ids}});
  return {{"loops", seg.loops}, {"open_sites", sites}, {"traversal", seg.traversal}, {"names", seg.names}};
}

namespace {

std::string part_label(const CylinderPart& p) { return "part " + std::to_string(p.id) + " (" + p.name + ")"; }

void compute_arcs(const SurfaceMesh& mesh, const std::vector<int>& face_part, PartLoop& loop) {
  const int n = static_cast<int>(loop.halfedges.size());
  std::vector<int> nb(n);
  for (int i = 0; i < n; ++i) nb[i] = face_part[mesh.twin(loop.halfedges[i]) / 3];
  // Rotate so the loop starts where the neighbor changes.
  int shift = 0;
  for (int i = 0; i < n; ++i)
    if (nb[i] != nb[(i + n - 1) % n]) {
      shift = i;
      break;
    }
  std::rotate(loop.halfedges.begin(), loop.halfedges.begin() + shift, loop.halfedges.end());
  std::rotate(nb.begin(), nb.begin() + shift, nb.end());
  loop.vertices.clear();
  for (int h : loop.halfedges) loop.vertices.push_back(mesh.tail(h));

  double s = 0.0;
  for (int i = 0; i < n;) {
    InterfaceArc arc;
    arc.neighbor = nb[i];
    arc.start = s;
    arc.vertices.push_back(mesh.tail(loop.halfedges[i]));
    int j = i;
    while (j < n && nb[j] == nb[i]) {
      arc.halfedges.push_back(loop.halfedges[j]);
      arc.vertices.push_back(mesh.tip(loop.halfedges[j]));
      s += mesh.halfedge_length(loop.halfedges[j]);
      ++j;
    }
    arc.end = s;
    arc.closed = (i == 0 && j == n);
    loop.arcs.push_back(std::move(arc));
    i = j;
  }
}

std::vector<int> default_traversal(const std::vector<std::vector<int>>& neighbors) {
  const int n = static_cast<int>(neighbors.size());
  std::vector<int> path;
  std::vector<char> used(n, 0);
  std::function<bool(int)> dfs = [&](int u) {
    path.push_back(u);
    used[u] = 1;
    if (static_cast<int>(path.size()) == n) return true;
    for (int v : neighbors[u])
      if (!used[v] && dfs(v)) return true;
    used[u] = 0;
    path.pop_back();
    return false;
  };
  for (int s = 0; s < n; ++s)
    if (dfs(s)) return path;
  return {};
}

// An interior edge joining two vertices of the same loop (segmentation or
// boundary) would be squeezed flat once that loop is mapped to a line; split
// each one at its midpoint.
void split_chords(SurfaceMesh& mesh, const std::vector<std::vector<int>>& loops) {
  std::vector<std::vector<int>> loop_of(mesh.num_vertices());
  std::set<std::pair<int, int>> loop_edges;
  auto add_loop = [&](const std::vector<int>& vs, int id) {
    for (size_t i = 0; i < vs.size(); ++i) {
      if (loop_of[vs[i]].empty() || loop_of[vs[i]].back() != id) loop_of[vs[i]].push_back(id);
      if (i + 1 < vs.size()) loop_edges.insert(std::minmax(vs[i], vs[i + 1]));
    }
  };
  int id = 0;
  for (const auto& vs : loops) add_loop(vs, id++);
  for (const BoundaryLoop& bl : boundary_loops(mesh)) add_loop(bl.vertices, id++);
  // loops sharing a vertex end up on one boundary line together
  std::vector<int> group(id);
  std::iota(group.begin(), group.end(), 0);
  std::function<int(int)> find = [&](int i) { return group[i] == i ? i : group[i] = find(group[i]); };
  for (const auto& ids : loop_of)
    for (size_t k = 1; k < ids.size(); ++k) group[find(ids[k])] = find(ids[0]);
  for (auto& ids : loop_of)
    for (int& i : ids) i = find(i);

  std::vector<std::pair<int, int>> chords;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const auto [a, c] = mesh.edge(e);
    if (mesh.is_boundary_edge(e) || loop_edges.count(std::minmax(a, c))) continue;
    for (int la : loop_of[a])
      if (std::find(loop_of[c].begin(), loop_of[c].end(), la) != loop_of[c].end()) {
        chords.emplace_back(a, c);
        break;
      }
  }
  if (chords.empty()) return;

  std::vector<Vec3> pos = mesh.positions();
  std::vector<Tri> faces = mesh.faces();
  std::vector<std::vector<int>> vf(pos.size());
  for (int f = 0; f < static_cast<int>(faces.size()); ++f)
    for (int v : faces[f]) vf[v].push_back(f);
  for (const auto& [a, c] : chords) {
    const int m = static_cast<int>(pos.size());
    pos.push_back(0.5 * (pos[a] + pos[c]));
    vf.emplace_back();
    std::vector<int> around;
    for (int f : vf[a])
      if (std::find(faces[f].begin(), faces[f].end(), c) != faces[f].end()) around.push_back(f);
    for (int f : around) {
      // rotate so the face reads (u, w, x) with {u, w} = {a, c}
      Tri t = faces[f];
      while (!((t[0] == a || t[0] == c) && (t[1] == a || t[1] == c))) t = {t[1], t[2], t[0]};
      const int u = t[0], w = t[1], x = t[2];
      faces[f] = {u, m, x};
      const int g = static_cast<int>(faces.size());
      faces.push_back({m, w, x});
      auto& fw = vf[w];
      fw.erase(std::find(fw.begin(), fw.end(), f));
      fw.push_back(g);
      vf[x].push_back(g);
      vf[m].push_back(f);
      vf[m].push_back(g);
    }
  }
  mesh = SurfaceMesh(std::move(pos), std::move(faces));
}

}  // namespace

Decomposition apply_segmentation(const SurfaceMesh& input, const Segmentation& seg) {
  Decomposition d;
  SurfaceMesh mesh = input;
  std::vector<int> in_to_mesh(input.num_vertices());
  std::iota(in_to_mesh.begin(), in_to_mesh.end(), 0);
  std::vector<int> copies(input.num_vertices(), 1);

  auto map_ids = [&](const std::vector<int>& ids) {
    std::vector<int> out;
    for (int v : ids) {
      if (v < 0 || v >= input.num_vertices()) throw Error("bad_index", "segmentation references a missing vertex");
      if (in_to_mesh[v] < 0)
        throw Error("bad_segmentation", "vertex " + std::to_string(v) + " was removed by a hole");
      if (copies[v] > 1)
        throw Error("bad_segmentation", "vertex " + std::to_string(v) + " lies on a slit");
      out.push_back(in_to_mesh[v]);
    }
    return out;
  };

  for (const OpenSite& site : seg.open_sites) {
    OpenBoundaryResult r;
    const std::vector<int> ids = map_ids(site.ids);
    if (site.type == OpenSite::Type::Hole) {
      if (ids.size() != 1) throw Error("bad_segmentation", "a hole site is a single vertex");
      r = insert_hole(mesh, ids[0]);
    } else {
      r = insert_slit(mesh, CutPath{ids, CutKind::Curve});
    }
    for (int v = 0; v < input.num_vertices(); ++v) {
      if (in_to_mesh[v] < 0) continue;
      const int old = in_to_mesh[v];
      in_to_mesh[v] = r.old_to_new[old];
      int n_copies = 0;
      for (int nv : r.new_to_old) n_copies += (nv == old);
      if (n_copies > 1) copies[v] = n_copies;
    }
    mesh = std::move(r.mesh);
  }

  std::vector<std::vector<int>> loop_ids;
  for (const auto& loop : seg.loops) loop_ids.push_back(map_ids(loop));
  split_chords(mesh, loop_ids);

  std::vector<char> is_seg(mesh.num_edges(), 0);
  for (size_t li = 0; li < seg.loops.size(); ++li) {
    const std::vector<int>& vs = loop_ids[li];
    for (size_t i = 0; i + 1 < vs.size(); ++i) {
      const int e = mesh.find_edge(vs[i], vs[i + 1]);
      if (e < 0)
        throw Error("path_not_connected", "segmentation loop " + std::to_string(li) + " skips between vertices " +
                                              std::to_string(seg.loops[li][i]) + " and " +
                                              std::to_string(seg.loops[li][i + 1]));
      if (mesh.is_boundary_edge(e))
        throw Error("path_on_boundary", "segmentation loop " + std::to_string(li) + " runs along the boundary");
      is_seg[e] = 1;
    }
  }

  const EdgeCut ec = cut_edges(mesh, is_seg);
  const int nf = mesh.num_faces();
  d.face_part.assign(nf, -1);
  int n_parts = 0;
  for (int f0 = 0; f0 < nf; ++f0) {
    if (d.face_part[f0] >= 0) continue;
    std::vector<int> stack{f0};
    d.face_part[f0] = n_parts;
    while (!stack.empty()) {
      const int f = stack.back();
      stack.pop_back();
      for (int k = 0; k < 3; ++k) {
        const int t = ec.mesh.twin(3 * f + k);
        if (t >= 0 && d.face_part[t / 3] < 0) {
          d.face_part[t / 3] = n_parts;
          stack.push_back(t / 3);
        }
      }
    }
    ++n_parts;
  }

  d.parts.resize(n_parts);
  for (int p = 0; p < n_parts; ++p) {
    d.parts[p].id = p;
    d.parts[p].name = p < static_cast<int>(seg.names.size()) ? seg.names[p] : "part" + std::to_string(p);
  }
  for (int f = 0; f < nf; ++f) d.parts[d.face_part[f]].faces.push_back(f);

  for (const BoundaryLoop& bl : boundary_loops(ec.mesh)) {
    CylinderPart& part = d.parts[d.face_part[bl.halfedges.front() / 3]];
    PartLoop loop;
    loop.halfedges = bl.halfedges;
    for (int h : bl.halfedges) loop.vertices.push_back(mesh.tail(h));
    loop.length = bl.length;
    part.loops.push_back(std::move(loop));
  }

  for (CylinderPart& part : d.parts) {
    std::set<int> verts, edges;
    for (int f : part.faces)
      for (int k = 0; k < 3; ++k) {
        verts.insert(ec.mesh.face(f)[k]);
        edges.insert(ec.mesh.edge_of(3 * f + k));
      }
    part.euler_characteristic =
        static_cast<int>(verts.size()) - static_cast<int>(edges.size()) + static_cast<int>(part.faces.size());
    const int b = static_cast<int>(part.loops.size());
    if (part.euler_characteristic != 0 || b != 2) {
      const int genus = (2 - b - part.euler_characteristic) / 2;
      throw Error("not_annulus", part_label(part) + " is not an annulus (genus " + std::to_string(genus) + ", " +
                                     std::to_string(b) + " boundary loops)");
    }
  }

  d.edge_is_transition.assign(mesh.num_edges(), 0);
  d.neighbors.assign(n_parts, {});
  for (CylinderPart& part : d.parts) {
    int n_open = 0, n_trans = 0;
    for (size_t li = 0; li < part.loops.size(); ++li) {
      PartLoop& loop = part.loops[li];
      int n_shared = 0;
      for (int h : loop.halfedges) {
        const int t = mesh.twin(h);
        if (t < 0) continue;
        if (d.face_part[t / 3] == part.id)
          throw Error("bad_segmentation", part_label(part) + " contains a segmentation edge in its interior");
        ++n_shared;
        d.edge_is_transition[mesh.edge_of(h)] = 1;
      }
      if (n_shared == 0) {
        loop.role = LoopRole::Open;
        part.open_loop = static_cast<int>(li);
        ++n_open;
      } else if (n_shared == static_cast<int>(loop.halfedges.size())) {
        loop.role = LoopRole::Transition;
        part.transition_loop = static_cast<int>(li);
        ++n_trans;
        compute_arcs(mesh, d.face_part, loop);
        for (const InterfaceArc& arc : loop.arcs) d.neighbors[part.id].push_back(arc.neighbor);
      } else {
        throw Error("mixed_boundary", part_label(part) + " has a loop that is partly open and partly shared");
      }
    }
    if (n_parts > 1 && n_open == 0)
      throw Error("missing_open_boundary", part_label(part) + " has no open boundary; add a hole or slit");
    if (n_parts > 1 && n_trans == 0)
      throw Error("disconnected_parts", part_label(part) + " shares no boundary with another part");
    if (n_parts == 1 && n_open != 2) throw Error("bad_segmentation", part_label(part) + " needs two open loops");
    if (n_open == 2) part.transition_loop = -1, part.open_loop = 0;
  }
  for (auto& nb : d.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  std::vector<char> seen(n_parts, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int p = stack.back();
    stack.pop_back();
    for (int q : d.neighbors[p])
      if (!seen[q]) seen[q] = 1, stack.push_back(q);
  }
  for (int p = 0; p < n_parts; ++p)
    if (!seen[p]) throw Error("disconnected_parts", "part adjacency graph is not connected");

  d.traversal = seg.traversal.empty() ? default_traversal(d.neighbors) : seg.traversal;
  d.input_to_mesh = in_to_mesh;
  d.mesh_to_input.assign(mesh.num_vertices(), -1);
  for (int v = 0; v < input.num_vertices(); ++v)
    if (in_to_mesh[v] >= 0 && d.mesh_to_input[in_to_mesh[v]] < 0) d.mesh_to_input[in_to_mesh[v]] = v;
  d.mesh = std::move(mesh);
  return d;
}

TraversalCheck validate_traversal(const Decomposition& decomp, const std::vector<int>& order) {
  TraversalCheck r;
  const int n = static_cast<int>(decomp.parts.size());
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(n);
  std::iota(expect.begin(), expect.end(), 0);
  if (sorted != expect) {
    r.ok = false;
    r.message = "traversal must visit every part exactly once";
    return r;
  }
  for (int i = 0; i + 1 < n; ++i) {
    const auto& nb = decomp.neighbors[order[i]];
    if (!std::binary_search(nb.begin(), nb.end(), order[i + 1])) {
      r.ok = false;
      r.first = order[i];
      r.second = order[i + 1];
      r.message = "parts " + std::to_string(order[i]) + " and " + std::to_string(order[i + 1]) +
                  " are consecutive in the traversal but not adjacent";
      return r;
    }
  }
  return r;
}

std::vector<InterfaceArc> interface_intervals(const CylinderPart& part) {
  if (part.transition_loop < 0) return {};
  return part.loops[part.transition_loop].arcs;
}

json decomposition_summary(const Decomposition& d) {
  json parts = json::array();
  for (const CylinderPart& p : d.parts) {
    json loops = json::array();
    for (const PartLoop& l : p.loops) {
      json arcs = json::array();
      for (const InterfaceArc& a : l.arcs)
        arcs.push_back({{"neighbor", a.neighbor}, {"start", a.start}, {"end", a.end}, {"edges", a.halfedges.size()}});
      loops.push_back({{"role", l.role == LoopRole::Open ? "open" : "transition"},
                       {"length", l.length},
                       {"edges", l.halfedges.size()},
                       {"arcs", arcs}});
    }
    parts.push_back({{"id", p.id}, {"name", p.name}, {"faces", p.faces.size()}, {"loops", loops}});
  }
  const TraversalCheck tc = validate_traversal(d, d.traversal);
  return {{"parts", parts},
          {"adjacency", d.neighbors},
          {"traversal", d.traversal},
          {"traversal_ok", tc.ok},
          {"traversal_message", tc.message},
          {"vertices", d.mesh.num_vertices()},
          {"faces", d.mesh.num_faces()}};
}

}  // namespace zipr
