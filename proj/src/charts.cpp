#include "zipr/charts.hpp"

#include <algorithm>

namespace zipr {

namespace {

std::vector<int> seam_for_part(const Decomposition& d, const CylinderPart& part, int bottom, int top) {
  const SurfaceMesh& m = d.mesh;
  const int nv = m.num_vertices();
  std::vector<char> forbidden_edge(m.num_edges(), 1);
  for (int f : part.faces)
    for (int k = 0; k < 3; ++k) {
      const int h = 3 * f + k, t = m.twin(h);
      if (t >= 0 && d.face_part[t / 3] == part.id) forbidden_edge[m.edge_of(h)] = 0;
    }
  std::vector<char> on_loop(nv, 0), in_part(nv, 0);
  for (int f : part.faces)
    for (int v : m.face(f)) in_part[v] = 1;
  std::vector<int> count_top(nv, 0);
  for (const PartLoop& l : part.loops)
    for (int v : l.vertices) on_loop[v] = 1;
  for (int v : part.loops[top].vertices) ++count_top[v];

  std::vector<char> forbidden(nv, 0), target(nv, 0);
  for (int v = 0; v < nv; ++v) forbidden[v] = on_loop[v] || !in_part[v];
  for (int v : part.loops[top].vertices) target[v] = count_top[v] == 1;
  std::vector<int> sources;
  for (int v : part.loops[bottom].vertices)
    if (!target[v]) sources.push_back(v);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  std::vector<int> path = shortest_edge_path(m, sources, target, forbidden, forbidden_edge);
  if (path.empty())
    throw Error("seam_not_found", "no seam path joins the two boundary loops of part " + std::to_string(part.id));
  return path;
}

}  // namespace

ChartCut cut_into_charts(const Decomposition& d) {
  const SurfaceMesh& m = d.mesh;
  ChartCut out;
  std::vector<char> is_cut(m.num_edges(), 0);
  for (int e = 0; e < m.num_edges(); ++e) is_cut[e] = d.edge_is_transition[e];

  for (const CylinderPart& part : d.parts) {
    PartChart c;
    c.part = part.id;
    if (part.transition_loop >= 0) {
      c.bottom_loop = part.open_loop;
      c.top_loop = part.transition_loop;
    } else {
      c.bottom_loop = 0;
      c.top_loop = 1;
    }
    c.seam_path = seam_for_part(d, part, c.bottom_loop, c.top_loop);
    for (size_t j = 0; j + 1 < c.seam_path.size(); ++j) {
      const int e = m.find_edge(c.seam_path[j], c.seam_path[j + 1]);
      is_cut[e] = 1;
      c.seam_length += m.edge_length(e);
    }
    c.faces = part.faces;
    out.charts.push_back(std::move(c));
  }

  EdgeCut ec = cut_edges(m, is_cut);
  out.mesh = std::move(ec.mesh);
  out.orig_vertex = std::move(ec.orig_vertex);
  out.corner_vertex = std::move(ec.corner_vertex);
  out.vertex_part.assign(out.mesh.num_vertices(), -1);
  for (int f = 0; f < m.num_faces(); ++f)
    for (int v : out.mesh.face(f)) out.vertex_part[v] = d.face_part[f];

  const std::vector<BoundaryLoop> loops = boundary_loops(out.mesh);
  for (PartChart& c : out.charts) {
    const auto& path = c.seam_path;
    const size_t n = path.size();
    for (size_t j = 0; j < n; ++j) {
      const int a = j + 1 < n ? path[j] : path[j - 1];
      const int b = j + 1 < n ? path[j + 1] : path[j];
      const int h = m.find_halfedge(a, b), t = m.find_halfedge(b, a);
      if (j + 1 < n) {
        c.seam_left.push_back(out.corner_vertex[h]);
        c.seam_right.push_back(out.corner_vertex[m.next(t)]);
      } else {
        c.seam_left.push_back(out.corner_vertex[m.next(h)]);
        c.seam_right.push_back(out.corner_vertex[t]);
      }
    }
    for (int v = 0; v < out.mesh.num_vertices(); ++v)
      if (out.vertex_part[v] == c.part) c.vertices.push_back(v);

    // Walk the disk boundary: bottom (+x), right edge up, top (-x), left edge down.
    const BoundaryLoop* loop = nullptr;
    for (const BoundaryLoop& l : loops)
      if (d.face_part[l.halfedges.front() / 3] == c.part) {
        if (loop) throw Error("chart_topology", "part " + std::to_string(c.part) + " is not a disk after cutting");
        loop = &l;
      }
    if (!loop) throw Error("chart_topology", "part " + std::to_string(c.part) + " has no boundary after cutting");
    std::vector<int> cyc = loop->vertices;
    const auto start = std::find(cyc.begin(), cyc.end(), c.seam_right.front());
    if (start == cyc.end()) throw Error("chart_topology", "seam copy missing from chart boundary");
    std::rotate(cyc.begin(), start, cyc.end());
    size_t i = 0;
    while (i < cyc.size() && cyc[i] != c.seam_left.front()) c.bottom.push_back(cyc[i++]);
    bool ok = i < cyc.size();
    for (size_t j = 0; ok && j < n; ++j, ++i) ok = i < cyc.size() && cyc[i] == c.seam_left[j];
    if (ok) {
      --i;
      c.bottom.push_back(c.seam_left.front());
      while (i < cyc.size() && cyc[i] != c.seam_right.back()) c.top.push_back(cyc[i++]);
      ok = i < cyc.size();
      for (size_t j = 0; ok && j + 1 < n; ++j, ++i) ok = i < cyc.size() && cyc[i] == c.seam_right[n - 1 - j];
      ok = ok && i == cyc.size();
      c.top.push_back(c.seam_right.back());
      std::reverse(c.top.begin(), c.top.end());
    }
    if (!ok) throw Error("chart_topology", "unexpected boundary order in chart of part " + std::to_string(c.part));
  }

  for (int e = 0; e < m.num_edges(); ++e) {
    if (!d.edge_is_transition[e]) continue;
    const int h = m.edge_halfedge(e), t = m.twin(h);
    TransitionEdge te;
    te.p = d.face_part[h / 3];
    te.q = d.face_part[t / 3];
    te.halfedge = h;
    te.pa = out.corner_vertex[h];
    te.pb = out.corner_vertex[m.next(h)];
    te.qb = out.corner_vertex[t];
    te.qa = out.corner_vertex[m.next(t)];
    out.transitions.push_back(te);
  }
  return out;
}

Charts measure_charts(const ChartCut& cut, const Eigen::VectorXd& X) {
  Charts c;
  c.X = X;
  for (const PartChart& pc : cut.charts) {
    double p = 0.0;
    for (size_t j = 0; j < pc.seam_left.size(); ++j) p += X[2 * pc.seam_left[j]] - X[2 * pc.seam_right[j]];
    c.period.push_back(p / pc.seam_left.size());
    double yt = 0.0, yb = 0.0;
    for (int v : pc.top) yt += X[2 * v + 1];
    for (int v : pc.bottom) yb += X[2 * v + 1];
    c.height.push_back(yt / pc.top.size() - yb / pc.bottom.size());
  }
  return c;
}

nlohmann::json charts_to_json(const Charts& charts) {
  std::vector<double> x(charts.X.data(), charts.X.data() + charts.X.size());
  return {{"X", x}, {"period", charts.period}, {"height", charts.height}};
}

Eigen::VectorXd charts_x_from_json(const nlohmann::json& j, int num_vertices) {
  std::vector<double> x;
  try {
    x = j.at("X").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad_charts", std::string("malformed charts JSON: ") + e.what());
  }
  if (static_cast<int>(x.size()) != 2 * num_vertices)
    throw Error("bad_charts", "charts do not match the decomposition (" + std::to_string(x.size()) +
                                  " coordinates for " + std::to_string(num_vertices) + " chart vertices)");
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace zipr
