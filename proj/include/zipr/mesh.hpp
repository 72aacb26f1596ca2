#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace zipr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Tri = std::array<int, 3>;

// All recoverable failures in the library are reported with this type. The
// code is a short machine-readable tag ("non_manifold_edge", "not_annulus", ...)
// that the CLI prints and the service maps onto HTTP statuses.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

// Halfedge triangle mesh. Halfedge 3f+k runs from faces[f][k] to
// faces[f][(k+1)%3]; boundary halfedges are face halfedges without a twin, so the
// mesh interior always lies to the left of a boundary halfedge.
class SurfaceMesh {
public:
  struct Options {
    bool check_degenerate = true;
  };

  SurfaceMesh() = default;
  SurfaceMesh(std::vector<Vec3> positions, std::vector<Tri> faces);
  SurfaceMesh(std::vector<Vec3> positions, std::vector<Tri> faces, Options opts);

  int num_vertices() const { return static_cast<int>(positions_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_halfedges() const { return 3 * num_faces(); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int euler_characteristic() const { return num_vertices() - num_edges() + num_faces(); }

  const std::vector<Vec3>& positions() const { return positions_; }
  const std::vector<Tri>& faces() const { return faces_; }
  const Vec3& position(int v) const { return positions_[v]; }
  const Tri& face(int f) const { return faces_[f]; }

  int tail(int h) const { return faces_[h / 3][h % 3]; }
  int tip(int h) const { return faces_[h / 3][(h + 1) % 3]; }
  int twin(int h) const { return twin_[h]; }
  int next(int h) const { return 3 * (h / 3) + (h + 1) % 3; }
  int prev(int h) const { return 3 * (h / 3) + (h + 2) % 3; }
  int face_of(int h) const { return h / 3; }
  bool is_boundary_halfedge(int h) const { return twin_[h] < 0; }

  int edge_of(int h) const { return edge_of_he_[h]; }
  // Endpoints of an undirected edge, smaller index first.
  const std::array<int, 2>& edge(int e) const { return edges_[e]; }
  // One representative halfedge of edge e (the one with the smaller index).
  int edge_halfedge(int e) const { return edge_he_[e]; }
  bool is_boundary_edge(int e) const { return twin_[edge_he_[e]] < 0; }
  // Halfedge a->b, or -1.
  int find_halfedge(int a, int b) const;
  // Undirected edge {a,b}, or -1.
  int find_edge(int a, int b) const;

  // Outgoing halfedges of v (any order, deterministic).
  const std::vector<int>& outgoing(int v) const { return outgoing_[v]; }
  bool is_boundary_vertex(int v) const;
  std::vector<int> vertex_neighbors(int v) const;
  std::vector<int> vertex_faces(int v) const;

  double edge_length(int e) const;
  double halfedge_length(int h) const;
  double face_area(int f) const;
  Vec3 face_normal(int f) const;
  double total_area() const;
  double mean_edge_length() const;
  double bounding_box_diagonal() const;

private:
  void build(Options opts);

  std::vector<Vec3> positions_;
  std::vector<Tri> faces_;
  std::vector<int> twin_;
  std::vector<int> edge_of_he_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<int> edge_he_;
  std::vector<std::vector<int>> outgoing_;
};

struct BoundaryLoop {
  std::vector<int> halfedges;  // consecutive boundary halfedges, interior on the left
  std::vector<int> vertices;   // tails of the halfedges
  double length = 0.0;
};

// Boundary loops, each starting at its smallest halfedge id; loops sorted by
// that id.
std::vector<BoundaryLoop> boundary_loops(const SurfaceMesh& mesh);

enum class CutKind { Seam, Hole, Curve };

struct CutPath {
  std::vector<int> vertices;  // closed loops repeat the first vertex at the end
  CutKind kind = CutKind::Seam;

  bool closed() const { return vertices.size() > 2 && vertices.front() == vertices.back(); }
};

// Paired copies of the vertices of one cut path. left[j]/right[j] are the copies
// of path vertex j on the left/right of the path direction. Endpoints of an open
// slit have a single copy, so left and right agree there.
struct Seam {
  std::vector<int> path;  // original vertex ids
  std::vector<int> left;
  std::vector<int> right;
  CutKind kind = CutKind::Seam;
};

struct CutMesh {
  SurfaceMesh mesh;
  std::vector<int> orig_vertex;  // cut vertex -> pre-cut vertex
  std::vector<Seam> seams;
  // Face f of the cut mesh is face f of the pre-cut mesh.
};

// Duplicates vertices so that the given undirected edges become boundary.
// Each vertex gets one copy per fan of faces delimited by cut or boundary edges.
// Copies are numbered by original vertex, then by smallest incident corner.
struct EdgeCut {
  SurfaceMesh mesh;
  std::vector<int> orig_vertex;
  // corner_vertex[3f+k] = copy used by face f at corner k
  std::vector<int> corner_vertex;
};
EdgeCut cut_edges(const SurfaceMesh& mesh, const std::vector<char>& edge_is_cut);

// Path validation shared by the cutting operations. Throws Error on a broken
// chain, a repeated vertex, or (for seams) endpoints off the boundary.
void validate_cut_path(const SurfaceMesh& mesh, const CutPath& path);

CutMesh cut_along_path(const SurfaceMesh& mesh, const CutPath& path);

// Reassembles the pre-cut face/vertex incidence (faces in original order).
std::vector<Tri> glue_faces(const CutMesh& cut);

struct OpenBoundaryResult {
  SurfaceMesh mesh;
  std::vector<int> old_to_new;  // -1 for removed vertices
  std::vector<int> new_to_old;
};

// Hole: removes the star of one interior vertex. Slit: duplicates an interior
// edge path into a boundary loop with twice as many edges.
OpenBoundaryResult insert_hole(const SurfaceMesh& mesh, int vertex);
OpenBoundaryResult insert_slit(const SurfaceMesh& mesh, const CutPath& path);

// Shortest edge path between two vertex sets (Dijkstra on 3D edge length),
// optionally forbidding intermediate vertices.
std::vector<int> shortest_edge_path(const SurfaceMesh& mesh, const std::vector<int>& sources,
                                    const std::vector<char>& is_target,
                                    const std::vector<char>& forbidden_interior,
                                    const std::vector<char>& forbidden_edge = {});

}  // namespace zipr
