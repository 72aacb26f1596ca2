#pragma once

#include "zipr/mesh.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace zipr {

struct OpenSite {
  enum class Type { Hole, Slit };
  Type type = Type::Hole;
  std::vector<int> ids;  // one vertex for a hole, an edge path for a slit
};

// Declarative segmentation, as stored in seg.json. Vertex ids refer to the
// input mesh. Loops are edge paths (closed loops repeat their first vertex);
// together their edges separate the cylinders.
struct Segmentation {
  std::vector<std::vector<int>> loops;
  std::vector<OpenSite> open_sites;
  std::vector<int> traversal;
  std::vector<std::string> names;
};

Segmentation segmentation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Segmentation& seg);

enum class LoopRole { Open, Transition };

// Maximal run of a transition loop shared with one neighbor. Positions are 3D
// arc length measured from the start of the owning loop.
struct InterfaceArc {
  int neighbor = -1;
  std::vector<int> vertices;   // prepared-mesh vertex ids, s entries (s = edges + 1)
  std::vector<int> halfedges;  // prepared-mesh halfedges on the owning part's side
  double start = 0.0;
  double end = 0.0;
  bool closed = false;         // the arc is the whole loop
};

struct PartLoop {
  std::vector<int> halfedges;  // prepared-mesh halfedges of the part, interior on the left
  std::vector<int> vertices;   // tails of the halfedges
  LoopRole role = LoopRole::Open;
  double length = 0.0;
  std::vector<InterfaceArc> arcs;  // empty for open loops
};

struct CylinderPart {
  int id = 0;
  std::string name;
  std::vector<int> faces;
  std::vector<PartLoop> loops;  // exactly two after validation
  int open_loop = 0;            // index into loops
  int transition_loop = -1;     // -1 when both loops are open (single-part case)
  int euler_characteristic = 0;
};

struct Decomposition {
  SurfaceMesh mesh;                   // input mesh after inserting open sites
  std::vector<int> input_to_mesh;     // input vertex -> mesh vertex (-1 if removed)
  std::vector<int> mesh_to_input;
  std::vector<CylinderPart> parts;
  std::vector<int> face_part;
  std::vector<char> edge_is_transition;
  std::vector<std::vector<int>> neighbors;  // sorted adjacency lists
  std::vector<int> traversal;
};

// Builds and validates the cylinder decomposition. Throws Error with code
// "not_annulus", "missing_open_boundary", "mixed_boundary", "disconnected_parts"
// or "bad_traversal"; the message names the offending part.
Decomposition apply_segmentation(const SurfaceMesh& mesh, const Segmentation& seg);

struct TraversalCheck {
  bool ok = true;
  std::string message;
  int first = -1;  // first offending consecutive pair
  int second = -1;
};

TraversalCheck validate_traversal(const Decomposition& decomp, const std::vector<int>& order);

std::vector<InterfaceArc> interface_intervals(const CylinderPart& part);

nlohmann::json decomposition_summary(const Decomposition& decomp);

}  // namespace zipr
