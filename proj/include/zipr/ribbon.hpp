#pragma once

#include "zipr/spiral.hpp"

#include "json.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace zipr {

// Surface cut open along the curve. Curve points are the curve's edge and
// vertex crossings; interior samples are dropped since they lie on the chords.
struct CurveStrip {
  SurfaceMesh mesh;
  std::vector<Vec3> points;             // cut polyline
  std::vector<int> left, right;         // per point: copy on each side, -1 where the side is open boundary
  std::vector<std::array<int, 2>> pairs;  // halfedges (left side, right side) per zipped step
  double left_length = 0.0, right_length = 0.0;
};

// Throws Error "curve_not_simple", "curve_endpoint_interior" or "strip_not_disk".
CurveStrip cut_along_curve(const SurfaceMesh& mesh, const SurfaceCurve& curve);

enum class RibbonSide { Left, Right, Boundary };

struct Ribbon {
  SurfaceMesh mesh;
  std::vector<int> cycle;                 // boundary cycle, interior on the left
  std::vector<RibbonSide> side;           // per vertex
  std::vector<int> part;                  // per vertex
  std::vector<double> arc;                // per vertex: curve arc length, -1 off the curve
  std::vector<std::array<int, 2>> pairs;  // zipped halfedges (left side, right side), in curve order
  std::vector<std::array<int, 2>> rulings;  // vertex pairs joined at equal x
  int zip_start = -1, zip_end = -1;       // left-side copies of the curve endpoints
  std::vector<int> folded;                // faces facing against the source surface
  std::vector<int> samples_per_period;    // per part
};

struct RibbonConfig {
  int samples_per_period = 0;       // 0: from winding length and width
  int exact_polygon_limit = 300;    // larger fill polygons use greedy ear clipping
};

// Samples each line at equal x spacing per part, joins samples of adjacent
// windings at equal x and fills the rest with minimum-length triangulations.
// Throws Error "ruling_crosses_boundary" when the equal-x chords do not nest.
Ribbon remesh_rulings(const CurveStrip& strip, const SpiralPlan& plan, const Decomposition& decomp,
                      const ChartCut& cut, const Charts& charts, const RibbonConfig& config = {});

struct DevelopableReport {
  bool ok = false;
  std::vector<int> interior_vertices;
  int euler = 0;
  int boundary_loops = 0;
  int components = 0;
  std::string message;
};

DevelopableReport check_developable(const SurfaceMesh& mesh);

// Sampled distance from the ribbon to the source surface.
struct Deviation {
  double max = 0.0, mean = 0.0;
  int samples = 0;
};
Deviation surface_deviation(const SurfaceMesh& ribbon, const SurfaceMesh& source, int samples_per_edge = 4);

struct FlatRibbon {
  std::vector<Vec2> positions;  // per ribbon vertex
  std::vector<Tri> faces;       // same as the ribbon
  std::vector<int> order;       // faces in placement order
  std::vector<int> parent;      // placing neighbor, -1 for the root
};

// Breadth-first unfolding from the face at the zipper start. Both throw Error
// "not_developable" when the ribbon has interior vertices.
FlatRibbon unfold(const Ribbon& ribbon);
FlatRibbon unfold(const SurfaceMesh& mesh, int root_vertex);

// Face pairs (f < g) not sharing an edge whose interiors overlap with positive
// area. `faces` restricts the test; empty means all.
std::vector<std::array<int, 2>> detect_overlaps(const std::vector<Vec2>& positions, const std::vector<Tri>& faces,
                                                const std::vector<int>& subset = {});

double triangle_overlap_area(const Vec2& a0, const Vec2& a1, const Vec2& a2, const Vec2& b0, const Vec2& b1,
                             const Vec2& b2);

struct SplitPolicy {
  double bed_width = 1000.0, bed_height = 600.0;  // mm
  double spacing = 5.0;                           // kept free around each piece
  bool resolve_overlaps = true;
};

struct Piece {
  std::vector<int> faces;       // ribbon faces
  std::vector<int> vertices;    // ribbon vertices used
  std::vector<Vec2> positions;  // per entry of `vertices`, rotated so the bounding box is small, min corner at 0
  double angle = 0.0;           // rotation applied to the flat layout
  double width = 0.0, height = 0.0;
  double area = 0.0;
};

struct SewPair {
  int a = -1, b = -1;           // ribbon vertices of the cut ruling
  int piece_a = -1, piece_b = -1;
  double length = 0.0;
  int label = 0;
};

struct SplitResult {
  std::vector<Piece> pieces;
  std::vector<SewPair> sew;
};

// Cuts only along rulings. Throws Error "piece_too_large" when a face group
// between consecutive rulings does not fit the bed.
SplitResult split_ribbon(const Ribbon& ribbon, const FlatRibbon& flat, const SplitPolicy& policy = {});

nlohmann::json to_json(const DevelopableReport& r);
nlohmann::json ribbon_to_json(const Ribbon& ribbon);
Ribbon ribbon_from_json(const nlohmann::json& j, SurfaceMesh mesh);

}  // namespace zipr
