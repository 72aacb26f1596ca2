#pragma once

#include "zipr/decomposition.hpp"

#include <Eigen/Core>

namespace zipr {

// One part cut open into a disk. Chart vertex ids index ChartCut::mesh.
// In the plane the chart is a strip: the bottom run lies on y = 0, the top
// run on y = height, and the seam copies bound it on the left (path right
// side) and right (path left side).
struct PartChart {
  int part = 0;
  std::vector<int> seam_path;   // decomposition-mesh vertices, bottom loop -> top loop
  std::vector<int> seam_left;   // chart ids; right edge of the strip
  std::vector<int> seam_right;  // chart ids; left edge of the strip
  std::vector<int> bottom;      // chart ids along y = 0 in +x order, seam_right[0] .. seam_left[0]
  std::vector<int> top;         // chart ids along y = height in +x order, seam_right.back() .. seam_left.back()
  int bottom_loop = 0;          // index into CylinderPart::loops
  int top_loop = 1;
  double seam_length = 0.0;     // 3D length of the seam path
  std::vector<int> faces;
  std::vector<int> vertices;
};

// Copy pairs across a transition edge {a, b}: the edge seen from part p
// (a->b, interior of p on the left) and from part q.
struct TransitionEdge {
  int p = 0, q = 0;
  int halfedge = -1;  // decomposition-mesh halfedge a->b in part p
  int pa = -1, pb = -1, qa = -1, qb = -1;  // chart ids
};

struct ChartCut {
  SurfaceMesh mesh;               // disjoint disks, faces in decomposition order
  std::vector<int> orig_vertex;   // chart vertex -> decomposition-mesh vertex
  std::vector<int> corner_vertex; // halfedge 3f+k -> chart vertex of that corner
  std::vector<int> vertex_part;
  std::vector<PartChart> charts;
  std::vector<TransitionEdge> transitions;
};

// Cuts every part along its transition loop and along a shortest seam path
// from its bottom loop to its top loop. The top loop is the transition loop
// when there is one.
ChartCut cut_into_charts(const Decomposition& decomp);

// Parameterization: X holds (x, y) of chart vertex v at 2v, 2v+1.
struct Charts {
  Eigen::VectorXd X;
  std::vector<double> period;  // per part: x(seam_left) - x(seam_right)
  std::vector<double> height;  // per part: y(top) - y(bottom)
};

Charts measure_charts(const ChartCut& cut, const Eigen::VectorXd& X);

nlohmann::json charts_to_json(const Charts& charts);
Eigen::VectorXd charts_x_from_json(const nlohmann::json& j, int num_vertices);

}  // namespace zipr
