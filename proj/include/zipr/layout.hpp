#pragma once

#include "zipr/ribbon.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace zipr {

// Zipper alignment tick, piece coordinates.
struct Marker {
  Vec2 a = Vec2::Zero(), b = Vec2::Zero();  // a on the boundary, b inside
  int side = 0;                             // 0 left tape, 1 right tape
  int index = 0;                            // k-th marker along the tape
  double arc = 0.0;                         // mm from the zipper start
};

struct Label {
  Vec2 at = Vec2::Zero();
  std::string text;
};

struct PlanPiece {
  std::vector<std::vector<Vec2>> outline;  // closed loops, no repeated end point
  std::vector<Marker> markers;
  std::vector<Label> labels;
  double width = 0.0, height = 0.0;
};

// Rigid placement: world = rotate(p, quarter_turns) + offset, where a quarter
// turn maps (x, y) to (h - y, x) for a piece of height h.
struct Placement {
  int piece = 0;
  int sheet = 0;
  int quarter_turns = 0;
  Vec2 offset = Vec2::Zero();
  double width = 0.0, height = 0.0;  // placed box
};

struct SewInfo {
  int label = 0;
  int piece_a = -1, piece_b = -1;
  double length = 0.0;
};

struct CutPlan {
  double bed_width = 1000.0, bed_height = 600.0, spacing = 5.0;
  int sheets = 0;
  std::vector<PlanPiece> pieces;
  std::vector<Placement> placements;  // one per piece, in piece order
  std::vector<SewInfo> sew;
  double zipper_length = 0.0;
  double marker_interval = 50.0;
  int markers_per_side = 0;
  double seam_allowance = 0.0;
};

struct PlanOptions {
  double bed_width = 1000.0, bed_height = 600.0, spacing = 5.0;
  double marker_interval = 50.0;
  double marker_length = 3.0;
  double seam_allowance = 0.0;  // outward flap on cut rulings
};

// Shelf packing by decreasing height with 90 degree turns; opens new sheets as
// needed. Throws Error "piece_too_large" naming the piece.
std::vector<Placement> pack_pieces(const std::vector<Vec2>& sizes, double bed_width, double bed_height,
                                   double spacing);

// Outlines, zipper markers and sew labels of the split pieces, then packing.
CutPlan make_cut_plan(const Ribbon& ribbon, const SplitResult& split, const PlanOptions& options = {});

Vec2 place_point(const Placement& pl, const PlanPiece& piece, const Vec2& p);

int marker_count(double zipper_length, double interval);

nlohmann::json plan_metadata(const CutPlan& plan);
std::string emit_svg(const CutPlan& plan);
std::string emit_dxf(const CutPlan& plan);

}  // namespace zipr
