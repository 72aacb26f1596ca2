#pragma once

#include "zipr/charts.hpp"
#include "zipr/decomposition.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace zipr {

enum class BoundaryRole { Start, End, FermatTurn };

// Design choices for one spiral. Part-indexed vectors may be empty (defaults)
// or sized to the number of parts.
struct SpiralSpec {
  std::vector<int> traversal;  // empty: the decomposition's traversal
  std::vector<int> windings;   // per part, >= 1; empty: 1 everywhere
  // Per traversal step k (part traversal[k] -> traversal[k+1]): loop arc length
  // on the transition loop of traversal[k]. Default: midpoint of the longest
  // shared interface arc, or the Fermat scan.
  std::vector<std::optional<double>> crossings;
  // Per part: turn points x1, x2 of a Fermat part, measured along the open
  // boundary from the chart's bottom-left corner, in [0, period].
  std::vector<std::optional<std::array<double, 2>>> turns;
  // Single part only: start offset along the bottom boundary.
  double start = 0.0;
};

SpiralSpec spiral_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpiralSpec& spec);

// Straight segment in the copy-extended domain of a part: chart coordinates
// plus any multiple of the period in x.
struct ParamLine {
  int part = 0;
  int index = 1;             // 1 or 2 (second line of a Fermat part); 0 for a run along the open boundary
  Vec2 a = Vec2::Zero(), b = Vec2::Zero();
};

struct Crossing {
  int from = 0, to = 0;      // parts
  double s = 0.0;            // arc length on the transition loop of `from`
  int halfedge = -1;         // decomposition halfedge in `from` containing the point
  double t = 0.0;            // position along that halfedge
  Vec2 uv_from = Vec2::Zero(), uv_to = Vec2::Zero();
  Vec3 position = Vec3::Zero();
};

struct SpiralPlan {
  std::vector<int> traversal;
  std::vector<int> windings;
  std::vector<BoundaryRole> roles;  // per part, role of its open loop
  std::vector<Crossing> crossings;
  std::vector<std::array<double, 2>> turns;  // per part; meaningful for Fermat parts
  std::vector<ParamLine> lines;     // in curve order
  std::vector<std::string> warnings;
};

std::string to_string(BoundaryRole role);

// Throws Error "bad_spiral_spec", "bad_traversal" or "self_intersecting_curve".
SpiralPlan plan_lines(const SpiralSpec& spec, const Decomposition& decomp, const ChartCut& cut, const Charts& charts);

nlohmann::json to_json(const SpiralPlan& plan);

struct CurveSample {
  int face = -1;             // decomposition-mesh face (= chart-cut face)
  Vec3 bary = Vec3::Zero();  // with respect to the face's corners
  Vec3 position = Vec3::Zero();
  int part = -1;
  int line = -1;             // index into SpiralPlan::lines
  Vec2 uv = Vec2::Zero();    // copy-extended chart coordinates
};

struct SurfaceCurve {
  std::vector<CurveSample> samples;
  double length = 0.0;
};

nlohmann::json to_json(const SurfaceCurve& curve);

// Point location in the chart of one part with the period wrap.
class ChartLocator {
public:
  ChartLocator(const Decomposition& decomp, const ChartCut& cut, const Charts& charts);

  struct Hit {
    int face = -1;
    Vec3 bary = Vec3::Zero();
    double shift = 0.0;  // copy offset in x: uv = chart point + (shift, 0)
  };
  // All faces of the part containing uv within the barycentric tolerance.
  std::vector<Hit> locate_all(int part, const Vec2& uv, double tol = 1e-9) const;
  // Throws Error "point_location" when uv is outside the chart.
  Hit locate(int part, const Vec2& uv, double tol = 1e-9) const;
  Vec3 lift(int part, const Vec2& uv) const;

  Vec2 corner_uv(int face, int k) const;
  double period(int part) const { return charts_->period[part]; }

private:
  const Decomposition* decomp_;
  const ChartCut* cut_;
  const Charts* charts_;
  struct Grid {
    double x0 = 0, y0 = 0, cell = 1, xmax = 0;
    int nx = 1, ny = 1;
    std::vector<std::vector<int>> cells;
  };
  std::vector<Grid> grids_;
};

// Intersects the lines with the chart triangulation and lifts them. Consecutive
// samples share a face or an edge.
SurfaceCurve trace_curve(const SpiralPlan& plan, const Decomposition& decomp, const ChartCut& cut,
                         const Charts& charts);

struct CurveQuality {
  int spacing_samples = 0;
  double spacing_mean = 0.0, spacing_std = 0.0, spacing_cv = 0.0, spacing_min = 0.0, spacing_max = 0.0;
  // Geodesic turning angles (radians) of the curve resampled at `resample_step`.
  double resample_step = 0.0;
  std::vector<double> turning;
  double turning_median = 0.0, turning_max = 0.0;
  std::vector<double> histogram_edges;  // degrees
  std::vector<int> histogram;
  std::vector<double> crossing_turning;  // largest turning near each transition crossing
  double length = 0.0;
};

CurveQuality curve_quality(const SurfaceCurve& curve, const SpiralPlan& plan, const Decomposition& decomp,
                           const ChartCut& cut, const Charts& charts, int rulings_per_period = 64);

nlohmann::json to_json(const CurveQuality& q);

}  // namespace zipr
