#pragma once

#include "zipr/layout.hpp"
#include "zipr/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace zipr {

// Project directory with fixed file names. Every stage reads its inputs from
// the directory and writes its artifacts back; writing a stage removes the
// artifacts of all later stages.
namespace project {

inline constexpr const char* kMesh = "mesh.obj";
inline constexpr const char* kSeg = "seg.json";
inline constexpr const char* kSpec = "spec.json";
inline constexpr const char* kCharts = "charts.json";
inline constexpr const char* kCurve = "curve.json";
inline constexpr const char* kCurveObj = "curve.obj";
inline constexpr const char* kRibbon = "ribbon.obj";
inline constexpr const char* kFlat = "flat.obj";
inline constexpr const char* kPlanSvg = "plan.svg";
inline constexpr const char* kPlanDxf = "plan.dxf";
inline constexpr const char* kDecompReport = "reports/decomposition.json";
inline constexpr const char* kSolverReport = "reports/solver.json";
inline constexpr const char* kQualityReport = "reports/curve_quality.json";
inline constexpr const char* kRibbonData = "reports/ribbon.json";
inline constexpr const char* kRibbonReport = "reports/ribbon_check.json";
inline constexpr const char* kPlanReport = "reports/plan.json";

enum class Stage { Decompose, Param, Spiral, Ribbon, Export };

std::string stage_name(Stage s);
// Artifacts written by a stage.
std::vector<std::string> stage_outputs(Stage s);
// ready: every output present; stale: some missing.
nlohmann::json artifact_status(const std::filesystem::path& dir);

}  // namespace project

// Topology summary of a mesh file.
nlohmann::json check_mesh(const SurfaceMesh& mesh);

// Copies the mesh (and segmentation) into the project and validates it.
// Throws the decomposition errors.
nlohmann::json run_decompose(const std::filesystem::path& dir, const SurfaceMesh& mesh, const Segmentation& seg);

// mesh.obj with seg.json (empty segmentation when absent). Throws "stage_order"
// without a mesh and the decomposition errors.
Decomposition load_decomposition(const std::filesystem::path& dir);

struct ParamOptions {
  SolverConfig solver;
  ConstraintOptions constraints;
};

ParamOptions param_options_from_json(const nlohmann::json& j);

// Reads mesh.obj and seg.json (empty segmentation when absent), solves and
// writes charts.json and the solver report. The report omits wall time.
nlohmann::json run_param(const std::filesystem::path& dir, const ParamOptions& opts = {},
                         const std::function<void(int, double)>& progress = {});

// Uses `spec` when given (and stores it), otherwise spec.json or the default.
nlohmann::json run_spiral(const std::filesystem::path& dir, const std::optional<SpiralSpec>& spec = std::nullopt);

nlohmann::json run_ribbon(const std::filesystem::path& dir, const RibbonConfig& cfg = {});

struct ExportOptions {
  PlanOptions plan;
  SplitPolicy split;  // bed and spacing are taken from `plan`
  std::string format = "svg";
};

ExportOptions export_options_from_json(const nlohmann::json& j);
// "WxH" in mm.
void parse_bed(const std::string& text, double& width, double& height);

// Returns the plan file contents; also written to plan.svg or plan.dxf.
std::string run_export(const std::filesystem::path& dir, const ExportOptions& opts = {});

// Mesh as flat arrays for previews.
nlohmann::json mesh_arrays(const std::vector<Vec3>& positions, const std::vector<Tri>& faces);
nlohmann::json mesh_arrays(const std::vector<Vec2>& positions, const std::vector<Tri>& faces);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace zipr
