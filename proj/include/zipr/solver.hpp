#pragma once

#include "zipr/charts.hpp"
#include "zipr/constraints.hpp"
#include "zipr/distortion.hpp"

#include "json.hpp"

#include <functional>
#include <string>

namespace zipr {

struct SolverConfig {
  double tolerance = 0.0;  // projected-gradient inf-norm; 0 selects 1e-6 * mean triangle area
  int max_iterations = 100;
  double shrink = 0.5;
  double safety = 0.9;
  double armijo = 1e-4;
  double max_step = 1.0;
  double min_step = 1e-16;
  HessianProjection projection = HessianProjection::EigenClamp;
  double eigen_floor = 1e-9;
  // take the unmodified Newton step whenever the reduced Hessian is positive definite
  bool exact_when_convex = true;
};

SolverConfig solver_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SolverConfig& cfg);

struct SolverReport {
  int iterations = 0;
  std::vector<double> energy;         // per accepted iterate, starting with the initial state
  std::vector<double> gradient_norm;  // projected gradient inf-norm per iterate
  std::vector<double> step;
  double tolerance = 0.0;
  double max_residual = 0.0;          // worst over all accepted iterates
  int max_flips = 0;                  // worst over all accepted iterates
  double d_min = 0.0, d_mean = 0.0, d_max = 0.0;
  double seconds = 0.0;
  bool converged = false;
  std::string status;                 // converged | max_iterations | line_search_stall
};

nlohmann::json to_json(const SolverReport& r);

struct SolverProblem {
  const DistortionEnergy* energy = nullptr;
  const ConstraintSystem* constraints = nullptr;  // eliminated
  std::vector<int> pinned_vertices;
};

// Projected Newton with linear equality constraints. X must be feasible and
// flip free; every accepted iterate stays so and lowers the energy.
SolverReport solve(const SolverProblem& problem, Eigen::VectorXd& X, const SolverConfig& cfg,
                   const std::function<void(int, double)>& progress = {});

struct Parameterization {
  ChartCut cut;
  ConstraintSystem constraints;  // eliminated
  Eigen::VectorXd initial;       // Tutte
  Charts charts;
  SolverReport report;
};

Parameterization parameterize(const Decomposition& decomp, const SolverConfig& cfg,
                              const ConstraintOptions& opts = {},
                              const std::function<void(int, double)>& progress = {});

}  // namespace zipr
