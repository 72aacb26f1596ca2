#include "zipr/solver.hpp"

#include "zipr/tutte.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace zipr {

using nlohmann::json;

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Sparse basis Z of the null space of A, from a reduced row echelon form.
// Pivot variables are expressed through the free ones; column k of Z belongs
// to the k-th free variable.
SpMat null_space_basis(const SpMat& A, double drop_tol = 1e-12) {
  const int n = static_cast<int>(A.cols());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = A;
  std::vector<std::map<int, double>> rows;
  std::vector<int> pivot_row(n, -1);
  std::vector<std::set<int>> col_rows(n);

  for (int r = 0; r < Ar.rows(); ++r) {
    std::map<int, double> row;
    double scale = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, r); it; ++it) {
      row[static_cast<int>(it.col())] += it.value();
      scale = std::max(scale, std::abs(it.value()));
    }
    std::vector<std::pair<int, double>> subs;
    for (const auto& [c, v] : row)
      if (pivot_row[c] >= 0) subs.emplace_back(c, v);
    for (const auto& [c, v] : subs) {
      row.erase(c);
      for (const auto& [c2, v2] : rows[pivot_row[c]]) {
        if (c2 == c) continue;
        row[c2] -= v * v2;
      }
    }
    int q = -1;
    for (auto it = row.begin(); it != row.end();) {
      if (std::abs(it->second) <= drop_tol * std::max(scale, 1.0)) {
        it = row.erase(it);
        continue;
      }
      if (q < 0 || std::abs(it->second) >= std::abs(row[q])) q = it->first;
      ++it;
    }
    if (q < 0) continue;  // dependent
    const double pv = row[q];
    for (auto& [c, v] : row) v /= pv;
    const int id = static_cast<int>(rows.size());
    // clear column q from the other rows
    for (int k : col_rows[q]) {
      std::map<int, double>& other = rows[k];
      const double f = other[q];
      other.erase(q);
      for (const auto& [c, v] : row) {
        if (c == q) continue;
        double& e = other[c];
        e -= f * v;
        if (std::abs(e) <= drop_tol) {
          other.erase(c);
          col_rows[c].erase(k);
        } else {
          col_rows[c].insert(k);
        }
      }
    }
    col_rows[q].clear();
    for (const auto& [c, v] : row)
      if (c != q) col_rows[c].insert(id);
    rows.push_back(std::move(row));
    pivot_row[q] = id;
  }

  std::vector<int> free_index(n, -1);
  int n_free = 0;
  for (int c = 0; c < n; ++c)
    if (pivot_row[c] < 0) free_index[c] = n_free++;
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < n; ++c) {
    if (pivot_row[c] < 0) {
      trip.emplace_back(c, free_index[c], 1.0);
      continue;
    }
    for (const auto& [c2, v] : rows[pivot_row[c]])
      if (c2 != c) trip.emplace_back(c, free_index[c2], -v);
  }
  SpMat Z(n, n_free);
  Z.setFromTriplets(trip.begin(), trip.end());
  Z.makeCompressed();
  return Z;
}

SpMat stack_constraints(const ConstraintSystem& sys, const std::vector<int>& pinned, int n) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < sys.C.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.C, r); it; ++it)
      trip.emplace_back(r, it.col(), it.value());
  int r = static_cast<int>(sys.C.rows());
  for (int v : pinned) {
    trip.emplace_back(r++, 2 * v, 1.0);
    trip.emplace_back(r++, 2 * v + 1, 1.0);
  }
  SpMat A(r, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

void distortion_stats(const DistortionEnergy& en, const Eigen::VectorXd& X, SolverReport& r) {
  const std::vector<double> d = en.per_triangle(X);
  double wsum = 0.0;
  r.d_min = std::numeric_limits<double>::infinity();
  r.d_max = 0.0;
  r.d_mean = 0.0;
  for (size_t f = 0; f < d.size(); ++f) {
    r.d_min = std::min(r.d_min, d[f]);
    r.d_max = std::max(r.d_max, d[f]);
    r.d_mean += en.rest()[f].area * d[f];
    wsum += en.rest()[f].area;
  }
  r.d_mean /= wsum;
}

const char* projection_name(HessianProjection p) {
  switch (p) {
    case HessianProjection::EigenClamp:
      return "eigen_clamp";
    case HessianProjection::EigenAbs:
      return "eigen_abs";
    default:
      return "none";
  }
}

}  // namespace

SolverConfig solver_config_from_json(const json& j) {
  SolverConfig c;
  try {
    c.tolerance = j.value("tolerance", c.tolerance);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.shrink = j.value("shrink", c.shrink);
    c.safety = j.value("safety", c.safety);
    c.armijo = j.value("armijo", c.armijo);
    c.max_step = j.value("max_step", c.max_step);
    const std::string proj = j.value("projection", std::string("eigen_clamp"));
    if (proj == "eigen_clamp")
      c.projection = HessianProjection::EigenClamp;
    else if (proj == "eigen_abs")
      c.projection = HessianProjection::EigenAbs;
    else if (proj == "none")
      c.projection = HessianProjection::None;
    else
      throw Error("bad_config", "unknown Hessian projection '" + proj + "'");
    c.eigen_floor = j.value("eigen_floor", c.eigen_floor);
    c.exact_when_convex = j.value("exact_when_convex", c.exact_when_convex);
  } catch (const json::exception& e) {
    throw Error("bad_config", std::string("malformed solver config: ") + e.what());
  }
  if (!(c.tolerance >= 0.0) || c.max_iterations < 0 || !(c.safety > 0.0 && c.safety < 1.0) ||
      !(c.shrink > 0.0 && c.shrink < 1.0) || !(c.max_step > 0.0))
    throw Error("bad_config", "solver config out of range");
  return c;
}

json to_json(const SolverConfig& c) {
  return {{"tolerance", c.tolerance},
          {"max_iterations", c.max_iterations},
          {"shrink", c.shrink},
          {"safety", c.safety},
          {"armijo", c.armijo},
          {"max_step", c.max_step},
          {"projection", projection_name(c.projection)},
          {"eigen_floor", c.eigen_floor},
          {"exact_when_convex", c.exact_when_convex}};
}

json to_json(const SolverReport& r) {
  return {{"iterations", r.iterations},
          {"energy", r.energy},
          {"gradient_norm", r.gradient_norm},
          {"step", r.step},
          {"tolerance", r.tolerance},
          {"max_residual", r.max_residual},
          {"max_flips", r.max_flips},
          {"distortion", {{"min", r.d_min}, {"mean", r.d_mean}, {"max", r.d_max}}},
          {"converged", r.converged},
          {"status", r.status}};
}

SolverReport solve(const SolverProblem& problem, Eigen::VectorXd& X, const SolverConfig& cfg,
                   const std::function<void(int, double)>& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  const DistortionEnergy& en = *problem.energy;
  const ConstraintSystem& sys = *problem.constraints;
  const int n = static_cast<int>(X.size());

  SolverReport rep;
  rep.tolerance = cfg.tolerance > 0.0 ? cfg.tolerance : 1e-6 * en.total_area() / std::max(1, en.num_faces());

  if (en.count_flips(X) > 0) throw Error("infeasible_start", "initial parameterization has flipped triangles");
  rep.max_residual = max_residual(sys, X);
  if (rep.max_residual > 1e-9) throw Error("infeasible_start", "initial parameterization violates the constraints");

  const SpMat A = stack_constraints(sys, problem.pinned_vertices, n);
  const SpMat Z = null_space_basis(A);
  const SpMat Zt = Z.transpose();
  // Euclidean projection onto the feasible directions: Z (Z^T Z)^-1 Z^T
  Eigen::SimplicialLDLT<SpMat> gram(Zt * Z);
  if (gram.info() != Eigen::Success) throw Error("singular_constraints", "null space basis is degenerate");
  auto project = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return Z * gram.solve(Zt * v); };

  const bool exact = cfg.exact_when_convex && cfg.projection != HessianProjection::None;
  Eigen::VectorXd grad(n);
  SpMat H, H_exact;
  double E = en.energy_gradient_hessian(X, grad, H, cfg.projection, cfg.eigen_floor);
  if (exact) en.energy_gradient_hessian(X, grad, H_exact, HessianProjection::None);
  rep.energy.push_back(E);
  rep.status = "max_iterations";
  Eigen::SimplicialLDLT<SpMat> ldlt;

  for (int it = 0;; ++it) {
    const Eigen::VectorXd pg = project(grad);
    const double gnorm = pg.cwiseAbs().maxCoeff();
    rep.gradient_norm.push_back(gnorm);
    if (gnorm <= rep.tolerance) {
      rep.converged = true;
      rep.status = "converged";
      break;
    }
    if (it >= cfg.max_iterations) break;

    // pg and grad differ by a constraint normal, so Z^T pg = Z^T grad
    const Eigen::VectorXd rhs = -(Zt * pg);
    Eigen::VectorXd dir;
    if (exact) {
      // unmodified Newton step when the reduced Hessian is positive definite
      ldlt.compute(Zt * H_exact * Z);
      if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) dir = Z * ldlt.solve(rhs);
    }
    if (dir.size() != n || !dir.allFinite() || grad.dot(dir) >= 0.0) {
      ldlt.compute(Zt * H * Z);
      if (ldlt.info() == Eigen::Success) dir = Z * ldlt.solve(rhs);
    }
    if (dir.size() != n || !dir.allFinite() || grad.dot(dir) >= 0.0) dir = -pg;
    const double slope = grad.dot(dir);

    double alpha = en.max_flip_free_step(X, dir, cfg.safety, cfg.max_step);
    double dE = 0.0;
    bool accepted = false;
    while (alpha >= cfg.min_step) {
      dE = en.energy_difference(X, alpha * dir);
      if (dE <= cfg.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= cfg.shrink;
    }
    if (!accepted) {
      rep.status = "line_search_stall";
      break;
    }
    X += alpha * dir;
    rep.iterations = it + 1;
    rep.step.push_back(alpha);
    rep.max_flips = std::max(rep.max_flips, en.count_flips(X));
    rep.max_residual = std::max(rep.max_residual, max_residual(sys, X));
    en.energy_gradient_hessian(X, grad, H, cfg.projection, cfg.eigen_floor);
    if (exact) en.energy_gradient_hessian(X, grad, H_exact, HessianProjection::None);
    // accumulate the accurately computed decrease
    E += dE;
    rep.energy.push_back(E);
    if (progress) progress(rep.iterations, E);
  }
  distortion_stats(en, X, rep);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

Parameterization parameterize(const Decomposition& decomp, const SolverConfig& cfg, const ConstraintOptions& opts,
                              const std::function<void(int, double)>& progress) {
  Parameterization p;
  p.cut = cut_into_charts(decomp);
  p.constraints = eliminate_redundant(build_constraints(p.cut, opts));
  p.initial = tutte_initialize(p.cut);
  Eigen::VectorXd X = p.initial;
  const DistortionEnergy energy(p.cut.mesh.positions(), p.cut.mesh.faces());
  SolverProblem prob{&energy, &p.constraints, gauge_vertices(p.cut)};
  p.report = solve(prob, X, cfg, progress);
  p.charts = measure_charts(p.cut, X);
  return p;
}

}  // namespace zipr
