#pragma once

#include "zipr/charts.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace zipr {

enum class RowTag { Cyl, Str, Int };

struct RowInfo {
  RowTag tag = RowTag::Cyl;
  int part = -1;
  int other_part = -1;  // Int only
};

// Homogeneous linear equalities C X = 0 over the chart coordinates.
struct ConstraintSystem {
  Eigen::SparseMatrix<double, Eigen::RowMajor> C;
  std::vector<RowInfo> rows;
  std::vector<int> source_row;  // after elimination: index of the kept original row

  int num_rows() const { return static_cast<int>(C.rows()); }
  int count(RowTag tag) const;
};

struct ConstraintOptions {
  bool cylinder = true;
  bool straight = true;
  bool interface = true;
};

// Cyl: the two copies of every seam edge have equal uv vectors.
// Str: every bottom and top run edge is horizontal.
// Int: the two copies of every transition edge have opposite uv vectors.
ConstraintSystem build_constraints(const ChartCut& cut, const ConstraintOptions& opts = {});

// Keeps a maximal independent subset of rows (Gaussian elimination with
// pivots at the largest column index), in original order.
ConstraintSystem eliminate_redundant(const ConstraintSystem& sys, double tol = 1e-10);

double max_residual(const ConstraintSystem& sys, const Eigen::VectorXd& X);
double max_residual(const ConstraintSystem& sys, const Eigen::VectorXd& X, RowTag tag);

// One gauge vertex per part (bottom-left corner of each chart).
std::vector<int> gauge_vertices(const ChartCut& cut);

std::string to_string(RowTag tag);

}  // namespace zipr
