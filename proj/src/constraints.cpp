#include "zipr/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace zipr {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Builder {
  std::vector<Triplet> trip;
  std::vector<RowInfo> rows;

  // (x_b - x_a) - s (x_d - x_c) = 0 for coordinate k
  void difference(int a, int b, int c, int d, double s, int k, RowInfo info) {
    const int r = static_cast<int>(rows.size());
    trip.emplace_back(r, 2 * b + k, 1.0);
    trip.emplace_back(r, 2 * a + k, -1.0);
    trip.emplace_back(r, 2 * d + k, -s);
    trip.emplace_back(r, 2 * c + k, s);
    rows.push_back(info);
  }
};

}  // namespace

int ConstraintSystem::count(RowTag tag) const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [&](const RowInfo& r) { return r.tag == tag; }));
}

std::string to_string(RowTag tag) {
  switch (tag) {
    case RowTag::Cyl:
      return "Cyl";
    case RowTag::Str:
      return "Str";
    case RowTag::Int:
      return "Int";
  }
  return "?";
}

ConstraintSystem build_constraints(const ChartCut& cut, const ConstraintOptions& opts) {
  Builder b;
  for (const PartChart& c : cut.charts) {
    if (opts.cylinder)
      for (size_t j = 0; j + 1 < c.seam_left.size(); ++j)
        for (int k = 0; k < 2; ++k)
          b.difference(c.seam_left[j], c.seam_left[j + 1], c.seam_right[j], c.seam_right[j + 1], 1.0, k,
                       {RowTag::Cyl, c.part, -1});
    if (opts.straight)
      for (const auto* run : {&c.bottom, &c.top})
        for (size_t i = 0; i + 1 < run->size(); ++i) {
          const int r = static_cast<int>(b.rows.size());
          b.trip.emplace_back(r, 2 * (*run)[i + 1] + 1, 1.0);
          b.trip.emplace_back(r, 2 * (*run)[i] + 1, -1.0);
          b.rows.push_back({RowTag::Str, c.part, -1});
        }
  }
  if (opts.interface)
    for (const TransitionEdge& t : cut.transitions)
      for (int k = 0; k < 2; ++k) b.difference(t.pa, t.pb, t.qa, t.qb, -1.0, k, {RowTag::Int, t.p, t.q});

  ConstraintSystem sys;
  sys.C.resize(static_cast<Eigen::Index>(b.rows.size()), 2 * cut.mesh.num_vertices());
  sys.C.setFromTriplets(b.trip.begin(), b.trip.end());
  sys.C.makeCompressed();
  sys.rows = std::move(b.rows);
  sys.source_row.resize(sys.rows.size());
  for (size_t i = 0; i < sys.rows.size(); ++i) sys.source_row[i] = static_cast<int>(i);
  return sys;
}

ConstraintSystem eliminate_redundant(const ConstraintSystem& sys, double tol) {
  using Row = std::map<int, double>;
  std::map<int, Row> basis;  // pivot column -> reduced row
  std::vector<int> kept;
  for (int r = 0; r < sys.C.rows(); ++r) {
    Row row;
    double scale = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.C, r); it; ++it) {
      row[static_cast<int>(it.col())] += it.value();
      scale = std::max(scale, std::abs(it.value()));
    }
    const double drop = tol * std::max(scale, 1.0);
    while (!row.empty()) {
      const auto last = std::prev(row.end());
      if (std::abs(last->second) <= drop) {
        row.erase(last);
        continue;
      }
      const auto piv = basis.find(last->first);
      if (piv == basis.end()) {
        basis.emplace(last->first, std::move(row));
        kept.push_back(r);
        break;
      }
      const double f = last->second / piv->second.at(last->first);
      for (const auto& [col, v] : piv->second) {
        double& x = row[col];
        x -= f * v;
      }
      row.erase(last->first);
    }
  }

  ConstraintSystem out;
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t i = 0; i < kept.size(); ++i) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.C, kept[i]); it; ++it)
      trip.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
    out.rows.push_back(sys.rows[kept[i]]);
    out.source_row.push_back(kept[i] < static_cast<int>(sys.source_row.size()) ? sys.source_row[kept[i]] : kept[i]);
  }
  out.C.resize(static_cast<Eigen::Index>(kept.size()), sys.C.cols());
  out.C.setFromTriplets(trip.begin(), trip.end());
  out.C.makeCompressed();
  return out;
}

double max_residual(const ConstraintSystem& sys, const Eigen::VectorXd& X) {
  if (sys.C.rows() == 0) return 0.0;
  return (sys.C * X).cwiseAbs().maxCoeff();
}

double max_residual(const ConstraintSystem& sys, const Eigen::VectorXd& X, RowTag tag) {
  const Eigen::VectorXd r = sys.C * X;
  double m = 0.0;
  for (size_t i = 0; i < sys.rows.size(); ++i)
    if (sys.rows[i].tag == tag) m = std::max(m, std::abs(r[static_cast<Eigen::Index>(i)]));
  return m;
}

std::vector<int> gauge_vertices(const ChartCut& cut) {
  std::vector<int> g;
  for (const PartChart& c : cut.charts) g.push_back(c.seam_right.front());
  return g;
}

}  // namespace zipr
