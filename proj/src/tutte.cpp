#include "zipr/tutte.hpp"

#include <Eigen/SparseCholesky>

#include <map>
#include <set>

namespace zipr {

namespace {

std::vector<double> cumulative_length(const SurfaceMesh& m, const std::vector<int>& run) {
  std::vector<double> s{0.0};
  for (size_t i = 0; i + 1 < run.size(); ++i) s.push_back(s.back() + (m.position(run[i + 1]) - m.position(run[i])).norm());
  return s;
}

}  // namespace

Eigen::VectorXd tutte_initialize(const ChartCut& cut) {
  const SurfaceMesh& m = cut.mesh;
  Eigen::VectorXd X = Eigen::VectorXd::Zero(2 * m.num_vertices());

  for (const PartChart& c : cut.charts) {
    const std::vector<double> sb = cumulative_length(m, c.bottom), st = cumulative_length(m, c.top);
    const double period = cut.charts.size() == 1 ? 0.5 * (sb.back() + st.back()) : st.back();
    const double height = c.seam_length;

    std::vector<char> fixed(m.num_vertices(), 0);
    for (size_t i = 0; i < c.bottom.size(); ++i) {
      X[2 * c.bottom[i]] = period * sb[i] / sb.back();
      X[2 * c.bottom[i] + 1] = 0.0;
      fixed[c.bottom[i]] = 1;
    }
    for (size_t i = 0; i < c.top.size(); ++i) {
      X[2 * c.top[i]] = period * st[i] / st.back();
      X[2 * c.top[i] + 1] = height;
      fixed[c.top[i]] = 1;
    }

    // Free classes: interior vertices, and seam pairs (right copy is the
    // representative, the left copy sits one period to the right).
    std::map<int, int> cls;
    std::map<int, double> offset;
    int n_free = 0;
    const size_t n = c.seam_left.size();
    for (size_t j = 1; j + 1 < n; ++j) {
      cls[c.seam_right[j]] = n_free;
      cls[c.seam_left[j]] = n_free;
      offset[c.seam_left[j]] = period;
      ++n_free;
    }
    std::set<int> seam_side;
    for (size_t j = 0; j < n; ++j) {
      seam_side.insert(c.seam_left[j]);
      seam_side.insert(c.seam_right[j]);
    }
    for (int v : c.vertices)
      if (!fixed[v] && !cls.count(v)) cls[v] = n_free++;
    if (n_free == 0) continue;

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_free, 2);
    std::set<std::pair<int, int>> edges;
    for (int f : c.faces)
      for (int k = 0; k < 3; ++k) {
        const int a = m.face(f)[k], b = m.face(f)[(k + 1) % 3];
        edges.insert(std::minmax(a, b));
      }
    auto off = [&](int v) {
      const auto it = offset.find(v);
      return it == offset.end() ? 0.0 : it->second;
    };
    for (const auto& [a, b] : edges) {
      // edges along the seam are seen from both copies
      const bool seam_edge = m.is_boundary_edge(m.find_edge(a, b)) && seam_side.count(a) && seam_side.count(b);
      const double w = seam_edge ? 0.5 : 1.0;
      for (const auto& [v, u] : {std::pair{a, b}, std::pair{b, a}}) {
        const auto cv = cls.find(v);
        if (cv == cls.end()) continue;
        const int i = cv->second;
        trip.emplace_back(i, i, w);
        // w * (pos_u - pos_v) with pos_v = z_i + off_v
        rhs(i, 0) -= w * off(v);
        const auto cu = cls.find(u);
        if (cu != cls.end()) {
          trip.emplace_back(i, cu->second, -w);
          rhs(i, 0) += w * off(u);
        } else {
          rhs(i, 0) += w * X[2 * u];
          rhs(i, 1) += w * X[2 * u + 1];
        }
      }
    }
    Eigen::SparseMatrix<double> L(n_free, n_free);
    L.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success)
      throw Error("tutte_singular", "Tutte system of part " + std::to_string(c.part) + " is singular");
    const Eigen::MatrixXd z = solver.solve(rhs);
    for (const auto& [v, i] : cls) {
      X[2 * v] = z(i, 0) + off(v);
      X[2 * v + 1] = z(i, 1);
    }
  }
  return X;
}

}  // namespace zipr
