#include "zipr/constraints.hpp"
#include "zipr/distortion.hpp"
#include "zipr/generators.hpp"
#include "zipr/solver.hpp"
#include "zipr/tutte.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>

using namespace zipr;

namespace {

using Rational = boost::multiprecision::cpp_rational;

Decomposition tube_decomposition(int n_around, int n_height, double radius, double height, double noise = 0.0) {
  SurfaceMesh m = make_tube(n_around, n_height, radius, height, noise, 3);
  Segmentation seg;
  return apply_segmentation(m, seg);
}

// exact rank by fraction-free elimination
int rational_rank(const Eigen::SparseMatrix<double, Eigen::RowMajor>& C) {
  std::vector<std::vector<Rational>> a(C.rows(), std::vector<Rational>(C.cols(), 0));
  for (int r = 0; r < C.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(C, r); it; ++it) {
      const double v = it.value();
      EXPECT_EQ(v, std::round(v));
      a[r][it.col()] = Rational(static_cast<long long>(std::llround(v)));
    }
  int rank = 0;
  const int rows = static_cast<int>(a.size()), cols = static_cast<int>(C.cols());
  for (int c = 0; c < cols && rank < rows; ++c) {
    int p = -1;
    for (int r = rank; r < rows; ++r)
      if (a[r][c] != 0) {
        p = r;
        break;
      }
    if (p < 0) continue;
    std::swap(a[p], a[rank]);
    for (int r = rank + 1; r < rows; ++r) {
      if (a[r][c] == 0) continue;
      const Rational f = a[r][c] / a[rank][c];
      for (int k = c; k < cols; ++k)
        if (a[rank][k] != 0) a[r][k] -= f * a[rank][k];
    }
    ++rank;
  }
  return rank;
}

Eigen::MatrixXd null_space(const Eigen::SparseMatrix<double, Eigen::RowMajor>& C) {
  const Eigen::MatrixXd D = Eigen::MatrixXd(C);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
  return lu.kernel();
}

double det2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// random flip-free perturbation of a valid chart layout
Eigen::VectorXd perturbed(const DistortionEnergy& en, const Eigen::VectorXd& X0, double amp, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Eigen::VectorXd X = X0;
    for (int i = 0; i < X.size(); ++i) X[i] += amp * u(rng);
    if (en.count_flips(X) == 0) return X;
    amp *= 0.5;
  }
}

}  // namespace

TEST(Distortion, Examples) {
  const Vec3 p0(0, 0, 0), p1(1, 0, 0), p2(0, 1, 0);
  EXPECT_NEAR(triangle_distortion(p0, p1, p2, Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)), 4.0, 1e-12);
  EXPECT_NEAR(triangle_distortion(p0, p1, p2, Vec2(0, 0), Vec2(2, 0), Vec2(0, 2)), 8.5, 1e-12);
  EXPECT_NEAR(triangle_distortion(p0, p1, p2, Vec2(0, 0), Vec2(2, 0), Vec2(0, 1)), 6.25, 1e-12);
  EXPECT_TRUE(std::isinf(triangle_distortion(p0, p1, p2, Vec2(0, 0), Vec2(0, 1), Vec2(1, 0))));
  EXPECT_TRUE(std::isinf(triangle_distortion(p0, p1, p2, Vec2(0, 0), Vec2(1, 0), Vec2(2, 0))));
}

TEST(Distortion, RigidMotionsGiveFour) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 p0(u(rng), u(rng), u(rng)), p1(u(rng), u(rng), u(rng)), p2(u(rng), u(rng), u(rng));
    // isometric 2D embedding, then rotate and translate
    const Vec3 e1 = p1 - p0, e2 = p2 - p0;
    const double l1 = e1.norm();
    const Vec2 a(l1, 0), b(e1.dot(e2) / l1, e1.cross(e2).norm() / l1);
    const double th = 3.0 * u(rng);
    Eigen::Matrix2d R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Vec2 t(u(rng), u(rng));
    EXPECT_NEAR(triangle_distortion(p0, p1, p2, t, R * a + t, R * b + t), 4.0, 1e-9);
  }
}

TEST(Distortion, MatchesSingularValues) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 p0(0, 0, 0), p1(1 + 0.5 * u(rng), 0, 0), p2(0.3 * u(rng), 1 + 0.5 * u(rng), 0);
    const Vec2 q0(u(rng), u(rng)), q1(u(rng), u(rng)), q2(u(rng), u(rng));
    const double d = triangle_distortion(p0, p1, p2, q0, q1, q2);
    Eigen::Matrix2d P, Q;
    P << p1.x() - p0.x(), p2.x() - p0.x(), p1.y() - p0.y(), p2.y() - p0.y();
    Q << q1 - q0, q2 - q0;
    const Eigen::Matrix2d J = Q * P.inverse();
    if (J.determinant() <= 0) {
      EXPECT_TRUE(std::isinf(d));
      continue;
    }
    const Eigen::Vector2d s = Eigen::JacobiSVD<Eigen::Matrix2d>(J).singularValues();
    const double expected = s[0] * s[0] + s[1] * s[1] + 1 / (s[0] * s[0]) + 1 / (s[1] * s[1]);
    EXPECT_NEAR(d, expected, 1e-9 * expected);
    EXPECT_GE(d, 4.0 - 1e-12);
  }
}

TEST(Energy, IsometricFlatPatchIsOptimal) {
  // planar grid, uv = its own coordinates
  std::vector<Vec3> pos;
  std::vector<Tri> faces;
  const int n = 6;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) pos.emplace_back(0.3 * i + 0.05 * j, 0.25 * j, 0.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i, b = a + 1, c = a + n + 1, d = c + 1;
      faces.push_back({a, b, d});
      faces.push_back({a, d, c});
    }
  const DistortionEnergy en(pos, faces);
  Eigen::VectorXd X(2 * pos.size());
  for (size_t v = 0; v < pos.size(); ++v) X.segment<2>(2 * v) = pos[v].head<2>();
  Eigen::VectorXd g;
  EXPECT_NEAR(en.energy_gradient(X, g), 4.0 * en.total_area(), 1e-12);
  EXPECT_LE(g.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Energy, PerturbedSquareIsAboveMinimum) {
  const std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  const std::vector<Tri> faces{{0, 1, 2}, {0, 2, 3}};
  const DistortionEnergy en(pos, faces);
  Eigen::VectorXd X(8);
  X << 0, 0, 1, 0, 1.02, 0.97, 0, 1;
  EXPECT_GT(en.energy(X), 4.0 * en.total_area());
  X << 0, 0, 1, 0, 1, 1, 0, 1;
  EXPECT_NEAR(en.energy(X), 4.0 * en.total_area(), 1e-12);
  X << 0, 0, 1, 0, -1, -1, 0, 1;
  EXPECT_TRUE(std::isinf(en.energy(X)));
}

class SmallTube : public ::testing::Test {
protected:
  void SetUp() override {
    decomp = tube_decomposition(5, 5, 1.0, 1.5);
    cut = cut_into_charts(decomp);
    energy = std::make_unique<DistortionEnergy>(cut.mesh.positions(), cut.mesh.faces());
    X0 = tutte_initialize(cut);
  }
  Decomposition decomp;
  ChartCut cut;
  std::unique_ptr<DistortionEnergy> energy;
  Eigen::VectorXd X0;
};

TEST_F(SmallTube, FiftyTriangles) { EXPECT_EQ(energy->num_faces(), 50); }

TEST_F(SmallTube, GradientMatchesCentralDifferences) {
  std::mt19937 rng(11);
  const Eigen::Vector2d lo(X0(Eigen::seq(0, Eigen::last, 2)).minCoeff(), X0(Eigen::seq(1, Eigen::last, 2)).minCoeff());
  const Eigen::Vector2d hi(X0(Eigen::seq(0, Eigen::last, 2)).maxCoeff(), X0(Eigen::seq(1, Eigen::last, 2)).maxCoeff());
  const double h = 1e-6 * (hi - lo).norm();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd X = perturbed(*energy, X0, 0.08, rng);
    Eigen::VectorXd g;
    energy->energy_gradient(X, g);
    Eigen::VectorXd fd(X.size());
    for (int i = 0; i < X.size(); ++i) {
      Eigen::VectorXd a = X, b = X;
      a[i] += h;
      b[i] -= h;
      fd[i] = (energy->energy(a) - energy->energy(b)) / (2 * h);
    }
    worst = std::max(worst, (fd - g).norm() / g.norm());
  }
  EXPECT_LE(worst, 1e-5);
}

TEST_F(SmallTube, HessianMatchesGradientDifferences) {
  std::mt19937 rng(12);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd X = perturbed(*energy, X0, 0.08, rng);
    Eigen::VectorXd g;
    Eigen::SparseMatrix<double> H;
    energy->energy_gradient_hessian(X, g, H, HessianProjection::None);
    const Eigen::MatrixXd Hd(H);
    Eigen::MatrixXd fd(X.size(), X.size());
    for (int i = 0; i < X.size(); ++i) {
      Eigen::VectorXd a = X, b = X, ga, gb;
      a[i] += h;
      b[i] -= h;
      energy->energy_gradient(a, ga);
      energy->energy_gradient(b, gb);
      fd.col(i) = (ga - gb) / (2 * h);
    }
    EXPECT_LE((fd - Hd).norm() / Hd.norm(), 1e-6);
    EXPECT_LE((Hd - Hd.transpose()).norm(), 1e-12 * Hd.norm());
  }
}

TEST_F(SmallTube, ClampedHessianIsPositiveSemidefinite) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd X = perturbed(*energy, X0, 0.15, rng);
    Eigen::VectorXd g, g2;
    Eigen::SparseMatrix<double> H, He;
    const double e1 = energy->energy_gradient_hessian(X, g, H, HessianProjection::EigenClamp, 1e-9);
    const double e2 = energy->energy_gradient_hessian(X, g2, He, HessianProjection::None);
    EXPECT_EQ(e1, e2);
    EXPECT_EQ((g - g2).norm(), 0.0);
    const Eigen::MatrixXd Hd(H);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Hd).eigenvalues();
    EXPECT_GE(ev.minCoeff(), -1e-10 * ev.cwiseAbs().maxCoeff());
  }
}

TEST_F(SmallTube, EnergyDifferenceMatchesDirectEvaluation) {
  std::mt19937 rng(14);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd X = perturbed(*energy, X0, 0.05, rng);
    Eigen::VectorXd step(X.size());
    for (int i = 0; i < step.size(); ++i) step[i] = 0.01 * nd(rng);
    const double direct = energy->energy(X + step) - energy->energy(X);
    if (std::isinf(direct)) continue;
    EXPECT_NEAR(energy->energy_difference(X, step), direct, 1e-10 * energy->energy(X));
  }
}

TEST(FlipFreeStep, Examples) {
  const std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const DistortionEnergy en(pos, {{0, 1, 2}});
  Eigen::VectorXd X(6);
  X << 0, 0, 1, 0, 0, 1;
  EXPECT_EQ(en.max_flip_free_step(X, Eigen::VectorXd::Zero(6), 0.9, 1.0), 1.0);
  Eigen::VectorXd translate(6);
  translate << 3, -2, 3, -2, 3, -2;
  EXPECT_EQ(en.max_flip_free_step(X, translate, 0.9, 1.0), 1.0);
  // vertex 2 reflected through the x axis: det = 1 - 2 alpha... scaled so it vanishes at alpha = 1
  Eigen::VectorXd reflect = Eigen::VectorXd::Zero(6);
  reflect[5] = -1.0;
  EXPECT_NEAR(en.max_flip_free_step(X, reflect, 0.9, 5.0), 0.9, 1e-15);
  EXPECT_NEAR(en.max_flip_free_step(X, reflect, 0.9, 0.5), 0.5, 1e-15);
}

TEST(FlipFreeStep, MatchesQuadraticFormula) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const DistortionEnergy en(pos, {{0, 1, 2}});
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd X(6), d(6);
    X << 0, 0, 1 + 0.2 * u(rng), 0.1 * u(rng), 0.1 * u(rng), 1 + 0.2 * u(rng);
    for (int i = 0; i < 6; ++i) d[i] = 3 * u(rng);
    const Vec2 a = X.segment<2>(2) - X.segment<2>(0), b = X.segment<2>(4) - X.segment<2>(0);
    const Vec2 da = d.segment<2>(2) - d.segment<2>(0), db = d.segment<2>(4) - d.segment<2>(0);
    const double A = det2(da, db), B = det2(a, db) + det2(da, b), C = det2(a, b);
    double root = INFINITY;
    const double disc = B * B - 4 * A * C;
    if (std::abs(A) < 1e-14) {
      if (B != 0 && -C / B > 0) root = -C / B;
    } else if (disc >= 0) {
      for (double r : {(-B - std::sqrt(disc)) / (2 * A), (-B + std::sqrt(disc)) / (2 * A)})
        if (r > 0) root = std::min(root, r);
    }
    const double expected = std::isinf(root) ? 10.0 : std::min(10.0, 0.9 * root);
    EXPECT_NEAR(en.max_flip_free_step(X, d, 0.9, 10.0), expected, 1e-9 * expected);
  }
}

TEST(Constraints, TubeCounts) {
  const Decomposition d = tube_decomposition(12, 7, 1.0, 2.0);
  const ChartCut cut = cut_into_charts(d);
  const ConstraintSystem sys = build_constraints(cut);
  const PartChart& c = cut.charts[0];
  const int n = static_cast<int>(c.seam_left.size());
  EXPECT_EQ(n, 8);
  EXPECT_EQ(sys.count(RowTag::Cyl), 2 * (n - 1));
  EXPECT_EQ(sys.count(RowTag::Str), (static_cast<int>(c.top.size()) - 1) + (static_cast<int>(c.bottom.size()) - 1));
  EXPECT_EQ(sys.count(RowTag::Str), 24);
  EXPECT_EQ(sys.count(RowTag::Int), 0);
}

TEST(Constraints, TwoPartChainCounts) {
  const Fixture fx = make_tube_chain(10, 6, 2, 1.0, 3.0);
  const ChartCut cut = cut_into_charts(apply_segmentation(fx.mesh, fx.seg));
  const ConstraintSystem sys = build_constraints(cut);
  // the shared loop has s = 11 vertices counting the closing repeat
  EXPECT_EQ(sys.count(RowTag::Int), 2 * (11 - 1));
  int cyl = 0, str = 0;
  for (const PartChart& c : cut.charts) {
    cyl += 2 * (static_cast<int>(c.seam_left.size()) - 1);
    str += static_cast<int>(c.bottom.size() + c.top.size()) - 2;
  }
  EXPECT_EQ(sys.count(RowTag::Cyl), cyl);
  EXPECT_EQ(sys.count(RowTag::Str), str);
}

TEST(Constraints, TShapeToyCounts) {
  const Fixture fx = make_t_shape(16, 4);
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  const ChartCut cut = cut_into_charts(d);
  const ConstraintSystem sys = build_constraints(cut);
  ASSERT_EQ(cut.charts.size(), 3u);
  // enumerate seams and loop edges directly on the decomposition
  int seam_edges = 0, loop_edges = 0, transition_edges = 0;
  for (const PartChart& c : cut.charts) seam_edges += static_cast<int>(c.seam_path.size()) - 1;
  for (const CylinderPart& p : d.parts)
    for (const PartLoop& l : p.loops) loop_edges += static_cast<int>(l.halfedges.size());
  for (int e = 0; e < d.mesh.num_edges(); ++e) transition_edges += d.edge_is_transition[e];
  EXPECT_EQ(sys.count(RowTag::Cyl), 2 * seam_edges);
  EXPECT_EQ(sys.count(RowTag::Str), loop_edges);
  EXPECT_EQ(sys.count(RowTag::Int), 2 * transition_edges);
  EXPECT_EQ(static_cast<int>(sys.rows.size()), sys.num_rows());
}

TEST(Constraints, EliminationMatchesExactRank) {
  for (const Fixture& fx : {make_tube_chain(6, 4, 2, 1.0, 2.0), make_t_shape(16, 4)}) {
    const ChartCut cut = cut_into_charts(apply_segmentation(fx.mesh, fx.seg));
    const ConstraintSystem sys = build_constraints(cut);
    const ConstraintSystem red = eliminate_redundant(sys);
    const int rank = rational_rank(sys.C);
    EXPECT_EQ(red.num_rows(), rank);
    EXPECT_EQ(rational_rank(red.C), red.num_rows());
    // straight rows on both sides of an interface are partly implied by Int
    EXPECT_LT(red.count(RowTag::Str), sys.count(RowTag::Str));
  }
}

TEST(Constraints, EliminationKeepsSolutionSet) {
  const Fixture fx = make_tube_chain(6, 4, 2, 1.0, 2.0);
  const ChartCut cut = cut_into_charts(apply_segmentation(fx.mesh, fx.seg));
  const ConstraintSystem sys = build_constraints(cut);
  const ConstraintSystem red = eliminate_redundant(sys);
  const Eigen::MatrixXd Norig = null_space(sys.C), Nred = null_space(red.C);
  EXPECT_EQ(Norig.cols(), Nred.cols());
  std::mt19937 rng(31);
  std::normal_distribution<double> nd;
  const int n = static_cast<int>(sys.C.cols());
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd coef(Nred.cols());
    for (int i = 0; i < coef.size(); ++i) coef[i] = nd(rng);
    const Eigen::VectorXd X = Nred * coef;
    EXPECT_LE(max_residual(red, X), 1e-12);
    EXPECT_LE(max_residual(sys, X), 1e-12);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) Y[i] = nd(rng);
    EXPECT_GT(max_residual(red, Y), 1e-12);
    EXPECT_GT(max_residual(sys, Y), 1e-12);
  }
}

TEST(Constraints, DuplicateRowIsDropped) {
  const Decomposition d = tube_decomposition(8, 4, 1.0, 2.0);
  const ConstraintSystem sys = build_constraints(cut_into_charts(d));
  const ConstraintSystem red = eliminate_redundant(sys);
  ConstraintSystem dup = sys;
  Eigen::SparseMatrix<double, Eigen::RowMajor> C(sys.C.rows() + 1, sys.C.cols());
  std::vector<Eigen::Triplet<double>> trip;
  for (int r = 0; r < sys.C.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.C, r); it; ++it) {
      trip.emplace_back(r, it.col(), it.value());
      if (r == 3) trip.emplace_back(sys.C.rows(), it.col(), -2.0 * it.value());
    }
  C.setFromTriplets(trip.begin(), trip.end());
  dup.C = C;
  dup.rows.push_back(sys.rows[3]);
  EXPECT_EQ(eliminate_redundant(dup).num_rows(), red.num_rows());
}

TEST(Constraints, FullRankSystemUnchanged) {
  Eigen::SparseMatrix<double, Eigen::RowMajor> C(3, 6);
  std::vector<Eigen::Triplet<double>> trip{{0, 0, 1}, {0, 2, -1}, {1, 1, 1}, {1, 3, -1}, {2, 4, 1}, {2, 5, 1}};
  C.setFromTriplets(trip.begin(), trip.end());
  ConstraintSystem sys;
  sys.C = C;
  sys.rows.assign(3, RowInfo{});
  const ConstraintSystem red = eliminate_redundant(sys);
  EXPECT_EQ(red.num_rows(), 3);
  EXPECT_EQ(Eigen::MatrixXd(red.C), Eigen::MatrixXd(C));
}

TEST(Tutte, RegularTubeIsRectangle) {
  const Decomposition d = tube_decomposition(20, 20, 1.0, 3.0);
  const ChartCut cut = cut_into_charts(d);
  const Eigen::VectorXd X = tutte_initialize(cut);
  const ConstraintSystem sys = build_constraints(cut);
  EXPECT_LE(max_residual(sys, X, RowTag::Cyl), 1e-10);
  EXPECT_LE(max_residual(sys, X, RowTag::Str), 1e-10);
  const DistortionEnergy en(cut.mesh.positions(), cut.mesh.faces());
  EXPECT_EQ(en.count_flips(X), 0);
  const PartChart& c = cut.charts[0];
  const Charts ch = measure_charts(cut, X);
  // corners of an axis-aligned rectangle
  EXPECT_NEAR(X[2 * c.bottom.front()], X[2 * c.top.front()], 1e-10);
  EXPECT_NEAR(X[2 * c.bottom.back()], X[2 * c.top.back()], 1e-10);
  for (size_t j = 0; j < c.seam_left.size(); ++j) {
    EXPECT_NEAR(X[2 * c.seam_left[j]] - X[2 * c.seam_right[j]], ch.period[0], 1e-10);
    EXPECT_NEAR(X[2 * c.seam_right[j]], X[2 * c.seam_right[0]], 1e-9);
  }
  EXPECT_NEAR(ch.period[0], 20 * 2 * std::sin(M_PI / 20), 1e-9);
  EXPECT_NEAR(ch.height[0], 3.0, 1e-9);
}

TEST(Tutte, NoisyTubeHasNoFlips) {
  const Decomposition d = tube_decomposition(20, 20, 1.0, 3.0, 0.15);
  const ChartCut cut = cut_into_charts(d);
  const Eigen::VectorXd X = tutte_initialize(cut);
  const DistortionEnergy en(cut.mesh.positions(), cut.mesh.faces());
  int negative = 0;
  for (const Tri& t : cut.mesh.faces()) {
    const Vec2 a = X.segment<2>(2 * t[1]) - X.segment<2>(2 * t[0]), b = X.segment<2>(2 * t[2]) - X.segment<2>(2 * t[0]);
    negative += det2(a, b) <= 0;
  }
  EXPECT_EQ(negative, 0);
  EXPECT_LE(max_residual(build_constraints(cut), X), 1e-10);
}

TEST(Tutte, MultiPartFixturesAreFeasible) {
  for (const std::string name : {"t-shape", "three-chain", "two-part"}) {
    SCOPED_TRACE(name);
    const Fixture fx = make_fixture(name);
    const ChartCut cut = cut_into_charts(apply_segmentation(fx.mesh, fx.seg));
    const Eigen::VectorXd X = tutte_initialize(cut);
    const ConstraintSystem sys = build_constraints(cut);
    EXPECT_LE(max_residual(sys, X, RowTag::Int), 1e-10);
    EXPECT_LE(max_residual(sys, X), 1e-10);
    const DistortionEnergy en(cut.mesh.positions(), cut.mesh.faces());
    EXPECT_EQ(en.count_flips(X), 0);
  }
}

TEST(Solver, CylinderIsAlreadyOptimal) {
  const Fixture fx = make_fixture("cylinder");
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  const Parameterization p = parameterize(d, SolverConfig{});
  EXPECT_EQ(p.cut.mesh.num_faces(), 2000);
  EXPECT_LE(p.report.iterations, 1);
  EXPECT_LE((p.charts.X - p.initial).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(p.report.d_mean, 4.0 + 1e-3);
  EXPECT_TRUE(p.report.converged);
}

TEST(Solver, NoisyTubeApproachesUnrolling) {
  const Fixture fx = make_fixture("noisy-tube");
  const Parameterization p = parameterize(apply_segmentation(fx.mesh, fx.seg), SolverConfig{});
  EXPECT_TRUE(p.report.converged);
  EXPECT_LT(p.report.energy.back(), p.report.energy.front());
  EXPECT_GE(p.report.d_min, 4.0 - 1e-12);
}

class SolverInvariants : public ::testing::TestWithParam<std::string> {};

TEST_P(SolverInvariants, EveryIterateIsValid) {
  const Fixture fx = make_fixture(GetParam());
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  const Parameterization full = parameterize(d, SolverConfig{});
  ASSERT_TRUE(full.report.converged) << full.report.status;
  const std::vector<double>& E = full.report.energy;
  for (size_t i = 1; i < E.size(); ++i) EXPECT_LE(E[i], E[i - 1]);
  EXPECT_EQ(full.report.max_flips, 0);
  EXPECT_LE(full.report.max_residual, 1e-9);

  // replay with truncated iteration counts and check each state independently
  const DistortionEnergy en(full.cut.mesh.positions(), full.cut.mesh.faces());
  const ConstraintSystem raw = build_constraints(full.cut);
  for (int k = 1; k <= full.report.iterations; ++k) {
    SolverConfig cfg;
    cfg.max_iterations = k;
    const Parameterization p = parameterize(d, cfg);
    const Eigen::VectorXd& X = p.charts.X;
    EXPECT_EQ(en.count_flips(X), 0);
    EXPECT_LE(max_residual(raw, X), 1e-9);
    for (double dt : en.per_triangle(X)) EXPECT_GE(dt, 4.0 - 1e-9);
    EXPECT_NEAR(en.energy(X), p.report.energy.back(), 1e-9 * E.front());
  }
}

TEST_P(SolverInvariants, SeamsAreRigid) {
  const Fixture fx = make_fixture(GetParam());
  const Parameterization p = parameterize(apply_segmentation(fx.mesh, fx.seg), SolverConfig{});
  const Eigen::VectorXd& X = p.charts.X;
  for (const PartChart& c : p.cut.charts) {
    // translation between seam copies
    const Vec2 t = X.segment<2>(2 * c.seam_left[0]) - X.segment<2>(2 * c.seam_right[0]);
    for (size_t j = 0; j < c.seam_left.size(); ++j)
      EXPECT_LE((X.segment<2>(2 * c.seam_left[j]) - X.segment<2>(2 * c.seam_right[j]) - t).norm(), 1e-8);
  }
  // rotation by pi plus translation across each interface; the translation
  // is constant along runs of shared copies and jumps by whole periods
  // where the interface crosses a seam
  std::map<std::pair<int, int>, int> run_of;
  std::vector<int> parent;
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  for (const TransitionEdge& te : p.cut.transitions) {
    const int id = static_cast<int>(parent.size());
    parent.push_back(id);
    for (const auto& key : {std::pair{te.pa, te.qa}, std::pair{te.pb, te.qb}}) {
      const auto [it, fresh] = run_of.emplace(key, id);
      if (!fresh) parent[find(id)] = find(it->second);
    }
  }
  struct Sample {
    Vec2 sum;
    int run, p, q;
  };
  std::vector<Sample> all;
  for (size_t e = 0; e < p.cut.transitions.size(); ++e) {
    const TransitionEdge& te = p.cut.transitions[e];
    for (const auto& [a, b] : {std::pair{te.pa, te.qa}, std::pair{te.pb, te.qb}})
      all.push_back({X.segment<2>(2 * a) + X.segment<2>(2 * b), find(static_cast<int>(e)), te.p, te.q});
  }
  std::map<int, Sample> first;
  for (const Sample& smp : all) {
    const auto [it, fresh] = first.emplace(smp.run, smp);
    EXPECT_LE((smp.sum - it->second.sum).norm(), 1e-8);
  }
  for (const Sample& smp : all)
    for (const auto& [run, ref] : first) {
      if (ref.p != smp.p || ref.q != smp.q) continue;
      const Vec2 diff = smp.sum - ref.sum;
      EXPECT_NEAR(diff.y(), 0.0, 1e-8);
      double best = INFINITY;
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
          best = std::min(best, std::abs(diff.x() - i * p.charts.period[smp.p] - j * p.charts.period[smp.q]));
      EXPECT_LE(best, 1e-8);
    }
}

INSTANTIATE_TEST_SUITE_P(Fixtures, SolverInvariants, ::testing::Values("two-part", "t-shape", "three-chain"),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (char& ch : s)
                             if (ch == '-') ch = '_';
                           return s;
                         });

TEST(Solver, Deterministic) {
  const Fixture fx = make_fixture("two-part");
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  const Parameterization a = parameterize(d, SolverConfig{}), b = parameterize(d, SolverConfig{});
  EXPECT_EQ((a.charts.X - b.charts.X).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.report.energy, b.report.energy);
}

TEST(Solver, IterationCap) {
  const Fixture fx = make_fixture("t-shape");
  SolverConfig cfg;
  cfg.max_iterations = 2;
  const Parameterization p = parameterize(apply_segmentation(fx.mesh, fx.seg), cfg);
  EXPECT_EQ(p.report.iterations, 2);
  EXPECT_EQ(p.report.status, "max_iterations");
  EXPECT_FALSE(p.report.converged);
}

TEST(Solver, RejectsFlippedStart) {
  const Decomposition d = tube_decomposition(8, 4, 1.0, 2.0);
  const ChartCut cut = cut_into_charts(d);
  const DistortionEnergy en(cut.mesh.positions(), cut.mesh.faces());
  const ConstraintSystem sys = eliminate_redundant(build_constraints(cut));
  Eigen::VectorXd X = tutte_initialize(cut);
  X *= -1.0;
  X(Eigen::seq(0, Eigen::last, 2)) *= -1.0;  // mirror
  try {
    solve({&en, &sys, gauge_vertices(cut)}, X, SolverConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "infeasible_start");
  }
}

TEST(Solver, ConfigJson) {
  SolverConfig c;
  c.tolerance = 1e-7;
  c.max_iterations = 12;
  c.projection = HessianProjection::None;
  const SolverConfig back = solver_config_from_json(to_json(c));
  EXPECT_EQ(back.tolerance, 1e-7);
  EXPECT_EQ(back.max_iterations, 12);
  EXPECT_EQ(back.projection, HessianProjection::None);
  EXPECT_EQ(solver_config_from_json(nlohmann::json::object()).projection, HessianProjection::EigenClamp);
  for (const char* bad : {R"({"projection":"cubic"})", R"({"safety":1.5})", R"({"tolerance":-1})",
                          R"({"max_iterations":"many"})"}) {
    try {
      solver_config_from_json(nlohmann::json::parse(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "bad_config");
    }
  }
}

TEST(Solver, ReportJson) {
  const Fixture fx = make_fixture("two-part");
  const Parameterization p = parameterize(apply_segmentation(fx.mesh, fx.seg), SolverConfig{});
  const nlohmann::json j = to_json(p.report);
  EXPECT_EQ(j.at("iterations").get<int>(), p.report.iterations);
  EXPECT_EQ(j.at("energy").size(), p.report.energy.size());
  EXPECT_EQ(j.at("status"), "converged");
  EXPECT_DOUBLE_EQ(j.at("distortion").at("mean").get<double>(), p.report.d_mean);
}
