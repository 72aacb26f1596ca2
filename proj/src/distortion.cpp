#include "zipr/distortion.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace zipr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 gather(const Eigen::VectorXd& X, const Tri& t) {
  Vec6 x;
  for (int k = 0; k < 3; ++k) x.segment<2>(2 * k) = X.segment<2>(2 * t[k]);
  return x;
}

// j = (J00, J10, J01, J11)
double sd_value(const Vec4& j) {
  const double d = j[0] * j[3] - j[2] * j[1];
  if (!(d > 0.0)) return kInf;
  return j.squaredNorm() * (1.0 + 1.0 / (d * d));
}

Vec4 det_gradient(const Vec4& j) { return Vec4(j[3], -j[2], -j[1], j[0]); }

Vec4 sd_gradient(const Vec4& j) {
  const double d = j[0] * j[3] - j[2] * j[1];
  const double f = j.squaredNorm();
  return 2.0 * j * (1.0 + 1.0 / (d * d)) - 2.0 * f / (d * d * d) * det_gradient(j);
}

Mat4 sd_hessian(const Vec4& j) {
  const double d = j[0] * j[3] - j[2] * j[1];
  const double f = j.squaredNorm();
  const Vec4 gf = 2.0 * j, gd = det_gradient(j);
  Mat4 hd = Mat4::Zero();
  hd(0, 3) = hd(3, 0) = 1.0;
  hd(1, 2) = hd(2, 1) = -1.0;
  const double d2 = d * d, d3 = d2 * d, d4 = d2 * d2;
  return 2.0 * (1.0 + 1.0 / d2) * Mat4::Identity() - 2.0 / d3 * (gf * gd.transpose() + gd * gf.transpose()) +
         6.0 * f / d4 * gd * gd.transpose() - 2.0 * f / d3 * hd;
}

Mat4 project_psd(const Mat4& h, double eps, bool use_abs) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(h);
  Vec4 ev = es.eigenvalues();
  if (ev.minCoeff() >= eps) return h;
  for (int i = 0; i < 4; ++i) ev[i] = std::max(use_abs ? std::abs(ev[i]) : ev[i], eps);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double smallest_positive_root(double a, double b, double c) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) return kInf;
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) return kInf;
    const double t = -c / b;
    return t > 0.0 ? t : kInf;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kInf;
  const double s = std::sqrt(disc);
  const double q = -0.5 * (b + (b >= 0.0 ? s : -s));
  double r1 = q / a, r2 = q != 0.0 ? c / q : kInf;
  double best = kInf;
  for (double r : {r1, r2})
    if (r > 0.0 && r < best) best = r;
  return best;
}

RestTriangle make_rest_triangle(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  const Vec3 e1 = p1 - p0, e2 = p2 - p0;
  const double l1 = e1.norm();
  const double cross = e1.cross(e2).norm();
  Eigen::Matrix2d dm;
  dm << l1, e1.dot(e2) / l1, 0.0, cross / l1;
  RestTriangle r;
  r.dm_inv = dm.inverse();
  r.area = 0.5 * cross;
  // d vec(J) / d (u0, u1, u2)
  const Eigen::Matrix2d& B = r.dm_inv;
  r.A.setZero();
  for (int c = 0; c < 2; ++c)
    for (int row = 0; row < 2; ++row) {
      const int idx = 2 * c + row;
      r.A(idx, 2 * 1 + row) = B(0, c);
      r.A(idx, 2 * 2 + row) = B(1, c);
      r.A(idx, row) = -(B(0, c) + B(1, c));
    }
  return r;
}

double triangle_distortion(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec2& u0, const Vec2& u1,
                           const Vec2& u2) {
  const RestTriangle r = make_rest_triangle(p0, p1, p2);
  Vec6 x;
  x << u0, u1, u2;
  return sd_value(r.A * x);
}

DistortionEnergy::DistortionEnergy(const std::vector<Vec3>& rest_positions, const std::vector<Tri>& faces)
    : faces_(faces), n_dof_(2 * static_cast<int>(rest_positions.size())) {
  rest_.reserve(faces_.size());
  for (const Tri& t : faces_) {
    rest_.push_back(make_rest_triangle(rest_positions[t[0]], rest_positions[t[1]], rest_positions[t[2]]));
    total_area_ += rest_.back().area;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * faces_.size());
  for (const Tri& t : faces_)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) trip.emplace_back(2 * t[a / 2] + a % 2, 2 * t[b / 2] + b % 2, 0.0);
  pattern_.resize(n_dof_, n_dof_);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();
  slots_.resize(36 * faces_.size());
  for (size_t f = 0; f < faces_.size(); ++f) {
    const Tri& t = faces_[f];
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const int row = 2 * t[a / 2] + a % 2, col = 2 * t[b / 2] + b % 2;
        const int* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col];
        const int* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[col + 1];
        slots_[36 * f + 6 * a + b] = static_cast<int>(std::lower_bound(begin, end, row) - pattern_.innerIndexPtr());
      }
  }
}

double DistortionEnergy::energy(const Eigen::VectorXd& X) const {
  double e = 0.0;
  for (size_t f = 0; f < faces_.size(); ++f) {
    const double d = sd_value(rest_[f].A * gather(X, faces_[f]));
    if (d == kInf) return kInf;
    e += rest_[f].area * d;
  }
  return e;
}

double DistortionEnergy::energy_gradient(const Eigen::VectorXd& X, Eigen::VectorXd& grad) const {
  grad.setZero(n_dof_);
  double e = 0.0;
  for (size_t f = 0; f < faces_.size(); ++f) {
    const Tri& t = faces_[f];
    const Vec4 j = rest_[f].A * gather(X, t);
    const double d = sd_value(j);
    if (d == kInf) return kInf;
    e += rest_[f].area * d;
    const Vec6 g = rest_[f].area * rest_[f].A.transpose() * sd_gradient(j);
    for (int k = 0; k < 3; ++k) grad.segment<2>(2 * t[k]) += g.segment<2>(2 * k);
  }
  return e;
}

double DistortionEnergy::energy_gradient_hessian(const Eigen::VectorXd& X, Eigen::VectorXd& grad,
                                                 Eigen::SparseMatrix<double>& hess, HessianProjection proj,
                                                 double eps) const {
  grad.setZero(n_dof_);
  if (hess.nonZeros() != pattern_.nonZeros() || hess.rows() != n_dof_) hess = pattern_;
  std::fill(hess.valuePtr(), hess.valuePtr() + hess.nonZeros(), 0.0);
  double* values = hess.valuePtr();
  double e = 0.0;
  for (size_t f = 0; f < faces_.size(); ++f) {
    const Tri& t = faces_[f];
    const RestTriangle& r = rest_[f];
    const Vec4 j = r.A * gather(X, t);
    const double d = sd_value(j);
    if (d == kInf) return kInf;
    e += r.area * d;
    const Vec6 g = r.area * r.A.transpose() * sd_gradient(j);
    for (int k = 0; k < 3; ++k) grad.segment<2>(2 * t[k]) += g.segment<2>(2 * k);
    Mat4 hj = sd_hessian(j);
    if (proj != HessianProjection::None) hj = project_psd(hj, eps, proj == HessianProjection::EigenAbs);
    const Eigen::Matrix<double, 6, 6> h = r.area * r.A.transpose() * hj * r.A;
    const int* slot = &slots_[36 * f];
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) values[slot[6 * a + b]] += h(a, b);
  }
  return e;
}

double DistortionEnergy::energy_difference(const Eigen::VectorXd& X, const Eigen::VectorXd& step) const {
  double sum = 0.0, comp = 0.0;
  for (size_t f = 0; f < faces_.size(); ++f) {
    const Vec4 j = rest_[f].A * gather(X, faces_[f]);
    const Vec4 dj = rest_[f].A * gather(step, faces_[f]);
    const double d = j[0] * j[3] - j[2] * j[1];
    const double dd = j[0] * dj[3] + dj[0] * j[3] + dj[0] * dj[3] - (j[2] * dj[1] + dj[2] * j[1] + dj[2] * dj[1]);
    const double d1 = d + dd;
    if (!(d1 > 0.0)) return kInf;
    const double fv = j.squaredNorm();
    const double df = 2.0 * j.dot(dj) + dj.squaredNorm();
    // f/d^2 changes by (df d^2 - f dd (2d + dd)) / (d^2 d1^2)
    const double dq = (df * d * d - fv * dd * (2.0 * d + dd)) / (d * d * d1 * d1);
    const double term = rest_[f].area * (df + dq);
    // Neumaier summation
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::vector<double> DistortionEnergy::per_triangle(const Eigen::VectorXd& X) const {
  std::vector<double> out(faces_.size());
  for (size_t f = 0; f < faces_.size(); ++f) out[f] = sd_value(rest_[f].A * gather(X, faces_[f]));
  return out;
}

int DistortionEnergy::count_flips(const Eigen::VectorXd& X) const {
  int n = 0;
  for (const Tri& t : faces_) {
    const Vec2 a = X.segment<2>(2 * t[1]) - X.segment<2>(2 * t[0]);
    const Vec2 b = X.segment<2>(2 * t[2]) - X.segment<2>(2 * t[0]);
    n += !(a.x() * b.y() - a.y() * b.x() > 0.0);
  }
  return n;
}

double DistortionEnergy::max_flip_free_step(const Eigen::VectorXd& X, const Eigen::VectorXd& dir, double safety,
                                            double max_step) const {
  double t_min = kInf;
  for (const Tri& t : faces_) {
    const Vec2 a = X.segment<2>(2 * t[1]) - X.segment<2>(2 * t[0]);
    const Vec2 b = X.segment<2>(2 * t[2]) - X.segment<2>(2 * t[0]);
    const Vec2 da = dir.segment<2>(2 * t[1]) - dir.segment<2>(2 * t[0]);
    const Vec2 db = dir.segment<2>(2 * t[2]) - dir.segment<2>(2 * t[0]);
    // det(a + s da, b + s db)
    const double qa = da.x() * db.y() - da.y() * db.x();
    const double qb = a.x() * db.y() - a.y() * db.x() + da.x() * b.y() - da.y() * b.x();
    const double qc = a.x() * b.y() - a.y() * b.x();
    t_min = std::min(t_min, smallest_positive_root(qa, qb, qc));
  }
  return t_min == kInf ? max_step : std::min(max_step, safety * t_min);
}

}  // namespace zipr
