#pragma once

#include "zipr/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

namespace zipr {

// Symmetric Dirichlet distortion sigma1^2 + sigma2^2 + sigma1^-2 + sigma2^-2 of the
// linear map rest -> uv. Returns +inf for flipped or degenerate uv triangles.
double triangle_distortion(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec2& u0, const Vec2& u1,
                           const Vec2& u2);

// Jacobian of one triangle in terms of its six uv coordinates:
// vec(J) = A * (u0x u0y u1x u1y u2x u2y), vec() column-major.
struct RestTriangle {
  Eigen::Matrix2d dm_inv;
  Eigen::Matrix<double, 4, 6> A;
  double area = 0.0;
};
RestTriangle make_rest_triangle(const Vec3& p0, const Vec3& p1, const Vec3& p2);

// EigenClamp: max(lambda, eps); EigenAbs: max(|lambda|, eps)
enum class HessianProjection { None, EigenClamp, EigenAbs };

// Sum_t A_t D_t over a triangle list. X stores (x, y) of vertex v at 2v, 2v+1.
class DistortionEnergy {
public:
  DistortionEnergy(const std::vector<Vec3>& rest_positions, const std::vector<Tri>& faces);

  int num_faces() const { return static_cast<int>(faces_.size()); }
  const std::vector<Tri>& faces() const { return faces_; }
  const std::vector<RestTriangle>& rest() const { return rest_; }
  double total_area() const { return total_area_; }

  // +inf when any triangle is flipped.
  double energy(const Eigen::VectorXd& X) const;
  double energy_gradient(const Eigen::VectorXd& X, Eigen::VectorXd& grad) const;
  // Hessian values are written into a fixed sparsity pattern (upper and lower).
  double energy_gradient_hessian(const Eigen::VectorXd& X, Eigen::VectorXd& grad, Eigen::SparseMatrix<double>& hess,
                                 HessianProjection proj, double eps = 1e-9) const;

  // energy(X + step) - energy(X), evaluated from Jacobian increments so that
  // its error scales with the change rather than with the energy. +inf when
  // X + step flips a triangle.
  double energy_difference(const Eigen::VectorXd& X, const Eigen::VectorXd& step) const;

  std::vector<double> per_triangle(const Eigen::VectorXd& X) const;
  int count_flips(const Eigen::VectorXd& X) const;

  // Largest alpha such that X + alpha*dir flips nothing:
  // min(max_step, safety * smallest positive root of det J(alpha)).
  double max_flip_free_step(const Eigen::VectorXd& X, const Eigen::VectorXd& dir, double safety,
                            double max_step) const;

  const Eigen::SparseMatrix<double>& hessian_pattern() const { return pattern_; }

private:
  std::vector<Tri> faces_;
  std::vector<RestTriangle> rest_;
  double total_area_ = 0.0;
  int n_dof_ = 0;
  Eigen::SparseMatrix<double> pattern_;
  std::vector<int> slots_;  // 36 value indices per triangle
};

// Smallest positive root of a t^2 + b t + c, or +inf.
double smallest_positive_root(double a, double b, double c);

}  // namespace zipr
