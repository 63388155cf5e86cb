#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace capbound {

using Vec4 = std::array<double, 4>;

// Row-major 4x4 matrix; big enough for the sigmoid information matrix and
// nothing else, so everything stays on the stack.
struct Mat4 {
  std::array<double, 16> a{};

  double& operator()(std::size_t r, std::size_t c) { return a[r * 4 + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * 4 + c]; }

  static Mat4 identity(double scale = 1.0);
  Mat4 operator+(const Mat4& o) const;
  Vec4 mul(const Vec4& v) const;
  void add_outer(const Vec4& v, double w = 1.0);  // += w * v v^T
};

double dot(const Vec4& a, const Vec4& b);

// Gauss-Jordan inverse with partial pivoting; throws NumericError with a
// pivot-magnitude diagnostic when the matrix is numerically singular.
Mat4 invert(const Mat4& m);

// Quadratic form v^T M v.
double quad_form(const Mat4& m, const Vec4& v);

// Generic dense solve (row-major n x n), used by the OLS fit and by tests as
// an independent route around Mat4::invert.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n);

// Eigendecomposition of a symmetric k x k matrix (k small; covariance or
// correlation matrices of at most a few tasks) by cyclic Jacobi rotations.
// Eigenvalues are returned in descending order with matching unit-norm
// eigenvectors as rows of `vectors` (row i <-> eigenvalue i).
struct EigenResult {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};
EigenResult jacobi_eigen(std::vector<double> sym, std::size_t k);

}  // namespace capbound
