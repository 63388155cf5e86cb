#include "capbound/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "capbound/errors.hpp"

namespace capbound {

Mat4 Mat4::identity(double scale) {
  Mat4 m;
  for (std::size_t i = 0; i < 4; ++i) m(i, i) = scale;
  return m;
}

Mat4 Mat4::operator+(const Mat4& o) const {
  Mat4 r;
  for (std::size_t i = 0; i < 16; ++i) r.a[i] = a[i] + o.a[i];
  return r;
}

Vec4 Mat4::mul(const Vec4& v) const {
  Vec4 r{};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) r[i] += (*this)(i, j) * v[j];
  return r;
}

void Mat4::add_outer(const Vec4& v, double w) {
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) (*this)(i, j) += w * v[i] * v[j];
}

double dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

Mat4 invert(const Mat4& m) {
  // Augmented Gauss-Jordan with partial pivoting.
  std::array<double, 32> w{};
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) w[r * 8 + c] = m(r, c);
    w[r * 8 + 4 + r] = 1.0;
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < 16; ++i) scale = std::max(scale, std::fabs(m.a[i]));
  for (std::size_t col = 0; col < 4; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < 4; ++r)
      if (std::fabs(w[r * 8 + col]) > std::fabs(w[piv * 8 + col])) piv = r;
    const double pval = w[piv * 8 + col];
    if (!(std::fabs(pval) > scale * 1e-300) || !std::isfinite(pval))
      throw NumericError("4x4 inverse: pivot " + std::to_string(pval) +
                         " against scale " + std::to_string(scale) +
                         " (matrix numerically singular)");
    if (piv != col)
      for (std::size_t c = 0; c < 8; ++c) std::swap(w[piv * 8 + c], w[col * 8 + c]);
    const double inv = 1.0 / w[col * 8 + col];
    for (std::size_t c = 0; c < 8; ++c) w[col * 8 + c] *= inv;
    for (std::size_t r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = w[r * 8 + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < 8; ++c) w[r * 8 + c] -= f * w[col * 8 + c];
    }
  }
  Mat4 out;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) out(r, c) = w[r * 8 + 4 + c];
  return out;
}

double quad_form(const Mat4& m, const Vec4& v) { return dot(v, m.mul(v)); }

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n) {
  if (a.size() != n * n || b.size() != n) throw ValidationError("solve_dense: bad shapes");
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::fabs(v));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    // Pivots that shrink to rounding residue mean a dependent column, not a
    // solvable system.
    if (!(std::fabs(a[piv * n + col]) > scale * 1e-12))
      throw NumericError("solve_dense: singular matrix at column " + std::to_string(col));
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double acc = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri * n + c] * x[c];
    x[ri] = acc / a[ri * n + ri];
  }
  return x;
}

EigenResult jacobi_eigen(std::vector<double> sym, std::size_t k) {
  if (sym.size() != k * k) throw ValidationError("jacobi_eigen: bad shape");
  std::vector<double> v(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) v[i * k + i] = 1.0;

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t q = p + 1; q < k; ++q) s += sym[p * k + q] * sym[p * k + q];
    return s;
  };
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < k; ++i) diag_scale += sym[i * k + i] * sym[i * k + i];
  const double stop = std::max(diag_scale, 1.0) * 1e-30;

  for (int sweep = 0; sweep < 100 && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double apq = sym[p * k + q];
        if (apq == 0.0) continue;
        const double app = sym[p * k + p];
        const double aqq = sym[q * k + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < k; ++i) {
          const double aip = sym[i * k + p];
          const double aiq = sym[i * k + q];
          sym[i * k + p] = c * aip - s * aiq;
          sym[i * k + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double api = sym[p * k + i];
          const double aqi = sym[q * k + i];
          sym[p * k + i] = c * api - s * aqi;
          sym[q * k + i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const double vip = v[i * k + p];
          const double viq = v[i * k + q];
          v[i * k + p] = c * vip - s * viq;
          v[i * k + q] = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sym[a * k + a] > sym[b * k + b];
  });
  EigenResult res;
  res.values.resize(k);
  res.vectors.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t r = 0; r < k; ++r) {
    res.values[r] = sym[order[r] * k + order[r]];
    for (std::size_t i = 0; i < k; ++i) res.vectors[r][i] = v[i * k + order[r]];
  }
  return res;
}

}  // namespace capbound
