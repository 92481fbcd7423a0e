#ifndef BFSGD_FEM_TRANSFER_HPP
#define BFSGD_FEM_TRANSFER_HPP

#include <iomanip>
#include <ostream>

#include <Eigen/LU>

#include "bfsgd/fem/mesh.hpp"

namespace bfsgd::fem {

/// Mean of the four fine children of each coarse element; fine dims are 2x coarse.
inline Vector restrict_field(const Vector& fine, Index nelx_coarse, Index nely_coarse) {
  if (nelx_coarse < 1 || nely_coarse < 1) throw DimensionFault("coarse grid must be non-empty");
  const Index nyf = 2 * nely_coarse;
  if (fine.size() != 4 * nelx_coarse * nely_coarse) throw DimensionFault("fine field is not twice the coarse grid");
  Vector coarse(nelx_coarse * nely_coarse);
  for (Index cx = 0; cx < nelx_coarse; ++cx)
    for (Index cy = 0; cy < nely_coarse; ++cy) {
      const Index a = (2 * cx) * nyf + 2 * cy;
      const Index b = (2 * cx + 1) * nyf + 2 * cy;
      coarse[cx * nely_coarse + cy] = 0.25 * (fine[a] + fine[a + 1] + fine[b] + fine[b + 1]);
    }
  return coarse;
}

namespace detail {

/// Rows map n coarse samples at 0..n-1 to the given points: natural cubic
/// spline inside, linear continuation with the end slope outside.
inline Matrix cubic_interpolation(Index n, const Vector& points) {
  Matrix out = Matrix::Zero(points.size(), n);
  // Second derivatives of the spline for each unit data vector.
  Matrix m = Matrix::Zero(n, n);
  if (n > 2) {
    const Index k = n - 2;
    Matrix tri = Matrix::Zero(k, k);
    Matrix rhs = Matrix::Zero(k, n);
    for (Index i = 0; i < k; ++i) {
      tri(i, i) = 4.0;
      if (i > 0) tri(i, i - 1) = 1.0;
      if (i + 1 < k) tri(i, i + 1) = 1.0;
      rhs(i, i) = 6.0;
      rhs(i, i + 1) = -12.0;
      rhs(i, i + 2) = 6.0;
    }
    m.middleRows(1, k) = tri.partialPivLu().solve(rhs);
  }
  const auto last = n - 1;
  for (Index p = 0; p < points.size(); ++p) {
    const double s = points[p];
    if (s < 0.0) {
      // S(0) + S'(0) s with S'(0) = y1 - y0 - M1/6.
      out(p, 0) += 1.0 - s;
      out(p, 1) += s;
      out.row(p) -= (s / 6.0) * m.row(1);
    } else if (s > static_cast<double>(last)) {
      const double t = s - static_cast<double>(last);
      out(p, last) += 1.0 + t;
      out(p, last - 1) -= t;
      out.row(p) += (t / 6.0) * m.row(last - 1);
    } else {
      const Index i = std::min<Index>(static_cast<Index>(s), last - 1);
      const double t = s - static_cast<double>(i);
      const double u = 1.0 - t;
      out(p, i) += u;
      out(p, i + 1) += t;
      out.row(p) += ((u * u * u - u) / 6.0) * m.row(i) + ((t * t * t - t) / 6.0) * m.row(i + 1);
    }
  }
  return out;
}

inline Matrix linear_interpolation(Index n, const Vector& points) {
  Matrix out = Matrix::Zero(points.size(), n);
  for (Index p = 0; p < points.size(); ++p) {
    if (n == 1) {
      out(p, 0) = 1.0;
      continue;
    }
    const Index i = std::clamp<Index>(static_cast<Index>(std::floor(points[p])), 0, n - 2);
    const double t = points[p] - static_cast<double>(i);
    out(p, i) = 1.0 - t;
    out(p, i + 1) = t;
  }
  return out;
}

/// Fine centroid j of a 2:1 grid sits at coarse coordinate j/2 - 1/4.
inline Vector fine_positions(Index n_fine) {
  Vector s(n_fine);
  for (Index j = 0; j < n_fine; ++j) s[j] = 0.5 * static_cast<double>(j) - 0.25;
  return s;
}

}  // namespace detail

struct ProlongResult {
  Vector values;
  bool cubic = true;  // false when the coarse grid was too small and bilinear was used
};

/// Tensor-product natural cubic spline through coarse centroid values,
/// evaluated at the centroids of the 2x refined grid.
inline ProlongResult prolong(const Vector& coarse, Index nelx_coarse, Index nely_coarse) {
  if (nelx_coarse < 1 || nely_coarse < 1) throw DimensionFault("coarse grid must be non-empty");
  if (coarse.size() != nelx_coarse * nely_coarse) throw DimensionFault("coarse field length differs from grid");
  ProlongResult out;
  out.cubic = nelx_coarse >= 4 && nely_coarse >= 4;
  const Vector sx = detail::fine_positions(2 * nelx_coarse);
  const Vector sy = detail::fine_positions(2 * nely_coarse);
  const Matrix wx = out.cubic ? detail::cubic_interpolation(nelx_coarse, sx) : detail::linear_interpolation(nelx_coarse, sx);
  const Matrix wy = out.cubic ? detail::cubic_interpolation(nely_coarse, sy) : detail::linear_interpolation(nely_coarse, sy);
  const Eigen::Map<const Matrix> grid(coarse.data(), nely_coarse, nelx_coarse);
  const Matrix fine = wy * grid * wx.transpose();
  out.values = Eigen::Map<const Vector>(fine.data(), fine.size());
  return out;
}

/// nely rows by nelx columns, 6 significant digits.
inline void write_density_csv(std::ostream& os, const Vector& theta, Index nelx, Index nely) {
  if (theta.size() != nelx * nely) throw DimensionFault("density length differs from grid");
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::defaultfloat << std::setprecision(6);
  for (Index ey = 0; ey < nely; ++ey) {
    for (Index ex = 0; ex < nelx; ++ex) {
      if (ex > 0) os << ',';
      os << theta[ex * nely + ey];
    }
    os << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace bfsgd::fem

#endif  // BFSGD_FEM_TRANSFER_HPP
