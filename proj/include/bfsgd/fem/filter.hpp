#ifndef BFSGD_FEM_FILTER_HPP
#define BFSGD_FEM_FILTER_HPP

#include <cmath>
#include <vector>

#include "bfsgd/fem/mesh.hpp"

namespace bfsgd::fem {

/// Density filter rho_e = sum_i H_ei theta_i / sum_i H_ei with
/// H_ei = max(0, r_f - dist(e, i)), stored row-wise (CSR).
struct FilterKernel {
  double radius = 0.0;
  std::vector<Index> offsets;  // row e spans [offsets[e], offsets[e+1])
  std::vector<Index> columns;
  std::vector<double> weights;
  Vector row_sums;

  Index size() const { return row_sums.size(); }

  Vector apply(const Vector& theta) const {
    if (theta.size() != size()) throw DimensionFault("filter input has the wrong length");
    Vector rho(size());
    for (Index e = 0; e < size(); ++e) {
      double acc = 0.0;
      for (Index p = offsets[static_cast<std::size_t>(e)]; p < offsets[static_cast<std::size_t>(e + 1)]; ++p)
        acc += weights[static_cast<std::size_t>(p)] * theta[columns[static_cast<std::size_t>(p)]];
      rho[e] = acc / row_sums[e];
    }
    return rho;
  }

  /// Adjoint of apply: chains a gradient over rho back to theta.
  Vector apply_transpose(const Vector& g) const {
    if (g.size() != size()) throw DimensionFault("filter input has the wrong length");
    Vector out = Vector::Zero(size());
    for (Index e = 0; e < size(); ++e) {
      const double ge = g[e] / row_sums[e];
      for (Index p = offsets[static_cast<std::size_t>(e)]; p < offsets[static_cast<std::size_t>(e + 1)]; ++p)
        out[columns[static_cast<std::size_t>(p)]] += weights[static_cast<std::size_t>(p)] * ge;
    }
    return out;
  }

  Matrix dense() const {
    Matrix m = Matrix::Zero(size(), size());
    for (Index e = 0; e < size(); ++e)
      for (Index p = offsets[static_cast<std::size_t>(e)]; p < offsets[static_cast<std::size_t>(e + 1)]; ++p)
        m(e, columns[static_cast<std::size_t>(p)]) = weights[static_cast<std::size_t>(p)] / row_sums[e];
    return m;
  }
};

inline FilterKernel build_filter(const StructuredMesh& mesh, double radius) {
  if (!(radius > 0.0)) throw ConfigFault("filter radius must be positive");
  FilterKernel k;
  k.radius = radius;
  k.row_sums.resize(mesh.n_elements());
  k.offsets.reserve(static_cast<std::size_t>(mesh.n_elements() + 1));
  k.offsets.push_back(0);
  const auto reach = static_cast<Index>(std::ceil(radius / mesh.h));
  for (Index ex = 0; ex < mesh.nelx; ++ex) {
    for (Index ey = 0; ey < mesh.nely; ++ey) {
      double sum = 0.0;
      for (Index ix = std::max<Index>(0, ex - reach); ix <= std::min(mesh.nelx - 1, ex + reach); ++ix) {
        for (Index iy = std::max<Index>(0, ey - reach); iy <= std::min(mesh.nely - 1, ey + reach); ++iy) {
          const double dx = static_cast<double>(ix - ex) * mesh.h;
          const double dy = static_cast<double>(iy - ey) * mesh.h;
          const double w = radius - std::sqrt(dx * dx + dy * dy);
          if (w <= 0.0) continue;
          k.columns.push_back(mesh.element(ix, iy));
          k.weights.push_back(w);
          sum += w;
        }
      }
      k.row_sums[mesh.element(ex, ey)] = sum;
      k.offsets.push_back(static_cast<Index>(k.columns.size()));
    }
  }
  return k;
}

}  // namespace bfsgd::fem

#endif  // BFSGD_FEM_FILTER_HPP
