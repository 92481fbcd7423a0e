#ifndef BFSGD_FEM_MESH_HPP
#define BFSGD_FEM_MESH_HPP

#include <array>

#include "bfsgd/types.hpp"

namespace bfsgd::fem {

/// Rectangular grid of congruent square elements.
///
/// Nodes and elements are numbered column by column from the top-left
/// corner: node (ix, iy) -> (nely + 1) ix + iy, element (ex, ey) -> nely ex + ey,
/// with iy/ey counting downward. Node n carries dofs 2n (x) and 2n + 1 (y,
/// positive downward).
struct StructuredMesh {
  Index nelx = 1;
  Index nely = 1;
  double h = 1.0;

  StructuredMesh() = default;
  StructuredMesh(Index nx, Index ny, double element_size = 1.0) : nelx(nx), nely(ny), h(element_size) {
    if (nelx < 1 || nely < 1) throw ConfigFault("mesh needs at least one element per direction");
    if (!(h > 0.0)) throw ConfigFault("element size must be positive");
  }

  Index n_elements() const { return nelx * nely; }
  Index n_nodes() const { return (nelx + 1) * (nely + 1); }
  Index n_dofs() const { return 2 * n_nodes(); }

  Index node(Index ix, Index iy) const { return (nely + 1) * ix + iy; }
  Index element(Index ex, Index ey) const { return nely * ex + ey; }
  static Index dof_x(Index node) { return 2 * node; }
  static Index dof_y(Index node) { return 2 * node + 1; }

  /// Dofs of element (ex, ey): top-left, top-right, bottom-right, bottom-left nodes.
  std::array<Index, 8> element_dofs(Index ex, Index ey) const {
    const Index n1 = node(ex, ey);
    const Index n2 = node(ex + 1, ey);
    return {2 * n1, 2 * n1 + 1, 2 * n2, 2 * n2 + 1, 2 * n2 + 2, 2 * n2 + 3, 2 * n1 + 2, 2 * n1 + 3};
  }
  std::array<Index, 8> element_dofs(Index e) const { return element_dofs(e / nely, e % nely); }

  Eigen::Vector2d centroid(Index e) const {
    return {(static_cast<double>(e / nely) + 0.5) * h, (static_cast<double>(e % nely) + 0.5) * h};
  }
  double volume(Index /*e*/) const { return h * h; }
  Vector volumes() const { return Vector::Constant(n_elements(), h * h); }
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;

/// Unit-modulus plane-stress stiffness of a square bilinear element (unit thickness).
inline ElementMatrix element_stiffness(double nu) {
  if (!(nu >= 0.0 && nu < 0.5)) throw DomainFault("Poisson ratio must lie in [0, 0.5)");
  const std::array<double, 8> k = {0.5 - nu / 6.0,         0.125 + nu / 8.0,  -0.25 - nu / 12.0,
                                   -0.125 + 3.0 * nu / 8.0, -0.25 + nu / 12.0, -0.125 - nu / 8.0,
                                   nu / 6.0,                0.125 - 3.0 * nu / 8.0};
  // Index pattern of the symmetric element matrix in terms of k[0..7].
  static constexpr int pattern[8][8] = {
      {0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1}, {3, 6, 5, 0, 7, 2, 1, 4},
      {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6}, {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  ElementMatrix ke;
  const double scale = 1.0 / (1.0 - nu * nu);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) ke(i, j) = scale * k[static_cast<std::size_t>(pattern[i][j])];
  return ke;
}

/// Power-law interpolated modulus rho^beta_p e0.
inline double simp_modulus(double rho, double beta_p, double e0) {
  if (!(rho > 0.0)) throw DomainFault("density must be positive");
  return std::pow(rho, beta_p) * e0;
}

}  // namespace bfsgd::fem

#endif  // BFSGD_FEM_MESH_HPP
