#ifndef BFSGD_FEM_SOLVER_HPP
#define BFSGD_FEM_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "bfsgd/fem/mesh.hpp"

namespace bfsgd::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct LoadCase {
  Vector force;                // length n_dofs
  std::vector<Index> fixed;    // constrained dofs (zero displacement)

  /// Throws SingularSystem unless the constraints remove all three in-plane rigid modes.
  void validate(const StructuredMesh& mesh) const {
    if (force.size() != mesh.n_dofs()) throw DimensionFault("load vector length differs from dof count");
    if (fixed.empty()) throw SingularSystem("no constrained degrees of freedom");
    Eigen::Matrix<double, Eigen::Dynamic, 3> modes(static_cast<Index>(fixed.size()), 3);
    for (std::size_t r = 0; r < fixed.size(); ++r) {
      const Index dof = fixed[r];
      if (dof < 0 || dof >= mesh.n_dofs()) throw DimensionFault("constrained dof out of range");
      const Index node = dof / 2;
      const double x = static_cast<double>(node / (mesh.nely + 1));
      const double y = static_cast<double>(node % (mesh.nely + 1));
      const bool is_x = dof % 2 == 0;
      const auto row = static_cast<Index>(r);
      modes(row, 0) = is_x ? 1.0 : 0.0;
      modes(row, 1) = is_x ? 0.0 : 1.0;
      modes(row, 2) = is_x ? -y : x;
    }
    if (Eigen::FullPivLU<Matrix>(modes).rank() < 3)
      throw SingularSystem("constraints leave a rigid-body mode free");
  }
};

enum class SolverKind { cholesky, pcg };

struct SolverOptions {
  SolverKind kind = SolverKind::cholesky;
  double tolerance = 1e-8;
  Index max_iterations = 0;  // 0 selects 10 * n_dof
};

struct SolveResult {
  Vector u;
  double compliance = 0.0;
  Index iterations = 0;
  double residual = 0.0;
};

namespace detail {

struct ReducedSystem {
  SparseMatrix k;
  Vector f;
  std::vector<Index> free_dofs;
};

inline ReducedSystem assemble(const StructuredMesh& mesh, const Vector& rho, const Vector& e_field,
                              const LoadCase& load, double beta_p, const ElementMatrix& ke) {
  std::vector<Index> map(static_cast<std::size_t>(mesh.n_dofs()), 0);
  for (Index d : load.fixed) map[static_cast<std::size_t>(d)] = -1;
  ReducedSystem sys;
  Index next = 0;
  for (Index d = 0; d < mesh.n_dofs(); ++d) {
    if (map[static_cast<std::size_t>(d)] < 0) continue;
    map[static_cast<std::size_t>(d)] = next++;
    sys.free_dofs.push_back(d);
  }
  sys.f.resize(next);
  for (Index i = 0; i < next; ++i) sys.f[i] = load.force[sys.free_dofs[static_cast<std::size_t>(i)]];

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_elements()) * 64);
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const double modulus = simp_modulus(rho[e], beta_p, e_field[e]);
    const auto dofs = mesh.element_dofs(e);
    for (int i = 0; i < 8; ++i) {
      const Index gi = map[static_cast<std::size_t>(dofs[static_cast<std::size_t>(i)])];
      if (gi < 0) continue;
      for (int j = 0; j < 8; ++j) {
        const Index gj = map[static_cast<std::size_t>(dofs[static_cast<std::size_t>(j)])];
        if (gj >= 0) triplets.emplace_back(gi, gj, modulus * ke(i, j));
      }
    }
  }
  sys.k.resize(next, next);
  sys.k.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

inline Vector pcg(const SparseMatrix& k, const Vector& f, double tol, Index cap, Index& iterations,
                  double& residual) {
  const double fnorm = f.norm();
  Vector x = Vector::Zero(f.size());
  iterations = 0;
  residual = 0.0;
  if (fnorm == 0.0) return x;
  const Vector inv_diag = k.diagonal().cwiseInverse();
  Vector r = f;
  Vector z = inv_diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  while (iterations < cap) {
    const Vector kp = k * p;
    const double step = rz / p.dot(kp);
    x += step * p;
    r -= step * kp;
    ++iterations;
    residual = r.norm() / fnorm;
    if (residual <= tol) {
      // Confirm against the true residual; the recurrence drifts on ill-conditioned systems.
      residual = (f - k * x).norm() / fnorm;
      if (residual <= tol) return x;
      r = f - k * x;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  throw SolverDivergence("conjugate gradients reached the iteration cap at relative residual " +
                         std::to_string(residual));
}

}  // namespace detail

/// Assembles K(rho; E0) on the free dofs and solves K u = f.
inline SolveResult assemble_and_solve(const StructuredMesh& mesh, const Vector& rho, const Vector& e_field,
                                      const LoadCase& load, double beta_p, const ElementMatrix& ke,
                                      const SolverOptions& options = {}) {
  if (rho.size() != mesh.n_elements() || e_field.size() != mesh.n_elements())
    throw DimensionFault("density or modulus field length differs from element count");
  if (rho.minCoeff() <= 0.0) throw DomainFault("densities must be positive");
  if (e_field.minCoeff() <= 0.0) throw DomainFault("element moduli must be positive");
  load.validate(mesh);

  SolveResult out;
  out.u = Vector::Zero(mesh.n_dofs());
  if (load.force.isZero(0.0)) return out;

  auto sys = detail::assemble(mesh, rho, e_field, load, beta_p, ke);
  Vector uf;
  if (options.kind == SolverKind::pcg) {
    const Index cap = options.max_iterations > 0 ? options.max_iterations : 10 * mesh.n_dofs();
    uf = detail::pcg(sys.k, sys.f, options.tolerance, cap, out.iterations, out.residual);
  } else {
    Eigen::SimplicialLDLT<SparseMatrix> chol(sys.k);
    if (chol.info() != Eigen::Success || chol.vectorD().minCoeff() <= 0.0)
      throw SingularSystem("stiffness matrix is not positive definite");
    uf = chol.solve(sys.f);
    const double fnorm = sys.f.norm();
    out.residual = (sys.f - sys.k * uf).norm() / fnorm;
    // Iterative refinement for strongly graded moduli.
    for (int pass = 0; pass < 3 && out.residual > options.tolerance; ++pass) {
      uf += chol.solve(sys.f - sys.k * uf);
      out.residual = (sys.f - sys.k * uf).norm() / fnorm;
      ++out.iterations;
    }
    if (out.residual > options.tolerance)
      throw SolverDivergence("direct solve residual " + std::to_string(out.residual) + " above tolerance");
  }
  if (!uf.allFinite()) throw SolverDivergence("non-finite displacements");
  for (std::size_t i = 0; i < sys.free_dofs.size(); ++i) out.u[sys.free_dofs[i]] = uf[static_cast<Index>(i)];
  out.compliance = load.force.dot(out.u);
  return out;
}

inline SolveResult assemble_and_solve(const StructuredMesh& mesh, const Vector& rho, const Vector& e_field,
                                      const LoadCase& load, double beta_p, const SolverOptions& options = {}) {
  return assemble_and_solve(mesh, rho, e_field, load, beta_p, element_stiffness(0.3), options);
}

/// Dense global stiffness on the free dofs, for cross-checking.
inline Matrix assemble_dense(const StructuredMesh& mesh, const Vector& rho, const Vector& e_field,
                             const LoadCase& load, double beta_p, const ElementMatrix& ke) {
  return Matrix(detail::assemble(mesh, rho, e_field, load, beta_p, ke).k);
}

}  // namespace bfsgd::fem

#endif  // BFSGD_FEM_SOLVER_HPP
