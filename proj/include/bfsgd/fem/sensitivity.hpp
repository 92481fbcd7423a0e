#ifndef BFSGD_FEM_SENSITIVITY_HPP
#define BFSGD_FEM_SENSITIVITY_HPP

#include "bfsgd/fem/filter.hpp"
#include "bfsgd/fem/solver.hpp"

namespace bfsgd::fem {

/// u_e^T k0 u_e per element.
inline Vector element_energies(const StructuredMesh& mesh, const Vector& u, const ElementMatrix& ke) {
  if (u.size() != mesh.n_dofs()) throw DimensionFault("displacement length differs from dof count");
  Vector out(mesh.n_elements());
  Eigen::Matrix<double, 8, 1> ue;
  for (Index e = 0; e < mesh.n_elements(); ++e) {
    const auto dofs = mesh.element_dofs(e);
    for (int i = 0; i < 8; ++i) ue[i] = u[dofs[static_cast<std::size_t>(i)]];
    out[e] = ue.dot(ke * ue);
  }
  return out;
}

/// Derivative of compliance with respect to rho, before the filter chain rule.
inline Vector element_sensitivities(const StructuredMesh& mesh, const Vector& rho, const SolveResult& solve,
                                    double beta_p, const Vector& e_field, const ElementMatrix& ke) {
  const Vector energy = element_energies(mesh, solve.u, ke);
  Vector out(mesh.n_elements());
  for (Index e = 0; e < mesh.n_elements(); ++e)
    out[e] = -beta_p * std::pow(rho[e], beta_p - 1.0) * e_field[e] * energy[e];
  return out;
}

/// d(f^T u)/d theta through the density filter.
inline Vector compliance_gradient(const StructuredMesh& mesh, const Vector& theta, const FilterKernel& kernel,
                                  const SolveResult& solve, double beta_p, const Vector& e_field,
                                  const ElementMatrix& ke) {
  if (theta.size() != mesh.n_elements() || kernel.size() != mesh.n_elements())
    throw DimensionFault("design or filter size differs from element count");
  const Vector rho = kernel.apply(theta);
  return kernel.apply_transpose(element_sensitivities(mesh, rho, solve, beta_p, e_field, ke));
}

/// d(lambda sum v_i rho_i)/d theta.
inline Vector mass_gradient(const StructuredMesh& mesh, const FilterKernel& kernel, double lambda) {
  if (kernel.size() != mesh.n_elements()) throw DimensionFault("filter size differs from element count");
  return lambda * kernel.apply_transpose(mesh.volumes());
}

inline double mass(const StructuredMesh& mesh, const Vector& rho) { return mesh.volumes().dot(rho); }

}  // namespace bfsgd::fem

#endif  // BFSGD_FEM_SENSITIVITY_HPP
