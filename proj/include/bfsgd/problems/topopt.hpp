#ifndef BFSGD_PROBLEMS_TOPOPT_HPP
#define BFSGD_PROBLEMS_TOPOPT_HPP

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "bfsgd/fem/filter.hpp"
#include "bfsgd/fem/sensitivity.hpp"
#include "bfsgd/fem/solver.hpp"
#include "bfsgd/fem/transfer.hpp"
#include "bfsgd/rng.hpp"
#include "bfsgd/uncertainty/kl.hpp"
#include "bfsgd/uncertainty/loads.hpp"

namespace bfsgd::problems {

/// a: uncertain load magnitude. b: magnitude and direction of an inclined
/// load. c: magnitude plus a lognormal modulus field.
enum class TopOptVariant { a, b, c };

struct TopOptProblem {
  TopOptVariant variant = TopOptVariant::a;
  Index nelx = 120;  // high-fidelity mesh; the low-fidelity mesh is half in each direction
  Index nely = 40;
  double element_size = 1.0;
  double beta_p = 3.0;
  double filter_factor = 1.5;  // filter radius in element widths
  double lambda = 1.0;
  double p0 = 1.0;
  double nu = 0.3;
  double gamma = 0.096;
  double theta_min = 1e-3;
  double theta0 = 0.5;
  double kl_sigma = 2.0;
  double kl_length_fraction = 1.0 / 40.0;  // correlation length over the full span
  Index kl_modes = 100;
  std::optional<std::filesystem::path> kl_cache_dir;
  fem::SolverOptions solver;

  void validate() const {
    if (nelx < 2 || nely < 2 || nelx % 2 != 0 || nely % 2 != 0)
      throw ConfigFault("high-fidelity mesh dimensions must be even and at least 2");
    if (!(element_size > 0.0) || !(beta_p >= 1.0) || !(filter_factor > 0.0))
      throw ConfigFault("element size, penalization and filter factor must be positive");
    if (!(lambda >= 0.0)) throw ConfigFault("mass weight must be non-negative");
    if (!(p0 > 0.0)) throw ConfigFault("load magnitude must be positive");
    if (!(gamma >= 0.0)) throw ConfigFault("gamma must be non-negative");
    if (!(theta_min > 0.0 && theta_min < 1.0)) throw ConfigFault("theta_min must lie in (0, 1)");
    if (!(theta0 >= theta_min && theta0 <= 1.0)) throw ConfigFault("theta0 must lie in [theta_min, 1]");
    if (variant == TopOptVariant::c) {
      if (!(kl_sigma > 0.0 && kl_length_fraction > 0.0)) throw ConfigFault("KL parameters must be positive");
      if (kl_modes < 1 || kl_modes > nelx * nely) throw ConfigFault("KL mode count out of range");
    }
  }

  /// Full beam span; the design domain is its symmetric half.
  double span() const { return 2.0 * static_cast<double>(nelx) * element_size; }
};

/// Left-edge horizontal rollers and a vertical support at the bottom-right node.
inline std::vector<Index> half_beam_supports(const fem::StructuredMesh& mesh) {
  std::vector<Index> fixed;
  for (Index iy = 0; iy <= mesh.nely; ++iy) fixed.push_back(fem::StructuredMesh::dof_x(mesh.node(0, iy)));
  fixed.push_back(fem::StructuredMesh::dof_y(mesh.node(mesh.nelx, mesh.nely)));
  return fixed;
}

/// Top-edge node nearest to a distance of span/8 from the symmetry plane; ties go left.
inline Index inclined_load_node(const fem::StructuredMesh& mesh) {
  const double target = static_cast<double>(mesh.nelx) / 4.0;
  const auto ix = static_cast<Index>(std::ceil(target - 0.5));
  return mesh.node(ix, 0);
}

class TopOptOracle final : public BiFidelityOracle {
 public:
  explicit TopOptOracle(TopOptProblem p)
      : p_(std::move(p)),
        high_(validated(p_).nelx, p_.nely, p_.element_size),
        low_(p_.nelx / 2, p_.nely / 2, 2.0 * p_.element_size),
        high_filter_(fem::build_filter(high_, p_.filter_factor * high_.h)),
        low_filter_(fem::build_filter(low_, p_.filter_factor * low_.h)),
        ke_(fem::element_stiffness(p_.nu)),
        high_fixed_(half_beam_supports(high_)),
        low_fixed_(half_beam_supports(low_)),
        high_mass_grad_(fem::mass_gradient(high_, high_filter_, p_.lambda)) {
    if (p_.variant == TopOptVariant::c) {
      const uq::CovarianceSpec cov{p_.kl_sigma, p_.kl_length_fraction * p_.span(), p_.kl_length_fraction * p_.span()};
      kl_ = uq::cached_kl_grid(p_.kl_cache_dir, cov, high_.nelx, high_.nely, high_.h, p_.kl_modes);
    }
  }

  const TopOptProblem& problem() const { return p_; }
  const fem::StructuredMesh& high_mesh() const { return high_; }
  const fem::StructuredMesh& low_mesh() const { return low_; }
  const fem::FilterKernel& high_filter() const { return high_filter_; }
  const std::optional<uq::KLField>& kl() const { return kl_; }

  Bounds bounds() const {
    return {Vector::Constant(n_theta(), p_.theta_min), Vector::Constant(n_theta(), 1.0)};
  }
  DesignVector initial_design() const { return {Vector::Constant(n_theta(), p_.theta0), bounds()}; }

  Index n_theta() const override { return high_.n_elements(); }
  Index n_xi() const override {
    switch (p_.variant) {
      case TopOptVariant::a: return 1;
      case TopOptVariant::b: return 2;
      case TopOptVariant::c: return 1 + p_.kl_modes;
    }
    return 1;
  }
  double gamma() const override { return p_.gamma; }

  RandomRealization sample(Rng& rng) const override {
    Vector xi(n_xi());
    xi[0] = load_model().draw_xi(rng);
    if (p_.variant == TopOptVariant::b) xi[1] = uq::LoadDirectionModel{}.draw_xi(rng);
    if (p_.variant == TopOptVariant::c) xi.tail(p_.kl_modes) = standard_normal(rng, p_.kl_modes);
    return {xi, std::nullopt};
  }

  Vector gradient(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    check(theta, xi);
    if (fidelity == Fidelity::high) {
      const Vector e0 = modulus(xi, Fidelity::high);
      const Vector rho = high_filter_.apply(theta);
      const auto sol = solve(high_, rho, e0, force(high_, xi), high_fixed_, xi);
      return fem::compliance_gradient(high_, theta, high_filter_, sol, p_.beta_p, e0, ke_) + high_mass_grad_;
    }
    const Vector theta_c = fem::restrict_field(theta, low_.nelx, low_.nely);
    const Vector e0 = modulus(xi, Fidelity::low);
    const Vector rho_c = low_filter_.apply(theta_c);
    const auto sol = solve(low_, rho_c, e0, force(low_, xi), low_fixed_, xi);
    const Vector g_c = fem::compliance_gradient(low_, theta_c, low_filter_, sol, p_.beta_p, e0, ke_);
    // Each fine design variable carries a quarter of its coarse parent's average.
    return 0.25 * fem::prolong(g_c, low_.nelx, low_.nely).values + high_mass_grad_;
  }

  double objective(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    check(theta, xi);
    const Vector rho = high_filter_.apply(theta);
    const double mass_term = p_.lambda * fem::mass(high_, rho);
    if (fidelity == Fidelity::high)
      return solve(high_, rho, modulus(xi, fidelity), force(high_, xi), high_fixed_, xi).compliance + mass_term;
    const Vector rho_c = low_filter_.apply(fem::restrict_field(theta, low_.nelx, low_.nely));
    return solve(low_, rho_c, modulus(xi, fidelity), force(low_, xi), low_fixed_, xi).compliance + mass_term;
  }

  /// Closed form for the load-only variants: compliance is quadratic in the load.
  std::optional<double> expected_objective(const Vector& theta) const override {
    if (p_.variant == TopOptVariant::c) return std::nullopt;
    if (theta.size() != n_theta()) throw DimensionFault("design has the wrong length");
    const Vector rho = high_filter_.apply(theta);
    const Vector e0 = Vector::Ones(high_.n_elements());
    // E[(1 + xi/2)^2] for xi ~ U[0, 1].
    const double mag2 = p_.p0 * p_.p0 * (1.0 + 0.5 + 0.25 / 3.0);
    const double mass_term = p_.lambda * fem::mass(high_, rho);
    const RandomRealization none{Vector::Zero(n_xi()), std::nullopt};
    if (p_.variant == TopOptVariant::a) {
      Vector f = Vector::Zero(high_.n_dofs());
      f[fem::StructuredMesh::dof_y(high_.node(0, 0))] = 1.0;
      return mag2 * solve(high_, rho, e0, f, high_fixed_, none).compliance + mass_term;
    }
    const Index dx = fem::StructuredMesh::dof_x(inclined_load_node(high_));
    Vector fx = Vector::Zero(high_.n_dofs()), fy = Vector::Zero(high_.n_dofs());
    fx[dx] = 1.0;
    fy[dx + 1] = 1.0;
    const auto ux = solve(high_, rho, e0, fx, high_fixed_, none);
    const auto uy = solve(high_, rho, e0, fy, high_fixed_, none);
    const uq::LoadDirectionModel dir;
    const double w = dir.half_width;
    const double sinc = w > 0.0 ? std::sin(2.0 * w) / (2.0 * w) : 1.0;
    const double ecos2 = 0.5 + 0.5 * std::cos(2.0 * dir.mean) * sinc;
    const double esin2 = 1.0 - ecos2;
    const double esincos = 0.5 * std::sin(2.0 * dir.mean) * sinc;
    const double cxx = fx.dot(ux.u), cyy = fy.dot(uy.u), cxy = fx.dot(uy.u);
    return mag2 * (ecos2 * cxx + 2.0 * esincos * cxy + esin2 * cyy) + mass_term;
  }

  /// Volume fraction of the filtered density.
  std::optional<double> mass_ratio(const Vector& theta) const override {
    return high_filter_.apply(theta).mean();
  }

 private:
  static const TopOptProblem& validated(const TopOptProblem& p) {
    p.validate();
    return p;
  }

  uq::LoadMagnitudeModel load_model() const { return uq::LoadMagnitudeModel(p_.p0); }

  void check(const Vector& theta, const RandomRealization& xi) const {
    if (theta.size() != n_theta()) throw DimensionFault("design has the wrong length");
    if (xi.xi.size() != n_xi()) throw DimensionFault("realization has the wrong length");
  }

  Vector force(const fem::StructuredMesh& mesh, const RandomRealization& xi) const {
    const double p = uq::sample_load(load_model(), xi.xi[0]);
    Vector f = Vector::Zero(mesh.n_dofs());
    if (p_.variant == TopOptVariant::b) {
      // Physical components (P cos phi, -P sin phi) with y up; dofs use y down.
      const double phi = uq::sample_direction(uq::LoadDirectionModel{}, xi.xi[1]);
      const Index node = inclined_load_node(mesh);
      f[fem::StructuredMesh::dof_x(node)] = p * std::cos(phi);
      f[fem::StructuredMesh::dof_y(node)] = p * std::sin(phi);
    } else {
      f[fem::StructuredMesh::dof_y(mesh.node(0, 0))] = p;
    }
    return f;
  }

  Vector modulus(const RandomRealization& xi, Fidelity fidelity) const {
    if (p_.variant != TopOptVariant::c) {
      const auto& mesh = fidelity == Fidelity::high ? high_ : low_;
      return Vector::Ones(mesh.n_elements());
    }
    const Vector z = kl_->log_field(xi.xi.tail(p_.kl_modes));
    if (fidelity == Fidelity::high) return z.array().exp();
    return fem::restrict_field(z, low_.nelx, low_.nely).array().exp();
  }

  fem::SolveResult solve(const fem::StructuredMesh& mesh, const Vector& rho, const Vector& e0, Vector f,
                         const std::vector<Index>& fixed, const RandomRealization& xi) const {
    const fem::LoadCase load{std::move(f), fixed};
    try {
      return fem::assemble_and_solve(mesh, rho, e0, load, p_.beta_p, ke_, p_.solver);
    } catch (const SolverDivergence& e) {
      std::ostringstream os;
      os << e.what() << " (xi =";
      for (Index i = 0; i < std::min<Index>(xi.xi.size(), 4); ++i) os << ' ' << xi.xi[i];
      if (xi.xi.size() > 4) os << " ...";
      os << ')';
      throw SolverDivergence(os.str());
    }
  }

  TopOptProblem p_;
  fem::StructuredMesh high_;
  fem::StructuredMesh low_;
  fem::FilterKernel high_filter_;
  fem::FilterKernel low_filter_;
  fem::ElementMatrix ke_;
  std::vector<Index> high_fixed_;
  std::vector<Index> low_fixed_;
  Vector high_mass_grad_;
  std::optional<uq::KLField> kl_;
};

}  // namespace bfsgd::problems

#endif  // BFSGD_PROBLEMS_TOPOPT_HPP
