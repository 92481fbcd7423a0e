#ifndef BFSGD_PROBLEMS_QUADRATIC_HPP
#define BFSGD_PROBLEMS_QUADRATIC_HPP

#include <cmath>
#include <span>

#include <Eigen/QR>

#include "bfsgd/rng.hpp"
#include "bfsgd/types.hpp"

namespace bfsgd::problems {

/// f(theta; xi) = (theta - theta*)^T A (theta - theta*) / 2 + noise . (theta - theta*),
/// with A = Q diag(linspace(mu, L)) Q^T.
///
/// xi = [eps, eta] (2 * dim standard normals). HIGH noise is sigma * eps; LOW is
/// scale * A d + bias + sigma (rho eps + sqrt(1 - rho^2) eta), so rho is the
/// per-direction correlation of the noise parts.
struct QuadraticTestProblem {
  Index dim = 4;
  double mu = 1.0;
  double L = 2.0;
  double noise = 0.0;
  double low_scale = 1.0;
  double low_bias = 0.0;
  double rho = 1.0;
  double gamma = 0.2;
  std::uint64_t problem_seed = 7;

  void validate() const {
    if (dim < 1) throw ConfigFault("quadratic dimension must be positive");
    if (!(mu > 0.0) || !(L >= mu)) throw ConfigFault("quadratic needs 0 < mu <= L");
    if (dim == 1 && L != mu) throw ConfigFault("a one-dimensional quadratic needs mu == L");
    if (!(noise >= 0.0)) throw ConfigFault("noise level must be non-negative");
    if (!(std::abs(rho) <= 1.0)) throw ConfigFault("correlation must lie in [-1, 1]");
    if (!(gamma >= 0.0)) throw ConfigFault("gamma must be non-negative");
  }

  bool low_identical() const { return low_scale == 1.0 && low_bias == 0.0 && rho == 1.0; }
};

class QuadraticOracle final : public BiFidelityOracle {
 public:
  explicit QuadraticOracle(QuadraticTestProblem p) : p_(p) {
    p_.validate();
    Rng rng = make_rng(p_.problem_seed, Stream::problem);
    const Matrix g = Eigen::Map<const Matrix>(standard_normal(rng, p_.dim * p_.dim).data(), p_.dim, p_.dim);
    const Matrix q = g.householderQr().householderQ();
    Vector eig(p_.dim);
    for (Index i = 0; i < p_.dim; ++i)
      eig[i] = p_.dim == 1 ? p_.mu : p_.mu + (p_.L - p_.mu) * static_cast<double>(i) / static_cast<double>(p_.dim - 1);
    a_ = q * eig.asDiagonal() * q.transpose();
    a_ = 0.5 * (a_ + a_.transpose()).eval();
    theta_star_ = standard_normal(rng, p_.dim);
  }

  const QuadraticTestProblem& spec() const { return p_; }
  const Matrix& hessian() const { return a_; }
  double mu() const { return p_.mu; }
  double L() const { return p_.L; }

  Index n_theta() const override { return p_.dim; }
  Index n_xi() const override { return 2 * p_.dim; }
  double gamma() const override { return p_.gamma; }

  RandomRealization sample(Rng& rng) const override { return {standard_normal(rng, 2 * p_.dim), std::nullopt}; }

  Vector gradient(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    check(theta, xi);
    const Vector core = a_ * (theta - theta_star_);
    const Vector eps = xi.xi.head(p_.dim);
    if (fidelity == Fidelity::high || p_.low_identical()) return core + p_.noise * eps;
    const Vector eta = xi.xi.tail(p_.dim);
    return p_.low_scale * core + Vector::Constant(p_.dim, p_.low_bias) +
           p_.noise * (p_.rho * eps + std::sqrt(1.0 - p_.rho * p_.rho) * eta);
  }

  double objective(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    check(theta, xi);
    const Vector d = theta - theta_star_;
    const Vector eps = xi.xi.head(p_.dim);
    const double quad = 0.5 * d.dot(a_ * d);
    if (fidelity == Fidelity::high || p_.low_identical()) return quad + p_.noise * eps.dot(d);
    const Vector eta = xi.xi.tail(p_.dim);
    return p_.low_scale * quad + p_.low_bias * d.sum() +
           p_.noise * (p_.rho * eps + std::sqrt(1.0 - p_.rho * p_.rho) * eta).dot(d);
  }

  std::optional<Vector> expected_gradient(const Vector& theta, Fidelity fidelity) const override {
    const Vector core = a_ * (theta - theta_star_);
    if (fidelity == Fidelity::high || p_.low_identical()) return core;
    return Vector(p_.low_scale * core + Vector::Constant(p_.dim, p_.low_bias));
  }

  std::optional<double> expected_objective(const Vector& theta) const override {
    const Vector d = theta - theta_star_;
    return 0.5 * d.dot(a_ * d);
  }

  std::optional<Vector> minimizer() const override { return theta_star_; }

  /// Minimizer of the mean HIGH objective over a fixed realization set.
  Vector finite_sum_minimizer(std::span<const RandomRealization> set) const {
    if (set.empty()) throw ConfigFault("realization set is empty");
    Vector mean = Vector::Zero(p_.dim);
    for (const auto& r : set) mean += r.xi.head(p_.dim);
    mean /= static_cast<double>(set.size());
    return theta_star_ - p_.noise * a_.ldlt().solve(mean);
  }

 private:
  void check(const Vector& theta, const RandomRealization& xi) const {
    if (theta.size() != p_.dim) throw DimensionFault("design has the wrong length");
    if (xi.xi.size() != 2 * p_.dim) throw DimensionFault("realization has the wrong length");
  }

  QuadraticTestProblem p_;
  Matrix a_;
  Vector theta_star_;
};

}  // namespace bfsgd::problems

#endif  // BFSGD_PROBLEMS_QUADRATIC_HPP
