#ifndef BFSGD_PROBLEMS_POLYNOMIAL_HPP
#define BFSGD_PROBLEMS_POLYNOMIAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "bfsgd/rng.hpp"
#include "bfsgd/types.hpp"

namespace bfsgd::problems {

inline constexpr std::array<double, 5> poly_true_coefficients = {2.0, 5.0, 1.75, 5.0, 6.5};
inline constexpr double poly_anchor_spacing = 0.25;

/// [1, x, x^2, x^3, x^4].
inline Vector monomials(double x) {
  Vector b(5);
  b[0] = 1.0;
  for (Index p = 1; p < 5; ++p) b[p] = b[p - 1] * x;
  return b;
}

inline Vector true_coefficients() { return Eigen::Map<const Vector>(poly_true_coefficients.data(), 5); }

inline double poly_high(double x) { return true_coefficients().dot(monomials(x)); }

/// Gradient in theta of (y_obs - theta . b(x))^2.
inline Vector poly_high_grad(const Vector& theta, double x, double y_obs) {
  if (theta.size() != 5) throw DimensionFault("polynomial model has five coefficients");
  const Vector b = monomials(x);
  return -2.0 * (y_obs - theta.dot(b)) * b;
}

/// Nearest point of {-1, -0.75, ..., 1}; exact midpoints go to the smaller anchor.
inline double nearest_anchor(double x) {
  if (!(x >= -1.0 && x <= 1.0)) throw DomainFault("x must lie in [-1, 1]");
  const double t = (x + 1.0) / poly_anchor_spacing;
  const double k = std::clamp(std::ceil(t - 0.5), 0.0, 8.0);
  return -1.0 + poly_anchor_spacing * k;
}

/// Second-order Taylor expansion of each monomial about x0.
inline Vector taylor_monomials(double x, double x0) {
  const double d = x - x0;
  Vector b(5);
  for (int p = 0; p < 5; ++p) {
    double v = std::pow(x0, p);
    if (p >= 1) v += p * std::pow(x0, p - 1) * d;
    if (p >= 2) v += 0.5 * p * (p - 1) * std::pow(x0, p - 2) * d * d;
    b[p] = v;
  }
  return b;
}

/// y_high(x0) + y'(x0)(x - x0) + y''(x0)(x - x0)^2 / 2.
inline double poly_low(double x, double x0) {
  if (!(x0 >= -1.0 && x0 <= 1.0)) throw DomainFault("anchor must lie in [-1, 1]");
  return true_coefficients().dot(taylor_monomials(x, x0));
}

/// Gradient of (y_obs - theta . b~(x))^2 with the monomials replaced by their
/// Taylor expansion about the nearest anchor.
inline Vector poly_low_grad(const Vector& theta, double x, double y_obs) {
  if (theta.size() != 5) throw DimensionFault("polynomial model has five coefficients");
  const Vector b = taylor_monomials(x, nearest_anchor(x));
  return -2.0 * (y_obs - theta.dot(b)) * b;
}

struct Observations {
  Vector x;
  Vector y;
  Index size() const { return x.size(); }
};

/// x ~ U[-1, 1], y = y_high(x) + e with e ~ N(0, noise_std^2).
inline Observations gen_observations(std::uint64_t seed, Index n, double noise_std = 0.5) {
  if (n < 1) throw ConfigFault("at least one observation is required");
  if (!(noise_std >= 0.0)) throw ConfigFault("noise standard deviation must be non-negative");
  Rng rng = make_rng(seed, Stream::data);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  Observations obs{Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    obs.x[i] = ux(rng);
    obs.y[i] = poly_high(obs.x[i]) + noise_std * noise(rng);
  }
  return obs;
}

struct PolyRegressionProblem {
  Index n_obs = 1000;
  double noise_std = 0.5;
  std::uint64_t data_seed = 1;
  double gamma = 0.2;

  void validate() const {
    if (n_obs < 1) throw ConfigFault("at least one observation is required");
    if (!(noise_std >= 0.0)) throw ConfigFault("noise standard deviation must be non-negative");
    if (!(gamma >= 0.0)) throw ConfigFault("gamma must be non-negative");
  }
};

/// Least-squares fit of the quartic model; xi = [x, y_obs] drawn from the
/// fixed observation set, whose mean squared residual is the objective.
class PolyOracle final : public BiFidelityOracle {
 public:
  explicit PolyOracle(const PolyRegressionProblem& p = {})
      : PolyOracle(gen_observations(p.data_seed, p.n_obs, p.noise_std), p.gamma) {
    p.validate();
  }
  PolyOracle(Observations obs, double gamma) : obs_(std::move(obs)), gamma_(gamma) {
    if (obs_.size() < 1) throw ConfigFault("at least one observation is required");
    Matrix b(obs_.size(), 5);
    for (Index i = 0; i < obs_.size(); ++i) b.row(i) = monomials(obs_.x[i]).transpose();
    least_squares_ = b.colPivHouseholderQr().solve(obs_.y);
  }

  const Observations& observations() const { return obs_; }

  Index n_theta() const override { return 5; }
  Index n_xi() const override { return 2; }
  double gamma() const override { return gamma_; }

  RandomRealization sample(Rng& rng) const override {
    return member(std::uniform_int_distribution<Index>(0, obs_.size() - 1)(rng));
  }
  std::optional<Index> population() const override { return obs_.size(); }
  RandomRealization member(Index i) const override {
    if (i < 0 || i >= obs_.size()) throw DimensionFault("observation index out of range");
    return {Eigen::Vector2d(obs_.x[i], obs_.y[i]), i};
  }

  Vector gradient(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    check(xi);
    return fidelity == Fidelity::high ? poly_high_grad(theta, xi.xi[0], xi.xi[1])
                                      : poly_low_grad(theta, xi.xi[0], xi.xi[1]);
  }

  double objective(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    check(xi);
    const double x = xi.xi[0];
    const Vector b = fidelity == Fidelity::high ? monomials(x) : taylor_monomials(x, nearest_anchor(x));
    const double r = xi.xi[1] - theta.dot(b);
    return r * r;
  }

  std::optional<Vector> expected_gradient(const Vector& theta, Fidelity fidelity) const override {
    Vector g = Vector::Zero(5);
    for (Index i = 0; i < obs_.size(); ++i) g += gradient(theta, member(i), fidelity);
    return Vector(g / static_cast<double>(obs_.size()));
  }

  /// Mean squared error over the whole observation set.
  std::optional<double> expected_objective(const Vector& theta) const override {
    if (theta.size() != 5) throw DimensionFault("polynomial model has five coefficients");
    double s = 0.0;
    for (Index i = 0; i < obs_.size(); ++i) {
      const double r = obs_.y[i] - theta.dot(monomials(obs_.x[i]));
      s += r * r;
    }
    return s / static_cast<double>(obs_.size());
  }

  std::optional<Vector> minimizer() const override { return least_squares_; }

 private:
  void check(const RandomRealization& xi) const {
    if (xi.xi.size() != 2) throw DimensionFault("realization must be [x, y_obs]");
  }

  Observations obs_;
  double gamma_;
  Vector least_squares_;
};

}  // namespace bfsgd::problems

#endif  // BFSGD_PROBLEMS_POLYNOMIAL_HPP
