#ifndef BFSGD_TYPES_HPP
#define BFSGD_TYPES_HPP

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "bfsgd/errors.hpp"

namespace bfsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Fidelity { low, high };

inline const char* to_string(Fidelity f) { return f == Fidelity::low ? "low" : "high"; }

/// Box bounds for a design vector.
struct Bounds {
  Vector lower;
  Vector upper;
};

/// Optimization variable with optional box bounds.
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(Vector values) : values_(std::move(values)) {}
  DesignVector(Vector values, Bounds bounds) : values_(std::move(values)), bounds_(std::move(bounds)) {
    if (bounds_->lower.size() != values_.size() || bounds_->upper.size() != values_.size())
      throw DimensionFault("bounds length does not match design length");
    for (Index i = 0; i < values_.size(); ++i) {
      if (bounds_->lower[i] > bounds_->upper[i]) throw ConfigFault("lower bound exceeds upper bound");
      if (values_[i] < bounds_->lower[i] || values_[i] > bounds_->upper[i])
        throw ConfigFault("initial design violates its bounds at component " + std::to_string(i));
    }
  }

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  const std::optional<Bounds>& bounds() const { return bounds_; }
  bool has_bounds() const { return bounds_.has_value(); }
  Index size() const { return values_.size(); }

 private:
  Vector values_;
  std::optional<Bounds> bounds_;
};

/// Projects each component onto [lower_i, upper_i]. A no-op without bounds.
inline DesignVector clamp_box(DesignVector theta) {
  if (!theta.has_bounds()) return theta;
  const auto& b = *theta.bounds();
  theta.values() = theta.values().cwiseMax(b.lower).cwiseMin(b.upper);
  return theta;
}

/// One draw of the random inputs. `index` identifies a member of a finite population.
struct RandomRealization {
  Vector xi;
  std::optional<Index> index;
};

struct GradEval {
  Vector grad;
  double cost = 0.0;  // high-fidelity units
};

/// Supplies stochastic gradients of one objective at two fidelities.
///
/// Implementations must be immutable after construction: `grad` and
/// `objective` are called concurrently from several threads.
class BiFidelityOracle {
 public:
  virtual ~BiFidelityOracle() = default;

  virtual Index n_theta() const = 0;
  virtual Index n_xi() const = 0;
  /// Cost of one low-fidelity gradient relative to a high-fidelity one.
  virtual double gamma() const = 0;

  virtual RandomRealization sample(Rng& rng) const = 0;
  virtual Vector gradient(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const = 0;
  virtual double objective(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const = 0;

  GradEval grad(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const {
    return {gradient(theta, xi, fidelity), fidelity == Fidelity::high ? 1.0 : gamma()};
  }

  /// Size of the finite population ξ is drawn from, if the distribution is empirical.
  virtual std::optional<Index> population() const { return std::nullopt; }
  /// The i-th member of the population (0-based).
  virtual RandomRealization member(Index /*i*/) const {
    throw ConfigFault("oracle has no finite population");
  }

  /// E_ξ[gradient] in closed form, when the problem knows it.
  virtual std::optional<Vector> expected_gradient(const Vector& /*theta*/, Fidelity /*fidelity*/) const {
    return std::nullopt;
  }
  /// E_ξ[objective] in closed form, when the problem knows it.
  virtual std::optional<double> expected_objective(const Vector& /*theta*/) const { return std::nullopt; }
  /// Fraction of the design occupied by material (topology problems only).
  virtual std::optional<double> mass_ratio(const Vector& /*theta*/) const { return std::nullopt; }
  /// Minimizer of the expected objective, when known.
  virtual std::optional<Vector> minimizer() const { return std::nullopt; }
};

/// Throws NumericalFault naming the first non-finite entry.
inline void require_finite(const Vector& v, const std::string& what) {
  for (Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) throw NumericalFault(what + " is not finite", i);
}

}  // namespace bfsgd

#endif  // BFSGD_TYPES_HPP
