#ifndef BFSGD_SGD_PENALTY_HPP
#define BFSGD_SGD_PENALTY_HPP

#include <algorithm>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "bfsgd/types.hpp"

namespace bfsgd {

/// g(theta; xi) <= 0 is feasible.
struct Constraint {
  std::function<double(const Vector&, const RandomRealization&)> value;
  std::function<Vector(const Vector&, const RandomRealization&)> gradient;
};

/// Quadratic penalty: sum_j kappa_j (max(0, g_j))^2.
struct PenaltySpec {
  Vector kappa;
  std::vector<Constraint> constraints;

  void validate() const {
    if (kappa.size() != static_cast<Index>(constraints.size()))
      throw DimensionFault("one penalty weight per constraint is required");
    for (Index j = 0; j < kappa.size(); ++j)
      if (!(kappa[j] >= 0.0)) throw ConfigFault("penalty weights must be non-negative");
  }

  double value(const Vector& theta, const RandomRealization& xi) const {
    double total = 0.0;
    for (std::size_t j = 0; j < constraints.size(); ++j) {
      const double g = std::max(0.0, constraints[j].value(theta, xi));
      total += kappa[static_cast<Index>(j)] * g * g;
    }
    return total;
  }

  Vector gradient(const Vector& theta, const RandomRealization& xi) const {
    Vector out = Vector::Zero(theta.size());
    for (std::size_t j = 0; j < constraints.size(); ++j) {
      const double g = constraints[j].value(theta, xi);
      if (g <= 0.0) continue;
      out += (2.0 * kappa[static_cast<Index>(j)] * g) * constraints[j].gradient(theta, xi);
    }
    return out;
  }
};

/// grad f + sum_j kappa_j grad (g_j^+)^2 at one realization.
inline Vector penalty_gradient(const BiFidelityOracle& oracle, const PenaltySpec& penalty,
                               const DesignVector& theta, const RandomRealization& xi, Fidelity fidelity) {
  penalty.validate();
  if (theta.has_bounds()) {
    const auto& b = *theta.bounds();
    for (Index i = 0; i < theta.size(); ++i)
      if (theta.values()[i] < b.lower[i] || theta.values()[i] > b.upper[i])
        throw ConfigFault("design outside its bounds at component " + std::to_string(i));
  }
  Vector g = oracle.gradient(theta.values(), xi, fidelity);
  if (!penalty.constraints.empty()) g += penalty.gradient(theta.values(), xi);
  require_finite(g, "penalized gradient");
  return g;
}

/// Wraps an oracle so that both fidelities return penalized gradients and objectives.
class PenalizedOracle final : public BiFidelityOracle {
 public:
  PenalizedOracle(std::shared_ptr<const BiFidelityOracle> base, PenaltySpec penalty)
      : base_(std::move(base)), penalty_(std::move(penalty)) {
    penalty_.validate();
  }

  Index n_theta() const override { return base_->n_theta(); }
  Index n_xi() const override { return base_->n_xi(); }
  double gamma() const override { return base_->gamma(); }
  RandomRealization sample(Rng& rng) const override { return base_->sample(rng); }
  std::optional<Index> population() const override { return base_->population(); }
  RandomRealization member(Index i) const override { return base_->member(i); }
  std::optional<double> mass_ratio(const Vector& theta) const override { return base_->mass_ratio(theta); }

  Vector gradient(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    return penalty_gradient(*base_, penalty_, DesignVector(theta), xi, fidelity);
  }
  double objective(const Vector& theta, const RandomRealization& xi, Fidelity fidelity) const override {
    return base_->objective(theta, xi, fidelity) + penalty_.value(theta, xi);
  }

 private:
  std::shared_ptr<const BiFidelityOracle> base_;
  PenaltySpec penalty_;
};

}  // namespace bfsgd

#endif  // BFSGD_SGD_PENALTY_HPP
