#ifndef BFSGD_UNCERTAINTY_LOADS_HPP
#define BFSGD_UNCERTAINTY_LOADS_HPP

#include <numbers>
#include <random>

#include "bfsgd/types.hpp"

namespace bfsgd::uq {

/// P(xi) = p0 (1 + xi / 2), xi ~ U[0, 1].
struct LoadMagnitudeModel {
  double p0 = 1.0;

  explicit LoadMagnitudeModel(double p = 1.0) : p0(p) {
    if (!(p0 > 0.0)) throw ConfigFault("load magnitude p0 must be positive");
  }

  double draw_xi(Rng& rng) const { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
};

inline double sample_load(const LoadMagnitudeModel& model, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw DomainFault("load variable must lie in [0, 1]");
  return model.p0 * (1.0 + 0.5 * xi);
}

/// phi(xi) = pi/4 + xi, xi ~ U[-pi/8, pi/8].
struct LoadDirectionModel {
  double mean = std::numbers::pi / 4.0;
  double half_width = std::numbers::pi / 8.0;

  double draw_xi(Rng& rng) const { return std::uniform_real_distribution<double>(-half_width, half_width)(rng); }
};

inline double sample_direction(const LoadDirectionModel& model, double xi_phi) {
  // Tolerate the roundoff of a caller computing +-pi/8 itself.
  const double slack = 1e-12 * model.half_width;
  if (!(std::abs(xi_phi) <= model.half_width + slack)) throw DomainFault("direction variable out of range");
  return model.mean + xi_phi;
}

}  // namespace bfsgd::uq

#endif  // BFSGD_UNCERTAINTY_LOADS_HPP
