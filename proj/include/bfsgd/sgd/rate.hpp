#ifndef BFSGD_SGD_RATE_HPP
#define BFSGD_SGD_RATE_HPP

#include <algorithm>
#include <cmath>
#include <span>

#include "bfsgd/types.hpp"

namespace bfsgd {

struct RateFit {
  double rate = 1.0;         // exp(slope of log error per iteration)
  double fit_quality = 0.0;  // coefficient of determination of the log-linear fit
};

/// Least-squares fit of log(error) against iteration over the trailing
/// `tail_fraction` of the series.
inline RateFit measure_linear_rate(std::span<const double> errors, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw DomainFault("tail fraction must lie in (0, 1]");
  const auto n = static_cast<Index>(errors.size());
  const auto tail = static_cast<Index>(std::ceil(tail_fraction * static_cast<double>(n)));
  if (tail < 3) throw InsufficientData("rate fit needs at least three tail points");
  const Index start = n - tail;

  double mx = 0.0, my = 0.0;
  for (Index i = start; i < n; ++i) {
    const double e = errors[static_cast<std::size_t>(i)];
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainFault("errors must be positive and finite");
    mx += static_cast<double>(i);
    my += std::log(e);
  }
  mx /= static_cast<double>(tail);
  my /= static_cast<double>(tail);

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (Index i = start; i < n; ++i) {
    const double dx = static_cast<double>(i) - mx;
    const double dy = std::log(errors[static_cast<std::size_t>(i)]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const double slope = sxy / sxx;
  // A flat series is fitted exactly by a zero slope.
  const double flat = 1e-24 * static_cast<double>(tail) * std::max(1.0, my * my);
  const double r2 = syy <= flat ? 1.0 : (sxy * sxy) / (sxx * syy);
  return {std::exp(slope), r2};
}

}  // namespace bfsgd

#endif  // BFSGD_SGD_RATE_HPP
