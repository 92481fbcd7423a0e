#ifndef BFSGD_HARNESS_COST_HPP
#define BFSGD_HARNESS_COST_HPP

#include <cstdint>

#include "bfsgd/errors.hpp"

namespace bfsgd {

/// Gradient-call counters; cost is expressed in high-fidelity units.
class CostLedger {
 public:
  explicit CostLedger(double gamma = 1.0) : gamma_(gamma) {}

  void charge_high(std::int64_t n = 1) { high_calls_ += n; }
  void charge_low(std::int64_t n = 1) { low_calls_ += n; }

  std::int64_t high_calls() const { return high_calls_; }
  std::int64_t low_calls() const { return low_calls_; }
  double gamma() const { return gamma_; }
  double cumulative() const {
    return static_cast<double>(high_calls_) + gamma_ * static_cast<double>(low_calls_);
  }

 private:
  double gamma_;
  std::int64_t high_calls_ = 0;
  std::int64_t low_calls_ = 0;
};

// The closed forms are evaluated as (high calls) + gamma * (low calls), the
// same arithmetic the ledger performs, so the two agree bit for bit.

/// Total BF-SAG cost: n_it (n_h + gamma n_l).
inline double cost_bfsag(double n_it, double n_h, double n_l, double gamma) {
  if (n_it < 0 || n_h < 0 || n_l < 0 || gamma < 0) throw DomainFault("cost inputs must be non-negative");
  return n_it * n_h + gamma * (n_it * n_l);
}

/// Total BF-SVRG cost: n_oit (gamma n_l + (gamma + 1) m n_h).
inline double cost_bfsvrg(double n_oit, double n_l, double m, double n_h, double gamma) {
  if (n_oit < 0 || n_l < 0 || m < 0 || n_h < 0 || gamma < 0)
    throw DomainFault("cost inputs must be non-negative");
  return n_oit * m * n_h + gamma * (n_oit * (n_l + m * n_h));
}

/// Per-iteration BF-SAG cost over a SAG batch of n_h_prime high-fidelity gradients.
inline double cost_ratio_sag(double n_h, double n_l, double gamma, double n_h_prime) {
  if (n_h_prime <= 0) throw DomainFault("SAG batch size must be positive");
  return (n_h + gamma * n_l) / n_h_prime;
}

/// Per-outer-iteration BF-SVRG cost over SVRG with n_h_prime anchor and n_h_dblprime batch gradients.
inline double cost_ratio_svrg(double n_l, double m, double n_h, double gamma, double n_h_prime,
                              double n_h_dblprime) {
  const double denom = n_h_prime + 2.0 * n_h_dblprime * m;
  if (denom <= 0) throw DomainFault("SVRG cost denominator must be positive");
  return (gamma * n_l + (gamma + 1.0) * m * n_h) / denom;
}

}  // namespace bfsgd

#endif  // BFSGD_HARNESS_COST_HPP
