#ifndef BFSGD_SGD_SAG_TABLE_HPP
#define BFSGD_SGD_SAG_TABLE_HPP

#include "bfsgd/types.hpp"

namespace bfsgd {

/// Gradient history d_1..d_N for SAG-type methods, zero-initialized, with an
/// incrementally maintained running sum.
class SagGradientTable {
 public:
  SagGradientTable(Index n_entries, Index dim)
      : entries_(Matrix::Zero(dim, n_entries)), sum_(Vector::Zero(dim)) {
    if (n_entries < 1) throw ConfigFault("gradient table needs at least one entry");
  }

  Index size() const { return entries_.cols(); }
  Index dim() const { return entries_.rows(); }

  void set(Index i, const Vector& grad) {
    if (grad.size() != dim()) throw DimensionFault("gradient has the wrong dimension");
    sum_ += grad - entries_.col(i);
    entries_.col(i) = grad;
  }

  auto entry(Index i) const { return entries_.col(i); }
  const Vector& sum() const { return sum_; }
  Vector mean() const { return sum_ / static_cast<double>(size()); }

  Vector recomputed_sum() const { return entries_.rowwise().sum(); }

  /// Relative deviation between the running and recomputed sums.
  double sum_drift() const {
    const Vector fresh = recomputed_sum();
    const double scale = std::max(fresh.norm(), entries_.cwiseAbs().rowwise().sum().norm());
    return scale == 0.0 ? (sum_ - fresh).norm() : (sum_ - fresh).norm() / scale;
  }

 private:
  Matrix entries_;  // one column per entry
  Vector sum_;
};

}  // namespace bfsgd

#endif  // BFSGD_SGD_SAG_TABLE_HPP
