#ifndef BFSGD_CV_CONTROL_VARIATE_HPP
#define BFSGD_CV_CONTROL_VARIATE_HPP

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "bfsgd/types.hpp"

namespace bfsgd::cv {

enum class MeanKind { exact, estimated };

/// Paired draws of a primary quantity X and a control Y (one sample per row).
struct PairedSamples {
  Matrix x;
  Matrix y;
  Vector y_mean;
  MeanKind mean_kind = MeanKind::exact;
  Index n_low = 0;  // samples behind y_mean when it is estimated

  Index count() const { return x.rows(); }
  Index dim() const { return x.cols(); }

  void validate() const {
    if (x.rows() != y.rows() || x.cols() != y.cols())
      throw DimensionFault("paired samples differ in count or dimension");
    if (y_mean.size() != y.cols()) throw DimensionFault("control mean has the wrong dimension");
  }
};

struct ScalarAlpha {
  double value = 0.0;
};
struct DiagonalAlpha {
  Vector values;
};
struct MatrixAlpha {
  Matrix values;
};

/// Control-variate coefficient: scalar, diagonal, or full matrix.
using CvCoefficient = std::variant<ScalarAlpha, DiagonalAlpha, MatrixAlpha>;

/// Applies alpha to a (column) deviation vector.
inline Vector apply_alpha(const CvCoefficient& alpha, const Vector& deviation) {
  return std::visit(
      [&](const auto& a) -> Vector {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, ScalarAlpha>) {
          return a.value * deviation;
        } else if constexpr (std::is_same_v<T, DiagonalAlpha>) {
          if (a.values.size() != deviation.size()) throw DimensionFault("diagonal alpha has the wrong size");
          return a.values.cwiseProduct(deviation);
        } else {
          if (a.values.cols() != deviation.size()) throw DimensionFault("alpha matrix has the wrong size");
          return a.values * deviation;
        }
      },
      alpha);
}

/// Sample mean of Z = X - alpha (Y - E[Y]).
inline Vector cv_estimate(const PairedSamples& pairs, const CvCoefficient& alpha) {
  pairs.validate();
  if (pairs.count() == 0) throw DimensionFault("no samples");
  const Vector x_bar = pairs.x.colwise().mean().transpose();
  const Vector y_bar = pairs.y.colwise().mean().transpose();
  // The estimator is linear, so the mean of Z equals Z of the means.
  return x_bar - apply_alpha(alpha, y_bar - pairs.y_mean);
}

/// Per-sample Z values, one per row.
inline Matrix cv_samples(const PairedSamples& pairs, const CvCoefficient& alpha) {
  pairs.validate();
  Matrix z(pairs.count(), pairs.dim());
  for (Index r = 0; r < pairs.count(); ++r)
    z.row(r) = (pairs.x.row(r).transpose() -
                apply_alpha(alpha, pairs.y.row(r).transpose() - pairs.y_mean))
                   .transpose();
  return z;
}

/// sigma_XY / sigma_Y^2 from unbiased sample moments of a scalar pair.
inline double optimal_alpha_scalar(const PairedSamples& pairs) {
  pairs.validate();
  if (pairs.dim() != 1) throw DimensionFault("scalar alpha needs one-dimensional samples");
  const Index n = pairs.count();
  if (n < 2) throw DimensionFault("covariance needs at least two samples");
  const auto xc = pairs.x.col(0).array() - pairs.x.col(0).mean();
  const auto yc = pairs.y.col(0).array() - pairs.y.col(0).mean();
  const double denom = static_cast<double>(n - 1);
  const double var_x = xc.square().sum() / denom;
  const double var_y = yc.square().sum() / denom;
  const double cov = (xc * yc).sum() / denom;
  if (var_y == 0.0 || var_y < 1e-14 * var_x) throw DegenerateAlpha("control variance is negligible");
  return cov / var_y;
}

/// Sample covariance between the columns of a and b, 1/(n-1) normalized.
inline Matrix cross_covariance(const Matrix& a, const Matrix& b) {
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  return ac.transpose() * bc / static_cast<double>(a.rows() - 1);
}

/// Trace-minimizing coefficient matrix C_XY V_Y^{-1}.
inline MatrixAlpha optimal_alpha_matrix(const PairedSamples& pairs) {
  pairs.validate();
  if (pairs.count() < 2) throw DimensionFault("covariance needs at least two samples");
  const Matrix v_y = cross_covariance(pairs.y, pairs.y);
  const Matrix c_xy = cross_covariance(pairs.x, pairs.y);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(v_y, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e12) throw SingularCovariance("control covariance is not invertible");

  // alpha V_Y = C_XY, solved as V_Y alpha^T = C_XY^T.
  const Matrix alpha_t = v_y.ldlt().solve(c_xy.transpose());
  return {alpha_t.transpose()};
}

/// Diagonal coefficient with per-entry degeneracy flags.
struct DiagonalFit {
  DiagonalAlpha alpha;
  std::vector<bool> degenerate;

  Index degenerate_count() const {
    Index c = 0;
    for (bool d : degenerate) c += d ? 1 : 0;
    return c;
  }
  bool all_degenerate() const { return degenerate_count() == static_cast<Index>(degenerate.size()); }
};

/// alpha_ii = Cov(high, low)_ii / Var(low)_ii from centered sample sums.
///
/// Both sets are centered on their own sample means, so a supplied control
/// mean that differs from the sample mean does not bias the ratio; `low_mean`
/// only fixes the expected dimension. Entries whose low-fidelity spread vanishes are set
/// to zero and flagged; with fewer than two samples every entry is flagged.
inline DiagonalFit diagonal_alpha(const Matrix& high, const Matrix& low, const Vector& low_mean) {
  if (high.rows() != low.rows() || high.cols() != low.cols())
    throw DimensionFault("high and low samples differ in shape");
  if (low_mean.size() != low.cols()) throw DimensionFault("low mean has the wrong dimension");
  const Index d = high.cols();
  DiagonalFit fit{{Vector::Zero(d)}, std::vector<bool>(static_cast<std::size_t>(d), true)};
  if (high.rows() < 2) return fit;

  const Matrix hc = high.rowwise() - high.colwise().mean();
  const Matrix lc = low.rowwise() - low.colwise().mean();
  for (Index i = 0; i < d; ++i) {
    const double cross = hc.col(i).dot(lc.col(i));
    const double low_sq = lc.col(i).squaredNorm();
    const double high_sq = hc.col(i).squaredNorm();
    if (low_sq == 0.0 || low_sq < 1e-14 * high_sq) continue;
    fit.alpha.values[i] = cross / low_sq;
    fit.degenerate[static_cast<std::size_t>(i)] = false;
  }
  return fit;
}

/// Scales a diagonal coefficient for an estimated control mean built from n_low samples.
inline DiagonalAlpha corrected_alpha(const DiagonalAlpha& alpha, Index n_high, Index n_low) {
  if (n_high < 1 || n_low < 1) throw ConfigFault("sample counts must be positive");
  const double factor = 1.0 / (1.0 + static_cast<double>(n_high) / static_cast<double>(n_low));
  return {alpha.values * factor};
}

/// Variance of the control-variate mean at the optimal coefficient.
///
/// With an exact control mean: (1/n_high)(1 - rho^2) var_x. With a mean
/// estimated from n_low samples: (1/n_high)(1 - rho^2 / (1 + n_high/n_low)) var_x.
inline double predicted_variance(double rho, double var_x, Index n_high, std::optional<Index> n_low = {}) {
  if (!(std::abs(rho) <= 1.0)) throw DomainFault("correlation outside [-1, 1]");
  if (n_high < 1) throw ConfigFault("n_high must be positive");
  double shrink = rho * rho;
  if (n_low) {
    if (*n_low < 1) throw ConfigFault("n_low must be positive");
    shrink /= 1.0 + static_cast<double>(n_high) / static_cast<double>(*n_low);
  }
  return (1.0 - shrink) * var_x / static_cast<double>(n_high);
}

}  // namespace bfsgd::cv

#endif  // BFSGD_CV_CONTROL_VARIATE_HPP
