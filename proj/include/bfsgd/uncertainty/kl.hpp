#ifndef BFSGD_UNCERTAINTY_KL_HPP
#define BFSGD_UNCERTAINTY_KL_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bfsgd/types.hpp"

namespace bfsgd::uq {

/// Separable exponential covariance sigma^2 exp(-|dx|/l1 - |dy|/l2) of the log-modulus.
struct CovarianceSpec {
  double sigma = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;

  void validate() const {
    if (!(sigma > 0.0 && l1 > 0.0 && l2 > 0.0))
      throw ConfigFault("covariance needs positive sigma and correlation lengths");
  }

  double operator()(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    return sigma * sigma * std::exp(-std::abs(a.x() - b.x()) / l1 - std::abs(a.y() - b.y()) / l2);
  }
};

/// Truncated discrete Karhunen-Loeve expansion over a point set.
struct KLField {
  Vector eigenvalues;  // descending
  Matrix modes;        // one orthonormal column per eigenvalue
  double total_variance = 0.0;
  double captured_fraction = 0.0;

  Index n_points() const { return modes.rows(); }
  Index n_modes() const { return eigenvalues.size(); }

  /// z = sum_i sqrt(lambda_i) xi_i psi_i.
  Vector log_field(const Vector& xi) const {
    if (xi.size() != n_modes()) throw DimensionFault("KL coordinates must have one entry per mode");
    return modes * eigenvalues.cwiseSqrt().cwiseProduct(xi);
  }

  /// Pointwise variance of the truncated series.
  Vector pointwise_variance() const { return modes.cwiseAbs2() * eigenvalues; }
};

namespace detail {

inline KLField truncate(const Vector& values, const Matrix& vectors, Index n_max, double trace) {
  // Eigen returns ascending order; reverse and clamp roundoff negatives.
  const Index n = values.size();
  KLField out;
  out.eigenvalues.resize(n_max);
  out.modes.resize(vectors.rows(), n_max);
  for (Index i = 0; i < n_max; ++i) {
    out.eigenvalues[i] = std::max(0.0, values[n - 1 - i]);
    out.modes.col(i) = vectors.col(n - 1 - i);
  }
  out.total_variance = trace;
  out.captured_fraction = std::min(1.0, out.eigenvalues.sum() / trace);
  return out;
}

inline void check_n_max(Index n_max, Index n) {
  if (n_max < 1 || n_max > n) throw DimensionFault("number of KL modes must lie in [1, number of points]");
}

}  // namespace detail

/// Dense eigendecomposition of the covariance matrix over arbitrary distinct points.
inline KLField build_kl(const CovarianceSpec& spec, const std::vector<Eigen::Vector2d>& points, Index n_max) {
  spec.validate();
  const auto n = static_cast<Index>(points.size());
  detail::check_n_max(n_max, n);
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) {
      if (j < i && points[static_cast<std::size_t>(i)] == points[static_cast<std::size_t>(j)])
        throw DimensionFault("KL points must be distinct");
      c(i, j) = c(j, i) = spec(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
    }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  if (eig.info() != Eigen::Success) throw EigenFailure("covariance eigendecomposition did not converge");
  return detail::truncate(eig.eigenvalues(), eig.eigenvectors(), n_max, c.trace());
}

/// Points at the element centroids of an nx-by-ny grid of square cells of size h,
/// ordered column by column (index ix * ny + iy).
inline std::vector<Eigen::Vector2d> grid_centroids(Index nx, Index ny, double h) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(static_cast<std::size_t>(nx * ny));
  for (Index ix = 0; ix < nx; ++ix)
    for (Index iy = 0; iy < ny; ++iy)
      pts.emplace_back((static_cast<double>(ix) + 0.5) * h, (static_cast<double>(iy) + 0.5) * h);
  return pts;
}

/// Same spectrum as build_kl on grid_centroids, computed from the two 1D
/// factors of the separable covariance (C = Cx kron Cy).
inline KLField build_kl_grid(const CovarianceSpec& spec, Index nx, Index ny, double h, Index n_max) {
  spec.validate();
  if (nx < 1 || ny < 1 || !(h > 0.0)) throw DimensionFault("grid must be non-empty with positive spacing");
  detail::check_n_max(n_max, nx * ny);
  auto factor = [h](Index n, double l) {
    Matrix c(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) c(i, j) = std::exp(-h * static_cast<double>(std::abs(i - j)) / l);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    if (eig.info() != Eigen::Success) throw EigenFailure("covariance eigendecomposition did not converge");
    return eig;
  };
  const auto ex = factor(nx, spec.l1);
  const auto ey = factor(ny, spec.l2);

  struct Pair {
    double value;
    Index i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(nx * ny));
  const double s2 = spec.sigma * spec.sigma;
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < ny; ++j) pairs.push_back({s2 * ex.eigenvalues()[i] * ey.eigenvalues()[j], i, j});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.value > b.value; });

  KLField out;
  out.eigenvalues.resize(n_max);
  out.modes.resize(nx * ny, n_max);
  for (Index k = 0; k < n_max; ++k) {
    const auto& p = pairs[static_cast<std::size_t>(k)];
    out.eigenvalues[k] = std::max(0.0, p.value);
    const auto a = ex.eigenvectors().col(p.i);
    const auto b = ey.eigenvectors().col(p.j);
    for (Index ix = 0; ix < nx; ++ix) out.modes.col(k).segment(ix * ny, ny) = a[ix] * b;
  }
  out.total_variance = s2 * static_cast<double>(nx * ny);
  out.captured_fraction = std::min(1.0, out.eigenvalues.sum() / out.total_variance);
  return out;
}

/// exp(z) per point; strictly positive for finite xi.
inline Vector sample_field(const KLField& kl, const Vector& xi) { return kl.log_field(xi).array().exp(); }

struct KLCacheKey {
  Index nx = 0, ny = 0;
  double h = 0.0;
  CovarianceSpec spec;
  Index n_max = 0;

  bool operator==(const KLCacheKey& o) const {
    return nx == o.nx && ny == o.ny && h == o.h && spec.sigma == o.spec.sigma && spec.l1 == o.spec.l1 &&
           spec.l2 == o.spec.l2 && n_max == o.n_max;
  }

  std::string filename() const {
    std::ostringstream os;
    os.precision(17);
    os << "kl_" << nx << 'x' << ny << "_h" << h << "_s" << spec.sigma << "_l" << spec.l1 << '_' << spec.l2 << "_n"
       << n_max << ".bin";
    return os.str();
  }
};

namespace detail {

inline constexpr std::uint64_t kl_magic = 0x4b4c4649454c4431ULL;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace detail

inline void save_kl(const std::filesystem::path& path, const KLCacheKey& key, const KLField& kl) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigFault("cannot write KL cache " + path.string());
  detail::put(os, detail::kl_magic);
  for (Index v : {key.nx, key.ny, key.n_max, kl.n_points()}) detail::put(os, static_cast<std::int64_t>(v));
  for (double v : {key.h, key.spec.sigma, key.spec.l1, key.spec.l2, kl.total_variance, kl.captured_fraction})
    detail::put(os, v);
  os.write(reinterpret_cast<const char*>(kl.eigenvalues.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(kl.eigenvalues.size())));
  os.write(reinterpret_cast<const char*>(kl.modes.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(kl.modes.size())));
  if (!os) throw ConfigFault("failed writing KL cache " + path.string());
}

/// Returns nullopt when the file is missing, truncated, or built for a different key.
inline std::optional<KLField> load_kl(const std::filesystem::path& path, const KLCacheKey& key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  std::uint64_t magic = 0;
  if (!detail::get(is, magic) || magic != detail::kl_magic) return std::nullopt;
  std::int64_t ints[4];
  double reals[6];
  for (auto& v : ints)
    if (!detail::get(is, v)) return std::nullopt;
  for (auto& v : reals)
    if (!detail::get(is, v)) return std::nullopt;
  KLCacheKey stored{ints[0], ints[1], reals[0], {reals[1], reals[2], reals[3]}, ints[2]};
  if (!(stored == key) || ints[3] != key.nx * key.ny) return std::nullopt;
  KLField kl;
  kl.total_variance = reals[4];
  kl.captured_fraction = reals[5];
  kl.eigenvalues.resize(key.n_max);
  kl.modes.resize(ints[3], key.n_max);
  is.read(reinterpret_cast<char*>(kl.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(kl.eigenvalues.size())));
  is.read(reinterpret_cast<char*>(kl.modes.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(kl.modes.size())));
  if (!is) return std::nullopt;
  return kl;
}

/// Grid KL, read from `dir` when a matching cache exists and written there otherwise.
inline KLField cached_kl_grid(const std::optional<std::filesystem::path>& dir, const CovarianceSpec& spec, Index nx,
                              Index ny, double h, Index n_max) {
  const KLCacheKey key{nx, ny, h, spec, n_max};
  if (!dir) return build_kl_grid(spec, nx, ny, h, n_max);
  const auto path = *dir / key.filename();
  if (auto hit = load_kl(path, key)) return *hit;
  auto kl = build_kl_grid(spec, nx, ny, h, n_max);
  std::filesystem::create_directories(*dir);
  save_kl(path, key, kl);
  return kl;
}

}  // namespace bfsgd::uq

#endif  // BFSGD_UNCERTAINTY_KL_HPP
