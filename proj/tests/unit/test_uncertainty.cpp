#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "bfsgd/rng.hpp"
#include "bfsgd/uncertainty/kl.hpp"
#include "bfsgd/uncertainty/loads.hpp"

using namespace bfsgd;
using namespace bfsgd::uq;

namespace {

Matrix covariance_matrix(const CovarianceSpec& spec, const std::vector<Eigen::Vector2d>& pts) {
  const auto n = static_cast<Index>(pts.size());
  Matrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = spec(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bfsgd_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(LoadMagnitude, Substitution) {
  const LoadMagnitudeModel m(2.0);
  EXPECT_EQ(sample_load(m, 0.0), 2.0);
  EXPECT_EQ(sample_load(m, 1.0), 3.0);
  EXPECT_EQ(sample_load(LoadMagnitudeModel(1.0), 0.5), 1.25);
  EXPECT_THROW(sample_load(m, 1.5), DomainFault);
  EXPECT_THROW(sample_load(m, -0.1), DomainFault);
  EXPECT_THROW(LoadMagnitudeModel(0.0), ConfigFault);
}

TEST(LoadMagnitude, DrawsStayInTheUnitInterval) {
  const LoadMagnitudeModel m;
  Rng rng = make_rng(1, Stream::problem);
  for (int i = 0; i < 1000; ++i) {
    const double xi = m.draw_xi(rng);
    EXPECT_GE(xi, 0.0);
    EXPECT_LE(xi, 1.0);
  }
}

TEST(LoadDirection, Substitution) {
  const LoadDirectionModel m;
  const double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(sample_direction(m, 0.0), pi / 4);
  EXPECT_DOUBLE_EQ(sample_direction(m, -pi / 8), pi / 8);
  EXPECT_DOUBLE_EQ(sample_direction(m, pi / 8), 3 * pi / 8);
  EXPECT_THROW(sample_direction(m, 0.5), DomainFault);
  Rng rng = make_rng(2, Stream::problem);
  for (int i = 0; i < 1000; ++i) {
    const double phi = sample_direction(m, m.draw_xi(rng));
    EXPECT_GE(phi, pi / 8);
    EXPECT_LE(phi, 3 * pi / 8);
  }
}

TEST(KL, SinglePoint) {
  const auto f = build_kl({1.5, 2.0, 3.0}, {{0.3, 0.7}}, 1);
  ASSERT_EQ(f.n_modes(), 1);
  EXPECT_NEAR(f.eigenvalues[0], 2.25, 1e-14);
  EXPECT_NEAR(f.captured_fraction, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(f.modes(0, 0)), 1.0, 1e-14);
}

TEST(KL, TwoPointEigenpairs) {
  const CovarianceSpec spec{2.0, 1.5, 9.0};
  const double d = 0.8;
  const auto f = build_kl(spec, {{0.0, 0.0}, {d, 0.0}}, 2);
  const double r = std::exp(-d / spec.l1);
  EXPECT_NEAR(f.eigenvalues[0], 4.0 * (1 + r), 1e-13);
  EXPECT_NEAR(f.eigenvalues[1], 4.0 * (1 - r), 1e-13);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(f.modes(0, 0)), s, 1e-13);
  EXPECT_NEAR(f.modes(0, 0), f.modes(1, 0), 1e-13);
  EXPECT_NEAR(f.modes(0, 1), -f.modes(1, 1), 1e-13);
}

TEST(KL, ModesAreOrthonormalEigenvectorsInDescendingOrder) {
  const CovarianceSpec spec{1.3, 2.5, 1.7};
  const auto pts = grid_centroids(7, 5, 1.0);
  const auto f = build_kl(spec, pts, 20);
  const Matrix c = covariance_matrix(spec, pts);
  EXPECT_LT((f.modes.transpose() * f.modes - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-8);
  for (Index i = 0; i < f.n_modes(); ++i) {
    EXPECT_LE((c * f.modes.col(i) - f.eigenvalues[i] * f.modes.col(i)).norm(), 1e-8 * f.eigenvalues[0]);
    if (i > 0) {
      EXPECT_LE(f.eigenvalues[i], f.eigenvalues[i - 1]);
    }
    EXPECT_GE(f.eigenvalues[i], 0.0);
  }
  EXPECT_NEAR(f.total_variance, 35 * 1.3 * 1.3, 1e-10);
}

TEST(KL, SeparableGridRouteMatchesDense) {
  const CovarianceSpec spec{2.0, 3.0, 1.2};
  const auto dense = build_kl(spec, grid_centroids(9, 6, 0.5), 25);
  const auto grid = build_kl_grid(spec, 9, 6, 0.5, 25);
  EXPECT_LT((dense.eigenvalues - grid.eigenvalues).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(dense.captured_fraction, grid.captured_fraction, 1e-12);
  // Equal variance of the truncated series identifies the span even with repeated eigenvalues.
  EXPECT_LT((dense.pointwise_variance() - grid.pointwise_variance()).cwiseAbs().maxCoeff(), 1e-8);
  const Matrix c = covariance_matrix(spec, grid_centroids(9, 6, 0.5));
  for (Index i = 0; i < grid.n_modes(); ++i)
    EXPECT_LE((c * grid.modes.col(i) - grid.eigenvalues[i] * grid.modes.col(i)).norm(), 1e-8 * grid.eigenvalues[0]);
}

TEST(KL, CapturedFractionGrowsToOne) {
  const CovarianceSpec spec{1.0, 2.0, 2.0};
  double previous = 0.0;
  for (Index n : {1, 5, 10, 20, 30}) {
    const double frac = build_kl_grid(spec, 6, 5, 1.0, n).captured_fraction;
    EXPECT_GE(frac, previous);
    previous = frac;
  }
  EXPECT_NEAR(previous, 1.0, 1e-12);
  EXPECT_THROW(build_kl_grid(spec, 6, 5, 1.0, 31), DimensionFault);
  EXPECT_THROW(build_kl(spec, {{0, 0}, {0, 0}}, 1), DimensionFault);
  EXPECT_THROW(build_kl({0.0, 1.0, 1.0}, {{0, 0}}, 1), ConfigFault);
}

TEST(KL, FieldSamples) {
  const auto f = build_kl_grid({1.0, 2.0, 2.0}, 5, 4, 1.0, 6);
  EXPECT_EQ(sample_field(f, Vector::Zero(6)), Vector::Ones(20));
  const Vector e1 = Vector::Unit(6, 0);
  const Vector expected = (std::sqrt(f.eigenvalues[0]) * f.modes.col(0)).array().exp();
  EXPECT_LT((sample_field(f, e1) - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(sample_field(f, Vector::Constant(6, 30.0)).minCoeff(), 0.0);
  EXPECT_THROW(sample_field(f, Vector::Zero(5)), DimensionFault);
}

TEST(KL, MonteCarloMomentsMatchTheTruncatedSeries) {
  const auto f = build_kl_grid({2.0, 3.0, 3.0}, 8, 4, 1.0, 12);
  const Index draws = 10000;
  const Index n = f.n_points();
  Vector sum = Vector::Zero(n), sq = Vector::Zero(n);
  for (Index k = 0; k < draws; ++k) {
    Rng rng = make_rng(17, Stream::validation, static_cast<std::uint64_t>(k));
    const Vector z = f.log_field(standard_normal(rng, f.n_modes()));
    sum += z;
    sq += z.cwiseAbs2();
  }
  const Vector mean = sum / static_cast<double>(draws);
  const Vector var = (sq - static_cast<double>(draws) * mean.cwiseAbs2()) / static_cast<double>(draws - 1);
  const Vector predicted = f.pointwise_variance();
  for (Index i = 0; i < n; ++i) {
    EXPECT_NEAR(var[i] / predicted[i], 1.0, 0.1) << "point " << i;
    EXPECT_LT(std::abs(mean[i]), 4.0 * std::sqrt(var[i] / static_cast<double>(draws))) << "point " << i;
  }
}

TEST(KLCache, RoundTripAndKeyMismatch) {
  const auto dir = scratch_dir("kl_cache");
  const CovarianceSpec spec{1.1, 2.0, 3.0};
  const auto built = cached_kl_grid(dir, spec, 6, 4, 1.0, 8);
  const KLCacheKey key{6, 4, 1.0, spec, 8};
  ASSERT_TRUE(std::filesystem::exists(dir / key.filename()));

  const auto loaded = load_kl(dir / key.filename(), key);
  ASSERT_TRUE(loaded.has_value());
  EXPECT_EQ(loaded->eigenvalues, built.eigenvalues);
  EXPECT_EQ(loaded->modes, built.modes);
  EXPECT_EQ(loaded->captured_fraction, built.captured_fraction);

  KLCacheKey other = key;
  other.spec.l1 = 2.5;
  EXPECT_FALSE(load_kl(dir / key.filename(), other).has_value());
  other = key;
  other.n_max = 7;
  EXPECT_FALSE(load_kl(dir / key.filename(), other).has_value());
  EXPECT_FALSE(load_kl(dir / "missing.bin", key).has_value());

  const auto again = cached_kl_grid(dir, spec, 6, 4, 1.0, 8);
  EXPECT_EQ(again.modes, built.modes);
  std::filesystem::remove_all(dir);
}
