#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "bfsgd/problems/quadratic.hpp"
#include "bfsgd/sgd/optimizers.hpp"
#include "bfsgd/sgd/rate.hpp"

using namespace bfsgd;

namespace {

/// Finite population of targets a_i with f_i(theta) = ||theta - a_i||^2 / 2.
/// The low-fidelity gradient is scale * (theta - a_i) + shift.
class PopulationOracle final : public BiFidelityOracle {
 public:
  PopulationOracle(std::vector<Vector> targets, double low_scale = 1.0, double low_shift = 0.0)
      : targets_(std::move(targets)), scale_(low_scale), shift_(low_shift) {}
  Index n_theta() const override { return targets_.front().size(); }
  Index n_xi() const override { return n_theta(); }
  double gamma() const override { return 0.25; }
  std::optional<Index> population() const override { return static_cast<Index>(targets_.size()); }
  RandomRealization member(Index i) const override { return {targets_[static_cast<std::size_t>(i)], i}; }
  RandomRealization sample(Rng& rng) const override {
    std::uniform_int_distribution<Index> pick(0, static_cast<Index>(targets_.size()) - 1);
    return member(pick(rng));
  }
  Vector gradient(const Vector& theta, const RandomRealization& xi, Fidelity f) const override {
    const Vector g = theta - xi.xi;
    if (f == Fidelity::high) return g;
    return scale_ * g + Vector::Constant(g.size(), shift_);
  }
  double objective(const Vector& theta, const RandomRealization& xi, Fidelity) const override {
    return 0.5 * (theta - xi.xi).squaredNorm();
  }
  Vector mean_target() const {
    Vector m = Vector::Zero(n_theta());
    for (const auto& t : targets_) m += t;
    return m / static_cast<double>(targets_.size());
  }

 private:
  std::vector<Vector> targets_;
  double scale_;
  double shift_;
};

class NanOracle final : public BiFidelityOracle {
 public:
  Index n_theta() const override { return 2; }
  Index n_xi() const override { return 1; }
  double gamma() const override { return 0.1; }
  RandomRealization sample(Rng&) const override { return {Vector::Zero(1), std::nullopt}; }
  Vector gradient(const Vector&, const RandomRealization&, Fidelity) const override {
    Vector g(2);
    g << 0.0, std::numeric_limits<double>::quiet_NaN();
    return g;
  }
  double objective(const Vector&, const RandomRealization&, Fidelity) const override { return 0.0; }
};

Vector scalar(double v) { return Vector::Constant(1, v); }

std::vector<Vector> scalars(std::initializer_list<double> v) {
  std::vector<Vector> out;
  for (double x : v) out.push_back(scalar(x));
  return out;
}

RunSettings settings(double eta, std::uint64_t seed = 1) {
  RunSettings s;
  s.eta = eta;
  s.seed = seed;
  return s;
}

std::vector<double> first_coordinate(const OptimizerTrace& t) {
  std::vector<double> out;
  for (const auto& r : t.records) out.push_back((*r.theta)[0]);
  return out;
}

/// Deterministic gradient descent on the population mean, starting from theta0.
std::vector<double> gd_path(double theta0, double target, double eta, Index iters) {
  std::vector<double> out;
  double t = theta0;
  for (Index k = 0; k < iters; ++k) {
    t -= eta * (t - target);
    out.push_back(t);
  }
  return out;
}

void expect_paths_near(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "iterate " << i;
}

}  // namespace

TEST(Optimizers, ZeroGradientIsAFixedPoint) {
  const PopulationOracle o(scalars({2.0, 2.0, 2.0, 2.0}));
  const DesignVector start(scalar(2.0));
  const auto s = settings(0.3);
  EXPECT_EQ(sgd_run(o, start, {10, 2}, s).final_theta[0], 2.0);
  EXPECT_EQ(sag_run(o, start, SagParams{10, 4, 2}, s).final_theta[0], 2.0);
  EXPECT_EQ(bfsag_run(o, start, BfSagParams{10, 4, 2, 1}, s).final_theta[0], 2.0);
  EXPECT_EQ(svrg_run(o, start, SvrgParams{3, 4, 4, 2}, s).final_theta[0], 2.0);
  EXPECT_EQ(bfsvrg_run(o, start, BfSvrgParams{3, 4, 4, 2}, s).final_theta[0], 2.0);
}

TEST(Optimizers, SgdUnitStepOnUnitCurvatureLandsOnMinimizer) {
  const PopulationOracle o(scalars({3.0}));
  const auto t = sgd_run(o, DesignVector(scalar(0.0)), {1, 1}, settings(1.0));
  EXPECT_DOUBLE_EQ(t.final_theta[0], 3.0);
}

TEST(Optimizers, SagOnSingletonPopulationMatchesSgd) {
  const PopulationOracle o(scalars({1.5}));
  const DesignVector start(scalar(-2.0));
  const auto sag = sag_run(o, start, SagParams{25, 1, 1}, settings(0.2));
  const auto sgd = sgd_run(o, start, {25, 1}, settings(0.2));
  expect_paths_near(first_coordinate(sag), first_coordinate(sgd), 0.0);
}

TEST(Optimizers, SagRefreshingEveryEntryIsGradientDescent) {
  const PopulationOracle o(scalars({1.0, 2.0, 4.0, 9.0}));
  const auto t = sag_run(o, DesignVector(scalar(0.0)), SagParams{30, 4, 4}, settings(0.3));
  expect_paths_near(first_coordinate(t), gd_path(0.0, 4.0, 0.3, 30), 1e-12);
}

TEST(Optimizers, BfSagWithIdenticalFidelitiesMatchesSag) {
  std::vector<Vector> targets;
  for (int i = 0; i < 12; ++i) targets.push_back(Vector::Constant(3, 0.5 * i - 2.0));
  const PopulationOracle o(targets);
  const DesignVector start(Vector::Constant(3, 5.0));
  const auto bf = bfsag_run(o, start, BfSagParams{40, 12, 3, 2}, settings(0.2, 9));
  const auto sag = sag_run(o, start, SagParams{40, 12, 5}, settings(0.2, 9));
  ASSERT_EQ(bf.iterations(), sag.iterations());
  for (Index k = 0; k < bf.iterations(); ++k)
    EXPECT_EQ(*bf.records[static_cast<std::size_t>(k)].theta, *sag.records[static_cast<std::size_t>(k)].theta);
}

TEST(Optimizers, BfSagLowFidelityBiasShiftsTheFixedPoint) {
  // With every entry refreshed at low fidelity, the iteration converges to the
  // zero of scale * (theta - mean) + shift.
  const PopulationOracle o(scalars({1.0, 3.0}), 2.0, 1.0);
  const auto t = bfsag_run(o, DesignVector(scalar(0.0)), BfSagParams{200, 2, 2, 0}, settings(0.2));
  EXPECT_NEAR(t.final_theta[0], 2.0 - 0.5, 1e-10);
}

TEST(SagTable, RunningSumStaysConsistent) {
  SagGradientTable table(37, 5);
  Rng rng = make_rng(3, Stream::problem);
  std::uniform_int_distribution<Index> pick(0, 36);
  for (int step = 0; step < 20000; ++step) table.set(pick(rng), standard_normal(rng, 5) * 100.0);
  EXPECT_LE(table.sum_drift(), 1e-12);
  EXPECT_TRUE(table.mean().isApprox(table.recomputed_sum() / 37.0, 1e-10));
  EXPECT_THROW(SagGradientTable(0, 2), ConfigFault);
  EXPECT_THROW(table.set(0, Vector::Zero(4)), DimensionFault);
}

TEST(Optimizers, SvrgWithRealizationIndependentGradientHasZeroVariance) {
  const PopulationOracle o(scalars({2.0, 2.0, 2.0}));
  const auto t = svrg_run(o, DesignVector(scalar(10.0)), SvrgParams{4, 5, 3, 2}, settings(0.1));
  for (const auto& r : t.records) EXPECT_EQ(*r.direction_variance, 0.0);
  expect_paths_near(first_coordinate(t), gd_path(10.0, 2.0, 0.1, 20), 1e-12);
}

TEST(Optimizers, SvrgWithOneInnerStepOnFullPopulationIsGradientDescent) {
  // m = 1 makes each step use h(anchor) - h(anchor) + anchor mean.
  const PopulationOracle o(scalars({-1.0, 0.0, 4.0}));
  const auto t = svrg_run(o, DesignVector(scalar(6.0)), SvrgParams{15, 1, 400, 1}, settings(0.5));
  // The anchor mean is a Monte Carlo estimate over 400 draws of a 3-member population.
  EXPECT_NEAR(t.final_theta[0], 1.0, 0.3);
  ASSERT_EQ(t.iterations(), 15);
}

TEST(Optimizers, BfSvrgFallsBackToUnitAlphaWhenEveryDirectionIsDegenerate) {
  const PopulationOracle o(scalars({2.0, 2.0}));
  const auto t = bfsvrg_run(o, DesignVector(scalar(-4.0)), BfSvrgParams{3, 4, 5, 3}, settings(0.25));
  for (const auto& r : t.records) {
    EXPECT_TRUE(r.alpha_fallback);
    EXPECT_EQ(r.degenerate_alpha, 1);
  }
  expect_paths_near(first_coordinate(t), gd_path(-4.0, 2.0, 0.25, 12), 1e-12);
}

TEST(Optimizers, BfSvrgWithIdenticalFidelitiesRemovesSamplingNoise) {
  // LOW = HIGH: the high and anchor-point low gradients differ by a constant
  // shift, so alpha is 1 and the inner-step noise cancels.
  std::vector<Vector> targets;
  for (int i = 0; i < 8; ++i) targets.push_back(Vector::Constant(2, static_cast<double>(i)));
  const PopulationOracle o(targets);
  BfSvrgParams p{30, 4, 8, 4};
  const auto t = bfsvrg_run(o, DesignVector(Vector::Constant(2, 10.0)), p, settings(0.2, 4));
  for (const auto& r : t.records) {
    EXPECT_FALSE(r.alpha_fallback);
    EXPECT_EQ(r.degenerate_alpha, 0);
    EXPECT_NEAR(*r.direction_variance, 0.0, 1e-20);
  }
  EXPECT_LT((t.final_theta - o.mean_target()).norm(), 1.0);
}

TEST(Optimizers, BoxBoundsAreRespected) {
  const PopulationOracle o(scalars({50.0, 60.0}));
  Bounds b{scalar(0.0), scalar(1.0)};
  const DesignVector start(scalar(0.5), b);
  for (const auto& t : {sgd_run(o, start, {20, 1}, settings(0.5)),
                        bfsag_run(o, start, BfSagParams{20, 2, 1, 1}, settings(0.5)),
                        svrg_run(o, start, SvrgParams{4, 5, 2, 1}, settings(0.5)),
                        bfsvrg_run(o, start, BfSvrgParams{4, 5, 4, 2}, settings(0.5))}) {
    for (const auto& r : t.records) {
      EXPECT_GE((*r.theta)[0], 0.0);
      EXPECT_LE((*r.theta)[0], 1.0);
    }
    EXPECT_EQ(t.final_theta[0], 1.0);
  }
}

TEST(Optimizers, ResultsDoNotDependOnThreadCount) {
  problems::QuadraticTestProblem q;
  q.noise = 0.5;
  q.rho = 0.8;
  q.low_scale = 0.9;
  const problems::QuadraticOracle o(q);
  const DesignVector start(Vector::Ones(q.dim));
  auto run_all = [&](unsigned threads) {
    RunSettings s = settings(0.2, 77);
    s.threads = threads;
    return std::vector<Vector>{
        sgd_run(o, start, {15, 3}, s).final_theta,
        bfsag_run(o, start, BfSagParams{15, 30, 6, 3}, s).final_theta,
        svrg_run(o, start, SvrgParams{3, 5, 8, 2}, s).final_theta,
        bfsvrg_run(o, start, BfSvrgParams{3, 5, 12, 4}, s).final_theta,
    };
  };
  const auto one = run_all(1);
  const auto four = run_all(4);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i], four[i]) << "optimizer " << i;
}

TEST(Optimizers, LedgerChargesOnePerHighCallAndGammaPerLowCall) {
  const PopulationOracle o(scalars({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  const DesignVector start(scalar(0.0));
  const auto s = settings(0.1);

  const auto bf = bfsag_run(o, start, BfSagParams{8, 6, 4, 1}, s);
  EXPECT_EQ(bf.final_cost(), 8.0 * (1.0 + 0.25 * 4.0));
  EXPECT_EQ(bf.records.back().high_calls, 8);
  EXPECT_EQ(bf.records.back().low_calls, 32);

  const auto sv = svrg_run(o, start, SvrgParams{2, 3, 5, 2}, s);
  EXPECT_EQ(sv.final_cost(), 2.0 * (5.0 + 3.0 * 2.0 * 2.0));

  const auto bv = bfsvrg_run(o, start, BfSvrgParams{2, 3, 20, 4}, s);
  EXPECT_EQ(bv.final_cost(), 2.0 * (0.25 * 20.0 + 3.0 * (4.0 + 0.25 * 4.0)));
  EXPECT_EQ(bv.records.back().low_calls, 2 * (20 + 3 * 4));
}

TEST(Optimizers, InvalidConfigurationsAreRejected) {
  const PopulationOracle o(scalars({1.0, 2.0, 3.0}));
  const DesignVector start(scalar(0.0));
  EXPECT_THROW(bfsag_run(o, start, BfSagParams{5, 3, 2, 2}, settings(0.1)), ConfigFault);
  EXPECT_THROW(bfsag_run(o, start, BfSagParams{5, 3, 0, 0}, settings(0.1)), ConfigFault);
  EXPECT_THROW(sgd_run(o, start, {5, 1}, settings(0.0)), ConfigFault);
  EXPECT_THROW(sgd_run(o, start, {5, 1}, settings(-1.0)), ConfigFault);
  EXPECT_THROW(svrg_run(o, start, SvrgParams{2, 0, 3, 1}, settings(0.1)), ConfigFault);
  EXPECT_THROW(svrg_run(o, start, SvrgParams{2, 2, 3, 4}, settings(0.1)), ConfigFault);
  EXPECT_THROW(bfsvrg_run(o, start, BfSvrgParams{2, 2, 0, 1}, settings(0.1)), ConfigFault);
  EXPECT_THROW(sgd_run(o, DesignVector(Vector::Zero(2)), {5, 1}, settings(0.1)), DimensionFault);
}

TEST(Optimizers, NonFiniteGradientNamesTheComponent) {
  const NanOracle o;
  try {
    sgd_run(o, DesignVector(Vector::Zero(2)), {3, 1}, settings(0.1));
    FAIL() << "expected NumericalFault";
  } catch (const NumericalFault& e) {
    EXPECT_EQ(e.component(), 1);
  }
}

TEST(Optimizers, SnapshotsAndReferenceDistanceAreRecorded) {
  const PopulationOracle o(scalars({1.0, 3.0}));
  RunSettings s = settings(0.5);
  s.reference = scalar(2.0);
  const auto t = sag_run(o, DesignVector(scalar(0.0)), SagParams{4, 2, 2}, s);
  for (const auto& r : t.records) EXPECT_NEAR(*r.distance, std::abs((*r.theta)[0] - 2.0), 1e-15);
  s.snapshot_limit = 0;
  EXPECT_FALSE(sag_run(o, DesignVector(scalar(0.0)), SagParams{4, 2, 2}, s).records[0].theta.has_value());
}

TEST(RateFit, GeometricSeriesIsExact) {
  std::vector<double> e;
  for (int k = 0; k < 40; ++k) e.push_back(std::pow(0.9, k));
  const auto fit = measure_linear_rate(e, 1.0);
  EXPECT_NEAR(fit.rate, 0.9, 1e-12);
  EXPECT_NEAR(fit.fit_quality, 1.0, 1e-12);
}

TEST(RateFit, ConstantSeriesHasUnitRate) {
  const std::vector<double> e(20, 0.3);
  const auto fit = measure_linear_rate(e, 0.5);
  EXPECT_DOUBLE_EQ(fit.rate, 1.0);
}

TEST(RateFit, NoisyGeometricSeriesRecoversRate) {
  Rng rng = make_rng(5, Stream::validation);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> e;
  for (int k = 0; k < 200; ++k) e.push_back(std::pow(0.8, k) * std::exp(noise(rng)));
  const auto fit = measure_linear_rate(e, 1.0);
  EXPECT_GE(fit.rate, 0.79);
  EXPECT_LE(fit.rate, 0.81);
  EXPECT_GT(fit.fit_quality, 0.99);
}

TEST(RateFit, RejectsShortOrInvalidSeries) {
  EXPECT_THROW(measure_linear_rate(std::vector<double>{1.0, 0.5}, 1.0), InsufficientData);
  EXPECT_THROW(measure_linear_rate(std::vector<double>{1.0, 0.0, 0.5}, 1.0), DomainFault);
  EXPECT_THROW(measure_linear_rate(std::vector<double>{1.0, 0.5, 0.2}, 0.0), DomainFault);
}
