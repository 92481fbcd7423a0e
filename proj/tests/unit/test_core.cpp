#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "bfsgd/parallel.hpp"
#include "bfsgd/rng.hpp"
#include "bfsgd/sgd/penalty.hpp"
#include "bfsgd/types.hpp"

using namespace bfsgd;

namespace {

/// f(theta) with a fixed gradient, independent of xi.
class FixedGradient final : public BiFidelityOracle {
 public:
  explicit FixedGradient(Vector g) : g_(std::move(g)) {}
  Index n_theta() const override { return g_.size(); }
  Index n_xi() const override { return 1; }
  double gamma() const override { return 0.5; }
  RandomRealization sample(Rng&) const override { return {Vector::Zero(1), std::nullopt}; }
  Vector gradient(const Vector&, const RandomRealization&, Fidelity) const override { return g_; }
  double objective(const Vector&, const RandomRealization&, Fidelity) const override { return 0.0; }

 private:
  Vector g_;
};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Bounds unit_box(Index n) { return {Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)}; }

}  // namespace

TEST(ClampBox, InteriorPointUnchanged) {
  DesignVector d(vec({0.5}), unit_box(1));
  EXPECT_EQ(clamp_box(d).values()[0], 0.5);
}

TEST(ClampBox, UpperAndLowerClamp) {
  DesignVector d(vec({0.0}), unit_box(1));
  d.values()[0] = 1.7;
  EXPECT_EQ(clamp_box(d).values()[0], 1.0);

  DesignVector e(vec({0.0, 0.0}), unit_box(2));
  e.values() = vec({-3.0, 2.0});
  const auto c = clamp_box(e);
  EXPECT_EQ(c.values()[0], -1.0);
  EXPECT_EQ(c.values()[1], 1.0);
}

TEST(ClampBox, NoBoundsIsNoOp) {
  DesignVector d(vec({7.0}));
  EXPECT_EQ(clamp_box(d).values()[0], 7.0);
}

TEST(DesignVector, RejectsInvalidBounds) {
  EXPECT_THROW(DesignVector(vec({2.0}), unit_box(1)), ConfigFault);
  EXPECT_THROW(DesignVector(vec({0.0, 0.0}), unit_box(1)), DimensionFault);
  EXPECT_THROW(DesignVector(vec({0.0}), Bounds{vec({1.0}), vec({-1.0})}), ConfigFault);
}

TEST(PenaltyGradient, NoConstraintsReturnsObjectiveGradient) {
  FixedGradient f(vec({2.0, -1.0}));
  const Vector g = penalty_gradient(f, PenaltySpec{}, DesignVector(vec({0.0, 0.0})), {}, Fidelity::high);
  EXPECT_EQ(g, vec({2.0, -1.0}));
}

TEST(PenaltyGradient, InactiveConstraintContributesNothing) {
  FixedGradient f(vec({1.0}));
  PenaltySpec p;
  p.kappa = vec({3.0});
  p.constraints.push_back({[](const Vector& t, const RandomRealization&) { return t[0] - 5.0; },
                           [](const Vector&, const RandomRealization&) { return vec({1.0}); }});
  EXPECT_EQ(penalty_gradient(f, p, DesignVector(vec({3.0})), {}, Fidelity::high), vec({1.0}));
}

TEST(PenaltyGradient, ActiveConstraintChainRule) {
  // f = 0, g = theta, kappa = 2, theta = 3: d/dtheta kappa g^2 = 2 kappa theta = 12.
  FixedGradient f(vec({0.0}));
  PenaltySpec p;
  p.kappa = vec({2.0});
  p.constraints.push_back({[](const Vector& t, const RandomRealization&) { return t[0]; },
                           [](const Vector&, const RandomRealization&) { return vec({1.0}); }});
  EXPECT_DOUBLE_EQ(penalty_gradient(f, p, DesignVector(vec({3.0})), {}, Fidelity::high)[0], 12.0);
}

TEST(PenaltyGradient, NonFiniteComponentIsReported) {
  FixedGradient f(vec({1.0, std::numeric_limits<double>::quiet_NaN()}));
  try {
    penalty_gradient(f, PenaltySpec{}, DesignVector(vec({0.0, 0.0})), {}, Fidelity::high);
    FAIL() << "expected NumericalFault";
  } catch (const NumericalFault& e) {
    EXPECT_EQ(e.component(), 1);
  }
}

TEST(PenaltyGradient, RejectsNegativeKappaAndOutOfBoundsDesign) {
  FixedGradient f(vec({1.0}));
  PenaltySpec p;
  p.kappa = vec({-1.0});
  p.constraints.push_back({[](const Vector&, const RandomRealization&) { return 0.0; },
                           [](const Vector&, const RandomRealization&) { return vec({0.0}); }});
  EXPECT_THROW(penalty_gradient(f, p, DesignVector(vec({0.0})), {}, Fidelity::high), ConfigFault);

  DesignVector d(vec({0.0}), unit_box(1));
  d.values()[0] = 4.0;
  EXPECT_THROW(penalty_gradient(f, PenaltySpec{}, d, {}, Fidelity::high), ConfigFault);
}

TEST(PenalizedOracle, AddsPenaltyToValueAndGradient) {
  auto base = std::make_shared<FixedGradient>(vec({1.0}));
  PenaltySpec p;
  p.kappa = vec({0.5});
  p.constraints.push_back({[](const Vector& t, const RandomRealization&) { return t[0] - 1.0; },
                           [](const Vector&, const RandomRealization&) { return vec({1.0}); }});
  PenalizedOracle o(base, p);
  // theta = 3: g = 2, value 0.5 * 4 = 2, gradient 1 + 2 * 0.5 * 2 = 3.
  EXPECT_DOUBLE_EQ(o.objective(vec({3.0}), {}, Fidelity::high), 2.0);
  EXPECT_DOUBLE_EQ(o.gradient(vec({3.0}), {}, Fidelity::low)[0], 3.0);
  EXPECT_DOUBLE_EQ(o.gamma(), 0.5);
}

TEST(Oracle, ReportedCostsAreOneAndGamma) {
  FixedGradient f(vec({1.0}));
  EXPECT_EQ(f.grad(vec({0.0}), {}, Fidelity::high).cost, 1.0);
  EXPECT_EQ(f.grad(vec({0.0}), {}, Fidelity::low).cost, 0.5);
}

TEST(Rng, DrawDistinctIsDistinctAndDeterministic) {
  Rng a = make_rng(42, Stream::indices, 3);
  Rng b = make_rng(42, Stream::indices, 3);
  const auto x = draw_distinct(a, 50, 30);
  const auto y = draw_distinct(b, 50, 30);
  EXPECT_EQ(x, y);
  EXPECT_EQ(std::set<Index>(x.begin(), x.end()).size(), 30u);
  EXPECT_TRUE(std::all_of(x.begin(), x.end(), [](Index i) { return i >= 0 && i < 50; }));
  Rng c = make_rng(42, Stream::indices, 3);
  EXPECT_THROW(draw_distinct(c, 5, 6), ConfigFault);
}

TEST(Rng, StreamsAndCountersSeparate) {
  EXPECT_NE(derive_seed(1, Stream::indices, 0), derive_seed(1, Stream::anchor, 0));
  EXPECT_NE(derive_seed(1, Stream::indices, 0), derive_seed(1, Stream::indices, 1));
  EXPECT_NE(derive_seed(1, Stream::indices, 0, 1), derive_seed(1, Stream::indices, 1, 0));
  EXPECT_NE(derive_seed(1, Stream::indices), derive_seed(2, Stream::indices));
}

TEST(Parallel, ResultsInIndexOrderForAnyThreadCount) {
  for (unsigned threads : {1u, 3u, 8u}) {
    const auto r = parallel_map(17, threads, [](Index i) { return i * i; });
    ASSERT_EQ(r.size(), 17u);
    for (Index i = 0; i < 17; ++i) EXPECT_EQ(r[static_cast<std::size_t>(i)], i * i);
  }
}

TEST(Parallel, LowestFailingIndexIsRethrown) {
  try {
    parallel_map(10, 4, [](Index i) -> int {
      if (i == 3 || i == 7) throw std::runtime_error("fail " + std::to_string(i));
      return 0;
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "fail 3");
  }
}

TEST(RequireFinite, NamesOffendingIndex) {
  Vector v = vec({1.0, 2.0, std::numeric_limits<double>::infinity()});
  try {
    require_finite(v, "v");
    FAIL();
  } catch (const NumericalFault& e) {
    EXPECT_EQ(e.component(), 2);
    EXPECT_EQ(e.category(), ErrorCategory::numerical);
  }
}
