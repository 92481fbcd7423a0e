#ifndef BFSGD_HARNESS_VERIFY_HPP
#define BFSGD_HARNESS_VERIFY_HPP

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bfsgd/cv/control_variate.hpp"
#include "bfsgd/harness/cost.hpp"
#include "bfsgd/problems/polynomial.hpp"
#include "bfsgd/problems/quadratic.hpp"
#include "bfsgd/problems/topopt.hpp"
#include "bfsgd/sgd/optimizers.hpp"
#include "bfsgd/sgd/rate.hpp"
#include "bfsgd/uncertainty/kl.hpp"

namespace bfsgd::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> s = {"gradients", "cv", "kl", "costs", "rates"};
  return s;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline CheckResult near(const std::string& name, double got, double want, double tol) {
  const bool ok = std::abs(got - want) <= tol;
  return {name, ok, "got " + fmt(got) + ", expected " + fmt(want) + " +- " + fmt(tol)};
}

/// Largest per-component relative error of an analytic gradient against
/// central differences of the objective.
inline double fd_gradient_error(const BiFidelityOracle& oracle, const Vector& theta, const RandomRealization& xi,
                                double step) {
  const Vector g = oracle.gradient(theta, xi, Fidelity::high);
  double worst = 0.0;
  const double scale = g.cwiseAbs().maxCoeff();
  for (Index i = 0; i < theta.size(); ++i) {
    Vector tp = theta, tm = theta;
    tp[i] += step;
    tm[i] -= step;
    const double fd =
        (oracle.objective(tp, xi, Fidelity::high) - oracle.objective(tm, xi, Fidelity::high)) / (2.0 * step);
    // Components that are tiny relative to the gradient are judged against its scale.
    const double denom = std::max(std::abs(fd), 1e-6 * scale);
    worst = std::max(worst, std::abs(fd - g[i]) / denom);
  }
  return worst;
}

inline std::vector<CheckResult> gradients() {
  std::vector<CheckResult> out;
  {
    problems::TopOptProblem p;
    p.nelx = 12;
    p.nely = 4;
    const problems::TopOptOracle oracle(p);
    Rng rng = make_rng(11, Stream::problem);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    Vector theta(oracle.n_theta());
    for (Index i = 0; i < theta.size(); ++i) theta[i] = u(rng);
    const auto xi = oracle.sample(rng);
    const double err = fd_gradient_error(oracle, theta, xi, 1e-4);
    out.push_back({"topopt 12x4 adjoint gradient vs central differences", err < 1e-4,
                   "max relative error " + fmt(err)});
  }
  {
    const problems::PolyOracle oracle;
    Vector theta(5);
    theta << 1.5, 4.0, 1.0, 4.0, 5.0;
    const double err = fd_gradient_error(oracle, theta, oracle.member(3), 1e-5);
    out.push_back({"example1 gradient vs central differences", err < 1e-6, "max relative error " + fmt(err)});
  }
  {
    problems::QuadraticTestProblem q;
    q.noise = 0.3;
    const problems::QuadraticOracle oracle(q);
    Rng rng = make_rng(5, Stream::problem);
    const double err = fd_gradient_error(oracle, standard_normal(rng, q.dim), oracle.sample(rng), 1e-5);
    out.push_back({"quadratic gradient vs central differences", err < 1e-6, "max relative error " + fmt(err)});
  }
  return out;
}

inline std::vector<CheckResult> control_variates() {
  std::vector<CheckResult> out;
  Matrix high(3, 1), low(3, 1);
  high << 1, 2, 3;
  low << 2, 4, 9;
  const auto fit = cv::diagonal_alpha(high, low, low.colwise().mean().transpose());
  out.push_back(near("diagonal alpha on the 3-sample toy", fit.alpha.values[0], 3.5 / 13.0, 1e-14));
  cv::DiagonalAlpha a{Vector::Constant(1, 0.9)};
  out.push_back(near("corrected alpha 0.9 with N_h=4, N_l=20", cv::corrected_alpha(a, 4, 20).values[0], 0.75, 1e-14));
  out.push_back(near("predicted variance rho=0.9, N_h=4, N_l=20", cv::predicted_variance(0.9, 1.0, 4, 20), 0.08125,
                     1e-15));

  // Bivariate Gaussian: empirical variance of the optimal estimator.
  const double rho = 0.9;
  const Index n = 100, reps = 2000;
  std::vector<double> est(static_cast<std::size_t>(reps));
  for (Index r = 0; r < reps; ++r) {
    Rng rng = make_rng(3, Stream::validation, static_cast<std::uint64_t>(r));
    const Vector e1 = standard_normal(rng, n), e2 = standard_normal(rng, n);
    const Vector x = e1;
    const Vector y = rho * e1 + std::sqrt(1 - rho * rho) * e2;
    est[static_cast<std::size_t>(r)] = (x - rho * y).mean();
  }
  double m = 0.0, v = 0.0;
  for (double e : est) m += e;
  m /= static_cast<double>(reps);
  for (double e : est) v += (e - m) * (e - m);
  v /= static_cast<double>(reps - 1);
  const double predicted = cv::predicted_variance(rho, 1.0, n, std::nullopt);
  out.push_back({"exact-mean variance law at rho=0.9", std::abs(v / predicted - 1.0) < 0.2,
                 "empirical " + fmt(v) + ", predicted " + fmt(predicted)});
  return out;
}

inline std::vector<CheckResult> kl() {
  std::vector<CheckResult> out;
  const uq::CovarianceSpec spec{1.5, 2.0, 3.0};
  {
    const std::vector<Eigen::Vector2d> pts = {{0.0, 0.0}, {1.0, 0.0}};
    const auto f = uq::build_kl(spec, pts, 2);
    const double r = std::exp(-0.5);
    out.push_back(near("two-point leading eigenvalue", f.eigenvalues[0], 2.25 * (1 + r), 1e-12));
    out.push_back(near("two-point trailing eigenvalue", f.eigenvalues[1], 2.25 * (1 - r), 1e-12));
  }
  {
    const auto dense = uq::build_kl(spec, uq::grid_centroids(8, 4, 1.0), 10);
    const auto grid = uq::build_kl_grid(spec, 8, 4, 1.0, 10);
    const double diff = (dense.eigenvalues - grid.eigenvalues).cwiseAbs().maxCoeff();
    out.push_back({"separable and dense spectra agree on 8x4", diff < 1e-10, "max difference " + fmt(diff)});
  }
  {
    const uq::CovarianceSpec full{2.0, 6.0, 6.0};
    const auto f = uq::build_kl_grid(full, 120, 40, 1.0, 100);
    out.push_back({"captured variance, 120x40 grid, 100 modes", std::abs(f.captured_fraction - 0.9992) <= 0.002,
                   "fraction " + fmt(f.captured_fraction) + " (target 0.9992 +- 0.002)"});
  }
  return out;
}

inline std::vector<CheckResult> costs() {
  std::vector<CheckResult> out;
  const double sag = cost_bfsag(100, 5, 95, 0.096);
  out.push_back({"BF-SAG cost 100 x (5 + 0.096 x 95)", sag == 1412.0, "got " + fmt(sag)});
  const double svrg = cost_bfsvrg(1, 20, 5, 4, 0.096);
  out.push_back({"BF-SVRG cost for one outer iteration", svrg == 23.84, "got " + fmt(svrg)});
  out.push_back(near("SAG cost ratio", cost_ratio_sag(5, 5, 0.015, 10), 0.5075, 1e-15));

  problems::QuadraticTestProblem q;
  q.gamma = 0.096;
  q.noise = 0.1;
  const problems::QuadraticOracle oracle(q);
  RunSettings s;
  s.eta = 0.1;
  const auto t = bfsag_run(oracle, DesignVector(Vector::Zero(q.dim)), BfSagParams{100, 100, 95, 5}, s);
  out.push_back({"BF-SAG run ledger", t.final_cost() == 1412.0, "got " + fmt(t.final_cost())});
  const auto v = bfsvrg_run(oracle, DesignVector(Vector::Zero(q.dim)), BfSvrgParams{1, 5, 20, 4}, s);
  out.push_back({"BF-SVRG run ledger", v.final_cost() == 23.84, "got " + fmt(v.final_cost())});
  return out;
}

inline std::vector<CheckResult> rates() {
  std::vector<CheckResult> out;
  std::vector<double> e;
  for (int k = 0; k < 50; ++k) e.push_back(std::pow(0.9, k));
  const auto fit = measure_linear_rate(e, 1.0);
  out.push_back(near("geometric series rate", fit.rate, 0.9, 1e-12));
  out.push_back(near("geometric series fit quality", fit.fit_quality, 1.0, 1e-12));

  problems::QuadraticTestProblem q;
  const problems::QuadraticOracle oracle(q);
  RunSettings s;
  s.eta = q.mu / (q.L * q.L);
  s.reference = oracle.minimizer();
  Vector start = Vector::Ones(q.dim) * 3.0;
  const auto t = bfsag_run(oracle, DesignVector(start), BfSagParams{40, 10, 6, 2}, s);
  std::vector<double> sq;
  for (const auto& r : t.records) sq.push_back(*r.distance * *r.distance);
  const auto f = measure_linear_rate(sq, 0.5);
  const double bound = 1.0 - q.mu * q.mu / (q.L * q.L);
  out.push_back({"BF-SAG contraction on the noiseless quadratic", f.rate <= bound + 0.02,
                 "rate " + fmt(f.rate) + ", bound " + fmt(bound)});
  return out;
}

}  // namespace detail

inline std::vector<CheckResult> run_verify(const std::string& suite) {
  if (suite == "gradients") return detail::gradients();
  if (suite == "cv") return detail::control_variates();
  if (suite == "kl") return detail::kl();
  if (suite == "costs") return detail::costs();
  if (suite == "rates") return detail::rates();
  throw ConfigFault("unknown verify suite '" + suite + "'");
}

}  // namespace bfsgd::harness

#endif  // BFSGD_HARNESS_VERIFY_HPP
