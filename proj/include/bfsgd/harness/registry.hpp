#ifndef BFSGD_HARNESS_REGISTRY_HPP
#define BFSGD_HARNESS_REGISTRY_HPP

#include <memory>
#include <string>
#include <utility>

#include "bfsgd/harness/config.hpp"
#include "bfsgd/problems/polynomial.hpp"
#include "bfsgd/problems/quadratic.hpp"
#include "bfsgd/problems/topopt.hpp"
#include "bfsgd/sgd/optimizers.hpp"
#include "bfsgd/sgd/penalty.hpp"

namespace bfsgd::harness {

struct ProblemInstance {
  std::shared_ptr<const BiFidelityOracle> oracle;
  DesignVector theta0;
  std::optional<std::pair<Index, Index>> grid;  // (nelx, nely) for density output
};

inline DesignVector start_point(ParamReader& params, Index n, const Vector& fallback,
                                const std::optional<Bounds>& bounds = std::nullopt) {
  Vector v = params.vector("theta0", n).value_or(fallback);
  return bounds ? DesignVector(std::move(v), *bounds) : DesignVector(std::move(v));
}

inline ProblemInstance make_example1(ParamReader& params) {
  problems::PolyRegressionProblem p;
  p.n_obs = params.count("n_obs", p.n_obs);
  p.noise_std = params.real("noise_std", p.noise_std);
  p.data_seed = static_cast<std::uint64_t>(params.count("data_seed", static_cast<Index>(p.data_seed), 0));
  p.gamma = params.real("gamma", p.gamma);
  p.validate();
  auto oracle = std::make_shared<problems::PolyOracle>(p);
  Vector initial(5);
  initial << 1.5, 4.0, 1.0, 4.0, 5.0;
  return {oracle, start_point(params, 5, initial), std::nullopt};
}

inline ProblemInstance make_quadratic(ParamReader& params) {
  problems::QuadraticTestProblem p;
  p.dim = params.count("dim", p.dim);
  p.mu = params.positive("mu", p.mu);
  p.L = params.positive("L", p.L);
  p.noise = params.real("noise", p.noise);
  p.low_scale = params.real("low_scale", p.low_scale);
  p.low_bias = params.real("low_bias", p.low_bias);
  p.rho = params.real("rho", p.rho);
  p.gamma = params.real("gamma", p.gamma);
  p.problem_seed = static_cast<std::uint64_t>(params.count("problem_seed", static_cast<Index>(p.problem_seed), 0));
  std::shared_ptr<const BiFidelityOracle> oracle = std::make_shared<problems::QuadraticOracle>(p);

  // Optional quadratic penalty on theta_i <= constraint_upper.
  const bool has_kappa = params.has("kappa");
  const bool has_upper = params.has("constraint_upper");
  if (has_kappa != has_upper) throw ConfigFault("'kappa' and 'constraint_upper' must be given together");
  if (has_kappa) {
    const double kappa = params.real("kappa", 0.0);
    const double upper = params.real("constraint_upper", 0.0);
    PenaltySpec penalty;
    for (Index i = 0; i < p.dim; ++i) {
      penalty.constraints.push_back(
          {[i, upper](const Vector& t, const RandomRealization&) { return t[i] - upper; },
           [i](const Vector& t, const RandomRealization&) {
             Vector g = Vector::Zero(t.size());
             g[i] = 1.0;
             return g;
           }});
    }
    penalty.kappa = Vector::Constant(p.dim, kappa);
    oracle = std::make_shared<PenalizedOracle>(oracle, std::move(penalty));
  }
  return {oracle, start_point(params, p.dim, Vector::Zero(p.dim)), std::nullopt};
}

inline ProblemInstance make_topopt(problems::TopOptVariant variant, ParamReader& params) {
  problems::TopOptProblem p;
  p.variant = variant;
  // Example defaults: lambda = 1 for the magnitude-only case, 0.25 otherwise.
  p.lambda = variant == problems::TopOptVariant::a ? 1.0 : 0.25;
  p.nelx = params.count("nelx", p.nelx, 2);
  p.nely = params.count("nely", p.nely, 2);
  p.lambda = params.real("lambda", p.lambda);
  p.p0 = params.positive("p0", p.p0);
  p.beta_p = params.positive("beta_p", p.beta_p);
  p.filter_factor = params.positive("filter_factor", p.filter_factor);
  p.gamma = params.real("gamma", p.gamma);
  p.theta_min = params.positive("theta_min", p.theta_min);
  p.theta0 = params.positive("theta0", p.theta0);
  p.kl_modes = params.count("kl_modes", p.kl_modes);
  p.kl_sigma = params.positive("kl_sigma", p.kl_sigma);
  p.kl_length_fraction = params.positive("kl_length_fraction", p.kl_length_fraction);
  if (const auto dir = params.text("kl_cache_dir", ""); !dir.empty()) p.kl_cache_dir = dir;
  const auto solver = params.text("solver", "cholesky");
  if (solver == "pcg")
    p.solver.kind = fem::SolverKind::pcg;
  else if (solver != "cholesky")
    throw ConfigFault("parameter 'solver' must be 'cholesky' or 'pcg'");
  p.solver.tolerance = params.positive("solver_tol", p.solver.tolerance);
  p.validate();
  auto oracle = std::make_shared<problems::TopOptOracle>(p);
  return {oracle, oracle->initial_design(), std::make_pair(p.nelx, p.nely)};
}

/// Builds the named problem, consuming its keys from `params`.
inline ProblemInstance make_problem(const std::string& name, ParamReader& params) {
  if (name == "example1") return make_example1(params);
  if (name == "quadratic") return make_quadratic(params);
  if (name == "topopt-a") return make_topopt(problems::TopOptVariant::a, params);
  if (name == "topopt-b") return make_topopt(problems::TopOptVariant::b, params);
  if (name == "topopt-c") return make_topopt(problems::TopOptVariant::c, params);
  throw ConfigFault("unknown problem '" + name + "'");
}

struct AlgorithmSpec {
  std::string name;
  double eta = 0.1;
  SgdParams sgd;
  SagParams sag;
  BfSagParams bfsag;
  SvrgParams svrg;
  BfSvrgParams bfsvrg;

  OptimizerTrace run(const BiFidelityOracle& oracle, DesignVector theta, const RunSettings& settings) const {
    if (name == "sgd") return sgd_run(oracle, std::move(theta), sgd, settings);
    if (name == "sag") return sag_run(oracle, std::move(theta), sag, settings);
    if (name == "bfsag") return bfsag_run(oracle, std::move(theta), bfsag, settings);
    if (name == "svrg") return svrg_run(oracle, std::move(theta), svrg, settings);
    if (name == "bfsvrg") return bfsvrg_run(oracle, std::move(theta), bfsvrg, settings);
    throw ConfigFault("unknown algorithm '" + name + "'");
  }

  /// Configuration for a long reference run: 10x the updates, 4x the per-step samples.
  AlgorithmSpec reference() const {
    AlgorithmSpec r = *this;
    r.sgd.iters *= 10;
    r.sgd.batch *= 4;
    r.sag.iters *= 10;
    r.sag.n_high = std::min(r.sag.n_total, 4 * r.sag.n_high);
    r.bfsag.iters *= 10;
    const Index refresh = std::min(r.bfsag.n_total, 4 * (r.bfsag.n_low + r.bfsag.n_high));
    r.bfsag.n_high = std::min(refresh, 4 * r.bfsag.n_high);
    r.bfsag.n_low = refresh - r.bfsag.n_high;
    r.svrg.outer *= 10;
    r.svrg.n_anchor *= 4;
    r.svrg.batch *= 4;
    r.bfsvrg.outer *= 10;
    r.bfsvrg.n_low *= 4;
    r.bfsvrg.n_high *= 4;
    return r;
  }
};

/// Reads the algorithm keys; N defaults to the problem's population size when it has one.
inline AlgorithmSpec make_algorithm(const std::string& name, ParamReader& params, const BiFidelityOracle& oracle) {
  AlgorithmSpec a;
  a.name = name;
  a.eta = params.positive("eta", 0.1);
  const Index population = oracle.population().value_or(100);
  if (name == "sgd") {
    a.sgd.iters = params.count("iters", a.sgd.iters, 0);
    a.sgd.batch = params.count("batch", a.sgd.batch);
  } else if (name == "sag") {
    a.sag.iters = params.count("iters", a.sag.iters, 0);
    a.sag.n_total = params.count("n", population);
    a.sag.n_high = params.count("n_high", std::min<Index>(50, a.sag.n_total));
    if (a.sag.n_high > a.sag.n_total) throw ConfigFault("n_high exceeds n");
  } else if (name == "bfsag") {
    a.bfsag.iters = params.count("iters", a.bfsag.iters, 0);
    a.bfsag.n_total = params.count("n", population);
    a.bfsag.n_low = params.count("n_low", 20, 0);
    a.bfsag.n_high = params.count("n_high", 5, 0);
    if (a.bfsag.n_low + a.bfsag.n_high < 1) throw ConfigFault("n_low + n_high must be at least 1");
    if (a.bfsag.n_low + a.bfsag.n_high > a.bfsag.n_total) throw ConfigFault("n_low + n_high exceeds n");
  } else if (name == "svrg") {
    a.svrg.outer = params.count("n_outer", a.svrg.outer, 0);
    a.svrg.inner = params.count("m", 5);
    a.svrg.n_anchor = params.count("n_high", 20);
    a.svrg.batch = params.count("batch", 1);
    if (a.svrg.batch > a.svrg.n_anchor) throw ConfigFault("batch exceeds n_high");
  } else if (name == "bfsvrg") {
    a.bfsvrg.outer = params.count("n_outer", a.bfsvrg.outer, 0);
    a.bfsvrg.inner = params.count("m", 5);
    a.bfsvrg.n_low = params.count("n_low", a.bfsvrg.n_low);
    a.bfsvrg.n_high = params.count("n_high", a.bfsvrg.n_high);
    const auto mode = params.text("alpha_mode", "diagonal");
    if (mode == "identity")
      a.bfsvrg.alpha_mode = AlphaMode::identity;
    else if (mode == "diagonal")
      a.bfsvrg.alpha_mode = AlphaMode::diagonal;
    else if (mode == "diagonal_corrected")
      a.bfsvrg.alpha_mode = AlphaMode::diagonal_corrected;
    else
      throw ConfigFault("parameter 'alpha_mode' must be identity, diagonal or diagonal_corrected");
    a.bfsvrg.exact_anchor_mean = params.flag("exact_anchor_mean", false);
  } else {
    throw ConfigFault("unknown algorithm '" + name + "'");
  }
  return a;
}

}  // namespace bfsgd::harness

#endif  // BFSGD_HARNESS_REGISTRY_HPP
