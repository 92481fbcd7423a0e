#ifndef BFSGD_SGD_OPTIMIZERS_HPP
#define BFSGD_SGD_OPTIMIZERS_HPP

#include <span>
#include <vector>

#include "bfsgd/cv/control_variate.hpp"
#include "bfsgd/parallel.hpp"
#include "bfsgd/rng.hpp"
#include "bfsgd/sgd/sag_table.hpp"
#include "bfsgd/sgd/trace.hpp"
#include "bfsgd/types.hpp"

namespace bfsgd {

struct SgdParams {
  Index iters = 100;
  Index batch = 1;
};

struct SagParams {
  Index iters = 100;
  Index n_total = 100;  // N, size of the fixed realization set
  Index n_high = 1;     // table entries refreshed per iteration
};

struct BfSagParams {
  Index iters = 100;
  Index n_total = 100;
  Index n_low = 1;
  Index n_high = 1;
};

struct SvrgParams {
  Index outer = 10;
  Index inner = 5;     // m
  Index n_anchor = 1;  // realizations behind the anchor mean
  Index batch = 1;     // anchor members drawn per inner step
};

enum class AlphaMode { identity, diagonal, diagonal_corrected };

struct BfSvrgParams {
  Index outer = 10;
  Index inner = 5;
  Index n_low = 20;
  Index n_high = 4;
  AlphaMode alpha_mode = AlphaMode::diagonal;
  /// Replace the sampled anchor mean by the oracle's closed-form expectation
  /// when it has one. No low-fidelity calls are charged for the anchor then.
  bool exact_anchor_mean = false;
};

namespace detail {

inline void check_eta(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigFault("learning rate must be positive");
}

inline void check_start(const BiFidelityOracle& oracle, const DesignVector& theta0) {
  if (theta0.size() != oracle.n_theta()) throw DimensionFault("initial design has the wrong length");
}

inline DesignVector step(DesignVector theta, double eta, const Vector& direction) {
  require_finite(direction, "search direction");
  theta.values() -= eta * direction;
  require_finite(theta.values(), "updated design");
  return clamp_box(std::move(theta));
}

struct Request {
  const RandomRealization* xi;
  const Vector* theta;
  Fidelity fidelity;
};

/// Evaluates gradient requests concurrently; results come back in request order.
inline std::vector<Vector> evaluate(const BiFidelityOracle& oracle, const std::vector<Request>& requests,
                                    unsigned threads, CostLedger& ledger) {
  auto grads = parallel_map(static_cast<Index>(requests.size()), threads, [&](Index i) {
    const auto& r = requests[static_cast<std::size_t>(i)];
    Vector g = oracle.gradient(*r.theta, *r.xi, r.fidelity);
    require_finite(g, std::string(to_string(r.fidelity)) + "-fidelity gradient");
    return g;
  });
  for (const auto& r : requests) {
    if (r.fidelity == Fidelity::high)
      ledger.charge_high();
    else
      ledger.charge_low();
  }
  return grads;
}

inline Vector mean_of(const std::vector<Vector>& vs, std::size_t begin, std::size_t end) {
  Vector m = Vector::Zero(vs[begin].size());
  for (std::size_t i = begin; i < end; ++i) m += vs[i];
  return m / static_cast<double>(end - begin);
}

inline Matrix rows_of(const std::vector<Vector>& vs, std::size_t begin, std::size_t end) {
  Matrix m(static_cast<Index>(end - begin), vs[begin].size());
  for (std::size_t i = begin; i < end; ++i) m.row(static_cast<Index>(i - begin)) = vs[i].transpose();
  return m;
}

/// Mean over directions of the sample variance of a batch mean.
inline double batch_mean_variance(const Matrix& samples) {
  if (samples.rows() < 2) return 0.0;
  const Matrix c = samples.rowwise() - samples.colwise().mean();
  const Vector var = c.colwise().squaredNorm().transpose() / static_cast<double>(samples.rows() - 1);
  return var.mean() / static_cast<double>(samples.rows());
}

}  // namespace detail

/// Realization set for SAG-type methods: the whole population when the
/// oracle's distribution is a finite population of exactly n members,
/// otherwise n independent draws.
inline std::vector<RandomRealization> draw_realizations(const BiFidelityOracle& oracle, Index n,
                                                        std::uint64_t seed) {
  if (n < 1) throw ConfigFault("realization count must be positive");
  std::vector<RandomRealization> set;
  set.reserve(static_cast<std::size_t>(n));
  if (const auto pop = oracle.population(); pop && *pop == n) {
    for (Index i = 0; i < n; ++i) set.push_back(oracle.member(i));
    return set;
  }
  for (Index i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, Stream::realizations, static_cast<std::uint64_t>(i));
    set.push_back(oracle.sample(rng));
  }
  return set;
}

/// Plain (mini-batch) SGD on high-fidelity gradients.
inline OptimizerTrace sgd_run(const BiFidelityOracle& oracle, DesignVector theta, const SgdParams& params,
                              const RunSettings& settings) {
  detail::check_eta(settings.eta);
  detail::check_start(oracle, theta);
  if (params.batch < 1 || params.iters < 0) throw ConfigFault("SGD needs batch >= 1 and iters >= 0");

  detail::Recorder rec(settings, oracle.gamma());
  for (Index k = 0; k < params.iters; ++k) {
    std::vector<RandomRealization> xs;
    for (Index b = 0; b < params.batch; ++b) {
      Rng rng = make_rng(settings.seed, Stream::minibatch, static_cast<std::uint64_t>(k),
                         static_cast<std::uint64_t>(b));
      xs.push_back(oracle.sample(rng));
    }
    std::vector<detail::Request> req;
    for (const auto& x : xs) req.push_back({&x, &theta.values(), Fidelity::high});
    const auto grads = detail::evaluate(oracle, req, settings.threads, rec.ledger());
    theta = detail::step(std::move(theta), settings.eta, detail::mean_of(grads, 0, grads.size()));
    rec.record(theta.values());
  }
  return rec.finish(theta.values());
}

/// BF-SAG over an explicit realization set. Each iteration draws n_low + n_high
/// distinct table indices; the first n_low are refreshed with low-fidelity
/// gradients and the rest with high-fidelity ones, then the design steps along
/// the table mean.
inline OptimizerTrace bfsag_run(const BiFidelityOracle& oracle, DesignVector theta,
                                std::span<const RandomRealization> realizations, const BfSagParams& params,
                                const RunSettings& settings) {
  detail::check_eta(settings.eta);
  detail::check_start(oracle, theta);
  const Index n = static_cast<Index>(realizations.size());
  if (params.n_total != n) throw ConfigFault("realization set size differs from N");
  if (params.n_low < 0 || params.n_high < 0 || params.n_low + params.n_high < 1)
    throw ConfigFault("BF-SAG needs at least one refreshed entry per iteration");
  if (params.n_low + params.n_high > n) throw ConfigFault("N_l + N_h exceeds N");

  detail::Recorder rec(settings, oracle.gamma());
  SagGradientTable table(n, oracle.n_theta());
  const Index refresh = params.n_low + params.n_high;

  for (Index k = 0; k < params.iters; ++k) {
    Rng rng = make_rng(settings.seed, Stream::indices, static_cast<std::uint64_t>(k));
    const auto idx = draw_distinct(rng, n, refresh);
    std::vector<detail::Request> req;
    req.reserve(idx.size());
    for (Index b = 0; b < refresh; ++b)
      req.push_back({&realizations[static_cast<std::size_t>(idx[static_cast<std::size_t>(b)])],
                     &theta.values(), b < params.n_low ? Fidelity::low : Fidelity::high});
    const auto grads = detail::evaluate(oracle, req, settings.threads, rec.ledger());
    for (std::size_t b = 0; b < idx.size(); ++b) table.set(idx[b], grads[b]);
    theta = detail::step(std::move(theta), settings.eta, table.mean());
    rec.record(theta.values());
  }
  return rec.finish(theta.values());
}

inline OptimizerTrace bfsag_run(const BiFidelityOracle& oracle, DesignVector theta, const BfSagParams& params,
                                const RunSettings& settings) {
  const auto set = draw_realizations(oracle, params.n_total, settings.seed);
  return bfsag_run(oracle, std::move(theta), set, params, settings);
}

/// Batch SAG: BF-SAG with every refreshed entry at high fidelity.
inline OptimizerTrace sag_run(const BiFidelityOracle& oracle, DesignVector theta,
                              std::span<const RandomRealization> realizations, const SagParams& params,
                              const RunSettings& settings) {
  if (params.n_high < 1) throw ConfigFault("SAG needs N_h >= 1");
  return bfsag_run(oracle, std::move(theta), realizations, {params.iters, params.n_total, 0, params.n_high},
                   settings);
}

inline OptimizerTrace sag_run(const BiFidelityOracle& oracle, DesignVector theta, const SagParams& params,
                              const RunSettings& settings) {
  const auto set = draw_realizations(oracle, params.n_total, settings.seed);
  return sag_run(oracle, std::move(theta), set, params, settings);
}

/// SVRG. Each outer iteration averages high-fidelity gradients at the anchor
/// over fresh realizations; inner steps draw `batch` anchor members and move
/// along h(theta_k) - h(theta_prev) + anchor mean.
inline OptimizerTrace svrg_run(const BiFidelityOracle& oracle, DesignVector theta, const SvrgParams& params,
                               const RunSettings& settings) {
  detail::check_eta(settings.eta);
  detail::check_start(oracle, theta);
  if (params.inner < 1 || params.n_anchor < 1 || params.batch < 1 || params.outer < 0)
    throw ConfigFault("SVRG needs m >= 1, N_h >= 1, batch >= 1");
  if (params.batch > params.n_anchor) throw ConfigFault("SVRG batch exceeds the anchor set");

  detail::Recorder rec(settings, oracle.gamma());
  for (Index j = 0; j < params.outer; ++j) {
    const Vector anchor = theta.values();
    std::vector<RandomRealization> set;
    for (Index i = 0; i < params.n_anchor; ++i) {
      Rng rng = make_rng(settings.seed, Stream::anchor, static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(i));
      set.push_back(oracle.sample(rng));
    }
    std::vector<detail::Request> req;
    for (const auto& x : set) req.push_back({&x, &anchor, Fidelity::high});
    const Vector anchor_mean = detail::mean_of(detail::evaluate(oracle, req, settings.threads, rec.ledger()), 0,
                                               set.size());

    for (Index k = 0; k < params.inner; ++k) {
      Rng rng = make_rng(settings.seed, Stream::inner, static_cast<std::uint64_t>(j * params.inner + k));
      const auto idx = draw_distinct(rng, params.n_anchor, params.batch);
      req.clear();
      for (Index t : idx) req.push_back({&set[static_cast<std::size_t>(t)], &theta.values(), Fidelity::high});
      for (Index t : idx) req.push_back({&set[static_cast<std::size_t>(t)], &anchor, Fidelity::high});
      const auto g = detail::evaluate(oracle, req, settings.threads, rec.ledger());

      Matrix z(params.batch, oracle.n_theta());
      for (Index b = 0; b < params.batch; ++b)
        z.row(b) = (g[static_cast<std::size_t>(b)] - g[static_cast<std::size_t>(params.batch + b)] + anchor_mean)
                       .transpose();
      const Vector direction = z.colwise().mean().transpose();
      theta = detail::step(std::move(theta), settings.eta, direction);
      auto& r = rec.record(theta.values(), j + 1);
      r.direction_variance = detail::batch_mean_variance(z);
    }
  }
  return rec.finish(theta.values());
}

/// BF-SVRG. The anchor mean of low-fidelity gradients at theta_prev serves as
/// the control-variate mean; each inner step pairs n_high fresh high-fidelity
/// gradients at theta_k with low-fidelity gradients at theta_prev on the same
/// realizations.
inline OptimizerTrace bfsvrg_run(const BiFidelityOracle& oracle, DesignVector theta, const BfSvrgParams& params,
                                 const RunSettings& settings) {
  detail::check_eta(settings.eta);
  detail::check_start(oracle, theta);
  if (params.inner < 1 || params.n_low < 1 || params.n_high < 1 || params.outer < 0)
    throw ConfigFault("BF-SVRG needs m >= 1, N_l >= 1, N_h >= 1");

  detail::Recorder rec(settings, oracle.gamma());
  const Index nh = params.n_high;
  for (Index j = 0; j < params.outer; ++j) {
    const Vector anchor = theta.values();
    Vector low_mean;
    std::optional<Vector> exact;
    if (params.exact_anchor_mean) exact = oracle.expected_gradient(anchor, Fidelity::low);
    if (exact) {
      low_mean = *exact;
    } else {
      std::vector<RandomRealization> set;
      for (Index i = 0; i < params.n_low; ++i) {
        Rng rng = make_rng(settings.seed, Stream::anchor, static_cast<std::uint64_t>(j),
                           static_cast<std::uint64_t>(i));
        set.push_back(oracle.sample(rng));
      }
      std::vector<detail::Request> req;
      for (const auto& x : set) req.push_back({&x, &anchor, Fidelity::low});
      low_mean = detail::mean_of(detail::evaluate(oracle, req, settings.threads, rec.ledger()), 0, set.size());
    }

    for (Index k = 0; k < params.inner; ++k) {
      std::vector<RandomRealization> xs;
      for (Index b = 0; b < nh; ++b) {
        Rng rng = make_rng(settings.seed, Stream::inner, static_cast<std::uint64_t>(j * params.inner + k),
                           static_cast<std::uint64_t>(b));
        xs.push_back(oracle.sample(rng));
      }
      std::vector<detail::Request> req;
      for (const auto& x : xs) req.push_back({&x, &theta.values(), Fidelity::high});
      for (const auto& x : xs) req.push_back({&x, &anchor, Fidelity::low});
      const auto g = detail::evaluate(oracle, req, settings.threads, rec.ledger());
      const Matrix high = detail::rows_of(g, 0, static_cast<std::size_t>(nh));
      const Matrix low = detail::rows_of(g, static_cast<std::size_t>(nh), g.size());

      bool fallback = false;
      Index degenerate = 0;
      cv::DiagonalAlpha alpha{Vector::Ones(oracle.n_theta())};
      if (params.alpha_mode != AlphaMode::identity) {
        const auto fit = cv::diagonal_alpha(high, low, low_mean);
        degenerate = fit.degenerate_count();
        if (fit.all_degenerate()) {
          fallback = true;
        } else {
          alpha = fit.alpha;
          if (params.alpha_mode == AlphaMode::diagonal_corrected)
            alpha = cv::corrected_alpha(alpha, nh, params.n_low);
        }
      }

      const Matrix z = high - (low.rowwise() - low_mean.transpose()) * alpha.values.asDiagonal();
      const Vector direction = z.colwise().mean().transpose();
      theta = detail::step(std::move(theta), settings.eta, direction);
      auto& r = rec.record(theta.values(), j + 1);
      r.direction_variance = detail::batch_mean_variance(z);
      r.alpha_fallback = fallback;
      r.degenerate_alpha = degenerate;
    }
  }
  return rec.finish(theta.values());
}

}  // namespace bfsgd

#endif  // BFSGD_SGD_OPTIMIZERS_HPP
