#ifndef BFSGD_HARNESS_EXPERIMENT_HPP
#define BFSGD_HARNESS_EXPERIMENT_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bfsgd/fem/transfer.hpp"
#include "bfsgd/harness/config.hpp"
#include "bfsgd/harness/registry.hpp"
#include "bfsgd/parallel.hpp"
#include "bfsgd/sgd/rate.hpp"

namespace bfsgd::harness {

/// Fixed-format number for CSV output: 9 significant digits, empty when absent.
inline std::string format_number(double v) {
  if (std::isnan(v)) return {};
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(9) << v;
  return os.str();
}

inline void write_trace_csv(std::ostream& os, const OptimizerTrace& trace) {
  os << "iter,objective,mass_ratio,cum_cost_hf,high_calls,low_calls\n";
  for (const auto& r : trace.records) {
    os << r.iter << ',' << format_number(r.objective) << ','
       << (r.mass_ratio ? format_number(*r.mass_ratio) : std::string()) << ',' << format_number(r.cum_cost) << ','
       << r.high_calls << ',' << r.low_calls << '\n';
  }
}

/// Objective observer: the closed-form expectation when the problem has one,
/// otherwise the mean high-fidelity objective over a fixed validation set.
inline Monitor make_monitor(std::shared_ptr<const BiFidelityOracle> oracle, Index samples, std::uint64_t seed,
                            unsigned threads) {
  if (samples < 1) throw ConfigFault("objective_samples must be positive");
  auto set = std::make_shared<std::vector<RandomRealization>>();
  for (Index i = 0; i < samples; ++i) {
    Rng rng = make_rng(seed, Stream::validation, static_cast<std::uint64_t>(i));
    set->push_back(oracle->sample(rng));
  }
  return [oracle, set, threads](const Vector& theta) {
    Observation obs;
    obs.mass_ratio = oracle->mass_ratio(theta);
    if (auto exact = oracle->expected_objective(theta)) {
      obs.objective = *exact;
      return obs;
    }
    const auto values = parallel_map(static_cast<Index>(set->size()), threads, [&](Index i) {
      return oracle->objective(theta, (*set)[static_cast<std::size_t>(i)], Fidelity::high);
    });
    double sum = 0.0;
    for (double v : values) sum += v;
    obs.objective = sum / static_cast<double>(values.size());
    return obs;
  };
}

struct Prepared {
  ProblemInstance problem;
  AlgorithmSpec algorithm;
  unsigned threads = 1;
  Index objective_samples = 256;
  double rate_tail = 0.5;
};

inline Prepared prepare(const ExperimentConfig& config) {
  ParamReader params(config.params);
  Prepared p;
  p.problem = make_problem(config.problem, params);
  p.algorithm = make_algorithm(config.algorithm, params, *p.problem.oracle);
  p.threads = static_cast<unsigned>(params.count("threads", static_cast<Index>(default_threads())));
  p.objective_samples = params.count("objective_samples", p.objective_samples);
  p.rate_tail = params.positive("rate_tail", p.rate_tail);
  if (p.rate_tail > 1.0) throw ConfigFault("parameter 'rate_tail' must lie in (0, 1]");
  params.finish();
  return p;
}

struct RunArtifacts {
  OptimizerTrace trace;
  Json summary;
  std::filesystem::path trace_csv;
  std::filesystem::path summary_json;
  std::optional<std::filesystem::path> design_csv;
};

inline std::vector<double> relative_errors(const OptimizerTrace& trace, const Vector& reference) {
  const double scale = reference.norm();
  if (!(scale > 0.0)) throw DomainFault("reference design has zero norm");
  std::vector<double> out;
  out.reserve(trace.records.size());
  for (const auto& r : trace.records) {
    if (!r.distance) throw ConfigFault("trace was recorded without a reference");
    out.push_back(*r.distance / scale);
  }
  return out;
}

/// Runs one configured experiment and writes trace.csv, summary.json and, for
/// topology problems, design.csv into config.output.
inline RunArtifacts run_experiment(const ExperimentConfig& config) {
  const Prepared p = prepare(config);
  const auto& oracle = p.problem.oracle;

  RunSettings settings;
  settings.eta = p.algorithm.eta;
  settings.seed = config.seed;
  settings.threads = p.threads;
  settings.reference = oracle->minimizer();
  settings.monitor = make_monitor(oracle, p.objective_samples, config.seed, p.threads);

  RunArtifacts out;
  out.trace = p.algorithm.run(*oracle, p.problem.theta0, settings);

  std::filesystem::create_directories(config.output);
  out.trace_csv = config.output / "trace.csv";
  {
    std::ofstream os(out.trace_csv, std::ios::binary);
    if (!os) throw ConfigFault("cannot write " + out.trace_csv.string());
    write_trace_csv(os, out.trace);
  }
  if (p.problem.grid) {
    out.design_csv = config.output / "design.csv";
    std::ofstream os(*out.design_csv, std::ios::binary);
    if (!os) throw ConfigFault("cannot write " + out.design_csv->string());
    fem::write_density_csv(os, out.trace.final_theta, p.problem.grid->first, p.problem.grid->second);
  }

  Json s;
  s["problem"] = config.problem;
  s["algorithm"] = config.algorithm;
  s["seed"] = config.seed;
  s["iterations"] = out.trace.iterations();
  s["final_cost"] = out.trace.final_cost();
  s["high_calls"] = out.trace.records.empty() ? 0 : out.trace.records.back().high_calls;
  s["low_calls"] = out.trace.records.empty() ? 0 : out.trace.records.back().low_calls;
  if (!out.trace.records.empty()) {
    const auto& last = out.trace.records.back();
    if (!std::isnan(last.objective)) s["final_objective"] = last.objective;
    if (last.mass_ratio) s["final_mass_ratio"] = *last.mass_ratio;
  }
  Index fallbacks = 0;
  for (const auto& r : out.trace.records) fallbacks += r.alpha_fallback ? 1 : 0;
  s["alpha_fallbacks"] = fallbacks;
  if (settings.reference) {
    const auto errors = relative_errors(out.trace, *settings.reference);
    s["final_relative_error"] = errors.empty() ? Json() : Json(errors.back());
    try {
      const auto fit = measure_linear_rate(errors, p.rate_tail);
      s["rate"] = fit.rate;
      s["fit_quality"] = fit.fit_quality;
    } catch (const Error&) {
      // Too few iterations or an exact hit; the rate is simply not reported.
    }
  }
  out.summary = s;
  out.summary_json = config.output / "summary.json";
  std::ofstream os(out.summary_json, std::ios::binary);
  if (!os) throw ConfigFault("cannot write " + out.summary_json.string());
  os << s.dump(2) << '\n';
  return out;
}

struct ReplicateResult {
  std::vector<double> mean;
  std::vector<double> stddev;
  Vector reference;
  bool reference_from_problem = true;
  std::optional<RateFit> fit;
  std::filesystem::path aggregate_csv;
};

/// Seed of replication r.
inline std::uint64_t replicate_seed(std::uint64_t seed, Index r) {
  return derive_seed(seed, Stream::replicate, static_cast<std::uint64_t>(r));
}

/// Runs n_runs independently seeded copies of the configuration and reports the
/// per-iteration mean and standard deviation of ||theta_k - theta*|| / ||theta*||.
inline ReplicateResult replicate(const ExperimentConfig& config, Index n_runs, bool write_csv = true) {
  if (n_runs < 2) throw ConfigFault("replicate needs at least two runs");
  const Prepared p = prepare(config);
  const auto& oracle = p.problem.oracle;

  ReplicateResult out;
  if (auto known = oracle->minimizer()) {
    out.reference = *known;
  } else {
    out.reference_from_problem = false;
    RunSettings ref;
    ref.eta = p.algorithm.eta;
    ref.seed = derive_seed(config.seed, Stream::replicate, ~std::uint64_t{0});
    ref.threads = p.threads;
    out.reference = p.algorithm.reference().run(*oracle, p.problem.theta0, ref).final_theta;
  }

  // Replications run concurrently; each evaluates its own batches sequentially.
  const auto curves = parallel_map(n_runs, p.threads, [&](Index r) {
    RunSettings s;
    s.eta = p.algorithm.eta;
    s.seed = replicate_seed(config.seed, r);
    s.threads = 1;
    s.reference = out.reference;
    s.snapshot_limit = 0;
    return relative_errors(p.algorithm.run(*oracle, p.problem.theta0, s), out.reference);
  });

  const std::size_t iters = curves.front().size();
  out.mean.assign(iters, 0.0);
  out.stddev.assign(iters, 0.0);
  for (std::size_t k = 0; k < iters; ++k) {
    double m = 0.0;
    for (const auto& c : curves) m += c[k];
    m /= static_cast<double>(n_runs);
    double v = 0.0;
    for (const auto& c : curves) v += (c[k] - m) * (c[k] - m);
    out.mean[k] = m;
    out.stddev[k] = std::sqrt(v / static_cast<double>(n_runs - 1));
  }
  try {
    out.fit = measure_linear_rate(out.mean, p.rate_tail);
  } catch (const Error&) {
  }

  if (write_csv) {
    std::filesystem::create_directories(config.output);
    out.aggregate_csv = config.output / "aggregate.csv";
    std::ofstream os(out.aggregate_csv, std::ios::binary);
    if (!os) throw ConfigFault("cannot write " + out.aggregate_csv.string());
    os << "iter,mean_rel_error,std_rel_error\n";
    for (std::size_t k = 0; k < iters; ++k)
      os << k + 1 << ',' << format_number(out.mean[k]) << ',' << format_number(out.stddev[k]) << '\n';
  }
  return out;
}

}  // namespace bfsgd::harness

#endif  // BFSGD_HARNESS_EXPERIMENT_HPP
