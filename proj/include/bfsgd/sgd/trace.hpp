#ifndef BFSGD_SGD_TRACE_HPP
#define BFSGD_SGD_TRACE_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "bfsgd/harness/cost.hpp"
#include "bfsgd/types.hpp"

namespace bfsgd {

struct TraceRecord {
  Index iter = 0;   // 1-based update count
  Index outer = 0;  // outer iteration for SVRG-type runs, 0 otherwise
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mass_ratio;
  double cum_cost = 0.0;
  std::int64_t high_calls = 0;
  std::int64_t low_calls = 0;
  std::optional<Vector> theta;     // kept when n_theta <= snapshot limit
  std::optional<double> distance;  // ||theta - reference|| when a reference is given
  std::optional<double> direction_variance;
  bool alpha_fallback = false;
  Index degenerate_alpha = 0;
};

enum class TraceStatus { completed };

struct OptimizerTrace {
  std::vector<TraceRecord> records;
  Vector final_theta;
  double gamma = 1.0;
  TraceStatus status = TraceStatus::completed;

  Index iterations() const { return static_cast<Index>(records.size()); }
  double final_cost() const { return records.empty() ? 0.0 : records.back().cum_cost; }
};

struct Observation {
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> mass_ratio;
};

using Monitor = std::function<Observation(const Vector&)>;

/// Settings shared by every optimizer.
struct RunSettings {
  double eta = 0.1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<Vector> reference;
  Monitor monitor;
  Index snapshot_limit = 64;
};

namespace detail {

class Recorder {
 public:
  Recorder(const RunSettings& settings, double gamma) : settings_(settings), ledger_(gamma) {
    trace_.gamma = gamma;
  }

  CostLedger& ledger() { return ledger_; }

  TraceRecord& record(const Vector& theta, Index outer = 0) {
    TraceRecord r;
    r.iter = static_cast<Index>(trace_.records.size()) + 1;
    r.outer = outer;
    r.cum_cost = ledger_.cumulative();
    r.high_calls = ledger_.high_calls();
    r.low_calls = ledger_.low_calls();
    if (theta.size() <= settings_.snapshot_limit) r.theta = theta;
    if (settings_.reference) r.distance = (theta - *settings_.reference).norm();
    if (settings_.monitor) {
      const Observation obs = settings_.monitor(theta);
      r.objective = obs.objective;
      r.mass_ratio = obs.mass_ratio;
    }
    trace_.records.push_back(std::move(r));
    return trace_.records.back();
  }

  OptimizerTrace finish(Vector theta) {
    trace_.final_theta = std::move(theta);
    return std::move(trace_);
  }

 private:
  const RunSettings& settings_;
  CostLedger ledger_;
  OptimizerTrace trace_;
};

}  // namespace detail

}  // namespace bfsgd

#endif  // BFSGD_SGD_TRACE_HPP
