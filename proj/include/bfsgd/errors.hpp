#ifndef BFSGD_ERRORS_HPP
#define BFSGD_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bfsgd {

using Index = std::ptrdiff_t;

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { config, numerical, solver };

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ErrorCategory category)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigFault : public Error {
 public:
  explicit ConfigFault(const std::string& what) : Error(what, ErrorCategory::config) {}
};

class DimensionFault : public Error {
 public:
  explicit DimensionFault(const std::string& what) : Error(what, ErrorCategory::config) {}
};

class DomainFault : public Error {
 public:
  explicit DomainFault(const std::string& what) : Error(what, ErrorCategory::numerical) {}
};

/// A non-finite value appeared; `component` names the offending entry.
class NumericalFault : public Error {
 public:
  NumericalFault(const std::string& what, Index component)
      : Error(what + " (component " + std::to_string(component) + ")", ErrorCategory::numerical),
        component_(component) {}

  Index component() const noexcept { return component_; }

 private:
  Index component_;
};

class DegenerateAlpha : public Error {
 public:
  explicit DegenerateAlpha(const std::string& what) : Error(what, ErrorCategory::numerical) {}
};

class SingularCovariance : public Error {
 public:
  explicit SingularCovariance(const std::string& what) : Error(what, ErrorCategory::numerical) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(what, ErrorCategory::numerical) {}
};

class EigenFailure : public Error {
 public:
  explicit EigenFailure(const std::string& what) : Error(what, ErrorCategory::numerical) {}
};

class SolverDivergence : public Error {
 public:
  explicit SolverDivergence(const std::string& what) : Error(what, ErrorCategory::solver) {}
};

class SingularSystem : public Error {
 public:
  explicit SingularSystem(const std::string& what) : Error(what, ErrorCategory::solver) {}
};

}  // namespace bfsgd

#endif  // BFSGD_ERRORS_HPP
