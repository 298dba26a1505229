#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ucrlb {

/// Invalid environment, algorithm or experiment description.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An observation outside the model's domain (e.g. a reward not in [0,1]).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input too large for an exhaustive check.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> span_history)
      : std::runtime_error(what), span_history_(std::move(span_history)) {}

  /// Most recent residuals, oldest first. The last entry is the final span.
  const std::vector<double>& span_history() const { return span_history_; }
  double last_span() const { return span_history_.empty() ? 0.0 : span_history_.back(); }

 private:
  std::vector<double> span_history_;
};

/// A trial of an experiment failed; wraps the original message.
class TrialError : public std::runtime_error {
 public:
  TrialError(std::size_t trial, const std::string& what)
      : std::runtime_error("trial " + std::to_string(trial) + ": " + what), trial_(trial) {}
  std::size_t trial() const { return trial_; }

 private:
  std::size_t trial_;
};

}  // namespace ucrlb
