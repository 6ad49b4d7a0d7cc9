#pragma once

#include <stdexcept>
#include <string>

namespace arena {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed game specs, configs, or language packs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration problems (empty axes, missing keys, stale dirs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Game has no well-defined answer for the requested analysis
/// (zero indifference denominator, min == max payoff range, ...).
class DegenerateGameError : public Error {
 public:
  using Error::Error;
};

/// Requested quantity does not exist for this game shape
/// (e.g. round variability of a one-shot game).
class NotApplicableError : public Error {
 public:
  using Error::Error;
};

/// Too few observations to evaluate a metric.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure talking to a decision provider.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Provider replied, but no reply could be parsed into a strategy choice.
class UnparseableDecisionError : public Error {
 public:
  using Error::Error;
};

}  // namespace arena
