#pragma once

#include <stdexcept>
#include <string>

namespace irt {

/// Base error carrying a short machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// Malformed or inconsistent input data.
struct InputError : Error {
  explicit InputError(const std::string& what) : Error("input-error", what) {}
};

/// Inconsistent dimensions or invalid settings.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("config-error", what) {}
};

/// Filesystem failures.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io-error", what) {}
};

/// Every run of a sigma_alpha sweep was degenerate.
struct NoValidRunError : Error {
  explicit NoValidRunError(const std::string& what) : Error("no-valid-run", what) {}
};

/// A statistic is undefined for the given input (empty list, zero variance).
struct StatsError : Error {
  explicit StatsError(const std::string& what) : Error("stats-error", what) {}
};

}  // namespace irt
