#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dprsa {

/// Invalid or inconsistent run configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset ingestion failure (maps to CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// IDX container parse failure with a machine-checkable kind.
class IdxError : public DataError {
 public:
  enum class Kind { BadMagic, Truncated, CountMismatch };

  IdxError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// An iterative solver ran out of iterations. Carries the last iterate so
/// callers can inspect how far it got.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

}  // namespace dprsa
