#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace bunching {

// Bad or inconsistent input data (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver failure, singular systems, bracket failures (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter outside the admissible domain of a model or operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

using WarningHandler = std::function<void(const std::string&)>;

// Installs a process-wide warning sink and returns the previous one.
// The default handler writes to stderr.
WarningHandler set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace bunching
