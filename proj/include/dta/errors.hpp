#pragma once

#include <stdexcept>
#include <string>

namespace dta {

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Value iteration hit its sweep cap without reaching the residual tolerance.
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InitializationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario, fixture or experiment configuration.
/// Carries the source name and 1-based line number when known (0 otherwise).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& message)
      : std::runtime_error(format(source, line, message)),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& source, int line,
                            const std::string& message) {
    if (line > 0) return source + ":" + std::to_string(line) + ": " + message;
    if (!source.empty()) return source + ": " + message;
    return message;
  }

  std::string source_;
  int line_ = 0;
};

}  // namespace dta
