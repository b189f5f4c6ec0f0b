#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hierctl {

/// Exit classes reported by the command line tool. Stable across releases.
enum class ErrorClass : int {
  ok = 0,
  internal = 1,
  usage = 2,
  config = 3,
  parameter = 4,
  numeric = 5,
  solver = 6,
  iteration = 7,
  io = 8,
  domain = 9,
};

const char* to_string(ErrorClass c);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass c, const std::string& what) : std::runtime_error(what), class_(c) {}
  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& w) : Error(ErrorClass::usage, w) {}
};

/// Invalid configuration. Carries every violated invariant, each prefixed by its field name.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error(ErrorClass::config, w) {}
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& w) : Error(ErrorClass::parameter, w) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& w) : Error(ErrorClass::numeric, w) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& w) : Error(ErrorClass::solver, w) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& w) : Error(ErrorClass::domain, w) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& w) : Error(ErrorClass::io, w) {}
};

/// An iterative method stopped before reaching its tolerance.
class IterationError : public Error {
 public:
  IterationError(const std::string& w, std::vector<double> history)
      : Error(ErrorClass::iteration, w), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace hierctl
