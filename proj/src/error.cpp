#include "hierctl/error.hpp"

namespace hierctl {

const char* to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::ok: return "ok";
    case ErrorClass::internal: return "internal";
    case ErrorClass::usage: return "usage";
    case ErrorClass::config: return "config";
    case ErrorClass::parameter: return "parameter";
    case ErrorClass::numeric: return "numeric";
    case ErrorClass::solver: return "solver";
    case ErrorClass::iteration: return "iteration";
    case ErrorClass::io: return "io";
    case ErrorClass::domain: return "domain";
  }
  return "unknown";
}

namespace {
std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(ErrorClass::config, join(violations)), violations_(std::move(violations)) {}

}  // namespace hierctl
