#include "hierctl/nonlinearity.hpp"

#include <cmath>

#include "hierctl/error.hpp"

namespace hierctl {

Nonlinearity::Nonlinearity(Kind kind, double scale) : kind_(kind), scale_(scale) {
  if (!std::isfinite(scale)) throw ConfigError("nonlinearity: scale must be finite");
}

Nonlinearity Nonlinearity::parse(const std::string& kind, double scale) {
  if (kind == "zero") return zero();
  if (kind == "linear") return linear(scale);
  if (kind == "tanh") return saturating(scale);
  if (kind == "sine") return sine(scale);
  throw ConfigError("nonlinearity: unknown kind '" + kind + "' (zero, linear, tanh, sine)");
}

double Nonlinearity::bound() const { return kind_ == Kind::zero ? 0.0 : std::abs(scale_); }

std::string Nonlinearity::name() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::linear: return "linear";
    case Kind::tanh: return "tanh";
    case Kind::sine: return "sine";
  }
  return "zero";
}

double Nonlinearity::value(double r) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::linear: return scale_ * r;
    case Kind::tanh: return scale_ * std::tanh(r);
    case Kind::sine: return scale_ * std::sin(r);
  }
  return 0.0;
}

double Nonlinearity::derivative(double r) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::linear: return scale_;
    case Kind::tanh: {
      const double c = std::cosh(r);
      return scale_ / (c * c);
    }
    case Kind::sine: return scale_ * std::cos(r);
  }
  return 0.0;
}

double Nonlinearity::second_derivative(double r) const {
  switch (kind_) {
    case Kind::zero:
    case Kind::linear: return 0.0;
    case Kind::tanh: {
      const double c = std::cosh(r);
      return -2.0 * scale_ * std::tanh(r) / (c * c);
    }
    case Kind::sine: return -scale_ * std::sin(r);
  }
  return 0.0;
}

}  // namespace hierctl
