#pragma once

#include <string>

namespace hierctl {

/**
 * C^2 scalar nonlinearity with F(0)=0 and |F'|, |F''| bounded by `bound()`.
 * Value type so it can be used freely inside parallel loops.
 */
class Nonlinearity {
 public:
  enum class Kind { zero, linear, tanh, sine };

  Nonlinearity() = default;
  Nonlinearity(Kind kind, double scale);

  static Nonlinearity zero() { return {}; }
  static Nonlinearity linear(double k) { return {Kind::linear, k}; }
  static Nonlinearity saturating(double m) { return {Kind::tanh, m}; }
  static Nonlinearity sine(double m) { return {Kind::sine, m}; }
  /// Accepts "zero", "linear", "tanh" or "sine".
  static Nonlinearity parse(const std::string& kind, double scale);

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double bound() const;
  bool is_affine() const { return kind_ == Kind::zero || kind_ == Kind::linear; }
  std::string name() const;

  double value(double r) const;
  double derivative(double r) const;
  double second_derivative(double r) const;

 private:
  Kind kind_ = Kind::zero;
  double scale_ = 0.0;
};

}  // namespace hierctl
