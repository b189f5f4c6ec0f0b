#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hierctl {

using Vector = Eigen::VectorXd;
using VectorPair = std::array<Vector, 2>;

/**
 * Interior nodes of (0,1). The boundary points x=0 and x=1 are never unknowns.
 *
 * Extended coordinates xe(0)=0, xe(j+1)=node(j), xe(N+1)=1 define N+1 intervals;
 * interval i spans [xe(i), xe(i+1)], so node j sits between intervals j and j+1.
 */
class SpaceGrid {
 public:
  static SpaceGrid build(std::size_t n, double grading = 1.0);

  std::size_t size() const { return nodes_.size(); }
  double grading() const { return grading_; }
  double node(std::size_t j) const { return nodes_[j]; }
  std::span<const double> nodes() const { return nodes_; }

  double extended(std::size_t i) const;
  std::size_t intervals() const { return nodes_.size() + 1; }
  double spacing(std::size_t i) const { return extended(i + 1) - extended(i); }
  double midpoint(std::size_t i) const { return 0.5 * (extended(i) + extended(i + 1)); }
  /// Trapezoid weight of node j: half the sum of its two adjacent spacings.
  double weight(std::size_t j) const { return weights_[j]; }
  const Vector& weights() const { return weights_; }

 private:
  std::vector<double> nodes_;
  Vector weights_;
  double grading_ = 1.0;
};

/// Uniform time grid. Slot k covers [k dt, (k+1) dt]; coefficients are sampled at slot midpoints.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }
  double node(std::size_t k) const { return dt_ * static_cast<double>(k); }
  double midpoint(std::size_t k) const { return dt_ * (static_cast<double>(k) + 0.5); }

 private:
  double horizon_ = 1.0;
  std::size_t steps_ = 1;
  double dt_ = 1.0;
};

/// a(x) = x^alpha with alpha in [0,1).
class Degeneracy {
 public:
  explicit Degeneracy(double alpha);
  double alpha() const { return alpha_; }
  double tau() const { return alpha_; }
  double operator()(double x) const;
  double derivative(double x) const;

 private:
  double alpha_;
};

/// Index set of nodes lying strictly inside an interval.
class Mask {
 public:
  static Mask from_interval(const SpaceGrid& grid, double lo, double hi, std::string name = {});
  static Mask full(const SpaceGrid& grid, std::string name = "full");
  static Mask empty(const SpaceGrid& grid, std::string name = "empty");

  std::size_t grid_size() const { return flags_.size(); }
  bool contains(std::size_t j) const { return flags_[j] != 0; }
  std::size_t count() const;
  const std::string& name() const { return name_; }
  /// 0/1 indicator over the nodes.
  const Vector& indicator() const { return indicator_; }
  bool disjoint(const Mask& other) const;
  bool intersects(const Mask& other) const { return !disjoint(other); }

 private:
  Mask(std::vector<char> flags, std::string name);
  std::vector<char> flags_;
  Vector indicator_;
  std::string name_;
};

/// Samples on (time slot, space node). Row k is one time slice and is contiguous.
class SpaceTimeField {
 public:
  using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SpaceTimeField() = default;
  SpaceTimeField(std::size_t slots, std::size_t nodes, std::string name = {});
  SpaceTimeField(Storage values, std::string name);

  std::size_t slots() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t nodes() const { return static_cast<std::size_t>(values_.cols()); }
  const std::string& name() const { return name_; }
  void rename(std::string name) { name_ = std::move(name); }

  double& operator()(std::size_t k, std::size_t j) { return values_(k, j); }
  double operator()(std::size_t k, std::size_t j) const { return values_(k, j); }
  auto slot(std::size_t k) { return values_.row(static_cast<Eigen::Index>(k)); }
  auto slot(std::size_t k) const { return values_.row(static_cast<Eigen::Index>(k)); }

  Storage& values() { return values_; }
  const Storage& values() const { return values_; }

  bool all_finite() const { return values_.allFinite(); }
  bool same_shape(const SpaceTimeField& o) const {
    return slots() == o.slots() && nodes() == o.nodes();
  }
  double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

  SpaceTimeField& operator+=(const SpaceTimeField& o);
  SpaceTimeField& operator-=(const SpaceTimeField& o);
  SpaceTimeField& operator*=(double c);

 private:
  Storage values_;
  std::string name_;
};

SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b);
SpaceTimeField operator*(double c, SpaceTimeField a);

using FieldPair = std::array<SpaceTimeField, 2>;

FieldPair zero_pair(std::size_t slots, std::size_t nodes);
VectorPair zero_vectors(std::size_t nodes);

/// Tridiagonal matrix; lower[0] and upper[N-1] are unused.
struct Tridiagonal {
  Vector lower, diag, upper;

  std::size_t size() const { return static_cast<std::size_t>(diag.size()); }
  Vector apply(const Vector& x) const;
  /// Thomas algorithm; throws SolverError on a vanishing pivot.
  Vector solve(const Vector& rhs) const;
  /// I + dt (this + diag(q)).
  Tridiagonal shifted(double dt, const Eigen::Ref<const Vector>& q) const;
};

/**
 * Flux-form approximation of u -> -(a u_x)_x with Dirichlet nodes eliminated.
 * The coefficient is sampled at interval midpoints so a(0) is never used.
 * The matrix is self-adjoint in the trapezoid inner product.
 */
Tridiagonal assemble_degenerate_operator(const Degeneracy& a, const SpaceGrid& grid);

struct Norms {
  double l2 = 0.0;
  double h1a = 0.0;
};

/// Trapezoid L2 norm and the H^1_a norm, using zero boundary values for the end intervals.
Norms weighted_norms(const Vector& u, const Degeneracy& a, const SpaceGrid& grid);

SpaceTimeField restrict_to_mask(const SpaceTimeField& u, const Mask& m);

/// Spatial trapezoid inner product.
double inner(const Vector& u, const Vector& v, const SpaceGrid& grid);

/// Central-difference derivative at the nodes with zero boundary values.
Vector gradient(const Vector& u, const SpaceGrid& grid);

/// Space, time and the assembled operator in one place.
struct Discretization {
  SpaceGrid space;
  TimeGrid time;
  Degeneracy a;
  Tridiagonal L;

  Discretization(SpaceGrid s, TimeGrid t, Degeneracy deg);
  std::size_t nodes() const { return space.size(); }
  std::size_t slots() const { return time.steps(); }
  SpaceTimeField field(std::string name = {}) const { return {slots(), nodes(), std::move(name)}; }
  FieldPair pair() const { return zero_pair(slots(), nodes()); }
};

/// Space-time inner product: dt * sum_k <u_k, v_k>.
double inner(const SpaceTimeField& u, const SpaceTimeField& v, const Discretization& d);
double inner(const FieldPair& u, const FieldPair& v, const Discretization& d);
double norm(const SpaceTimeField& u, const Discretization& d);
double norm(const FieldPair& u, const Discretization& d);
/// Same, with the node sum restricted to a mask.
double masked_inner(const SpaceTimeField& u, const SpaceTimeField& v, const Mask& m,
                    const Discretization& d);

}  // namespace hierctl
