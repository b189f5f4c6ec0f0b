#include "hierctl/grid.hpp"

#include <cmath>

#include "hierctl/error.hpp"

namespace hierctl {

SpaceGrid SpaceGrid::build(std::size_t n, double grading) {
  if (n < 3) throw ConfigError("n: need at least 3 interior nodes, got " + std::to_string(n));
  if (!(grading >= 1.0)) throw ConfigError("grading: must be >= 1");
  SpaceGrid g;
  g.grading_ = grading;
  g.nodes_.resize(n);
  const double denom = static_cast<double>(n + 1);
  for (std::size_t j = 0; j < n; ++j) {
    g.nodes_[j] = std::pow(static_cast<double>(j + 1) / denom, grading);
  }
  g.weights_.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) g.weights_[j] = 0.5 * (g.extended(j + 2) - g.extended(j));
  return g;
}

double SpaceGrid::extended(std::size_t i) const {
  if (i == 0) return 0.0;
  if (i > nodes_.size()) return 1.0;
  return nodes_[i - 1];
}

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0)) throw ConfigError("T: horizon must be positive");
  if (steps == 0) throw ConfigError("m: need at least one time step");
  dt_ = horizon / static_cast<double>(steps);
}

Degeneracy::Degeneracy(double alpha) : alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha: must lie in [0,1)");
}

double Degeneracy::operator()(double x) const { return alpha_ == 0.0 ? 1.0 : std::pow(x, alpha_); }

double Degeneracy::derivative(double x) const {
  return alpha_ == 0.0 ? 0.0 : alpha_ * std::pow(x, alpha_ - 1.0);
}

Mask::Mask(std::vector<char> flags, std::string name)
    : flags_(std::move(flags)), name_(std::move(name)) {
  indicator_ = Vector::Zero(static_cast<Eigen::Index>(flags_.size()));
  for (std::size_t j = 0; j < flags_.size(); ++j) indicator_[j] = flags_[j] ? 1.0 : 0.0;
}

Mask Mask::from_interval(const SpaceGrid& grid, double lo, double hi, std::string name) {
  std::vector<char> f(grid.size(), 0);
  for (std::size_t j = 0; j < grid.size(); ++j) f[j] = (grid.node(j) > lo && grid.node(j) < hi);
  return Mask(std::move(f), std::move(name));
}

Mask Mask::full(const SpaceGrid& grid, std::string name) {
  return Mask(std::vector<char>(grid.size(), 1), std::move(name));
}

Mask Mask::empty(const SpaceGrid& grid, std::string name) {
  return Mask(std::vector<char>(grid.size(), 0), std::move(name));
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (char f : flags_) c += f ? 1 : 0;
  return c;
}

bool Mask::disjoint(const Mask& other) const {
  if (other.grid_size() != grid_size()) throw DomainError("mask: grid size mismatch");
  for (std::size_t j = 0; j < flags_.size(); ++j)
    if (flags_[j] && other.flags_[j]) return false;
  return true;
}

SpaceTimeField::SpaceTimeField(std::size_t slots, std::size_t nodes, std::string name)
    : values_(Storage::Zero(static_cast<Eigen::Index>(slots), static_cast<Eigen::Index>(nodes))),
      name_(std::move(name)) {}

SpaceTimeField::SpaceTimeField(Storage values, std::string name)
    : values_(std::move(values)), name_(std::move(name)) {}

SpaceTimeField& SpaceTimeField::operator+=(const SpaceTimeField& o) {
  if (!same_shape(o)) throw DomainError("field: shape mismatch in +=");
  values_ += o.values_;
  return *this;
}

SpaceTimeField& SpaceTimeField::operator-=(const SpaceTimeField& o) {
  if (!same_shape(o)) throw DomainError("field: shape mismatch in -=");
  values_ -= o.values_;
  return *this;
}

SpaceTimeField& SpaceTimeField::operator*=(double c) {
  values_ *= c;
  return *this;
}

SpaceTimeField operator+(SpaceTimeField a, const SpaceTimeField& b) { return a += b; }
SpaceTimeField operator-(SpaceTimeField a, const SpaceTimeField& b) { return a -= b; }
SpaceTimeField operator*(double c, SpaceTimeField a) { return a *= c; }

FieldPair zero_pair(std::size_t slots, std::size_t nodes) {
  return {SpaceTimeField(slots, nodes), SpaceTimeField(slots, nodes)};
}

VectorPair zero_vectors(std::size_t nodes) {
  const auto n = static_cast<Eigen::Index>(nodes);
  return {Vector::Zero(n), Vector::Zero(n)};
}

Vector Tridiagonal::apply(const Vector& x) const {
  const auto n = diag.size();
  if (x.size() != n) throw DomainError("tridiagonal: dimension mismatch");
  Vector y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = diag[j] * x[j];
    if (j > 0) s += lower[j] * x[j - 1];
    if (j + 1 < n) s += upper[j] * x[j + 1];
    y[j] = s;
  }
  return y;
}

Vector Tridiagonal::solve(const Vector& rhs) const {
  const auto n = diag.size();
  if (rhs.size() != n) throw DomainError("tridiagonal: dimension mismatch");
  Vector c(n), x(n);
  double piv = diag[0];
  if (piv == 0.0) throw SolverError("tridiagonal: zero pivot at row 0");
  c[0] = n > 1 ? upper[0] / piv : 0.0;
  x[0] = rhs[0] / piv;
  for (Eigen::Index j = 1; j < n; ++j) {
    piv = diag[j] - lower[j] * c[j - 1];
    if (piv == 0.0 || !std::isfinite(piv))
      throw SolverError("tridiagonal: singular pivot at row " + std::to_string(j));
    c[j] = j + 1 < n ? upper[j] / piv : 0.0;
    x[j] = (rhs[j] - lower[j] * x[j - 1]) / piv;
  }
  for (Eigen::Index j = n - 2; j >= 0; --j) x[j] -= c[j] * x[j + 1];
  return x;
}

Tridiagonal Tridiagonal::shifted(double dt, const Eigen::Ref<const Vector>& q) const {
  Tridiagonal t{dt * lower, (dt * (diag + q)).array() + 1.0, dt * upper};
  return t;
}

Tridiagonal assemble_degenerate_operator(const Degeneracy& a, const SpaceGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Tridiagonal L{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto left = static_cast<std::size_t>(j);
    const auto right = left + 1;
    const double kl = a(grid.midpoint(left)) / grid.spacing(left);
    const double kr = a(grid.midpoint(right)) / grid.spacing(right);
    const double w = grid.weight(left);
    L.diag[j] = (kl + kr) / w;
    if (j > 0) L.lower[j] = -kl / w;
    if (j + 1 < n) L.upper[j] = -kr / w;
  }
  return L;
}

Norms weighted_norms(const Vector& u, const Degeneracy& a, const SpaceGrid& grid) {
  if (static_cast<std::size_t>(u.size()) != grid.size())
    throw DomainError("weighted_norms: field has " + std::to_string(u.size()) + " nodes, grid " +
                      std::to_string(grid.size()));
  const double l2sq = inner(u, u, grid);
  double energy = 0.0;
  const auto n = grid.size();
  for (std::size_t i = 0; i <= n; ++i) {
    const double ul = i == 0 ? 0.0 : u[static_cast<Eigen::Index>(i - 1)];
    const double ur = i == n ? 0.0 : u[static_cast<Eigen::Index>(i)];
    const double h = grid.spacing(i);
    const double du = (ur - ul) / h;
    energy += a(grid.midpoint(i)) * du * du * h;
  }
  return {std::sqrt(l2sq), std::sqrt(l2sq + energy)};
}

SpaceTimeField restrict_to_mask(const SpaceTimeField& u, const Mask& m) {
  if (u.nodes() != m.grid_size()) throw DomainError("restrict_to_mask: mask/grid mismatch");
  SpaceTimeField out = u;
  out.values().array().rowwise() *= m.indicator().transpose().array();
  return out;
}

double inner(const Vector& u, const Vector& v, const SpaceGrid& grid) {
  return (u.array() * v.array() * grid.weights().array()).sum();
}

Vector gradient(const Vector& u, const SpaceGrid& grid) {
  const auto n = u.size();
  Vector g(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double ul = j == 0 ? 0.0 : u[j - 1];
    const double ur = j + 1 == n ? 0.0 : u[j + 1];
    const auto i = static_cast<std::size_t>(j);
    g[j] = (ur - ul) / (grid.extended(i + 2) - grid.extended(i));
  }
  return g;
}

Discretization::Discretization(SpaceGrid s, TimeGrid t, Degeneracy deg)
    : space(std::move(s)), time(t), a(deg), L(assemble_degenerate_operator(deg, space)) {}

double inner(const SpaceTimeField& u, const SpaceTimeField& v, const Discretization& d) {
  if (!u.same_shape(v) || u.nodes() != d.nodes()) throw DomainError("inner: shape mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < u.slots(); ++k)
    s += (u.slot(k).array() * v.slot(k).array() * d.space.weights().transpose().array()).sum();
  return d.time.dt() * s;
}

double inner(const FieldPair& u, const FieldPair& v, const Discretization& d) {
  return inner(u[0], v[0], d) + inner(u[1], v[1], d);
}

double norm(const SpaceTimeField& u, const Discretization& d) { return std::sqrt(inner(u, u, d)); }
double norm(const FieldPair& u, const Discretization& d) { return std::sqrt(inner(u, u, d)); }

double masked_inner(const SpaceTimeField& u, const SpaceTimeField& v, const Mask& m,
                    const Discretization& d) {
  if (!u.same_shape(v) || u.nodes() != m.grid_size()) throw DomainError("inner: shape mismatch");
  const Vector w = d.space.weights().cwiseProduct(m.indicator());
  double s = 0.0;
  for (std::size_t k = 0; k < u.slots(); ++k)
    s += (u.slot(k).array() * v.slot(k).array() * w.transpose().array()).sum();
  return d.time.dt() * s;
}

}  // namespace hierctl
