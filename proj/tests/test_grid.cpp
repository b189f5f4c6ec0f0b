#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "hierctl/error.hpp"
#include "hierctl/grid.hpp"

using namespace hierctl;

namespace {

Vector sample(const SpaceGrid& g, double (*f)(double)) {
  Vector v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t j = 0; j < g.size(); ++j) v[static_cast<Eigen::Index>(j)] = f(g.node(j));
  return v;
}

}  // namespace

TEST(SpaceGrid, UniformThreeNodes) {
  const auto g = SpaceGrid::build(3, 1.0);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g.node(0), 0.25);
  EXPECT_DOUBLE_EQ(g.node(1), 0.5);
  EXPECT_DOUBLE_EQ(g.node(2), 0.75);
}

TEST(SpaceGrid, SquaredGrading) {
  const auto g = SpaceGrid::build(3, 2.0);
  EXPECT_DOUBLE_EQ(g.node(0), 0.0625);
  EXPECT_DOUBLE_EQ(g.node(1), 0.25);
  EXPECT_DOUBLE_EQ(g.node(2), 0.5625);
}

TEST(SpaceGrid, NinetyNineNodesHaveUniformSpacing) {
  const auto g = SpaceGrid::build(99);
  ASSERT_EQ(g.size(), 99u);
  for (std::size_t i = 0; i < g.intervals(); ++i) EXPECT_NEAR(g.spacing(i), 0.01, 1e-15);
}

TEST(SpaceGrid, RejectsBadInput) {
  EXPECT_THROW(SpaceGrid::build(2), ConfigError);
  EXPECT_THROW(SpaceGrid::build(10, 0.5), ConfigError);
}

TEST(SpaceGrid, NodesStrictlyIncreasingInside) {
  for (double grading : {1.0, 1.5, 3.0}) {
    const auto g = SpaceGrid::build(37, grading);
    EXPECT_GT(g.node(0), 0.0);
    EXPECT_LT(g.node(g.size() - 1), 1.0);
    for (std::size_t i = 0; i < g.intervals(); ++i) EXPECT_GT(g.spacing(i), 0.0);
    EXPECT_NEAR(g.weights().sum(), 1.0 - 0.5 * (g.spacing(0) + g.spacing(g.size())), 1e-14);
  }
}

TEST(TimeGrid, MidpointsStayInside) {
  const TimeGrid t(2.0, 8);
  EXPECT_DOUBLE_EQ(t.dt(), 0.25);
  for (std::size_t k = 0; k < t.steps(); ++k) {
    EXPECT_GT(t.midpoint(k), 0.0);
    EXPECT_LT(t.midpoint(k), 2.0);
  }
}

TEST(Degeneracy, StructuralInequalities) {
  for (double alpha : {0.0, 0.3, 0.5, 0.9}) {
    const Degeneracy a(alpha);
    const auto g = SpaceGrid::build(200, 2.0);
    EXPECT_EQ(a(0.0), alpha == 0.0 ? 1.0 : 0.0);
    double prev = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double x = g.node(j);
      EXPECT_GT(a(x), 0.0);
      EXPECT_LE(x * a.derivative(x), a.tau() * a(x) * (1 + 1e-14));
      const double q = x * x / a(x);
      EXPECT_GE(q, prev);
      prev = q;
    }
  }
  EXPECT_THROW(Degeneracy(1.0), ConfigError);
  EXPECT_THROW(Degeneracy(-0.1), ConfigError);
}

TEST(Operator, NonDegenerateLimitIsSecondDifference) {
  const auto g = SpaceGrid::build(9);
  const Tridiagonal L = assemble_degenerate_operator(Degeneracy(0.0), g);
  const double h2 = 0.01;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    EXPECT_NEAR(L.diag[jj], 2.0 / h2, 1e-9);
    if (j > 0) EXPECT_NEAR(L.lower[jj], -1.0 / h2, 1e-9);
    if (j + 1 < g.size()) EXPECT_NEAR(L.upper[jj], -1.0 / h2, 1e-9);
  }
}

TEST(Operator, SelfAdjointInTrapezoidProduct) {
  std::mt19937_64 rng(5);
  for (double grading : {1.0, 2.0}) {
    const auto g = SpaceGrid::build(64, grading);
    const Tridiagonal L = assemble_degenerate_operator(Degeneracy(0.5), g);
    for (int t = 0; t < 5; ++t) {
      const Vector u = fixtures::random_vector(g.size(), rng);
      const Vector v = fixtures::random_vector(g.size(), rng);
      EXPECT_LT(fixtures::relative(inner(L.apply(u), v, g), inner(u, L.apply(v), g)), 1e-12);
    }
  }
}

TEST(Operator, PositiveDefiniteByInverseIteration) {
  for (double alpha : {0.0, 0.5, 0.9}) {
    const auto g = SpaceGrid::build(50);
    const Tridiagonal L = assemble_degenerate_operator(Degeneracy(alpha), g);
    Vector x = Vector::Ones(static_cast<Eigen::Index>(g.size()));
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      Vector y = L.solve(x);
      const double nrm = std::sqrt(inner(y, y, g));
      lambda = inner(x, x, g) / inner(x, y, g);
      x = y / nrm;
    }
    EXPECT_GT(lambda, 0.0) << "alpha " << alpha;
  }
}

TEST(Operator, ManufacturedSolutionConvergesAtFirstOrder) {
  // u = x(1-x), a = x^{1/2}: f = -(a u')' = -(x^{-1/2}(1-2x)/2 - 2 x^{1/2}). f is singular at
  // x = 0, so the nodal truncation error does not shrink there; the solution error does.
  auto u = [](double x) { return x * (1 - x); };
  auto rhs = [](double x) { return -(0.5 * (1 - 2 * x) / std::sqrt(x) - 2 * std::sqrt(x)); };
  std::vector<double> errors;
  for (std::size_t n : {49, 99, 199, 399}) {
    const auto g = SpaceGrid::build(n);
    const Tridiagonal L = assemble_degenerate_operator(Degeneracy(0.5), g);
    Vector uv(static_cast<Eigen::Index>(n)), f(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      uv[static_cast<Eigen::Index>(j)] = u(g.node(j));
      f[static_cast<Eigen::Index>(j)] = rhs(g.node(j));
    }
    const Vector e = L.solve(f) - uv;
    errors.push_back(std::sqrt(inner(e, e, g)));
  }
  for (std::size_t i = 1; i < errors.size(); ++i)
    EXPECT_GE(std::log2(errors[i - 1] / errors[i]), 0.95) << "refinement " << i << " error " << errors[i];
}

TEST(WeightedNorms, ZeroField) {
  const auto g = SpaceGrid::build(20);
  const Norms n = weighted_norms(Vector::Zero(20), Degeneracy(0.5), g);
  EXPECT_EQ(n.l2, 0.0);
  EXPECT_EQ(n.h1a, 0.0);
}

TEST(WeightedNorms, SineClosedForm) {
  const auto g = SpaceGrid::build(200);
  const Vector u = sample(g, [](double x) { return std::sin(std::numbers::pi * x); });
  const Norms n = weighted_norms(u, Degeneracy(0.0), g);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(n.l2, std::sqrt(0.5), 0.01 * std::sqrt(0.5));
  EXPECT_NEAR(n.h1a * n.h1a, 0.5 + pi2 / 2, 0.01 * (0.5 + pi2 / 2));
}

TEST(WeightedNorms, H1aDominatesL2) {
  std::mt19937_64 rng(8);
  const auto g = SpaceGrid::build(40);
  for (int t = 0; t < 10; ++t) {
    const Norms n = weighted_norms(fixtures::random_vector(40, rng), Degeneracy(0.7), g);
    EXPECT_GE(n.h1a, n.l2);
  }
}

TEST(Mask, StrictlyInsideInterval) {
  const auto g = SpaceGrid::build(9);  // nodes 0.1 ... 0.9
  const Mask m = Mask::from_interval(g, 0.2, 0.5, "m");
  EXPECT_EQ(m.count(), 2u);  // 0.3, 0.4; the endpoints are excluded
  EXPECT_TRUE(m.contains(2));
  EXPECT_FALSE(m.contains(1));
  EXPECT_FALSE(m.contains(4));
  const Mask other = Mask::from_interval(g, 0.5, 0.8);
  EXPECT_TRUE(m.disjoint(other));
  EXPECT_TRUE(m.intersects(Mask::from_interval(g, 0.35, 0.6)));
}

TEST(RestrictToMask, FullEmptyAndContraction) {
  std::mt19937_64 rng(3);
  const Discretization disc(SpaceGrid::build(30), TimeGrid(1.0, 10), Degeneracy(0.5));
  const SpaceTimeField u = fixtures::random_field(disc, rng);
  EXPECT_EQ(restrict_to_mask(u, Mask::full(disc.space)).values(), u.values());
  EXPECT_EQ(restrict_to_mask(u, Mask::empty(disc.space)).max_abs(), 0.0);
  const Mask m = Mask::from_interval(disc.space, 0.2, 0.6);
  const SpaceTimeField r = restrict_to_mask(u, m);
  EXPECT_LE(norm(r, disc), norm(u, disc));
  for (std::size_t k = 0; k < u.slots(); ++k)
    for (std::size_t j = 0; j < u.nodes(); ++j) EXPECT_EQ(r(k, j), m.contains(j) ? u(k, j) : 0.0);
}

TEST(SpaceTimeField, ArithmeticAndShape) {
  const Discretization disc(SpaceGrid::build(5), TimeGrid(1.0, 4), Degeneracy(0.0));
  SpaceTimeField a = disc.field("a");
  a.values().setConstant(2.0);
  SpaceTimeField b = 3.0 * a;
  EXPECT_TRUE(a.same_shape(b));
  EXPECT_DOUBLE_EQ((b - a).max_abs(), 4.0);
  EXPECT_TRUE(b.all_finite());
  b(1, 1) = std::nan("");
  EXPECT_FALSE(b.all_finite());
  EXPECT_NEAR(inner(a, a, disc), 4.0 * disc.space.weights().sum(), 1e-14);
}
