#include "hierctl/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

namespace hierctl::kernels {

namespace {

// int_0^1 F'(s w) ds. Adaptive so that large |w| (several widths of F') stays accurate.
double mean_value(const Nonlinearity& f, double w) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 15>::integrate([&](double s) { return f.derivative(s * w); }, 0.0,
                                              1.0, 12, 1e-14);
}

}  // namespace

SpaceTimeField mean_value_potential(const Nonlinearity& f, const SpaceTimeField& w, Exec exec) {
  SpaceTimeField out(w.slots(), w.nodes(), "mean_value_potential");
  for_each_index(
      w.slots(),
      [&](std::size_t k) {
        for (std::size_t j = 0; j < w.nodes(); ++j) out(k, j) = mean_value(f, w(k, j));
      },
      exec);
  return out;
}

SpaceTimeField pointwise_derivative(const Nonlinearity& f, const SpaceTimeField& w, Exec exec) {
  SpaceTimeField out(w.slots(), w.nodes(), "derivative");
  for_each_index(
      w.slots(),
      [&](std::size_t k) {
        for (std::size_t j = 0; j < w.nodes(); ++j) out(k, j) = f.derivative(w(k, j));
      },
      exec);
  return out;
}

double weighted_quadrature(const SpaceTimeField& integrand, const SpaceTimeField& phi, double s,
                           const Vector& space_weights, double dt, Exec exec) {
  const double total = ordered_sum(
      integrand.slots(),
      [&](std::size_t k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < integrand.nodes(); ++j)
          acc += space_weights[static_cast<Eigen::Index>(j)] * integrand(k, j) *
                 std::exp(2.0 * s * phi(k, j));
        return acc;
      },
      exec);
  return dt * total;
}

double weighted_quadrature_reference(const SpaceTimeField& integrand, const SpaceTimeField& phi,
                                     double s, const Vector& space_weights, double dt) {
  double acc = 0.0;
  for (std::size_t k = 0; k < integrand.slots(); ++k)
    for (std::size_t j = 0; j < integrand.nodes(); ++j)
      acc += dt * space_weights[static_cast<Eigen::Index>(j)] * integrand(k, j) *
             std::exp(2.0 * s * phi(k, j));
  return acc;
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace hierctl::kernels
