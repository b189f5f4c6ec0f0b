#include "hierctl/carleman.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hierctl/error.hpp"

namespace hierctl {

double SigmaProfile::value_at(double x) const {
  return amplitude * x * (1.0 - x) * std::exp(tilt * (center - x));
}

double SigmaProfile::derivative_at(double x) const {
  return amplitude * std::exp(tilt * (center - x)) * ((1.0 - 2.0 * x) - tilt * x * (1.0 - x));
}

SigmaProfile build_sigma(const SpaceGrid& grid, const Interval& o0, double sup_norm) {
  if (!(o0.lo > 0.0 && o0.hi < 1.0 && o0.lo < o0.hi))
    throw ParameterError("sigma: plateau set must be a non-empty interval strictly inside (0,1)");
  SigmaProfile p;
  p.plateau = o0;
  p.center = o0.contains(0.5) ? 0.5 : o0.center();
  p.tilt = (1.0 - 2.0 * p.center) / (p.center * (1.0 - p.center));
  p.sup = p.value_at(p.center);
  if (sup_norm < 0.0) throw ParameterError("sigma: requested sup norm must be positive");
  if (sup_norm > 0.0) {
    p.amplitude = sup_norm / p.sup;
    p.sup = p.value_at(p.center);
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  p.values.resize(n);
  p.derivative.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = grid.node(static_cast<std::size_t>(j));
    p.values[j] = p.value_at(x);
    p.derivative[j] = p.derivative_at(x);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool flat = p.derivative[j] == 0.0;
    const bool flips = j + 1 < n && (p.derivative[j] > 0.0) != (p.derivative[j + 1] > 0.0);
    if (flat || flips) p.critical_nodes.push_back(static_cast<std::size_t>(j));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double x = grid.node(static_cast<std::size_t>(j));
    if (o0.contains(x)) continue;
    const double expected_sign = x <= o0.lo ? 1.0 : -1.0;
    if (!(p.derivative[j] * expected_sign > 0.0) || !(p.values[j] > 0.0)) {
      std::ostringstream os;
      os << "sigma: derivative " << p.derivative[j] << " at x=" << x
         << " outside the plateau set (" << o0.lo << ", " << o0.hi << ")";
      throw ParameterError(os.str());
    }
  }
  for (std::size_t j : p.critical_nodes) {
    const double xl = grid.node(j);
    const double xr = j + 1 < grid.size() ? grid.node(j + 1) : xl;
    if (!(o0.contains(xl) || o0.contains(xr)))
      throw ParameterError("sigma: critical point near x=" + std::to_string(xl) +
                           " is not confined to the plateau set");
  }
  return p;
}

CarlemanParams choose_parameters(double alpha, double sigma_sup, double s) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("alpha: must lie in [0,1)");
  if (!(sigma_sup > 0.0)) throw ParameterError("sigma: sup norm must be positive");
  if (!(s > 0.0)) throw ParameterError("s: must be positive");
  CarlemanParams p;
  p.alpha = alpha;
  p.sigma_sup = sigma_sup;
  p.s = s;
  const double a1 = 1.0;
  const double two_tau = 2.0 - alpha;
  p.r = 4.0 * std::log(2.0) / sigma_sup;
  p.dbar = 5.0 / (a1 * two_tau);
  while (!(p.dbar * a1 * two_tau > 1.0)) p.dbar *= 2.0;
  const double e1 = std::exp(p.r * sigma_sup);
  const double e2 = std::exp(2.0 * p.r * sigma_sup);
  p.lambda_range.lo = a1 * two_tau * (e2 - 1.0) / (p.dbar * a1 * two_tau - 1.0);
  p.lambda_range.hi = 4.0 * (e2 - e1) / (3.0 * p.dbar);
  if (!(p.lambda_range.lo <= p.lambda_range.hi)) {
    std::ostringstream os;
    os << "lambda: admissible interval [" << p.lambda_range.lo << ", " << p.lambda_range.hi
       << "] is empty";
    throw ParameterError(os.str());
  }
  p.lambda = p.lambda_range.center();
  return p;
}

CarlemanParams choose_parameters(const Degeneracy& a, const SigmaProfile& sigma, double s) {
  return choose_parameters(a.alpha(), sigma.sup, s);
}

double carleman_delta(const CarlemanParams& p, double x) {
  const double e = 2.0 - p.alpha;
  return p.lambda * (std::pow(x, e) / e - p.dbar);
}

double carleman_theta(double t, double horizon) {
  const double q = t * (horizon - t);
  return 1.0 / (q * q * q * q);
}

double calibrate_s(const CarlemanParams& p, const TimeGrid& time, const SpaceGrid& space,
                   double range) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < time.steps(); ++k) {
    const double th = carleman_theta(time.midpoint(k), time.horizon());
    for (double x : space.nodes()) {
      const double v = th * carleman_delta(p, x);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double spread = hi - lo;
  const double budget = std::log(range);
  if (!(spread > 0.0)) return 1.0;
  int k = 0;
  auto ok = [&](int e) { return 2.0 * std::ldexp(1.0, e) * spread <= budget; };
  if (ok(k)) {
    while (ok(k + 1) && k < 60) ++k;
  } else {
    while (!ok(k) && k > -200) --k;
  }
  return std::ldexp(1.0, k);
}

namespace {

struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  std::size_t k = 0, j = 0;
  void update(double m, std::size_t kk, std::size_t jj) {
    if (m < margin) {
      margin = m;
      k = kk;
      j = jj;
    }
  }
};

void require(const Worst& w, const char* what, const Discretization& d) {
  if (w.margin < 0.0) {
    std::ostringstream os;
    os << "weights: inequality " << what << " fails at t=" << d.time.midpoint(w.k)
       << ", x=" << d.space.node(w.j) << " (margin " << w.margin << ")";
    throw ParameterError(os.str());
  }
}

}  // namespace

WeightBundle build_weights(const CarlemanParams& p, const Discretization& disc,
                           const SigmaProfile& sigma) {
  const std::size_t m = disc.slots();
  const std::size_t n = disc.nodes();
  const double T = disc.time.horizon();
  if (static_cast<std::size_t>(sigma.values.size()) != n)
    throw DomainError("weights: sigma sampled on a different grid");
  WeightBundle w;
  w.params = p;
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  w.theta.resize(mi);
  w.theta_tilde.resize(mi);
  const double theta_half = carleman_theta(0.5 * T, T);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = disc.time.midpoint(k);
    if (!(t > 0.0 && t < T)) throw ParameterError("weights: evaluation time outside (0,T)");
    w.theta[k] = carleman_theta(t, T);
    w.theta_tilde[k] = t <= 0.5 * T ? theta_half : w.theta[k];
  }
  const double big = std::exp(2.0 * p.r * p.sigma_sup);
  w.delta.resize(ni);
  w.exp_r_sigma.resize(ni);
  w.psi.resize(ni);
  for (std::size_t j = 0; j < n; ++j) {
    w.delta[j] = carleman_delta(p, disc.space.node(j));
    w.exp_r_sigma[j] = std::exp(p.r * sigma.values[j]);
    w.psi[j] = w.exp_r_sigma[j] - big;
  }
  w.phi = SpaceTimeField(m, n, "phi");
  w.eta = SpaceTimeField(m, n, "eta");
  w.Phi = SpaceTimeField(m, n, "Phi");
  w.phi_tilde = SpaceTimeField(m, n, "phi_tilde");
  kernels::for_each_index(m, [&](std::size_t k) {
    for (std::size_t j = 0; j < n; ++j) {
      w.phi(k, j) = w.theta[k] * w.delta[j];
      w.eta(k, j) = w.theta[k] * w.exp_r_sigma[j];
      w.Phi(k, j) = w.theta[k] * w.psi[j];
      w.phi_tilde(k, j) = w.theta_tilde[k] * w.delta[j];
    }
  });
  // delta is increasing, so its infimum over the domain is delta(0) = -lambda dbar.
  const double delta0 = carleman_delta(p, 0.0);
  w.phi_star.resize(mi);
  w.phi_hat.resize(mi);
  w.rho_star.resize(mi);
  w.kappa.resize(mi);
  w.follower_weight.resize(mi);
  for (std::size_t k = 0; k < m; ++k) {
    w.phi_star[k] = w.theta[k] * delta0;
    w.phi_hat[k] = w.theta_tilde[k] * delta0;
    w.rho_star[k] = std::exp(-0.5 * p.s * w.phi_star[k]);
    w.follower_weight[k] = std::exp(p.s * w.phi_star[k]);
    w.kappa[k] = std::exp(p.s * w.phi_hat[k]);
  }

  Worst neg_delta, neg_phi, neg_Phi, lower, upper, twice, four_three, weight_bound;
  for (std::size_t j = 0; j < n; ++j) neg_delta.update(-w.delta[j], 0, j);
  const double rel = 1e-12;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ph = w.phi(k, j);
      const double Ph = w.Phi(k, j);
      const double slack = rel * std::abs(Ph);
      neg_phi.update(-ph, k, j);
      neg_Phi.update(-Ph, k, j);
      lower.update(ph - 4.0 / 3.0 * Ph + slack, k, j);
      upper.update(Ph - ph + slack, k, j);
      twice.update(ph - 2.0 * Ph + slack, k, j);
      four_three.update(3.0 * ph - 4.0 * Ph + slack, k, j);
      const double e = std::exp(p.s * ph);
      weight_bound.update(std::min(e - w.follower_weight[k], 1.0 - e), k, j);
    }
  }
  require(neg_delta, "delta < 0", disc);
  require(neg_phi, "phi < 0", disc);
  require(neg_Phi, "Phi < 0", disc);
  require(lower, "(4/3) Phi <= phi", disc);
  require(upper, "phi <= Phi", disc);
  require(twice, "2 Phi <= phi", disc);
  require(four_three, "4 Phi - 3 phi <= 0", disc);
  require(weight_bound, "rho_star^-2 <= e^{s phi} <= 1", disc);
  for (std::size_t k = 0; k < m; ++k) {
    if (!(w.kappa[k] > 0.0 && w.kappa[k] < 1.0)) {
      std::ostringstream os;
      os << "weights: kappa(t=" << disc.time.midpoint(k) << ") = " << w.kappa[k]
         << " is outside (0,1); s=" << p.s << " is too large for this time grid";
      throw ParameterError(os.str());
    }
    if (!std::isfinite(w.rho_star[k])) throw ParameterError("weights: rho_star overflows");
  }
  return w;
}

namespace {

struct Derivatives {
  SpaceTimeField zt, lz, zx;
};

Derivatives differentiate(const SpaceTimeField& z, const Discretization& disc) {
  const std::size_t m = z.slots();
  const std::size_t n = z.nodes();
  if (m != disc.slots() || n != disc.nodes()) throw DomainError("functional: field/grid mismatch");
  Derivatives d{SpaceTimeField(m, n), SpaceTimeField(m, n), SpaceTimeField(m, n)};
  const double dt = disc.time.dt();
  for (std::size_t k = 0; k < m; ++k) {
    if (m > 1) {
      const std::size_t lo = k == 0 ? 0 : k - 1;
      const std::size_t hi = k + 1 == m ? k : k + 1;
      d.zt.slot(k) = (z.slot(hi) - z.slot(lo)) / (dt * static_cast<double>(hi - lo));
    }
    const Vector zk = z.slot(k).transpose();
    d.lz.slot(k) = disc.L.apply(zk).transpose();
    d.zx.slot(k) = gradient(zk, disc.space).transpose();
  }
  return d;
}

void check_finite(double v, const char* term) {
  if (!std::isfinite(v)) throw NumericError(std::string("functional: non-finite term ") + term);
}

}  // namespace

FunctionalTerms functional_I(const SpaceTimeField& z, const WeightBundle& w,
                             const Discretization& disc, kernels::Exec exec) {
  const auto d = differentiate(z, disc);
  const double s = w.params.s;
  const std::size_t m = z.slots();
  const std::size_t n = z.nodes();
  SpaceTimeField t1(m, n), t2(m, n), t3(m, n);
  for (std::size_t k = 0; k < m; ++k) {
    const double th = w.theta[k];
    for (std::size_t j = 0; j < n; ++j) {
      const double x = disc.space.node(j);
      const double ax = disc.a(x);
      t1(k, j) = (d.zt(k, j) * d.zt(k, j) + d.lz(k, j) * d.lz(k, j)) / (s * th);
      t2(k, j) = s * s * s * th * th * th * (x * x / ax) * z(k, j) * z(k, j);
      t3(k, j) = s * th * ax * d.zx(k, j) * d.zx(k, j);
    }
  }
  const auto& sw = disc.space.weights();
  const double dt = disc.time.dt();
  FunctionalTerms out;
  out.time_and_operator = kernels::weighted_quadrature(t1, w.phi, s, sw, dt, exec);
  out.zeroth_order = kernels::weighted_quadrature(t2, w.phi, s, sw, dt, exec);
  out.gradient = kernels::weighted_quadrature(t3, w.phi, s, sw, dt, exec);
  check_finite(out.time_and_operator, "(1/(s Theta))(|z_t|^2 + |(a z_x)_x|^2)");
  check_finite(out.zeroth_order, "s^3 Theta^3 (x^2/a) z^2");
  check_finite(out.gradient, "s Theta a z_x^2");
  return out;
}

FunctionalTerms functional_K(const SpaceTimeField& z, const WeightBundle& w,
                             const Discretization& disc, const Interval& band,
                             kernels::Exec exec) {
  if (!(band.lo > 0.0)) throw DomainError("functional_K: band must avoid x=0 (b1 > 0)");
  const auto d = differentiate(z, disc);
  const double s = w.params.s;
  const std::size_t m = z.slots();
  const std::size_t n = z.nodes();
  const Mask mask = Mask::from_interval(disc.space, band.lo, band.hi);
  SpaceTimeField t1(m, n), t2(m, n), t3(m, n);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask.contains(j)) continue;
      const double e = w.eta(k, j);
      t1(k, j) = (d.zt(k, j) * d.zt(k, j) + d.lz(k, j) * d.lz(k, j)) / (s * e);
      t2(k, j) = s * s * s * e * e * e * z(k, j) * z(k, j);
      t3(k, j) = s * e * d.zx(k, j) * d.zx(k, j);
    }
  }
  const auto& sw = disc.space.weights();
  const double dt = disc.time.dt();
  FunctionalTerms out;
  out.time_and_operator = kernels::weighted_quadrature(t1, w.Phi, s, sw, dt, exec);
  out.zeroth_order = kernels::weighted_quadrature(t2, w.Phi, s, sw, dt, exec);
  out.gradient = kernels::weighted_quadrature(t3, w.Phi, s, sw, dt, exec);
  check_finite(out.time_and_operator, "(1/(s eta))(|z_t|^2 + |(a z_x)_x|^2)");
  check_finite(out.zeroth_order, "s^3 eta^3 z^2");
  check_finite(out.gradient, "s eta z_x^2");
  return out;
}

}  // namespace hierctl
