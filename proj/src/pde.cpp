#include "hierctl/pde.hpp"

#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>

#include "hierctl/error.hpp"

namespace hierctl {

namespace {

using RowRef = Eigen::Ref<const Vector>;

Vector row(const SpaceTimeField& f, std::size_t k) { return f.slot(k).transpose(); }

void check_shape(const SpaceTimeField& f, const Discretization& disc, const char* what) {
  if (f.slots() != disc.slots() || f.nodes() != disc.nodes())
    throw DomainError(std::string(what) + ": field shape does not match the grids");
}

void check_pot(const Potentials& pot, const Discretization& disc) {
  check_shape(pot.q1, disc, "potential q1");
  check_shape(pot.q2, disc, "potential q2");
  check_shape(pot.d, disc, "coupling d");
}

void check_finite(const FieldPair& f, const char* what) {
  if (!f[0].all_finite() || !f[1].all_finite())
    throw NumericError(std::string(what) + ": non-finite values in solution");
}

}  // namespace

LinearizedCoefficients LinearizedCoefficients::constant(const Discretization& disc, double b,
                                                        double c, double d) {
  LinearizedCoefficients out;
  auto make = [&](double v, const char* name) {
    SpaceTimeField f(disc.slots(), disc.nodes(), name);
    f.values().setConstant(v);
    return f;
  };
  out.b1 = make(b, "b1");
  out.b2 = make(b, "b2");
  out.c1 = make(c, "c1");
  out.c2 = make(c, "c2");
  out.d = make(d, "d");
  return out;
}

bool LinearizedCoefficients::all_finite() const {
  return b1.all_finite() && b2.all_finite() && c1.all_finite() && c2.all_finite() &&
         d.all_finite();
}

double LinearizedCoefficients::sup_norm() const {
  return std::max({b1.max_abs(), b2.max_abs(), c1.max_abs(), c2.max_abs(), d.max_abs()});
}

VectorPair StateTrajectory::terminal() const {
  const std::size_t m = slots[0].slots();
  return {row(slots[0], m - 1), row(slots[1], m - 1)};
}

VectorPair AdjointTrajectory::initial() const { return {row(slots[0], 0), row(slots[1], 0)}; }

StateTrajectory solve_forward(const Discretization& disc, const VectorPair& y0,
                              const FieldPair& sources, const Potentials& pot,
                              TimeScheme scheme) {
  check_pot(pot, disc);
  check_shape(sources[0], disc, "forward source");
  check_shape(sources[1], disc, "forward source");
  const std::size_t m = disc.slots();
  const double dt = disc.time.dt();
  StateTrajectory out{y0, disc.pair()};
  Vector y1 = y0[0], y2 = y0[1];
  for (std::size_t k = 0; k < m; ++k) {
    const Vector q1 = row(pot.q1, k), q2 = row(pot.q2, k), d = row(pot.d, k);
    if (scheme == TimeScheme::implicit_euler) {
      const Vector n1 = disc.L.shifted(dt, q1).solve(y1 + dt * row(sources[0], k));
      const Vector n2 =
          disc.L.shifted(dt, q2).solve(y2 + dt * row(sources[1], k) - dt * d.cwiseProduct(n1));
      y1 = n1;
      y2 = n2;
    } else {
      const double h = 0.5 * dt;
      const Vector e1 = y1 - h * (disc.L.apply(y1) + q1.cwiseProduct(y1));
      const Vector n1 = disc.L.shifted(h, q1).solve(e1 + dt * row(sources[0], k));
      const Vector e2 = y2 - h * (disc.L.apply(y2) + q2.cwiseProduct(y2));
      const Vector n2 = disc.L.shifted(h, q2).solve(e2 + dt * row(sources[1], k) -
                                                    h * d.cwiseProduct(n1 + y1));
      y1 = n1;
      y2 = n2;
    }
    out.slots[0].slot(k) = y1.transpose();
    out.slots[1].slot(k) = y2.transpose();
  }
  check_finite(out.slots, "solve_forward");
  return out;
}

namespace {

Vector newton_step(const Discretization& disc, const Nonlinearity& f, const Vector& rhs,
                   const Vector& start) {
  const double dt = disc.time.dt();
  Vector u = start;
  for (int it = 0; it < 60; ++it) {
    Vector fu(u.size()), dfu(u.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      fu[j] = f.value(u[j]);
      dfu[j] = f.derivative(u[j]);
    }
    const Vector g = u + dt * (disc.L.apply(u) + fu) - rhs;
    const Vector du = disc.L.shifted(dt, dfu).solve(g);
    u -= du;
    if (du.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + u.lpNorm<Eigen::Infinity>())) return u;
  }
  throw IterationError("solve_forward: Newton step did not converge", {});
}

}  // namespace

StateTrajectory solve_forward(const Discretization& disc, const VectorPair& y0,
                              const FieldPair& sources, const NonlinearDynamics& dyn,
                              NonlinearTreatment treatment) {
  check_shape(dyn.d, disc, "coupling d");
  check_shape(sources[0], disc, "forward source");
  check_shape(sources[1], disc, "forward source");
  const std::size_t m = disc.slots();
  const double dt = disc.time.dt();
  StateTrajectory out{y0, disc.pair()};
  Vector y1 = y0[0], y2 = y0[1];
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(disc.nodes()));
  const Tridiagonal plain = disc.L.shifted(dt, zero);
  auto apply_f = [](const Nonlinearity& f, const Vector& u) {
    return u.unaryExpr([&](double r) { return f.value(r); }).eval();
  };
  for (std::size_t k = 0; k < m; ++k) {
    const Vector d = row(dyn.d, k);
    if (treatment == NonlinearTreatment::semi_implicit) {
      const Vector n1 = plain.solve(y1 + dt * (row(sources[0], k) - apply_f(dyn.f1, y1)));
      const Vector n2 = plain.solve(
          y2 + dt * (row(sources[1], k) - apply_f(dyn.f2, y2) - d.cwiseProduct(n1)));
      y1 = n1;
      y2 = n2;
    } else {
      const Vector n1 = newton_step(disc, dyn.f1, y1 + dt * row(sources[0], k), y1);
      const Vector n2 =
          newton_step(disc, dyn.f2, y2 + dt * (row(sources[1], k) - d.cwiseProduct(n1)), y2);
      y1 = n1;
      y2 = n2;
    }
    out.slots[0].slot(k) = y1.transpose();
    out.slots[1].slot(k) = y2.transpose();
  }
  check_finite(out.slots, "solve_forward");
  return out;
}

AdjointTrajectory solve_backward(const Discretization& disc, const VectorPair& terminal,
                                 const FieldPair& sources, const Potentials& pot,
                                 TimeScheme scheme) {
  check_pot(pot, disc);
  check_shape(sources[0], disc, "backward source");
  check_shape(sources[1], disc, "backward source");
  const std::size_t m = disc.slots();
  const double dt = disc.time.dt();
  AdjointTrajectory out{terminal, disc.pair()};
  Vector p1 = terminal[0], p2 = terminal[1];
  for (std::size_t kk = m; kk-- > 0;) {
    const Vector q1 = row(pot.q1, kk), q2 = row(pot.q2, kk), d = row(pot.d, kk);
    if (scheme == TimeScheme::implicit_euler) {
      const Vector n2 = disc.L.shifted(dt, q2).solve(p2 + dt * row(sources[1], kk));
      const Vector n1 =
          disc.L.shifted(dt, q1).solve(p1 + dt * row(sources[0], kk) - dt * d.cwiseProduct(n2));
      p1 = n1;
      p2 = n2;
    } else {
      const double h = 0.5 * dt;
      const Vector e2 = p2 - h * (disc.L.apply(p2) + q2.cwiseProduct(p2));
      const Vector n2 = disc.L.shifted(h, q2).solve(e2 + dt * row(sources[1], kk));
      const Vector e1 = p1 - h * (disc.L.apply(p1) + q1.cwiseProduct(p1));
      const Vector n1 = disc.L.shifted(h, q1).solve(e1 + dt * row(sources[0], kk) -
                                                    h * d.cwiseProduct(n2 + p2));
      p1 = n1;
      p2 = n2;
    }
    out.slots[0].slot(kk) = p1.transpose();
    out.slots[1].slot(kk) = p2.transpose();
  }
  check_finite(out.slots, "solve_backward");
  return out;
}

double DualityPairing::relative_gap() const {
  const double scale = std::max({std::abs(forward_side), std::abs(backward_side), 1e-300});
  return std::abs(forward_side - backward_side) / scale;
}

DualityPairing duality_pairing(const Discretization& disc, const VectorPair& y0,
                               const FieldPair& forward_sources, const VectorPair& terminal,
                               const FieldPair& backward_sources, const Potentials& pot) {
  const auto y = solve_forward(disc, y0, forward_sources, pot);
  const auto p = solve_backward(disc, terminal, backward_sources, pot);
  const auto yT = y.terminal();
  const auto p0 = p.initial();
  DualityPairing out;
  out.forward_side = inner(yT[0], terminal[0], disc.space) + inner(yT[1], terminal[1], disc.space) +
                     inner(y.slots, backward_sources, disc);
  out.backward_side = inner(y0[0], p0[0], disc.space) + inner(y0[1], p0[1], disc.space) +
                      inner(forward_sources, p.slots, disc);
  return out;
}

FieldPair control_sources(const Problem& pb, const SpaceTimeField& h, const SpaceTimeField& v1,
                          const SpaceTimeField& v2) {
  FieldPair src = pb.disc.pair();
  src[0] = restrict_to_mask(h, pb.masks.leader) + restrict_to_mask(v1, pb.masks.follower1) +
           restrict_to_mask(v2, pb.masks.follower2);
  return src;
}

OptimalityData OptimalityData::of(const Problem& pb, const SpaceTimeField& h) {
  return {h, pb.y0, pb.cost.targets};
}

OptimalityData OptimalityData::homogeneous(const Problem& pb, const SpaceTimeField& h) {
  return {h, zero_vectors(pb.disc.nodes()), {pb.disc.pair(), pb.disc.pair()}};
}

SpaceTimeField follower_control(const Problem& pb, int i, const AdjointTrajectory& p) {
  SpaceTimeField v = restrict_to_mask(p.slots[0], pb.masks.follower(i));
  const double mu = pb.cost.mu[static_cast<std::size_t>(i)];
  for (std::size_t k = 0; k < v.slots(); ++k) v.slot(k) *= -pb.cost.follower_weight[k] / mu;
  v.rename(i == 0 ? "v1" : "v2");
  return v;
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr int kFields = 6;

// Row-by-row assembly of a 6-field space-time system ordered (slot, node, field).
class Assembler {
 public:
  Assembler(const Discretization& disc) : disc_(disc), n_(disc.nodes()), m_(disc.slots()) {
    trip_.reserve(size() * 7);
  }
  std::size_t size() const { return n_ * m_ * kFields; }
  int index(std::size_t k, std::size_t j, int f) const {
    return static_cast<int>((k * n_ + j) * kFields + static_cast<std::size_t>(f));
  }
  void add(int row, int col, double v) {
    if (v != 0.0) trip_.emplace_back(row, col, v);
  }
  // (1 + dt (L_jj + q)) on the diagonal and dt L on the spatial neighbours.
  void diffusion(std::size_t k, std::size_t j, int f, double q) {
    const double dt = disc_.time.dt();
    const auto jj = static_cast<Eigen::Index>(j);
    const int r = index(k, j, f);
    add(r, r, 1.0 + dt * (disc_.L.diag[jj] + q));
    if (j > 0) add(r, index(k, j - 1, f), dt * disc_.L.lower[jj]);
    if (j + 1 < n_) add(r, index(k, j + 1, f), dt * disc_.L.upper[jj]);
  }
  SparseMatrix build() const {
    SparseMatrix a(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    a.setFromTriplets(trip_.begin(), trip_.end());
    a.makeCompressed();
    return a;
  }

 private:
  const Discretization& disc_;
  std::size_t n_, m_;
  std::vector<Triplet> trip_;
};

// Fields: 0 y1, 1 y2, 2 p1^1, 3 p2^1, 4 p1^2, 5 p2^2.
SparseMatrix assemble_optimality(const Problem& pb, const LinearizedCoefficients& c) {
  const auto& disc = pb.disc;
  const std::size_t n = disc.nodes(), m = disc.slots();
  const double dt = disc.time.dt();
  Assembler as(disc);
  const auto& obs = pb.masks.observation;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dkj = c.d(k, j);
      for (int comp = 0; comp < 2; ++comp) {
        const int r = as.index(k, j, comp);
        as.diffusion(k, j, comp, comp == 0 ? c.b1(k, j) : c.b2(k, j));
        if (k > 0) as.add(r, as.index(k - 1, j, comp), -1.0);
        if (comp == 1) as.add(r, as.index(k, j, 0), dt * dkj);
        if (comp == 0) {
          for (int i = 0; i < 2; ++i) {
            if (!pb.masks.follower(i).contains(j)) continue;
            as.add(r, as.index(k, j, 2 + 2 * i),
                   dt * pb.cost.follower_weight[k] / pb.cost.mu[static_cast<std::size_t>(i)]);
          }
        }
      }
      for (int i = 0; i < 2; ++i) {
        const double ai = pb.cost.alpha[static_cast<std::size_t>(i)];
        for (int comp = 0; comp < 2; ++comp) {
          const int f = 2 + 2 * i + comp;
          const int r = as.index(k, j, f);
          as.diffusion(k, j, f, comp == 0 ? c.c1(k, j) : c.c2(k, j));
          if (k + 1 < m) as.add(r, as.index(k + 1, j, f), -1.0);
          if (comp == 0) as.add(r, as.index(k, j, f + 1), dt * dkj);
          if (obs.contains(j)) as.add(r, as.index(k, j, comp), -dt * ai);
        }
      }
    }
  }
  return as.build();
}

// Fields: 0 rho1, 1 rho2, 2 psi1^1, 3 psi2^1, 4 psi1^2, 5 psi2^2.
SparseMatrix assemble_adjoint(const Problem& pb, const LinearizedCoefficients& c) {
  const auto& disc = pb.disc;
  const std::size_t n = disc.nodes(), m = disc.slots();
  const double dt = disc.time.dt();
  Assembler as(disc);
  const auto& obs = pb.masks.observation;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dkj = c.d(k, j);
      for (int comp = 0; comp < 2; ++comp) {
        const int r = as.index(k, j, comp);
        as.diffusion(k, j, comp, comp == 0 ? c.b1(k, j) : c.b2(k, j));
        if (k + 1 < m) as.add(r, as.index(k + 1, j, comp), -1.0);
        if (comp == 0) as.add(r, as.index(k, j, 1), dt * dkj);
        if (obs.contains(j)) {
          for (int i = 0; i < 2; ++i)
            as.add(r, as.index(k, j, 2 + 2 * i + comp),
                   -dt * pb.cost.alpha[static_cast<std::size_t>(i)]);
        }
      }
      for (int i = 0; i < 2; ++i) {
        for (int comp = 0; comp < 2; ++comp) {
          const int f = 2 + 2 * i + comp;
          const int r = as.index(k, j, f);
          as.diffusion(k, j, f, comp == 0 ? c.c1(k, j) : c.c2(k, j));
          if (k > 0) as.add(r, as.index(k - 1, j, f), -1.0);
          if (comp == 1) as.add(r, as.index(k, j, f - 1), dt * dkj);
          if (comp == 0 && pb.masks.follower(i).contains(j))
            as.add(r, as.index(k, j, 0),
                   dt * pb.cost.follower_weight[k] / pb.cost.mu[static_cast<std::size_t>(i)]);
        }
      }
    }
  }
  return as.build();
}

FieldPair extract(const Eigen::VectorXd& x, const Discretization& disc, int f0) {
  FieldPair out = disc.pair();
  const std::size_t n = disc.nodes(), m = disc.slots();
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < n; ++j)
      for (int c = 0; c < 2; ++c)
        out[static_cast<std::size_t>(c)](k, j) =
            x[static_cast<Eigen::Index>((k * n + j) * kFields + static_cast<std::size_t>(f0 + c))];
  return out;
}

void check_coefficients(const Problem& pb, const LinearizedCoefficients& c) {
  for (const auto* f : {&c.b1, &c.b2, &c.c1, &c.c2, &c.d}) check_shape(*f, pb.disc, "coefficient");
  if (!c.all_finite()) throw NumericError("coefficients: non-finite entries");
  if (static_cast<std::size_t>(pb.cost.follower_weight.size()) != pb.disc.slots())
    throw DomainError("cost: follower weight must have one entry per slot");
}

}  // namespace

struct CoupledSolver::Factors {
  SparseMatrix opt_matrix, adj_matrix;
  std::unique_ptr<Eigen::UmfPackLU<SparseMatrix>> opt, adj;
};

CoupledSolver::CoupledSolver(const Problem& pb, const LinearizedCoefficients& coeffs,
                             CoupledMethod method, PicardOptions picard)
    : pb_(pb), coeffs_(coeffs), method_(method), picard_(picard),
      factors_(std::make_unique<Factors>()) {
  check_coefficients(pb, coeffs);
  if (!(picard.damping > 0.0 && picard.damping <= 1.0))
    throw ConfigError("picard_damping: must lie in (0,1]");
}

CoupledSolver::~CoupledSolver() = default;
CoupledSolver::CoupledSolver(CoupledSolver&&) noexcept = default;

OptimalitySolution CoupledSolver::optimality(const OptimalityData& data) const {
  if (method_ == CoupledMethod::monolithic) return optimality_monolithic(data);
  return optimality_picard(data, {pb_.disc.pair(), pb_.disc.pair()});
}

CoupledAdjointSolution CoupledSolver::adjoint(const VectorPair& rho_terminal) const {
  if (method_ == CoupledMethod::monolithic) return adjoint_monolithic(rho_terminal);
  return adjoint_picard(rho_terminal);
}

OptimalitySolution CoupledSolver::optimality_monolithic(const OptimalityData& data) const {
  const auto& disc = pb_.disc;
  check_shape(data.h, disc, "leader control");
  if (!factors_->opt) {
    factors_->opt_matrix = assemble_optimality(pb_, coeffs_);
    factors_->opt = std::make_unique<Eigen::UmfPackLU<SparseMatrix>>();
    factors_->opt->compute(factors_->opt_matrix);
    if (factors_->opt->info() != Eigen::Success)
      throw SolverError("monolithic optimality system: factorization failed");
  }
  const std::size_t n = disc.nodes(), m = disc.slots();
  const double dt = disc.time.dt();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n * m * kFields));
  const auto& obs = pb_.masks.observation;
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto base = static_cast<Eigen::Index>((k * n + j) * kFields);
      const auto jj = static_cast<Eigen::Index>(j);
      if (pb_.masks.leader.contains(j)) rhs[base] += dt * data.h(k, j);
      if (k == 0) {
        rhs[base] += data.y0[0][jj];
        rhs[base + 1] += data.y0[1][jj];
      }
      if (obs.contains(j)) {
        for (int i = 0; i < 2; ++i)
          for (int c = 0; c < 2; ++c)
            rhs[base + 2 + 2 * i + c] -= dt * pb_.cost.alpha[static_cast<std::size_t>(i)] *
                                         data.targets[static_cast<std::size_t>(i)]
                                                     [static_cast<std::size_t>(c)](k, j);
      }
    }
  }
  const Eigen::VectorXd x = factors_->opt->solve(rhs);
  if (factors_->opt->info() != Eigen::Success || !x.allFinite())
    throw SolverError("monolithic optimality system: solve failed");
  OptimalitySolution out;
  out.y = {data.y0, extract(x, disc, 0)};
  const VectorPair zero = zero_vectors(n);
  out.p[0] = {zero, extract(x, disc, 2)};
  out.p[1] = {zero, extract(x, disc, 4)};
  return out;
}

CoupledAdjointSolution CoupledSolver::adjoint_monolithic(const VectorPair& rho_terminal) const {
  const auto& disc = pb_.disc;
  if (!factors_->adj) {
    factors_->adj_matrix = assemble_adjoint(pb_, coeffs_);
    factors_->adj = std::make_unique<Eigen::UmfPackLU<SparseMatrix>>();
    factors_->adj->compute(factors_->adj_matrix);
    if (factors_->adj->info() != Eigen::Success)
      throw SolverError("monolithic adjoint system: factorization failed");
  }
  const std::size_t n = disc.nodes(), m = disc.slots();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n * m * kFields));
  for (std::size_t j = 0; j < n; ++j) {
    const auto base = static_cast<Eigen::Index>(((m - 1) * n + j) * kFields);
    rhs[base] = rho_terminal[0][static_cast<Eigen::Index>(j)];
    rhs[base + 1] = rho_terminal[1][static_cast<Eigen::Index>(j)];
  }
  const Eigen::VectorXd x = factors_->adj->solve(rhs);
  if (factors_->adj->info() != Eigen::Success || !x.allFinite())
    throw SolverError("monolithic adjoint system: solve failed");
  CoupledAdjointSolution out;
  const VectorPair zero = zero_vectors(n);
  out.rho = {rho_terminal, extract(x, disc, 0)};
  out.psi[0] = {zero, extract(x, disc, 2)};
  out.psi[1] = {zero, extract(x, disc, 4)};
  for (std::size_t c = 0; c < 2; ++c)
    out.varrho[c] = pb_.cost.alpha[0] * out.psi[0].slots[c] + pb_.cost.alpha[1] * out.psi[1].slots[c];
  return out;
}

OptimalitySolution CoupledSolver::optimality_picard(const OptimalityData& data,
                                                    const std::array<FieldPair, 2>& p_start) const {
  const auto& disc = pb_.disc;
  const std::size_t n = disc.nodes();
  const double theta = picard_.damping;
  std::array<FieldPair, 2> p = p_start;
  OptimalitySolution out;
  const VectorPair zero = zero_vectors(n);
  auto sweep = [&](const std::array<FieldPair, 2>& pc) {
    const SpaceTimeField v1 = follower_control(pb_, 0, {zero, pc[0]});
    const SpaceTimeField v2 = follower_control(pb_, 1, {zero, pc[1]});
    return solve_forward(disc, data.y0, control_sources(pb_, data.h, v1, v2), coeffs_.state());
  };
  auto adjoint_of = [&](const StateTrajectory& y, int i) {
    const auto ii = static_cast<std::size_t>(i);
    FieldPair src = disc.pair();
    for (std::size_t c = 0; c < 2; ++c)
      src[c] = pb_.cost.alpha[ii] *
               restrict_to_mask(y.slots[c] - data.targets[ii][c], pb_.masks.observation);
    return solve_backward(disc, zero, src, coeffs_.adjoint());
  };
  bool converged = false;
  for (int it = 0; it < picard_.max_iter; ++it) {
    const StateTrajectory y = sweep(p);
    double change2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const AdjointTrajectory pn = adjoint_of(y, i);
      for (std::size_t c = 0; c < 2; ++c) {
        SpaceTimeField step = theta * (pn.slots[c] - p[ii][c]);
        change2 += inner(step, step, disc);
        p[ii][c] += step;
      }
    }
    out.history.push_back(std::sqrt(change2));
    if (std::sqrt(change2) < picard_.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw IterationError("picard optimality iteration did not reach tolerance", out.history);
  out.y = sweep(p);
  out.p[0] = adjoint_of(out.y, 0);
  out.p[1] = adjoint_of(out.y, 1);
  return out;
}

CoupledAdjointSolution CoupledSolver::adjoint_picard(const VectorPair& rho_terminal) const {
  const auto& disc = pb_.disc;
  const std::size_t n = disc.nodes();
  const double theta = picard_.damping;
  const VectorPair zero = zero_vectors(n);
  std::array<FieldPair, 2> psi{disc.pair(), disc.pair()};
  CoupledAdjointSolution out;
  auto rho_of = [&](const std::array<FieldPair, 2>& ps) {
    FieldPair src = disc.pair();
    for (std::size_t c = 0; c < 2; ++c)
      src[c] = restrict_to_mask(pb_.cost.alpha[0] * ps[0][c] + pb_.cost.alpha[1] * ps[1][c],
                                pb_.masks.observation);
    return solve_backward(disc, rho_terminal, src, coeffs_.state());
  };
  auto psi_of = [&](const AdjointTrajectory& rho, int i) {
    FieldPair src = disc.pair();
    src[0] = follower_control(pb_, i, rho);
    return solve_forward(disc, zero, src, coeffs_.adjoint());
  };
  bool converged = false;
  for (int it = 0; it < picard_.max_iter; ++it) {
    const AdjointTrajectory rho = rho_of(psi);
    double change2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const StateTrajectory pn = psi_of(rho, i);
      for (std::size_t c = 0; c < 2; ++c) {
        SpaceTimeField step = theta * (pn.slots[c] - psi[ii][c]);
        change2 += inner(step, step, disc);
        psi[ii][c] += step;
      }
    }
    out.history.push_back(std::sqrt(change2));
    if (std::sqrt(change2) < picard_.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw IterationError("picard adjoint iteration did not reach tolerance", out.history);
  out.rho = rho_of(psi);
  out.psi[0] = psi_of(out.rho, 0);
  out.psi[1] = psi_of(out.rho, 1);
  for (std::size_t c = 0; c < 2; ++c)
    out.varrho[c] = pb_.cost.alpha[0] * out.psi[0].slots[c] + pb_.cost.alpha[1] * out.psi[1].slots[c];
  return out;
}

OptimalitySolution solve_coupled_optimality(const SpaceTimeField& h, const Problem& pb,
                                            const LinearizedCoefficients& coeffs,
                                            CoupledMethod method) {
  return CoupledSolver(pb, coeffs, method).optimality(OptimalityData::of(pb, h));
}

CoupledAdjointSolution solve_coupled_adjoint(const VectorPair& rho_terminal, const Problem& pb,
                                             const LinearizedCoefficients& coeffs,
                                             CoupledMethod method) {
  return CoupledSolver(pb, coeffs, method).adjoint(rho_terminal);
}

double forward_residual(const Discretization& disc, const StateTrajectory& y,
                        const FieldPair& sources, const Potentials& pot) {
  const double dt = disc.time.dt();
  double worst = 0.0;
  Vector prev1 = y.initial[0], prev2 = y.initial[1];
  for (std::size_t k = 0; k < disc.slots(); ++k) {
    const Vector y1 = row(y.slots[0], k), y2 = row(y.slots[1], k);
    const Vector r1 = y1 - prev1 + dt * (disc.L.apply(y1) + row(pot.q1, k).cwiseProduct(y1)) -
                      dt * row(sources[0], k);
    const Vector r2 = y2 - prev2 +
                      dt * (disc.L.apply(y2) + row(pot.q2, k).cwiseProduct(y2) +
                            row(pot.d, k).cwiseProduct(y1)) -
                      dt * row(sources[1], k);
    worst = std::max({worst, r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>()});
    prev1 = y1;
    prev2 = y2;
  }
  return worst;
}

double backward_residual(const Discretization& disc, const AdjointTrajectory& p,
                         const FieldPair& sources, const Potentials& pot) {
  const double dt = disc.time.dt();
  double worst = 0.0;
  Vector next1 = p.terminal[0], next2 = p.terminal[1];
  for (std::size_t kk = disc.slots(); kk-- > 0;) {
    const Vector p1 = row(p.slots[0], kk), p2 = row(p.slots[1], kk);
    const Vector r2 = p2 - next2 + dt * (disc.L.apply(p2) + row(pot.q2, kk).cwiseProduct(p2)) -
                      dt * row(sources[1], kk);
    const Vector r1 = p1 - next1 +
                      dt * (disc.L.apply(p1) + row(pot.q1, kk).cwiseProduct(p1) +
                            row(pot.d, kk).cwiseProduct(p2)) -
                      dt * row(sources[0], kk);
    worst = std::max({worst, r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>()});
    next1 = p1;
    next2 = p2;
  }
  return worst;
}

double nonlinear_residual(const Discretization& disc, const StateTrajectory& y,
                          const FieldPair& sources, const NonlinearDynamics& dyn) {
  const double dt = disc.time.dt();
  double worst = 0.0;
  Vector prev1 = y.initial[0], prev2 = y.initial[1];
  auto apply_f = [](const Nonlinearity& f, const Vector& u) {
    return u.unaryExpr([&](double r) { return f.value(r); }).eval();
  };
  for (std::size_t k = 0; k < disc.slots(); ++k) {
    const Vector y1 = row(y.slots[0], k), y2 = row(y.slots[1], k);
    const Vector r1 =
        y1 - prev1 + dt * (disc.L.apply(y1) + apply_f(dyn.f1, y1)) - dt * row(sources[0], k);
    const Vector r2 = y2 - prev2 +
                      dt * (disc.L.apply(y2) + apply_f(dyn.f2, y2) + row(dyn.d, k).cwiseProduct(y1)) -
                      dt * row(sources[1], k);
    worst = std::max({worst, r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>()});
    prev1 = y1;
    prev2 = y2;
  }
  return worst;
}

double optimality_residual(const Problem& pb, const LinearizedCoefficients& coeffs,
                           const OptimalityData& data, const OptimalitySolution& sol) {
  const auto& disc = pb.disc;
  const SpaceTimeField v1 = follower_control(pb, 0, sol.p[0]);
  const SpaceTimeField v2 = follower_control(pb, 1, sol.p[1]);
  StateTrajectory y = sol.y;
  y.initial = data.y0;
  double worst = forward_residual(disc, y, control_sources(pb, data.h, v1, v2), coeffs.state());
  for (std::size_t i = 0; i < 2; ++i) {
    FieldPair src = disc.pair();
    for (std::size_t c = 0; c < 2; ++c)
      src[c] = pb.cost.alpha[i] *
               restrict_to_mask(sol.y.slots[c] - data.targets[i][c], pb.masks.observation);
    worst = std::max(worst, backward_residual(disc, sol.p[i], src, coeffs.adjoint()));
  }
  return worst;
}

double adjoint_residual(const Problem& pb, const LinearizedCoefficients& coeffs,
                        const VectorPair& rho_terminal, const CoupledAdjointSolution& sol) {
  const auto& disc = pb.disc;
  FieldPair src = disc.pair();
  for (std::size_t c = 0; c < 2; ++c)
    src[c] = restrict_to_mask(
        pb.cost.alpha[0] * sol.psi[0].slots[c] + pb.cost.alpha[1] * sol.psi[1].slots[c],
        pb.masks.observation);
  AdjointTrajectory rho = sol.rho;
  rho.terminal = rho_terminal;
  double worst = backward_residual(disc, rho, src, coeffs.state());
  for (int i = 0; i < 2; ++i) {
    FieldPair s = disc.pair();
    s[0] = follower_control(pb, i, sol.rho);
    worst = std::max(worst, forward_residual(disc, sol.psi[static_cast<std::size_t>(i)], s,
                                             coeffs.adjoint()));
  }
  return worst;
}

double varrho_residual(const Problem& pb, const LinearizedCoefficients& coeffs,
                       const CoupledAdjointSolution& sol) {
  const auto& disc = pb.disc;
  FieldPair src = disc.pair();
  src[0] = pb.cost.alpha[0] * follower_control(pb, 0, sol.rho) +
           pb.cost.alpha[1] * follower_control(pb, 1, sol.rho);
  const StateTrajectory vr{zero_vectors(disc.nodes()), sol.varrho};
  return forward_residual(disc, vr, src, coeffs.adjoint());
}

}  // namespace hierctl
