#pragma once

// Time evolution: nonlinear Hartree/Vlasov integrators (fixed-step RK4),
// the classical phase-space Vlasov solver, and exact sector propagators
// with Heisenberg duals.

#include <cmath>
#include <vector>

#include "uniformize/algebra.hpp"
#include "uniformize/fock.hpp"

namespace unf {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 1e-3;
  int store_every = 1;

  void validate() const {
    require(dt > 0.0, "TimeGrid: dt must be positive");
    require(t1 > t0, "TimeGrid: t1 must exceed t0");
    const double steps = (t1 - t0) / dt;
    require(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps),
            "TimeGrid: (t1 - t0)/dt must be an integer");
    require(store_every >= 1, "TimeGrid: store_every >= 1");
  }
  long steps() const { return long(std::round((t1 - t0) / dt)); }
};

template <typename State>
struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<double> conserved_norm;   // <rho, I> or psi^* psi (J-norm)
  std::vector<double> conserved_gamma;  // gamma along the flow
};

using KetTrajectory = Trajectory<Vector>;
using DensityTrajectory = Trajectory<Matrix>;
using FieldTrajectory = Trajectory<Field>;

namespace detail {
template <typename State, typename Deriv>
State rk4_step(const State& y, double t, double dt, Deriv&& f) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * dt, State(y + 0.5 * dt * k1));
  const State k3 = f(t + 0.5 * dt, State(y + 0.5 * dt * k2));
  const State k4 = f(t + dt, State(y + dt * k3));
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}
}  // namespace detail

// i dpsi/dt = H(t, psi psi^*) psi, classic RK4. Records the J-norm and
// gamma per stored step; aborts when the J-norm drifts, which signals a
// step size too large for the requested run.
inline KetTrajectory hartree_evolve(const HamiltonianFunctionalSpec& spec, const Vector& psi0,
                                    const TimeGrid& grid, double norm_drift_tol = 1e-6) {
  grid.validate();
  require(spec.realization.kind == RealizationKind::Quantum, "hartree_evolve: quantum realization");
  require(psi0.size() == spec.realization.d, "hartree_evolve: psi0 dimension mismatch");
  const Metric& J = spec.realization.metric;
  auto jnorm = [&](const Vector& psi) { return (psi.adjoint() * J.J * psi)(0, 0).real(); };
  auto deriv = [&](double t, const Vector& psi) -> Vector {
    const StateDensity rho = StateDensity::FromKet(spec.realization, psi);
    return Complex(0, -1) * (vlasov_hamiltonian(spec, rho, t).op() * psi);
  };
  KetTrajectory out;
  Vector psi = psi0;
  const double norm0 = jnorm(psi0);
  double t = grid.t0;
  auto record = [&]() {
    out.times.push_back(t);
    out.states.push_back(psi);
    out.conserved_norm.push_back(jnorm(psi));
    out.conserved_gamma.push_back(gamma_eval(spec, StateDensity::FromKet(spec.realization, psi), t));
  };
  record();
  for (long s = 0; s < grid.steps(); ++s) {
    psi = detail::rk4_step(psi, t, grid.dt, deriv);
    t = grid.t0 + (s + 1) * grid.dt;
    if (std::abs(jnorm(psi) - norm0) > norm_drift_tol * std::max(1.0, std::abs(norm0)))
      throw GuardError("hartree_evolve: J-norm drift exceeds tolerance; reduce dt");
    if ((s + 1) % grid.store_every == 0 || s + 1 == grid.steps()) record();
  }
  return out;
}

// d rho/dt = i [rho, H(t, rho)], RK4 on the density itself.
inline DensityTrajectory vlasov_evolve_density(const HamiltonianFunctionalSpec& spec,
                                               const Matrix& rho0, const TimeGrid& grid,
                                               double norm_drift_tol = 1e-6) {
  grid.validate();
  require(spec.realization.kind == RealizationKind::Quantum, "vlasov_evolve_density: quantum realization");
  auto deriv = [&](double t, const Matrix& rho) -> Matrix {
    const Matrix H = vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, rho), t).op();
    return Complex(0, 1) * (rho * H - H * rho);
  };
  DensityTrajectory out;
  Matrix rho = rho0;
  const double trace0 = rho0.trace().real();
  double t = grid.t0;
  auto record = [&]() {
    out.times.push_back(t);
    out.states.push_back(rho);
    out.conserved_norm.push_back(rho.trace().real());
    out.conserved_gamma.push_back(gamma_eval(spec, StateDensity::Quantum(spec.realization, rho), t));
  };
  record();
  for (long s = 0; s < grid.steps(); ++s) {
    rho = detail::rk4_step(rho, t, grid.dt, deriv);
    t = grid.t0 + (s + 1) * grid.dt;
    if (std::abs(rho.trace().real() - trace0) > norm_drift_tol * std::max(1.0, std::abs(trace0)))
      throw GuardError("vlasov_evolve_density: trace drift exceeds tolerance; reduce dt");
    if ((s + 1) % grid.store_every == 0 || s + 1 == grid.steps()) record();
  }
  return out;
}

// d rho/dt = {rho, H(rho)} on the phase-space grid, with a CFL-style guard
// |dH/dp| dt <= h_q and |dH/dq| dt <= h_p evaluated along the run.
inline FieldTrajectory classical_vlasov_evolve(const HamiltonianFunctionalSpec& spec,
                                               const Field& rho0, const TimeGrid& grid) {
  grid.validate();
  require(spec.realization.kind == RealizationKind::Classical,
          "classical_vlasov_evolve: classical realization");
  const GridSpec& g = spec.realization.grid;
  auto check_cfl = [&](const Field& H) {
    const double dHdp = grid_derivative(H, g, false).cwiseAbs().maxCoeff();
    const double dHdq = grid_derivative(H, g, true).cwiseAbs().maxCoeff();
    if (dHdp * grid.dt > g.h_q() || dHdq * grid.dt > g.h_p())
      throw GuardError("classical_vlasov_evolve: CFL guard violated; reduce dt or refine the grid");
  };
  auto deriv = [&](double t, const Field& rho) -> Field {
    const StateDensity sd = StateDensity::Classical(spec.realization, rho);
    const AlgebraElement H = vlasov_hamiltonian(spec, sd, t);
    const AlgebraElement r = AlgebraElement::Classical(spec.realization, rho);
    return poisson(r, H).field();
  };
  FieldTrajectory out;
  Field rho = rho0;
  double t = grid.t0;
  const double w = g.h_q() * g.h_p();
  auto record = [&]() {
    out.times.push_back(t);
    out.states.push_back(rho);
    out.conserved_norm.push_back(rho.sum() * w);
    out.conserved_gamma.push_back(gamma_eval(spec, StateDensity::Classical(spec.realization, rho), t));
  };
  check_cfl(vlasov_hamiltonian(spec, StateDensity::Classical(spec.realization, rho0), grid.t0).field());
  record();
  for (long s = 0; s < grid.steps(); ++s) {
    rho = detail::rk4_step(rho, t, grid.dt, deriv);
    t = grid.t0 + (s + 1) * grid.dt;
    if ((s + 1) % grid.store_every == 0 || s + 1 == grid.steps()) record();
  }
  return out;
}

// ---------------------------------------------------------------------------
// linear sector evolution

// Sector propagator U^(n)(t, t0). Time-independent generators use a single
// exponential; scalar time modulations use midpoint-sampled stepwise
// products approximating the time-ordered exponential.
inline Matrix sector_propagator_matrix(const HamiltonianFunctionalSpec& spec, int n,
                                       const UniformizationParams& params, const TimeGrid& grid) {
  if (!spec.time_dependent()) {
    const Operator Hn = build_Hn(spec, n, params, grid.t0);
    return expm_propagator(Hn, grid.t1 - grid.t0).entries;
  }
  grid.validate();
  const long D = build_Hn(spec, n, params, grid.t0).space.dim();
  Matrix U = Matrix::Identity(D, D);
  for (long s = 0; s < grid.steps(); ++s) {
    const double tm = grid.t0 + (s + 0.5) * grid.dt;
    U = expm_propagator(build_Hn(spec, n, params, tm), grid.dt).entries * U;
  }
  return U;
}

// psi^(n)(t) = U^(n)(t, t0) psi^(n)(0) on the stored time grid.
inline KetTrajectory sector_propagate(const Operator& Hn, const Vector& psi0,
                                      const TimeGrid& grid) {
  grid.validate();
  require(long(psi0.size()) == Hn.space.dim(), "sector_propagate: state dimension mismatch");
  require(is_metric_hermitian(Hn), "sector_propagate: generator is not metric-Hermitian");
  const Matrix J = metric_matrix(Hn.space, Hn.metric);
  const Matrix Ustep = expm_propagator(Hn, grid.dt * grid.store_every).entries;
  KetTrajectory out;
  Vector psi = psi0;
  double t = grid.t0;
  auto record = [&]() {
    out.times.push_back(t);
    out.states.push_back(psi);
    out.conserved_norm.push_back((psi.adjoint() * J * psi)(0, 0).real());
    out.conserved_gamma.push_back((psi.adjoint() * J * Hn.entries * psi)(0, 0).real());
  };
  record();
  const long blocks = grid.steps() / grid.store_every;
  for (long b = 0; b < blocks; ++b) {
    psi = Ustep * psi;
    t = grid.t0 + (b + 1) * grid.store_every * grid.dt;
    record();
  }
  return out;
}

// Heisenberg evolution A(t) = U^star A U with the metric adjoint, dual to
// the Schroedinger picture.
inline Operator heisenberg_evolve(const Operator& A, const Operator& Hn, double t) {
  require(A.space == Hn.space, "heisenberg_evolve: space mismatch");
  const Matrix J = metric_matrix(Hn.space, Hn.metric);
  const Matrix U = expm_propagator(Hn, t).entries;
  return Operator(A.space, pseudo_adjoint(U, J) * A.entries * U, A.metric);
}

}  // namespace unf
