#pragma once

// Mean-field limit machinery: disentangled sector propagators, the
// epsilon-series solution of the Hartree equation and its convergence
// study, self-consistent fixed points, spectral-gap frequencies, and
// generalized solitons with their epsilon counterparts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "uniformize/dynamics.hpp"
#include "uniformize/fock.hpp"

namespace unf {

namespace detail {

inline void require_identity_metric(const Metric& m, const char* who) {
  require(m.J.size() == 0 || m.J.isIdentity(kExactTol),
          std::string(who) + ": coherent-series operations require the identity metric");
}

// U^(n)(t, t0) on the bosonic occupation basis. Time-independent
// generators are evaluated exactly through one eigendecomposition;
// scalar time modulations use midpoint-sampled stepwise products.
struct SectorEvolver {
  bool time_dependent = false;
  double t0 = 0.0;
  // time-independent path
  Matrix eigvecs;
  RealVector eigvals;
  // time-dependent path
  const HamiltonianFunctionalSpec* spec = nullptr;
  int n = 0;
  UniformizationParams params;
  OccupationBasis basis;

  static Matrix sector_matrix(const HamiltonianFunctionalSpec& spec, int n,
                              const UniformizationParams& params, const OccupationBasis& basis,
                              double t) {
    if (n == 0) return Matrix::Zero(1, 1);
    Matrix H = spec.scale(1, t) * one_body_sector(spec.W[0], basis);
    if (spec.N >= 2 && n >= 2)
      H += spec.scale(2, t) * params.epsilon * two_body_sector(spec.W[1], basis);
    return H;
  }

  SectorEvolver(const HamiltonianFunctionalSpec& s, int n_, const UniformizationParams& p,
                double t0_)
      : time_dependent(s.time_dependent()), t0(t0_), spec(&s), n(n_), params(p),
        basis(s.realization.d, n_) {
    if (!time_dependent) {
      const Matrix H = sector_matrix(s, n_, p, basis, t0_);
      Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
      require(es.info() == Eigen::Success, "SectorEvolver: eigendecomposition failed");
      eigvecs = es.eigenvectors();
      eigvals = es.eigenvalues();
    }
  }

  Matrix propagator(double t, double dt_hint = 1e-3) const {
    if (!time_dependent) {
      Vector phases(eigvals.size());
      for (long i = 0; i < eigvals.size(); ++i)
        phases(i) = std::exp(Complex(0, -eigvals(i) * (t - t0)));
      return eigvecs * phases.asDiagonal() * eigvecs.adjoint();
    }
    const long steps = std::max(1L, long(std::ceil((t - t0) / dt_hint - 1e-12)));
    const double dt = (t - t0) / steps;
    const long D = basis.dim();
    Matrix U = Matrix::Identity(D, D);
    for (long s = 0; s < steps; ++s) {
      const Matrix H = sector_matrix(*spec, n, params, basis, t0 + (s + 0.5) * dt);
      Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
      Vector phases(D);
      for (long i = 0; i < D; ++i) phases(i) = std::exp(Complex(0, -es.eigenvalues()(i) * dt));
      U = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * U;
    }
    return U;
  }
};

inline Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (long i = 0; i < a.size(); ++i)
    for (long j = 0; j < b.size(); ++j) out(i * b.size() + j) = a(i) * b(j);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// disentangled propagators

// V^(n+1)(t, t0) = (U^(n) x I)^{-1} Utilde^(n+1) on (sector n) x H, where
// Utilde^(n+1) is the (n+1)-sector propagator lifted through the branching
// isometry that symmetrizes all n+1 slots, extended by the identity on
// the complement of its range.
struct DisentangledPropagator {
  int n = 0;
  Matrix V;  // on (sector n) x (single-particle space)
  double t = 0.0;
  double t0 = 0.0;
};

inline DisentangledPropagator build_disentangled(const HamiltonianFunctionalSpec& spec, int n,
                                                 const UniformizationParams& params,
                                                 const TimeGrid& grid) {
  params.validate();
  require(spec.realization.kind == RealizationKind::Quantum, "build_disentangled: quantum realization");
  require(params.parity == Parity::Plus,
          "build_disentangled: the coherent series lives on the symmetric sectors");
  require(n + 1 <= params.n_max, "build_disentangled: sector n+1 exceeds the truncation");
  require(spec.N <= 2, "build_disentangled: occupation-basis sectors need degree <= 2");
  detail::require_identity_metric(spec.realization.metric, "build_disentangled");
  const int d = spec.realization.d;
  const detail::SectorEvolver low(spec, n, params, grid.t0);
  const detail::SectorEvolver high(spec, n + 1, params, grid.t0);
  const Matrix Un = low.propagator(grid.t1, grid.dt);
  const Matrix Un1 = high.propagator(grid.t1, grid.dt);
  const OccupationBasis lower(d, n), upper(d, n + 1);
  const Matrix E = branching_embedding(lower, upper);
  const long D = lower.dim() * d;
  const Matrix lift = E * Un1 * E.adjoint() + Matrix::Identity(D, D) - E * E.adjoint();
  Matrix UnI = Matrix::Zero(D, D);
  for (long i = 0; i < lower.dim(); ++i)
    for (long j = 0; j < lower.dim(); ++j)
      UnI.block(i * d, j * d, d, d) = Un(i, j) * Matrix::Identity(d, d);
  DisentangledPropagator out;
  out.n = n;
  out.V = UnI.adjoint() * lift;  // U^(n) is unitary here, so inverse = adjoint
  out.t = grid.t1;
  out.t0 = grid.t0;
  const double uerr = (out.V.adjoint() * out.V - Matrix::Identity(D, D)).cwiseAbs().maxCoeff();
  if (uerr > kUnitarityTol)
    throw GuardError("build_disentangled: result violates unitarity (residual " + std::to_string(uerr) + ")");
  return out;
}

// ---------------------------------------------------------------------------
// epsilon solutions

struct EpsilonSolution {
  KetTrajectory trajectory;
  double tail_weight = 0.0;  // neglected Poisson weight beyond n_max
};

// psi_eps(t) = e^{-phi*phi/eps} sum_n (1/(n! eps^n)) C_n(t) with
// C_n(t) = (<phi_n| x I) V^(n+1)(t, t0) (|phi_n> x phi). The n-th term
// never assembles V: with E the branching isometry and phi_{n+1} the
// (n+1)-sector product state (E^dag (phi_n x phi) = phi_{n+1} exactly),
//   C_n = (<phi_n| U^(n)^dag x I) [ E U^(n+1) phi_{n+1}
//                                   + (phi_n x phi - E phi_{n+1}) ].
inline EpsilonSolution epsilon_solution(const HamiltonianFunctionalSpec& spec, const Vector& phi,
                                        const UniformizationParams& params, const TimeGrid& grid,
                                        double tail_tol = 1e-6) {
  params.validate();
  grid.validate();
  require(spec.realization.kind == RealizationKind::Quantum, "epsilon_solution: quantum realization");
  require(phi.size() == spec.realization.d, "epsilon_solution: phi dimension mismatch");
  require(params.parity == Parity::Plus,
          "epsilon_solution: the coherent series lives on the symmetric sectors");
  require(spec.N <= 2, "epsilon_solution: occupation-basis sectors need degree <= 2");
  detail::require_identity_metric(spec.realization.metric, "epsilon_solution");
  const int d = spec.realization.d;
  const int n_max = params.n_max;
  const double eps = params.epsilon;
  const double x = phi.squaredNorm() / eps;  // Poisson mean of the series weights

  // neglected weight = upper tail of Poisson(x) beyond n_max
  double cum = 0.0, term = std::exp(-x);
  for (int n = 0; n <= n_max; ++n) {
    cum += term;
    term *= x / double(n + 1);
  }
  const double tail = std::max(0.0, 1.0 - cum);
  if (tail > tail_tol)
    throw GuardError("epsilon_solution: neglected Poisson tail " + std::to_string(tail) +
                " exceeds tolerance; raise n_max or epsilon");

  std::vector<OccupationBasis> bases;
  std::vector<Vector> phi_n;
  std::vector<Matrix> embeddings;  // E_n : sector n+1 -> (sector n) x H
  std::vector<detail::SectorEvolver> evolvers;
  for (int n = 0; n <= n_max + 1; ++n) {
    bases.emplace_back(d, n);
    phi_n.push_back(product_state_sector(phi, bases[n]));
    evolvers.emplace_back(spec, n, params, grid.t0);
    if (n >= 1) embeddings.push_back(branching_embedding(bases[n - 1], bases[n]));
  }

  // series coefficients e^{-x} / (n! eps^n), and the Poisson weights
  // e^{-x} x^n / n! used to skip negligible terms; both kept in log space
  std::vector<double> coeff(n_max + 1), weight(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double log_fact = std::lgamma(double(n) + 1.0);
    coeff[n] = std::exp(-x - log_fact - double(n) * std::log(eps));
    weight[n] = (n == 0 || x > 0.0)
                    ? std::exp(-x + double(n) * std::log(std::max(x, 1e-300)) - log_fact)
                    : 0.0;
  }

  KetTrajectory traj;
  auto emit = [&](double t) {
    Vector psi = Vector::Zero(d);
    for (int n = 0; n <= n_max; ++n) {
      if (weight[n] < 1e-300 && n > 0) continue;
      const Matrix Un = evolvers[n].propagator(t, grid.dt);
      const Matrix Un1 = evolvers[n + 1].propagator(t, grid.dt);
      const Matrix& E = embeddings[n];
      const Vector lifted = E * (Un1 * phi_n[n + 1]);
      const Vector rest = detail::kron_vec(phi_n[n], phi) - E * phi_n[n + 1];
      const Vector y = lifted + rest;
      const Vector left = Un * phi_n[n];  // appears conjugated below
      Vector cn = Vector::Zero(d);
      for (long j = 0; j < left.size(); ++j)
        cn += std::conj(left(j)) * y.segment(j * d, d);
      psi += coeff[n] * cn;
    }
    traj.times.push_back(t);
    traj.states.push_back(psi);
    traj.conserved_norm.push_back(psi.squaredNorm());
    traj.conserved_gamma.push_back(
        gamma_eval(spec, StateDensity::FromKet(spec.realization, psi), t));
  };

  emit(grid.t0);
  const long blocks = grid.steps() / std::max(1, grid.store_every);
  for (long b = 1; b <= blocks; ++b) emit(grid.t0 + b * grid.store_every * grid.dt);
  if (blocks * grid.store_every != grid.steps()) emit(grid.t1);
  return EpsilonSolution{std::move(traj), tail};
}

// ---------------------------------------------------------------------------
// convergence study

struct ConvergenceRow {
  double epsilon = 0.0;
  int n_max = 0;
  double t = 0.0;
  double error = 0.0;        // || psi_eps(t) - psi_Hartree(t) ||
  double tail_weight = 0.0;
  double runtime_ms = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool monotone = true;  // final-time error decreases as epsilon decreases
};

inline ConvergenceTable convergence_study(const HamiltonianFunctionalSpec& spec, const Vector& phi,
                                          const std::vector<double>& epsilon_list,
                                          const TimeGrid& grid, int n_max) {
  ConvergenceTable table;
  if (epsilon_list.empty()) return table;
  const KetTrajectory ref = hartree_evolve(spec, phi, grid);
  std::vector<double> final_errors;
  for (double eps : epsilon_list) {
    const auto start = std::chrono::steady_clock::now();
    UniformizationParams params;
    params.epsilon = eps;
    params.n_max = n_max;
    params.parity = Parity::Plus;
    const EpsilonSolution sol = epsilon_solution(spec, phi, params, grid);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    require(sol.trajectory.times.size() == ref.times.size(),
            "convergence_study: trajectory grids disagree");
    for (size_t i = 0; i < ref.times.size(); ++i) {
      ConvergenceRow row;
      row.epsilon = eps;
      row.n_max = n_max;
      row.t = ref.times[i];
      row.error = (sol.trajectory.states[i] - ref.states[i]).norm();
      row.tail_weight = sol.tail_weight;
      row.runtime_ms = ms;
      table.rows.push_back(row);
    }
    final_errors.push_back(table.rows.back().error);
  }
  for (size_t i = 0; i + 1 < final_errors.size(); ++i)
    if (epsilon_list[i + 1] < epsilon_list[i] && final_errors[i + 1] > final_errors[i])
      table.monotone = false;
  return table;
}

// ---------------------------------------------------------------------------
// self-consistent fixed points

struct FixedPoint {
  Vector phi;      // scaled so phi*phi = nu
  double omega = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
};

// Damped self-consistent iteration: phi <- lowest-eigenvalue eigenvector
// of H(phi phi*), rescaled to phi*phi = nu, mixed 50/50 with the previous
// iterate; ties and phases resolved by maximal overlap with the previous
// iterate. Converged when || H(phi phi*) phi - omega phi || <= 1e-10.
inline FixedPoint hartree_fixed_point(const HamiltonianFunctionalSpec& spec, double nu,
                                      const Vector& seed, double tol = 1e-10,
                                      int max_iterations = 10000) {
  require(spec.realization.kind == RealizationKind::Quantum, "hartree_fixed_point: quantum realization");
  require(spec.realization.metric.definite(),
          "hartree_fixed_point: the eigen-solver path needs a definite metric");
  require(seed.size() == spec.realization.d, "hartree_fixed_point: seed dimension mismatch");
  require(nu > 0.0, "hartree_fixed_point: nu must be positive");
  detail::require_identity_metric(spec.realization.metric, "hartree_fixed_point");
  const double sqrt_nu = std::sqrt(nu);
  Vector phi = seed.normalized() * sqrt_nu;
  FixedPoint out;
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix H =
        vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, phi * phi.adjoint()), 0.0)
            .op();
    Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
    require(es.info() == Eigen::Success, "hartree_fixed_point: eigendecomposition failed");
    // pick the lowest eigenvalue; break near-ties by overlap with phi
    long best = 0;
    const double lam0 = es.eigenvalues()(0);
    double best_overlap = std::abs((es.eigenvectors().col(0).adjoint() * phi)(0, 0));
    for (long k = 1; k < es.eigenvalues().size(); ++k) {
      if (es.eigenvalues()(k) > lam0 + 1e-12 * std::max(1.0, std::abs(lam0))) break;
      const double ov = std::abs((es.eigenvectors().col(k).adjoint() * phi)(0, 0));
      if (ov > best_overlap) {
        best = k;
        best_overlap = ov;
      }
    }
    Vector cand = es.eigenvectors().col(best) * sqrt_nu;
    const Complex ov = (cand.adjoint() * phi)(0, 0);
    if (std::abs(ov) > 0) cand *= ov / std::abs(ov);  // align the phase
    phi = 0.5 * phi + 0.5 * cand;
    phi *= sqrt_nu / phi.norm();
    const Matrix Hx =
        vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, phi * phi.adjoint()), 0.0)
            .op();
    const double omega = ((phi.adjoint() * Hx * phi)(0, 0) / nu).real();
    const double res = (Hx * phi - omega * phi).norm();
    out.residual_history.push_back(res);
    out.iterations = it + 1;
    if (res <= tol) {
      out.phi = phi;
      out.omega = omega;
      out.residual = res;
      return out;
    }
  }
  std::string msg = "hartree_fixed_point: no convergence after " +
                    std::to_string(max_iterations) + " iterations; last residuals:";
  const size_t k0 = out.residual_history.size() > 5 ? out.residual_history.size() - 5 : 0;
  for (size_t k = k0; k < out.residual_history.size(); ++k)
    msg += " " + std::to_string(out.residual_history[k]);
  throw GuardError(msg);
}

// ---------------------------------------------------------------------------
// spectral gap frequency

struct SpectralGap {
  double lambda_n = 0.0;
  double lambda_n1 = 0.0;
  double gap = 0.0;
  double epsilon = 0.0;
};

// Ground energies of sectors n and n+1 at epsilon = nu / n; the gap
// approximates the fixed-point frequency omega(nu) as n grows.
inline SpectralGap spectral_gap_frequency(const HamiltonianFunctionalSpec& spec, double nu, int n) {
  require(n >= 1, "spectral_gap_frequency: need n >= 1");
  require(nu > 0.0, "spectral_gap_frequency: nu must be positive");
  detail::require_identity_metric(spec.realization.metric, "spectral_gap_frequency");
  UniformizationParams params;
  params.epsilon = nu / double(n);
  params.n_max = n + 1;
  params.parity = Parity::Plus;
  auto ground = [&](int m) {
    const Matrix H = build_Hn(spec, m, params).entries;
    Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
    require(es.info() == Eigen::Success, "spectral_gap_frequency: eigendecomposition failed");
    return es.eigenvalues()(0);
  };
  SpectralGap out;
  out.epsilon = params.epsilon;
  out.lambda_n = ground(n);
  out.lambda_n1 = ground(n + 1);
  out.gap = out.lambda_n1 - out.lambda_n;
  return out;
}

// ---------------------------------------------------------------------------
// generalized solitons

// h: ground value of gamma on the constraint set, sampled on the lattice
// of reachable constraint values; evaluated pointwise, throwing when the
// requested point is outside the sampled patch.
using SampledScalar = std::function<double(const RealVector&)>;

struct SolitonProblem {
  HamiltonianFunctionalSpec spec;
  std::vector<Matrix> integrals;   // commuting metric-Hermitian P_j; P_0 = I always included
  RealVector targets;              // p_j, one per integral
  std::optional<Vector> extremal;  // phi, if already known
  SampledScalar h;                 // optional; needed by epsilon_soliton
};

struct SolitonReport {
  Vector phi;
  RealVector multipliers;        // nu^j from the least-squares extremal condition
  RealVector fd_multipliers;     // nu^j from centered finite differences of h(p)
  double residual = 0.0;         // || H(phi phi*) phi - sum_j nu^j P_j phi ||
  double max_deviation = 0.0;    // max_t || e^{-i sum nu^j P_j (t-t0)} phi - psi(t) ||
  bool fd_available = false;
};

namespace detail {

inline void check_commuting_integrals(const std::vector<Matrix>& P) {
  for (size_t i = 0; i < P.size(); ++i)
    for (size_t j = i + 1; j < P.size(); ++j) {
      const double c = (P[i] * P[j] - P[j] * P[i]).cwiseAbs().maxCoeff();
      require(c <= 1e-12 * std::max(1.0, P[i].cwiseAbs().maxCoeff() * P[j].cwiseAbs().maxCoeff()),
              "soliton: integrals of motion do not commute");
    }
}

// Joint eigenbasis of a commuting Hermitian family: diagonalize a generic
// fixed-weight combination, then read each P_j back on the eigenvectors.
struct JointEigenbasis {
  Matrix vectors;              // columns
  std::vector<RealVector> mu;  // mu[alpha](j) = eigenvalue of P_j on column alpha
};

inline JointEigenbasis joint_eigenbasis(const std::vector<Matrix>& P) {
  const long d = P.front().rows();
  Matrix A = Matrix::Zero(d, d);
  double w = 1.0;
  for (const Matrix& Pj : P) {
    w *= 0.6180339887498949;  // irrational weights split accidental degeneracies
    A += w * Pj;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es((A + A.adjoint()) / 2.0);
  require(es.info() == Eigen::Success, "joint_eigenbasis: eigendecomposition failed");
  JointEigenbasis out;
  out.vectors = es.eigenvectors();
  for (long a = 0; a < d; ++a) {
    RealVector m(long(P.size()));
    const Vector v = out.vectors.col(a);
    for (size_t j = 0; j < P.size(); ++j) {
      m(long(j)) = (v.adjoint() * P[j] * v)(0, 0).real();
      require((P[j] * v - m(long(j)) * v).norm() <= 1e-8 * std::max(1.0, v.norm()),
              "joint_eigenbasis: combination failed to split a degeneracy");
    }
    out.mu.push_back(std::move(m));
  }
  return out;
}

// Rescale the joint-eigenspace amplitudes of phi so that phi* P_j phi hits
// the targets: least-squares in the squared amplitudes, clamped at zero.
inline Vector project_to_constraints(const Vector& phi, const JointEigenbasis& basis,
                                     const RealVector& targets) {
  const long d = phi.size();
  const long m = targets.size();
  Vector c = basis.vectors.adjoint() * phi;
  RealMatrix M(m, d);
  for (long a = 0; a < d; ++a)
    for (long j = 0; j < m; ++j) M(j, a) = basis.mu[a](j);
  RealVector a0(d);
  for (long a = 0; a < d; ++a) a0(a) = std::norm(c(a));
  // minimize ||a - a0|| subject to M a = targets: a = a0 + M^+ (targets - M a0)
  const RealVector correction =
      M.completeOrthogonalDecomposition().pseudoInverse() * (targets - M * a0);
  RealVector a = a0 + correction;
  for (long k = 0; k < d; ++k) {
    require(a(k) >= -1e-9, "soliton: constraint projection needs negative weight");
    a(k) = std::max(a(k), 0.0);
  }
  Vector out = Vector::Zero(d);
  for (long k = 0; k < d; ++k) {
    const double base = std::norm(c(k));
    const Complex dir = base > 1e-300 ? c(k) / std::sqrt(base) : Complex(1, 0);
    out += std::sqrt(a(k)) * dir * basis.vectors.col(k);
  }
  return out;
}

// Constrained self-consistent iteration: eigen-step of H(phi phi*), then
// projection onto the joint constraint set, damped 50/50.
inline Vector constrained_extremal(const HamiltonianFunctionalSpec& spec,
                                   const std::vector<Matrix>& P, const RealVector& targets,
                                   const Vector& seed, double tol = 1e-10,
                                   int max_iterations = 10000) {
  const JointEigenbasis basis = joint_eigenbasis(P);
  Vector phi = project_to_constraints(seed, basis, targets);
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix H =
        vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, phi * phi.adjoint()), 0.0)
            .op();
    Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
    Vector cand = es.eigenvectors().col(0);
    double best_overlap = std::abs((cand.adjoint() * phi)(0, 0));
    for (long k = 1; k < es.eigenvalues().size(); ++k) {
      if (es.eigenvalues()(k) > es.eigenvalues()(0) + 1e-12) break;
      const double ov = std::abs((es.eigenvectors().col(k).adjoint() * phi)(0, 0));
      if (ov > best_overlap) {
        cand = es.eigenvectors().col(k);
        best_overlap = ov;
      }
    }
    const Complex ov = (cand.adjoint() * phi)(0, 0);
    if (std::abs(ov) > 0) cand *= ov / std::abs(ov);
    Vector next = project_to_constraints(Vector(0.5 * phi + 0.5 * cand * phi.norm()), basis, targets);
    const double delta = (next - phi).norm();
    phi = next;
    if (delta <= tol) return phi;
  }
  throw GuardError("soliton: constrained extremal search did not converge");
}

inline RealVector extremal_multipliers(const HamiltonianFunctionalSpec& spec, const Vector& phi,
                                       const std::vector<Matrix>& P, double* residual) {
  const Matrix H =
      vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, phi * phi.adjoint()), 0.0)
          .op();
  const Vector rhs = H * phi;
  Matrix cols(phi.size(), long(P.size()));
  for (size_t j = 0; j < P.size(); ++j) cols.col(long(j)) = P[j] * phi;
  const Vector nu_c = cols.completeOrthogonalDecomposition().solve(rhs);
  RealVector nu(long(P.size()));
  for (long j = 0; j < nu.size(); ++j) nu(j) = nu_c(j).real();
  if (residual) {
    Vector r = rhs;
    for (size_t j = 0; j < P.size(); ++j) r -= Complex(nu(long(j)), 0) * (P[j] * phi);
    *residual = r.norm();
  }
  return nu;
}

}  // namespace detail

inline SolitonReport generalized_soliton_check(const SolitonProblem& problem, const TimeGrid& grid,
                                               double fd_step = 1e-3) {
  const auto& spec = problem.spec;
  require(spec.realization.kind == RealizationKind::Quantum,
          "generalized_soliton_check: quantum realization");
  require(!problem.integrals.empty() && problem.integrals.front().isIdentity(kExactTol),
          "generalized_soliton_check: P_0 must be the identity");
  require(long(problem.integrals.size()) == problem.targets.size(),
          "generalized_soliton_check: one target per integral");
  detail::check_commuting_integrals(problem.integrals);

  SolitonReport report;
  if (problem.extremal) {
    report.phi = *problem.extremal;
  } else if (problem.integrals.size() == 1) {
    report.phi = hartree_fixed_point(spec, problem.targets(0),
                                     Vector::Ones(spec.realization.d)).phi;
  } else {
    report.phi = detail::constrained_extremal(spec, problem.integrals, problem.targets,
                                              Vector::Ones(spec.realization.d));
  }
  report.multipliers =
      detail::extremal_multipliers(spec, report.phi, problem.integrals, &report.residual);

  // nu^j = dh/dp_j by centered differences, when h is sampled
  if (problem.h) {
    report.fd_available = true;
    report.fd_multipliers = RealVector(problem.targets.size());
    for (long j = 0; j < problem.targets.size(); ++j) {
      RealVector up = problem.targets, dn = problem.targets;
      up(j) += fd_step;
      dn(j) -= fd_step;
      report.fd_multipliers(j) = (problem.h(up) - problem.h(dn)) / (2.0 * fd_step);
    }
  }

  // dynamical check: e^{-i sum nu^j P_j (t-t0)} phi against hartree_evolve
  const KetTrajectory traj = hartree_evolve(spec, report.phi, grid);
  Matrix G = Matrix::Zero(spec.realization.d, spec.realization.d);
  for (size_t j = 0; j < problem.integrals.size(); ++j)
    G += report.multipliers(long(j)) * problem.integrals[j];
  Eigen::SelfAdjointEigenSolver<Matrix> es((G + G.adjoint()) / 2.0);
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const double dt = traj.times[i] - grid.t0;
    Vector phases(es.eigenvalues().size());
    for (long k = 0; k < phases.size(); ++k)
      phases(k) = std::exp(Complex(0, -es.eigenvalues()(k) * dt));
    const Vector predicted =
        es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * report.phi;
    report.max_deviation = std::max(report.max_deviation, (predicted - traj.states[i]).norm());
  }
  return report;
}

// psi_p(t) = exp{ -(i/eps) (h(p + eps P) - h(p)) (t - t0) } phi_p, with
// h(p + eps P) evaluated by functional calculus on the joint P-eigenbasis.
// As eps -> 0 the phase tends to exp{-i sum_j nu^j P_j (t - t0)}.
inline KetTrajectory epsilon_soliton(const SolitonProblem& problem,
                                     const UniformizationParams& params, const TimeGrid& grid) {
  params.validate();
  grid.validate();
  const auto& spec = problem.spec;
  require(spec.realization.kind == RealizationKind::Quantum, "epsilon_soliton: quantum realization");
  require(!spec.time_dependent(), "epsilon_soliton: time-independent specs only");
  require(bool(problem.h), "epsilon_soliton: a sampled h(p) is required");
  require(problem.extremal.has_value(), "epsilon_soliton: the extremal phi_p is required");
  detail::check_commuting_integrals(problem.integrals);
  const Vector& phi = *problem.extremal;
  const double eps = params.epsilon;
  const detail::JointEigenbasis basis = detail::joint_eigenbasis(problem.integrals);
  const Vector c = basis.vectors.adjoint() * phi;
  const double h0 = problem.h(problem.targets);

  std::vector<double> shift(c.size(), 0.0);
  for (long a = 0; a < c.size(); ++a) {
    if (std::abs(c(a)) <= 1e-12 * phi.norm()) continue;  // unpopulated patch: phase irrelevant
    const RealVector point = problem.targets + eps * basis.mu[a];
    shift[a] = (problem.h(point) - h0) / eps;  // h must be sampled there, else h throws
  }

  KetTrajectory out;
  auto emit = [&](double t) {
    Vector cc(c.size());
    for (long a = 0; a < c.size(); ++a)
      cc(a) = std::exp(Complex(0, -shift[a] * (t - grid.t0))) * c(a);
    const Vector psi = basis.vectors * cc;
    out.times.push_back(t);
    out.states.push_back(psi);
    out.conserved_norm.push_back(psi.squaredNorm());
    out.conserved_gamma.push_back(
        gamma_eval(spec, StateDensity::FromKet(spec.realization, psi), t));
  };
  emit(grid.t0);
  const long blocks = grid.steps() / std::max(1, grid.store_every);
  for (long b = 1; b <= blocks; ++b) emit(grid.t0 + b * grid.store_every * grid.dt);
  return out;
}

// h(p) for the single-constraint (P_0 only) case, sampled on the lattice
// {eps * n} from sector ground energies: h(eps n) = eps * lambda_n.
inline SampledScalar sampled_sector_h(const HamiltonianFunctionalSpec& spec, double epsilon,
                                      int n_max) {
  auto table = std::make_shared<std::map<long, double>>();
  UniformizationParams params;
  params.epsilon = epsilon;
  params.n_max = std::max(1, n_max);
  params.parity = Parity::Plus;
  for (int n = 0; n <= n_max; ++n) {
    if (n == 0) {
      (*table)[0] = 0.0;
      continue;
    }
    const Matrix H = build_Hn(spec, n, params).entries;
    Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
    (*table)[n] = epsilon * es.eigenvalues()(0);
  }
  return [table, epsilon](const RealVector& p) -> double {
    require(p.size() == 1, "sampled_sector_h: one constraint value expected");
    const double ratio = p(0) / epsilon;
    const long n = long(std::llround(ratio));
    require(std::abs(ratio - double(n)) <= 1e-6 && table->count(n),
            "sampled_sector_h: h(p) is not sampled at the requested point");
    return table->at(n);
  };
}

}  // namespace unf
