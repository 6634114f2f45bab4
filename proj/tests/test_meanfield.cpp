#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "uniformize/identities.hpp"
#include "uniformize/meanfield.hpp"

using namespace unf;

namespace {
std::mt19937_64 rng(808);

HamiltonianFunctionalSpec zero_spec(int d) {
  return make_quantum_spec(AlgebraRealization::Quantum(d), {Matrix::Zero(d, d)});
}

TimeGrid grid_to(double t1, double dt = 1e-2) {
  TimeGrid g;
  g.t0 = 0;
  g.t1 = t1;
  g.dt = dt;
  g.store_every = int(std::round(t1 / dt));
  return g;
}

Vector unit_phi() {
  Vector phi(2);
  phi << Complex(std::sqrt(0.4), 0), Complex(0.3, std::sqrt(0.27));
  return phi;
}
}  // namespace

TEST_CASE("disentangled propagator is the identity for the zero generator") {
  UniformizationParams params;
  params.epsilon = 0.5;
  params.n_max = 4;
  for (int n = 1; n <= 3; ++n) {
    const auto V = build_disentangled(zero_spec(2), n, params, grid_to(1.0));
    REQUIRE((V.V - Matrix::Identity(V.V.rows(), V.V.cols())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("one-body generators disentangle into a last-slot factor") {
  Matrix W1 = random_hermitian(2, rng);
  const auto spec = make_quantum_spec(AlgebraRealization::Quantum(2), {W1});
  UniformizationParams params;
  params.epsilon = 0.5;
  params.n_max = 4;
  const double t = 0.8;
  for (int n = 1; n <= 3; ++n) {
    const auto V = build_disentangled(spec, n, params, grid_to(t));
    Eigen::SelfAdjointEigenSolver<Matrix> es(W1);
    Vector phases(2);
    for (int i = 0; i < 2; ++i) phases(i) = std::exp(Complex(0, -es.eigenvalues()(i) * t));
    const Matrix U1 = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    const long dn = V.V.rows() / 2;
    Matrix expect = Matrix::Zero(V.V.rows(), V.V.cols());
    for (long i = 0; i < dn; ++i) expect.block(2 * i, 2 * i, 2, 2) = U1;
    // the factorization holds on the physical (branching-range) subspace
    const Matrix E = branching_embedding(OccupationBasis(2, n), OccupationBasis(2, n + 1));
    REQUIRE(((V.V - expect) * E).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("disentangling is consistent with the lifted higher sector") {
  const auto spec = two_mode_onsite_spec(1.0);
  UniformizationParams params;
  params.epsilon = 0.5;
  params.n_max = 5;
  const TimeGrid g = grid_to(0.7);
  for (int n = 1; n <= 3; ++n) {
    const auto V = build_disentangled(spec, n, params, g);
    // rebuild the two factors independently and check (U^(n) x I) V = lift
    const OccupationBasis lower(2, n), upper(2, n + 1);
    const Matrix E = branching_embedding(lower, upper);
    auto sector_U = [&](int m, const OccupationBasis& basis) {
      Matrix H = one_body_sector(spec.W[0], basis);
      if (m >= 2) H += params.epsilon * two_body_sector(spec.W[1], basis);
      Eigen::SelfAdjointEigenSolver<Matrix> es(H);
      Vector phases(es.eigenvalues().size());
      for (long i = 0; i < phases.size(); ++i)
        phases(i) = std::exp(Complex(0, -es.eigenvalues()(i) * g.t1));
      return Matrix(es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint());
    };
    const Matrix Un = sector_U(n, lower);
    const Matrix Un1 = sector_U(n + 1, upper);
    const long D = lower.dim() * 2;
    Matrix UnI = Matrix::Zero(D, D);
    for (long i = 0; i < lower.dim(); ++i)
      for (long j = 0; j < lower.dim(); ++j)
        UnI.block(2 * i, 2 * j, 2, 2) = Un(i, j) * Matrix::Identity(2, 2);
    const Matrix lift = E * Un1 * E.adjoint() + Matrix::Identity(D, D) - E * E.adjoint();
    REQUIRE((UnI * V.V - lift).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("epsilon solution collapses exactly for the zero generator") {
  const Vector phi = unit_phi();
  for (double eps : {1.0, 0.5, 0.25}) {
    UniformizationParams params;
    params.epsilon = eps;
    params.n_max = 24;
    const auto sol = epsilon_solution(zero_spec(2), phi, params, grid_to(1.0));
    REQUIRE(sol.tail_weight < 1e-12);
    for (const Vector& psi : sol.trajectory.states) REQUIRE((psi - phi).norm() < 1e-10);
  }
}

TEST_CASE("epsilon solution collapses to the one-body flow for linear generators") {
  Matrix W1 = random_hermitian(2, rng);
  const auto spec = make_quantum_spec(AlgebraRealization::Quantum(2), {W1});
  const Vector phi = unit_phi();
  UniformizationParams params;
  params.epsilon = 0.5;
  params.n_max = 28;
  const TimeGrid g = grid_to(1.0);
  const auto sol = epsilon_solution(spec, phi, params, g);
  Eigen::SelfAdjointEigenSolver<Matrix> es(W1);
  Vector phases(2);
  for (int i = 0; i < 2; ++i) phases(i) = std::exp(Complex(0, -es.eigenvalues()(i) * g.t1));
  const Vector expect =
      es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint() * phi;
  REQUIRE(sol.tail_weight < 1e-12);
  REQUIRE((sol.trajectory.states.back() - expect).norm() < 1e-10);
}

TEST_CASE("epsilon solution matches the dense coherent-state Fock oracle") {
  const auto spec = two_mode_onsite_spec(1.0);
  Vector phi(2);
  phi << Complex(std::sqrt(0.5), 0), Complex(0, std::sqrt(0.5));
  const double eps = 0.5;
  UniformizationParams params;
  params.epsilon = eps;
  params.n_max = 40;
  const TimeGrid g = grid_to(0.5, 1e-2);
  const auto sol = epsilon_solution(spec, phi, params, g);
  const oracle::CoherentFockOracle fock(spec, phi, eps, 40);
  REQUIRE(sol.tail_weight < 1e-10);
  REQUIRE(fock.truncation_tail < 1e-10);
  REQUIRE((sol.trajectory.states.back() - fock.psi(0.5)).norm() < 1e-8);
}

TEST_CASE("epsilon solutions converge to the Hartree flow at first order") {
  const auto spec = two_mode_onsite_spec(1.0);
  Vector phi(2);
  phi << Complex(std::sqrt(0.5), 0), Complex(0, std::sqrt(0.5));
  const TimeGrid g = grid_to(0.5, 1e-3);
  const auto table = convergence_study(spec, phi, {0.5, 0.25, 0.125}, g, 48);
  REQUIRE(table.monotone);
  std::vector<double> finals;
  for (const auto& row : table.rows)
    if (row.t == 0.5) finals.push_back(row.error);
  REQUIRE(finals.size() == 3);
  for (size_t i = 0; i + 1 < finals.size(); ++i) {
    const double order = std::log2(finals[i] / finals[i + 1]);
    REQUIRE(order > 0.5);
    REQUIRE(order < 1.5);
  }
}

TEST_CASE("convergence study propagates trivial cases") {
  const auto spec = make_quantum_spec(AlgebraRealization::Quantum(2),
                                      {random_hermitian(2, rng)});
  const Vector phi = unit_phi();
  const auto empty = convergence_study(spec, phi, {}, grid_to(0.5), 16);
  REQUIRE(empty.rows.empty());
  const auto linear = convergence_study(spec, phi, {1.0, 0.5}, grid_to(0.5), 24);
  for (const auto& row : linear.rows) REQUIRE(row.error < 1e-8);
}

TEST_CASE("epsilon solution refuses series mass beyond the truncation") {
  UniformizationParams params;
  params.epsilon = 0.05;  // mean 20 with n_max 8: huge tail
  params.n_max = 8;
  REQUIRE_THROWS_AS(epsilon_solution(zero_spec(2), unit_phi(), params, grid_to(0.5)), GuardError);
}

TEST_CASE("fixed point of the two-mode diagonal model selects the soft mode") {
  const double gcoef = 1.0;
  const auto spec = two_mode_onsite_spec(gcoef);
  Vector seed(2);
  seed << Complex(0.4, 0), Complex(0.9, 0);
  const FixedPoint fp = hartree_fixed_point(spec, 1.0, seed);
  REQUIRE(std::abs(fp.omega - (-1.0 + gcoef)) < 1e-9);
  REQUIRE(std::abs(std::abs(fp.phi(1)) - 1.0) < 1e-8);
  REQUIRE(std::abs(fp.phi(0)) < 1e-8);
  REQUIRE(fp.residual <= 1e-10);
}

TEST_CASE("linear fixed point returns the ground eigenvector") {
  const Matrix W1 = random_hermitian(3, rng);
  const auto spec = make_quantum_spec(AlgebraRealization::Quantum(3), {W1});
  const FixedPoint fp = hartree_fixed_point(spec, 1.0, Vector::Ones(3));
  Eigen::SelfAdjointEigenSolver<Matrix> es(W1);
  REQUIRE(std::abs(fp.omega - es.eigenvalues()(0)) < 1e-10);
  REQUIRE(std::abs(std::abs((fp.phi.adjoint() * es.eigenvectors().col(0))(0, 0)) - 1.0) < 1e-8);
}

TEST_CASE("attractive lattice fixed point is stationary under the Hartree flow") {
  const auto spec = build_lattice_hartree(4, 1.0, onsite_kernel(4, -2.0));
  Vector seed(4);
  seed << Complex(1.0, 0), Complex(0.5, 0), Complex(0.25, 0), Complex(0.5, 0);
  const FixedPoint fp = hartree_fixed_point(spec, 1.0, seed);
  TimeGrid g;
  g.t0 = 0;
  g.t1 = 1.0;
  g.dt = 1e-3;
  g.store_every = 100;
  const auto traj = hartree_evolve(spec, fp.phi, g);
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const Vector expect = std::exp(Complex(0, -fp.omega * traj.times[i])) * fp.phi;
    REQUIRE((traj.states[i] - expect).norm() < 1e-6);
  }
}

TEST_CASE("spectral gaps: linear closed form and diagonal combinatorics") {
  SECTION("one-body sigma_z") {
    Matrix W1 = Matrix::Zero(2, 2);
    W1(0, 0) = 1.0;
    W1(1, 1) = -1.0;
    const auto spec = make_quantum_spec(AlgebraRealization::Quantum(2), {W1});
    for (int n : {1, 2, 5}) {
      const SpectralGap gap = spectral_gap_frequency(spec, 1.0, n);
      REQUIRE(std::abs(gap.lambda_n - double(-n)) < 1e-12);
      REQUIRE(std::abs(gap.gap - (-1.0)) < 1e-12);
    }
  }
  SECTION("two-mode diagonal interaction") {
    const double gcoef = 0.7;
    const auto spec = two_mode_onsite_spec(gcoef);
    for (int n : {2, 4, 8}) {
      const double eps = 1.0 / double(n);  // nu = 1
      const SpectralGap gap = spectral_gap_frequency(spec, 1.0, n);
      const double expect_lam = -double(n) + eps * gcoef * double(binomial(n, 2));
      REQUIRE(std::abs(gap.lambda_n - expect_lam) < 1e-10);
      REQUIRE(std::abs(gap.gap - (-1.0 + gcoef * 1.0)) < 1e-10);
    }
  }
  SECTION("lattice gap converges monotonically to the Hartree frequency") {
    const auto spec = build_lattice_hartree(4, 1.0, onsite_kernel(4, -2.0));
    Vector seed(4);
    seed << Complex(1.0, 0), Complex(0.5, 0), Complex(0.25, 0), Complex(0.5, 0);
    const FixedPoint fp = hartree_fixed_point(spec, 1.0, seed);
    double prev = 1e300;
    for (int n : {2, 4, 6, 8}) {
      const SpectralGap gap = spectral_gap_frequency(spec, 1.0, n);
      const double diff = std::abs(gap.gap - fp.omega);
      REQUIRE(diff < prev);
      prev = diff;
    }
  }
}

TEST_CASE("soliton checks: identity-only reduction and plane-wave travelling solitons") {
  SECTION("P0-only case reduces to the fixed-point check") {
    SolitonProblem problem;
    problem.spec = two_mode_onsite_spec(1.0);
    problem.integrals = {Matrix::Identity(2, 2)};
    problem.targets = RealVector::Ones(1);
    TimeGrid g;
    g.t0 = 0;
    g.t1 = 1.0;
    g.dt = 1e-3;
    g.store_every = 100;
    const SolitonReport rep = generalized_soliton_check(problem, g);
    REQUIRE(rep.residual < 1e-8);
    REQUIRE(rep.max_deviation < 1e-6);
  }
  SECTION("plane waves on the translation-invariant ring") {
    const int L = 4;
    const auto spec = build_lattice_hartree(L, 1.0, onsite_kernel(L, -2.0));
    // lattice momentum generator: P = i/2 (S - S^dag) with shift S
    Matrix S = Matrix::Zero(L, L);
    for (int x = 0; x < L; ++x) S((x + 1) % L, x) = 1.0;
    const Matrix P = Complex(0, 0.5) * (S - S.adjoint());
    Vector phi(L);
    const double k = 2.0 * M_PI / L;
    for (int x = 0; x < L; ++x) phi(x) = std::exp(Complex(0, k * x)) / std::sqrt(double(L));
    SolitonProblem problem;
    problem.spec = spec;
    problem.integrals = {Matrix::Identity(L, L), P};
    RealVector targets(2);
    targets << 1.0, (phi.adjoint() * P * phi)(0, 0).real();
    problem.targets = targets;
    problem.extremal = phi;
    TimeGrid g;
    g.t0 = 0;
    g.t1 = 1.0;
    g.dt = 1e-3;
    g.store_every = 100;
    const SolitonReport rep = generalized_soliton_check(problem, g);
    REQUIRE(rep.residual < 1e-8);
    REQUIRE(rep.max_deviation < 1e-6);
  }
  SECTION("perturbed non-extremal input is flagged by the dynamical check") {
    SolitonProblem problem;
    problem.spec = build_lattice_hartree(4, 1.0, onsite_kernel(4, -2.0));
    Vector bad(4);
    bad << Complex(0.9, 0), Complex(0.1, 0.2), Complex(-0.3, 0), Complex(0.2, -0.1);
    bad.normalize();
    problem.integrals = {Matrix::Identity(4, 4)};
    problem.targets = RealVector::Ones(1);
    problem.extremal = bad;
    TimeGrid g;
    g.t0 = 0;
    g.t1 = 1.0;
    g.dt = 1e-3;
    g.store_every = 100;
    const SolitonReport rep = generalized_soliton_check(problem, g);
    REQUIRE(rep.residual > 1e-3);
    REQUIRE(rep.max_deviation > 1e-3);
  }
  SECTION("non-commuting integrals are rejected") {
    SolitonProblem problem;
    problem.spec = two_mode_onsite_spec(1.0);
    Matrix sx = Matrix::Zero(2, 2), sz = Matrix::Zero(2, 2);
    sx(0, 1) = sx(1, 0) = 1.0;
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;
    problem.integrals = {Matrix::Identity(2, 2), sx, sz};
    problem.targets = RealVector::Zero(3);
    TimeGrid g;
    g.t1 = 0.1;
    g.dt = 0.01;
    REQUIRE_THROWS_AS(generalized_soliton_check(problem, g), Error);
  }
}

TEST_CASE("epsilon solitons: gap phase, linear-h exactness, and first-order limit") {
  const double gcoef = 0.7;
  const auto spec = two_mode_onsite_spec(gcoef);
  Vector phi(2);
  phi << Complex(0, 0), Complex(1, 0);  // diagonal extremal, nu = 1
  SolitonProblem problem;
  problem.spec = spec;
  problem.integrals = {Matrix::Identity(2, 2)};
  problem.targets = RealVector::Ones(1);
  problem.extremal = phi;
  TimeGrid g;
  g.t0 = 0;
  g.t1 = 1.0;
  g.dt = 0.1;
  g.store_every = 10;

  SECTION("the sector-sampled phase equals the spectral gap phase") {
    const double eps = 0.25;  // nu/eps = 4 sectors
    UniformizationParams params;
    params.epsilon = eps;
    params.n_max = 8;
    problem.h = sampled_sector_h(spec, eps, 8);
    const auto traj = epsilon_soliton(problem, params, g);
    const int n = 4;
    UniformizationParams gp;
    gp.epsilon = eps;
    gp.n_max = 6;
    // gap phase: (h(nu + eps) - h(nu))/eps = lambda_{n+1} - lambda_n
    Eigen::SelfAdjointEigenSolver<Matrix> e5(build_Hn(spec, n + 1, gp).entries);
    Eigen::SelfAdjointEigenSolver<Matrix> e4(build_Hn(spec, n, gp).entries);
    const double gap = e5.eigenvalues()(0) - e4.eigenvalues()(0);
    const Vector expect = std::exp(Complex(0, -gap * g.t1)) * phi;
    REQUIRE((traj.states.back() - expect).norm() < 1e-10);
  }

  SECTION("linear h gives the multiplier-phase soliton exactly") {
    problem.h = [](const RealVector& p) { return 2.5 * p(0); };
    for (double eps : {1.0, 0.5, 0.25}) {
      UniformizationParams params;
      params.epsilon = eps;
      params.n_max = 8;
      const auto traj = epsilon_soliton(problem, params, g);
      const Vector expect = std::exp(Complex(0, -2.5 * g.t1)) * phi;
      REQUIRE((traj.states.back() - expect).norm() < 1e-12);
    }
  }

  SECTION("halving epsilon roughly halves the distance to the multiplier-phase soliton") {
    problem.h = [](const RealVector& p) { return -p(0) + 0.35 * p(0) * p(0); };
    const double nu_mult = -1.0 + 0.7;  // dh/dp at p=1
    auto dist = [&](double eps) {
      UniformizationParams params;
      params.epsilon = eps;
      params.n_max = 8;
      const auto traj = epsilon_soliton(problem, params, g);
      const Vector expect = std::exp(Complex(0, -nu_mult * g.t1)) * phi;
      return (traj.states.back() - expect).norm();
    };
    const double r1 = dist(0.2) / dist(0.1);
    REQUIRE(r1 > 1.5);
    REQUIRE(r1 < 2.5);
  }
}
