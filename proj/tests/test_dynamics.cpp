#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "uniformize/identities.hpp"
#include "uniformize/dynamics.hpp"

using namespace unf;

namespace {
std::mt19937_64 rng(2024);

HamiltonianFunctionalSpec linear_sigma_z() {
  Matrix W1 = Matrix::Zero(2, 2);
  W1(0, 0) = 1.0;
  W1(1, 1) = -1.0;
  return make_quantum_spec(AlgebraRealization::Quantum(2), {W1});
}

TimeGrid unit_grid(double dt = 1e-3, int store_every = 100) {
  TimeGrid g;
  g.t0 = 0.0;
  g.t1 = 1.0;
  g.dt = dt;
  g.store_every = store_every;
  return g;
}
}  // namespace

TEST_CASE("time grids validate their step structure") {
  TimeGrid g = unit_grid();
  REQUIRE_NOTHROW(g.validate());
  REQUIRE(g.steps() == 1000);
  g.dt = 3e-4;  // 1/3e-4 is not an integer
  REQUIRE_THROWS_AS(g.validate(), Error);
  g.dt = -1.0;
  REQUIRE_THROWS_AS(g.validate(), Error);
}

TEST_CASE("linear Hartree flow reproduces the one-body exponential") {
  const auto spec = linear_sigma_z();
  Vector psi0(2);
  psi0 << Complex(0.6, 0), Complex(0, 0.8);
  const auto traj = hartree_evolve(spec, psi0, unit_grid());
  const double t = traj.times.back();
  Vector expect(2);
  expect << psi0(0) * std::exp(Complex(0, -t)), psi0(1) * std::exp(Complex(0, t));
  REQUIRE((traj.states.back() - expect).norm() < 1e-8);
}

TEST_CASE("two-mode diagonal nonlinearity evolves by exact phases") {
  const auto spec = two_mode_onsite_spec(1.0);
  Vector psi0(2);
  psi0 << Complex(std::sqrt(0.3), 0), Complex(std::sqrt(0.7), 0);
  const auto traj = hartree_evolve(spec, psi0, unit_grid());
  const double t = traj.times.back();
  Vector expect(2);
  expect << psi0(0) * std::exp(Complex(0, -(1.0 + 0.3) * t)),
      psi0(1) * std::exp(Complex(0, -(-1.0 + 0.7) * t));
  REQUIRE((traj.states.back() - expect).norm() < 1e-7);
}

TEST_CASE("lattice Hartree conserves the norm and gamma") {
  const auto spec = build_lattice_hartree(4, 1.0, onsite_kernel(4, 1.0));
  Vector psi0(4);
  psi0 << Complex(0.7, 0.1), Complex(-0.2, 0.4), Complex(0.3, -0.3), Complex(0.1, 0.2);
  psi0.normalize();
  const auto traj = hartree_evolve(spec, psi0, unit_grid());
  for (size_t i = 0; i < traj.times.size(); ++i) {
    REQUIRE(std::abs(traj.conserved_norm[i] - traj.conserved_norm[0]) < 1e-8);
    REQUIRE(std::abs(traj.conserved_gamma[i] - traj.conserved_gamma[0]) < 1e-8);
  }
}

TEST_CASE("density evolution is consistent with the rank-one Hartree flow") {
  const auto spec = two_mode_onsite_spec(1.0);
  Vector psi0(2);
  psi0 << Complex(0.8, 0), Complex(0.36, 0.48);
  const auto kets = hartree_evolve(spec, psi0, unit_grid());
  const auto dens = vlasov_evolve_density(spec, psi0 * psi0.adjoint(), unit_grid());
  REQUIRE((dens.states.back() - kets.states.back() * kets.states.back().adjoint())
              .cwiseAbs()
              .maxCoeff() < 1e-6);
  for (size_t i = 0; i < dens.times.size(); ++i)
    REQUIRE(std::abs(dens.conserved_norm[i] - 1.0) < 1e-9);
}

TEST_CASE("linear density evolution matches conjugation by the propagator") {
  const auto spec = linear_sigma_z();
  const Matrix rho0 = random_hermitian_density(2, rng, 0.5);
  const auto traj = vlasov_evolve_density(spec, rho0, unit_grid());
  const double t = traj.times.back();
  Matrix U = Matrix::Zero(2, 2);
  U(0, 0) = std::exp(Complex(0, -t));
  U(1, 1) = std::exp(Complex(0, t));
  REQUIRE((traj.states.back() - U * rho0 * U.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("RK4 shows 4th-order error decay on the two-mode model") {
  const auto spec = two_mode_onsite_spec(1.0);
  Vector psi0(2);
  psi0 << Complex(std::sqrt(0.3), 0), Complex(std::sqrt(0.7), 0);
  auto error_at = [&](double dt) {
    TimeGrid g;
    g.t0 = 0;
    g.t1 = 0.5;
    g.dt = dt;
    g.store_every = int(std::round(0.5 / dt));
    const auto traj = hartree_evolve(spec, psi0, g);
    Vector expect(2);
    expect << psi0(0) * std::exp(Complex(0, -(1.0 + 0.3) * 0.5)),
        psi0(1) * std::exp(Complex(0, -(-1.0 + 0.7) * 0.5));
    return (traj.states.back() - expect).norm();
  };
  const double ratio = error_at(0.02) / error_at(0.01);
  REQUIRE(ratio > 12.0);
  REQUIRE(ratio < 20.0);
}

TEST_CASE("classical free transport matches the analytic characteristic solution") {
  GridSpec g;
  g.n_q = g.n_p = 64;
  g.q_min = -4;
  g.q_max = 4;
  g.p_min = -4;
  g.p_max = 4;
  const auto r = AlgebraRealization::Classical(g);
  Field H(g.n_q, g.n_p);
  for (int iq = 0; iq < g.n_q; ++iq)
    for (int ip = 0; ip < g.n_p; ++ip) H(iq, ip) = 0.5 * g.p(ip) * g.p(ip);
  const auto spec = make_classical_spec(r, H);
  const Field rho0 = oracle::gaussian_blob(g, 0.0, 0.0, 0.5);
  TimeGrid grid;
  grid.t0 = 0;
  grid.t1 = 0.5;
  grid.dt = 1e-3;
  grid.store_every = 500;
  const auto traj = classical_vlasov_evolve(spec, rho0, grid);
  const Field exact = oracle::transported_gaussian(g, 0.5, 0.0, 0.0, 0.5);
  const double l2 =
      std::sqrt((traj.states.back() - exact).squaredNorm() / exact.squaredNorm());
  REQUIRE(l2 < 0.02);
}

TEST_CASE("harmonic rotation conserves mass and gamma") {
  GridSpec g;
  g.n_q = g.n_p = 64;
  g.q_min = -4;
  g.q_max = 4;
  g.p_min = -4;
  g.p_max = 4;
  const auto r = AlgebraRealization::Classical(g);
  Field H(g.n_q, g.n_p);
  for (int iq = 0; iq < g.n_q; ++iq)
    for (int ip = 0; ip < g.n_p; ++ip)
      H(iq, ip) = 0.5 * (g.p(ip) * g.p(ip) + g.q(iq) * g.q(iq));
  const auto spec = make_classical_spec(r, H);
  const Field rho0 = oracle::gaussian_blob(g, 1.0, 0.0, 0.4);
  TimeGrid grid;
  grid.t0 = 0;
  grid.t1 = 0.5;
  grid.dt = 1e-3;
  grid.store_every = 100;
  const auto traj = classical_vlasov_evolve(spec, rho0, grid);
  for (size_t i = 0; i < traj.times.size(); ++i) {
    REQUIRE(std::abs(traj.conserved_norm[i] - traj.conserved_norm[0]) < 1e-6);
    REQUIRE(std::abs(traj.conserved_gamma[i] - traj.conserved_gamma[0]) < 1e-6);
  }
}

TEST_CASE("zero initial field stays identically zero; CFL guard trips on huge steps") {
  GridSpec g;
  g.n_q = g.n_p = 16;
  g.q_min = -4;
  g.q_max = 4;
  g.p_min = -4;
  g.p_max = 4;
  const auto r = AlgebraRealization::Classical(g);
  Field H(g.n_q, g.n_p);
  for (int iq = 0; iq < g.n_q; ++iq)
    for (int ip = 0; ip < g.n_p; ++ip) H(iq, ip) = 0.5 * g.p(ip) * g.p(ip);
  const auto spec = make_classical_spec(r, H);
  TimeGrid grid;
  grid.t0 = 0;
  grid.t1 = 0.1;
  grid.dt = 1e-3;
  grid.store_every = 100;
  const auto traj = classical_vlasov_evolve(spec, Field::Zero(16, 16), grid);
  REQUIRE(traj.states.back().cwiseAbs().maxCoeff() == 0.0);
  TimeGrid coarse;
  coarse.t0 = 0;
  coarse.t1 = 1.0;
  coarse.dt = 0.5;  // |dH/dp| dt far exceeds h_q
  REQUIRE_THROWS_AS(classical_vlasov_evolve(spec, Field::Zero(16, 16), coarse), GuardError);
}

TEST_CASE("characteristics: d/dt alpha(rho(t)) equals the classical bracket along the flow") {
  std::mt19937_64 local(5);
  const auto gamma = random_quantum_spec(2, 2, local);
  const auto alpha = random_quantum_spec(2, 2, local);
  const Matrix rho0 = random_hermitian_density(2, local, 0.6);
  TimeGrid g;
  g.t0 = 0;
  g.t1 = 0.2;
  g.dt = 1e-3;
  g.store_every = 1;  // tight spacing keeps the centered difference sharp
  const auto traj = vlasov_evolve_density(gamma, rho0, g);
  const size_t mid = traj.times.size() / 2;
  const double dt = traj.times[mid + 1] - traj.times[mid - 1];
  auto alpha_at = [&](size_t i) {
    return gamma_eval(alpha, StateDensity::Quantum(alpha.realization, traj.states[i]));
  };
  const double fd = (alpha_at(mid + 1) - alpha_at(mid - 1)) / dt;
  const Complex bracket = classical_bracket_functionals(
      gamma, alpha, StateDensity::Quantum(gamma.realization, traj.states[mid]));
  REQUIRE(std::abs(fd - bracket.real()) < 1e-4 * std::max(1.0, std::abs(bracket.real())));
}

TEST_CASE("sector propagation: stationary states, duality, and parities") {
  std::mt19937_64 local(17);
  const auto spec = random_quantum_spec(2, 2, local);
  UniformizationParams params;
  params.epsilon = 0.9;
  params.n_max = 4;
  const Operator H3 = build_Hn(spec, 3, params);
  TimeGrid g;
  g.t0 = 0;
  g.t1 = 1.0;
  g.dt = 0.25;
  g.store_every = 1;

  SECTION("zero generator gives identity evolution") {
    const Operator Z(H3.space, Matrix::Zero(H3.space.dim(), H3.space.dim()), H3.metric);
    Vector psi0 = Vector::Random(H3.space.dim());
    const auto traj = sector_propagate(Z, psi0, g);
    REQUIRE((traj.states.back() - psi0).norm() < 1e-14);
  }

  SECTION("eigenvector input keeps a pure phase") {
    Eigen::SelfAdjointEigenSolver<Matrix> es(H3.entries);
    const Vector v = es.eigenvectors().col(0);
    const auto traj = sector_propagate(H3, v, g);
    const Vector expect = std::exp(Complex(0, -es.eigenvalues()(0) * g.t1)) * v;
    REQUIRE((traj.states.back() - expect).norm() < 1e-10);
  }

  SECTION("Heisenberg duality <rho(t), A> = <rho, A(t)>") {
    Vector psi0 = Vector::Random(H3.space.dim());
    Matrix A0 = Matrix::Random(H3.space.dim(), H3.space.dim());
    A0 = (A0 + A0.adjoint()).eval();
    const Operator A(H3.space, A0, H3.metric);
    const auto traj = sector_propagate(H3, psi0, g);
    const Operator At = heisenberg_evolve(A, H3, g.t1);
    const Matrix J = metric_matrix(H3.space, H3.metric);
    const Complex lhs =
        (traj.states.back().adjoint() * J * A0 * traj.states.back())(0, 0);
    const Complex rhs = (psi0.adjoint() * J * At.entries * psi0)(0, 0);
    REQUIRE(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("time-dependent scalar modulation uses midpoint-ordered products") {
  // H(t) = s(t) sigma_z with s(t) = cos(t) commutes with itself at all
  // times, so the exact flow is the integrated phase.
  Matrix W1 = Matrix::Zero(2, 2);
  W1(0, 0) = 1.0;
  W1(1, 1) = -1.0;
  auto spec = make_quantum_spec(AlgebraRealization::Quantum(2), {W1});
  spec.modulation = {[](double t) { return std::cos(t); }};
  UniformizationParams params;
  params.epsilon = 1.0;
  params.n_max = 2;
  TimeGrid g;
  g.t0 = 0;
  g.t1 = 1.0;
  g.dt = 1e-3;
  g.store_every = 1000;
  const Matrix U = sector_propagator_matrix(spec, 1, params, g);
  const double phase = std::sin(1.0);  // integral of cos over [0,1]
  Matrix expect = Matrix::Zero(2, 2);
  expect(0, 0) = std::exp(Complex(0, -phase));
  expect(1, 1) = std::exp(Complex(0, phase));
  REQUIRE((U - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("indefinite-metric Hartree flow conserves the J-norm without renormalizing") {
  const Metric J = Metric::Signature({1, -1});
  Matrix H = Matrix::Zero(2, 2);
  H(0, 0) = 1.0;
  H(0, 1) = Complex(0.3, 0);
  H(1, 0) = Complex(-0.3, 0);  // J-pseudo-Hermitian: J H^dag J = H
  H(1, 1) = -0.5;
  const auto spec = make_quantum_spec(AlgebraRealization::Quantum(2, J), {H});
  Vector psi0(2);
  psi0 << Complex(1.0, 0), Complex(0.4, 0.2);
  const auto traj = hartree_evolve(spec, psi0, unit_grid());
  for (size_t i = 0; i < traj.times.size(); ++i)
    REQUIRE(std::abs(traj.conserved_norm[i] - traj.conserved_norm[0]) < 1e-8);
}
