#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "uniformize/algebra.hpp"
#include "uniformize/identities.hpp"

using namespace unf;

namespace {
std::mt19937_64 rng(777);

AlgebraElement qel(const AlgebraRealization& r, std::mt19937_64& gen) {
  return AlgebraElement::Quantum(r, random_hermitian(r.d, gen));
}
}  // namespace

TEST_CASE("quantum bracket is antisymmetric and acts as a derivation over the symmetric product") {
  const auto r = AlgebraRealization::Quantum(3, Metric::Identity(3));
  for (int trial = 0; trial < 25; ++trial) {
    const auto A = qel(r, rng), B = qel(r, rng), C = qel(r, rng);
    const Matrix anti = poisson(A, B).op() + poisson(B, A).op();
    REQUIRE(anti.cwiseAbs().maxCoeff() < 1e-12);
    // {A, B o C} = {A,B} o C + B o {A,C}
    const Matrix lhs = poisson(A, jordan(B, C)).op();
    const Matrix rhs = jordan(poisson(A, B), C).op() + jordan(B, poisson(A, C)).op();
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    // bracket output of Hermitian inputs stays Hermitian (i[.,.] convention)
    const Matrix P = poisson(A, B).op();
    REQUIRE((P - P.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("classical bracket is antisymmetric and a derivation for grid fields") {
  GridSpec g;
  g.n_q = g.n_p = 32;
  g.q_min = g.p_min = -3.0;
  g.q_max = g.p_max = 3.0;
  const auto r = AlgebraRealization::Classical(g);
  auto smooth = [&](double aq, double ap, double phase) {
    Field f(g.n_q, g.n_p);
    const double kq = 2.0 * M_PI / (g.q_max - g.q_min);
    const double kp = 2.0 * M_PI / (g.p_max - g.p_min);
    for (int iq = 0; iq < g.n_q; ++iq)
      for (int ip = 0; ip < g.n_p; ++ip)
        f(iq, ip) = std::sin(aq * kq * g.q(iq) + phase) * std::cos(ap * kp * g.p(ip));
    return AlgebraElement::Classical(r, f);
  };
  const auto A = smooth(1, 1, 0.3), B = smooth(2, 1, 1.1), C = smooth(1, 2, -0.4);
  REQUIRE((poisson(A, B).field() + poisson(B, A).field()).cwiseAbs().maxCoeff() < 1e-12);
  const Field lhs = poisson(A, jordan(B, C)).field();
  const Field rhs = jordan(poisson(A, B), C).field() + jordan(B, poisson(A, C)).field();
  REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-2);  // finite-difference Leibniz residual
}

TEST_CASE("grid derivative is 4th-order accurate on periodic data") {
  GridSpec g;
  g.n_q = g.n_p = 32;
  g.q_min = g.p_min = 0.0;
  g.q_max = g.p_max = 2.0 * M_PI;
  auto build = [&](int nq) {
    GridSpec gg = g;
    gg.n_q = gg.n_p = nq;
    Field f(gg.n_q, gg.n_p);
    for (int iq = 0; iq < gg.n_q; ++iq)
      for (int ip = 0; ip < gg.n_p; ++ip) f(iq, ip) = std::sin(gg.q(iq)) * std::cos(gg.p(ip));
    Field exact(gg.n_q, gg.n_p);
    for (int iq = 0; iq < gg.n_q; ++iq)
      for (int ip = 0; ip < gg.n_p; ++ip) exact(iq, ip) = std::cos(gg.q(iq)) * std::cos(gg.p(ip));
    return (grid_derivative(f, gg, true) - exact).cwiseAbs().maxCoeff();
  };
  const double e1 = build(32), e2 = build(64);
  REQUIRE(e1 / e2 > 12.0);  // ~16x per refinement for a 4th-order stencil
}

TEST_CASE("derivative identity: the one-slot contraction represents the functional derivative") {
  // d/ds gamma(rho + s sigma)|_0 = <sigma, delta gamma(rho)>, 100 draws
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + int(trial % 2);
    const int N = 1 + int(trial % 3);
    const auto spec = random_quantum_spec(d, N, rng);
    const Matrix rho = random_hermitian_density(d, rng, 0.7);
    const Matrix sigma = random_hermitian(d, rng);
    const Matrix H = vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, rho)).op();
    const double analytic = (sigma * H).trace().real();
    const double fd = oracle::fd_directional(spec, rho, sigma);
    REQUIRE(std::abs(analytic - fd) < 1e-6 * std::max(1.0, std::abs(analytic)));
  }
}

TEST_CASE("gamma is conserved along its own flow: {gamma, gamma} vanishes") {
  for (int trial = 0; trial < 25; ++trial) {
    const auto spec = random_quantum_spec(2, 3, rng);
    const Matrix rho = random_hermitian_density(2, rng, 0.7);
    const Complex self = classical_bracket_functionals(spec, spec,
                                                       StateDensity::Quantum(spec.realization, rho));
    REQUIRE(std::abs(self) < 1e-10);
  }
}

TEST_CASE("quantum pairing and evaluation agree with direct traces") {
  const auto spec = two_mode_onsite_spec(1.0);
  Matrix rho = Matrix::Zero(2, 2);
  rho(0, 0) = 0.25;
  rho(1, 1) = 0.75;
  // gamma = tr(rho W1) + 1/2 <rho x rho, W2> = (0.25 - 0.75) + 0.5*(0.25^2 + 0.75^2)
  const double expected = -0.5 + 0.5 * (0.0625 + 0.5625);
  REQUIRE(std::abs(gamma_eval(spec, StateDensity::Quantum(spec.realization, rho)) - expected) <
          1e-14);
  const Matrix H = vlasov_hamiltonian(spec, StateDensity::Quantum(spec.realization, rho)).op();
  Matrix Hexp = Matrix::Zero(2, 2);
  Hexp(0, 0) = 1.0 + 0.25;
  Hexp(1, 1) = -1.0 + 0.75;
  REQUIRE((H - Hexp).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("quantum spec validation rejects non-Hermitian and asymmetric inputs") {
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = 1.0;  // not Hermitian
  REQUIRE_THROWS_AS(make_quantum_spec(AlgebraRealization::Quantum(2), {bad}), Error);
  Matrix w2 = Matrix::Zero(4, 4);
  w2(0, 1) = 1.0;
  w2(1, 0) = 1.0;  // Hermitian but not permutation-symmetric
  REQUIRE_THROWS_AS(
      make_quantum_spec(AlgebraRealization::Quantum(2), {Matrix::Identity(2, 2), w2}), Error);
}

TEST_CASE("classical spec needs a compatible kernel and realization") {
  GridSpec g;
  g.n_q = g.n_p = 8;
  const auto r = AlgebraRealization::Classical(g);
  Field W1 = Field::Zero(8, 8);
  REQUIRE_NOTHROW(make_classical_spec(r, W1));
  RealMatrix bad = RealMatrix::Zero(5, 5);
  REQUIRE_THROWS_AS(make_classical_spec(r, W1, bad), Error);
}
