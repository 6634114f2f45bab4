#pragma once

// Numerical verification of the contraction and exponential-product
// identities behind the representing-functional calculus. Each identity is
// checked through two independent computational routes: a direct slotwise
// tensor product on the left, and a scalar multinomial expansion built
// from partial contractions on the right.

#include <random>

#include "uniformize/fock.hpp"

namespace unf {

inline Matrix random_hermitian(int dim, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = Complex(g(rng), g(rng));
  return scale * 0.5 * (M + M.adjoint()).eval();
}

// Random permutation-symmetric Hermitian tensor on (C^d)^{tensor m}.
inline Matrix random_symmetric_tensor(int d, int m, std::mt19937_64& rng, double scale = 1.0) {
  const long D = ipow(d, m);
  Matrix W = random_hermitian(int(D), rng, scale);
  Matrix sym = Matrix::Zero(D, D);
  detail::for_each_permutation(m, [&](const std::vector<int>& pi) {
    for (long x = 0; x < D; ++x) {
      const long px = permute_basis_index(x, pi, d);
      for (long y = 0; y < D; ++y) sym(px, permute_basis_index(y, pi, d)) += W(x, y);
    }
  });
  return sym / factorial(m);
}

inline HamiltonianFunctionalSpec random_quantum_spec(int d, int degree, std::mt19937_64& rng,
                                                     double scale = 1.0) {
  std::vector<Matrix> W;
  for (int m = 1; m <= degree; ++m) W.push_back(random_symmetric_tensor(d, m, rng, scale));
  return make_quantum_spec(AlgebraRealization::Quantum(d), std::move(W));
}

inline Matrix random_hermitian_density(int d, std::mt19937_64& rng, double scale = 1.0) {
  return random_hermitian(d, rng, scale);
}

namespace detail {

inline Complex full_contraction(const Matrix& M, int d, int k, const Matrix& rho) {
  if (k == 0) return M(0, 0);
  return partial_contract(M, d, k, rho, k)(0, 0);
}

// Iterate over compositions a+b+c+e = n with multinomial weights.
template <typename F>
void for_each_composition4(int n, F&& f) {
  for (int a = 0; a <= n; ++a)
    for (int b = 0; a + b <= n; ++b)
      for (int c = 0; a + b + c <= n; ++c) {
        const int e = n - a - b - c;
        const double mult = factorial(n) / (factorial(a) * factorial(b) * factorial(c) * factorial(e));
        f(a, b, c, e, mult);
      }
}

}  // namespace detail

// Residual of the power-contraction identity at order n:
//   <rho^(n), (I+eps d1)^(n) . (I+eps d2)^(n)> = <rho, (I+eps d1).(I+eps d2)>^n
// applied to a pair of polynomial functionals.
inline double power_contraction_residual(const HamiltonianFunctionalSpec& gamma,
                                         const HamiltonianFunctionalSpec& alpha, const Matrix& rho,
                                         double epsilon, int n) {
  const int d = gamma.realization.d;
  const Matrix Hg = build_Hn_full(gamma, n, epsilon);
  const Matrix Ha = build_Hn_full(alpha, n, epsilon);
  const Complex lhs =
      epsilon * epsilon * detail::full_contraction(slotwise_jordan(Hg, Ha, d, n), d, n, rho);
  const Complex u = rho.trace();
  Complex rhs(0, 0);
  detail::for_each_composition4(n, [&](int a, int b, int c, int e, double mult) {
    if (b + e < 1 || b + e > gamma.N || c + e < 1 || c + e > alpha.N) return;
    const Matrix G = partial_contract(gamma.W[size_t(b + e - 1)], d, b + e, rho, b);
    const Matrix A = partial_contract(alpha.W[size_t(c + e - 1)], d, c + e, rho, c);
    const Complex T = detail::full_contraction(slotwise_jordan(G, A, d, e), d, e, rho);
    rhs += mult * std::pow(u, a) * std::pow(epsilon, b + c + 2 * e) * T;
  });
  return std::abs(lhs - rhs);
}

// Residual of the bracket-contraction identity at order n:
//   <rho^(n), {(I+eps d1)^(n), (I+eps d2)^(n)}> =
//   n <rho, (I+eps d1).(I+eps d2)>^(n-1) <rho, {eps d1, eps d2}>.
inline double bracket_contraction_residual(const HamiltonianFunctionalSpec& gamma,
                                           const HamiltonianFunctionalSpec& alpha,
                                           const Matrix& rho, double epsilon, int n) {
  const int d = gamma.realization.d;
  const Matrix Hg = build_Hn_full(gamma, n, epsilon);
  const Matrix Ha = build_Hn_full(alpha, n, epsilon);
  const Complex lhs =
      epsilon * epsilon * detail::full_contraction(slotwise_poisson(Hg, Ha, d, n), d, n, rho);
  const Complex u = rho.trace();
  Complex rhs(0, 0);
  detail::for_each_composition4(n - 1, [&](int a, int b, int c, int e, double mult) {
    if (b + e + 1 > gamma.N || c + e + 1 > alpha.N) return;
    const Matrix G = partial_contract(gamma.W[size_t(b + e)], d, b + e + 1, rho, b);
    const Matrix A = partial_contract(alpha.W[size_t(c + e)], d, c + e + 1, rho, c);
    const Complex T = detail::full_contraction(slotwise_jordan_bracket_last(G, A, d, e + 1), d,
                                               e + 1, rho);
    rhs += mult * std::pow(u, a) * std::pow(epsilon, b + c + 2 * e) * T;
  });
  rhs *= double(n) * epsilon * epsilon;
  return std::abs(lhs - rhs);
}

// Residual of the exponential-form Jordan product: truncated representing
// functional of the componentwise product vs. the closed expansion.
inline double jordan_dual_residual(const HamiltonianFunctionalSpec& gamma,
                                   const HamiltonianFunctionalSpec& alpha, const Matrix& rho,
                                   double epsilon, int n_max) {
  const PolyFunctional fg = uniformized_jordan(encode_polynomial(gamma, epsilon, n_max),
                                               encode_polynomial(alpha, epsilon, n_max));
  return std::abs(functional_eval(fg, rho) -
                  uniformized_jordan_expansion(gamma, alpha, rho, epsilon));
}

inline double poisson_dual_residual(const HamiltonianFunctionalSpec& gamma,
                                    const HamiltonianFunctionalSpec& alpha, const Matrix& rho,
                                    double epsilon, int n_max) {
  const PolyFunctional fg = uniformized_poisson(encode_polynomial(gamma, epsilon, n_max),
                                                encode_polynomial(alpha, epsilon, n_max));
  return std::abs(functional_eval(fg, rho) -
                  uniformized_poisson_expansion(gamma, alpha, rho, epsilon));
}

struct IdentityReport {
  int d = 0;
  int n_max = 0;
  int trials = 0;
  double max_power_contraction = 0.0;
  double max_bracket_contraction = 0.0;
  double max_jordan_dual = 0.0;
  double max_poisson_dual = 0.0;

  double max_residual() const {
    return std::max(std::max(max_power_contraction, max_bracket_contraction),
                    std::max(max_jordan_dual, max_poisson_dual));
  }
  bool pass(double tol = 1e-9) const { return max_residual() <= tol; }
};

// Runs the full identity suite on seeded random degree-2 functionals.
// Densities are kept small so that the truncated representing series of
// the dual-path checks carries a negligible tail.
inline IdentityReport identity_suite(int d, int n_max, int trials,
                                              std::uint64_t seed = 42) {
  require(d <= 3, "identity_suite: d <= 3");
  require(n_max >= 1 && n_max <= 4, "identity_suite: n_max in 1..4");
  std::mt19937_64 rng(seed);
  IdentityReport rep;
  rep.d = d;
  rep.n_max = n_max;
  rep.trials = trials;
  const double epsilon = 1.0;
  for (int t = 0; t < trials; ++t) {
    const auto gamma = random_quantum_spec(d, 2, rng);
    const auto alpha = random_quantum_spec(d, 2, rng);
    const Matrix rho_small = random_hermitian_density(d, rng, 1e-3);
    for (int n = 1; n <= n_max; ++n) {
      rep.max_power_contraction =
          std::max(rep.max_power_contraction,
                   power_contraction_residual(gamma, alpha, rho_small, epsilon, n));
      rep.max_bracket_contraction =
          std::max(rep.max_bracket_contraction,
                   bracket_contraction_residual(gamma, alpha, rho_small, epsilon, n));
    }
    rep.max_jordan_dual =
        std::max(rep.max_jordan_dual, jordan_dual_residual(gamma, alpha, rho_small, epsilon, n_max));
    rep.max_poisson_dual = std::max(rep.max_poisson_dual,
                                    poisson_dual_residual(gamma, alpha, rho_small, epsilon, n_max));
  }
  return rep;
}

}  // namespace unf
