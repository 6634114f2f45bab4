#pragma once

// The epsilon-uniformization: the family of linear n-particle Hamiltonians
// H^(n) generated by a polynomial Hamiltonian functional, the truncated
// Fock tower with number observables, and the representing-functional
// calculus with slotwise Jordan/Poisson products.

#include <random>
#include <vector>

#include "uniformize/algebra.hpp"
#include "uniformize/occupation.hpp"

namespace unf {

struct UniformizationParams {
  double epsilon = 1.0;
  int n_max = 4;
  Parity parity = Parity::Plus;

  void validate() const {
    require(epsilon > 0.0, "UniformizationParams: epsilon must be positive");
    // occupation-basis sectors scale to large n; full-power and
    // antisymmetric paths enforce their own tighter caps at build time
    require(n_max >= 1 && n_max <= 64, "UniformizationParams: need 1 <= n_max <= 64");
  }
};

inline constexpr long kFullPowerDimCap = 4096;

// ---------------------------------------------------------------------------
// slot-subset embeddings and the full-power H^(n)

// Embed an operator W on (C^d)^{tensor m} into (C^d)^{tensor n}, acting on
// the slots listed in `slots` (ascending) and as identity elsewhere.
inline Matrix embed_at_slots(const Matrix& W, int d, int m, const std::vector<int>& slots, int n) {
  const long D = ipow(d, n);
  const long Dm = ipow(d, m);
  require(long(W.rows()) == Dm, "embed_at_slots: dimension mismatch");
  Matrix M = Matrix::Zero(D, D);
  std::vector<int> xs(n), ys(n);
  // iterate over spectator configuration and the two W indices
  const int spect = n - m;
  const long Dspect = ipow(d, spect);
  std::vector<int> spect_slots;
  {
    std::vector<bool> used(n, false);
    for (int s : slots) used[s] = true;
    for (int s = 0; s < n; ++s)
      if (!used[s]) spect_slots.push_back(s);
  }
  std::vector<int> sd(std::max(spect, 1)), wx(std::max(m, 1)), wy(std::max(m, 1));
  for (long sp = 0; sp < Dspect; ++sp) {
    unrank_index(sp, d, spect, sd.data());
    for (long a = 0; a < Dm; ++a) {
      unrank_index(a, d, m, wx.data());
      for (long b = 0; b < Dm; ++b) {
        const Complex w = W(a, b);
        if (w == Complex(0, 0)) continue;
        unrank_index(b, d, m, wy.data());
        for (int i = 0; i < spect; ++i) xs[spect_slots[i]] = ys[spect_slots[i]] = sd[i];
        for (int i = 0; i < m; ++i) {
          xs[slots[i]] = wx[i];
          ys[slots[i]] = wy[i];
        }
        M(rank_index(xs.data(), d, n), rank_index(ys.data(), d, n)) += w;
      }
    }
  }
  return M;
}

namespace detail {
template <typename F>
void for_each_subset(int n, int m, F&& f) {
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  if (m == 0) {
    f(idx);
    return;
  }
  while (true) {
    f(idx);
    int i = m - 1;
    while (i >= 0 && idx[i] == n - m + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}
}  // namespace detail

// H^(n) on the full n-th tensor power:
//   sum_m C(n,m) eps^{m-1} Sym(I^{(n-m)} x W^(m))
// realized, for permutation-symmetric W, as the sum over m-slot subsets.
inline Matrix build_Hn_full(const HamiltonianFunctionalSpec& spec, int n, double epsilon,
                            double t = 0.0) {
  require(spec.realization.kind == RealizationKind::Quantum, "build_Hn: quantum realization required");
  const int d = spec.realization.d;
  const long D = ipow(d, n);
  require(D <= kFullPowerDimCap, "build_Hn: full power dimension exceeds the desk-scale cap");
  Matrix H = Matrix::Zero(D, D);
  for (int m = 1; m <= std::min(n, spec.N); ++m) {
    const double c = spec.scale(m, t) * std::pow(epsilon, m - 1);
    detail::for_each_subset(n, m, [&](const std::vector<int>& slots) {
      H += c * embed_at_slots(spec.W[m - 1], d, m, slots, n);
    });
  }
  return H;
}

// H^(n) compressed to the parity sector. The symmetric sector of a spec of
// degree <= 2 is built directly in the occupation basis, which scales to
// large n; everything else goes through the full power.
inline Operator build_Hn(const HamiltonianFunctionalSpec& spec, int n,
                         const UniformizationParams& params, double t = 0.0) {
  params.validate();
  require(spec.realization.kind == RealizationKind::Quantum, "build_Hn: quantum realization required");
  const int d = spec.realization.d;
  const Metric& metric = spec.realization.metric;
  if (n == 0)
    return Operator({d, 0, sector_of(params.parity)}, Matrix::Zero(1, 1), metric);
  if (params.parity == Parity::Plus && spec.N <= 2) {
    OccupationBasis basis(d, n);
    Matrix H = spec.scale(1, t) * one_body_sector(spec.W[0], basis);
    if (spec.N >= 2 && n >= 2)
      H += spec.scale(2, t) * params.epsilon * two_body_sector(spec.W[1], basis);
    return Operator({d, n, Sector::Symmetric}, std::move(H), metric);
  }
  require(n <= kMaxPermutationPower,
          "build_Hn: degree-3 or antisymmetric sectors require n <= 6");
  Operator full = Operator::OnFull(d, n, build_Hn_full(spec, n, params.epsilon, t), metric);
  return compress(full, params.parity);
}

// Lattice Hartree functional on a periodic ring of L sites:
// W^(1) = -hopping * (discrete Laplacian) + onsite * I, W^(2)(x1,x2) =
// omega(x1,x2) diagonal in the site basis. The L = 2 wrap applies the
// stencil literally and double-counts the single bond.
inline HamiltonianFunctionalSpec build_lattice_hartree(int L, double hopping,
                                                       const RealMatrix& omega,
                                                       double onsite = 0.0) {
  require(L >= 2, "build_lattice_hartree: need L >= 2");
  require(omega.rows() == L && omega.cols() == L, "build_lattice_hartree: omega shape mismatch");
  require((omega - omega.transpose()).cwiseAbs().maxCoeff() <=
              kCommutationTol * std::max(1.0, omega.cwiseAbs().maxCoeff()),
          "build_lattice_hartree: omega must be symmetric");
  Matrix W1 = Matrix::Zero(L, L);
  for (int x = 0; x < L; ++x) {
    W1(x, x) += 2.0 * hopping + onsite;
    W1(x, (x + 1) % L) += -hopping;
    W1(x, (x + L - 1) % L) += -hopping;
  }
  Matrix W2 = Matrix::Zero(long(L) * L, long(L) * L);
  for (int x1 = 0; x1 < L; ++x1)
    for (int x2 = 0; x2 < L; ++x2) W2(long(x1) * L + x2, long(x1) * L + x2) = omega(x1, x2);
  return make_quantum_spec(AlgebraRealization::Quantum(L), {std::move(W1), std::move(W2)});
}

inline RealMatrix onsite_kernel(int L, double g) {
  RealMatrix omega = RealMatrix::Zero(L, L);
  for (int x = 0; x < L; ++x) omega(x, x) = g;
  return omega;
}

// Two-mode on-site model: W^(1) = sigma_z, W^(2) = g sum_k |kk><kk|.
inline HamiltonianFunctionalSpec two_mode_onsite_spec(double g) {
  Matrix W1 = Matrix::Zero(2, 2);
  W1(0, 0) = 1.0;
  W1(1, 1) = -1.0;
  Matrix W2 = Matrix::Zero(4, 4);
  W2(0, 0) = g;
  W2(3, 3) = g;
  return make_quantum_spec(AlgebraRealization::Quantum(2), {std::move(W1), std::move(W2)});
}

// ---------------------------------------------------------------------------
// truncated Fock tower and number observables

struct FockTruncation {
  int d = 1;
  Metric metric;
  Parity parity = Parity::Plus;
  int n_max = 4;
  std::vector<OccupationBasis> bases;  // filled for the symmetric parity

  FockTruncation(int d_, Metric m, Parity p, int n_max_)
      : d(d_), metric(std::move(m)), parity(p), n_max(n_max_) {
    require(n_max >= 1, "FockTruncation: need n_max >= 1");
    if (parity == Parity::Plus)
      for (int n = 0; n <= n_max; ++n) bases.emplace_back(d, n);
  }
  long sector_dim(int n) const {
    return SpaceLabel{d, n, sector_of(parity)}.dim();
  }
  long total_dim() const {
    long t = 0;
    for (int n = 0; n <= n_max; ++n) t += sector_dim(n);
    return t;
  }
};

// Block-diagonal operator on the truncated Fock tower, one block per
// particle-number sector.
struct BlockOperator {
  std::vector<Matrix> blocks;  // blocks[n], n = 0..n_max
};

// n_hat(A): sector n acts as the compression of sum_i A_i; sector 0 -> 0.
inline BlockOperator number_observable(const Matrix& A, const FockTruncation& fock) {
  require(A.rows() == fock.d && A.cols() == fock.d, "number_observable: dimension mismatch");
  require(is_metric_hermitian(A, fock.metric.J), "number_observable: A is not metric-Hermitian");
  BlockOperator out;
  out.blocks.push_back(Matrix::Zero(1, 1));
  for (int n = 1; n <= fock.n_max; ++n) {
    if (fock.parity == Parity::Plus) {
      out.blocks.push_back(one_body_sector(A, fock.bases[size_t(n)]));
    } else {
      const long dim = fock.sector_dim(n);
      if (dim == 0) {
        out.blocks.push_back(Matrix::Zero(0, 0));
        continue;
      }
      Matrix full = Matrix::Zero(ipow(fock.d, n), ipow(fock.d, n));
      for (int i = 0; i < n; ++i) full += embed_at_slots(A, fock.d, 1, {i}, n);
      out.blocks.push_back(
          compress(Operator::OnFull(fock.d, n, std::move(full), fock.metric), Parity::Minus)
              .entries);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// slotwise (tensor-power) Jordan and Poisson products

// Partial transpose over the slots in `mask` (bit s set = slot s swapped).
inline Matrix partial_transpose(const Matrix& M, int d, int n, unsigned mask) {
  if (mask == 0) return M;
  const long D = ipow(d, n);
  Matrix R(D, D);
  std::vector<int> xd(n), yd(n), xo(n), yo(n);
  for (long x = 0; x < D; ++x) {
    unrank_index(x, d, n, xd.data());
    for (long y = 0; y < D; ++y) {
      unrank_index(y, d, n, yd.data());
      for (int s = 0; s < n; ++s) {
        const bool sw = (mask >> s) & 1u;
        xo[s] = sw ? yd[s] : xd[s];
        yo[s] = sw ? xd[s] : yd[s];
      }
      R(rank_index(xo.data(), d, n), rank_index(yo.data(), d, n)) = M(x, y);
    }
  }
  return R;
}

// Mixed-order product: X*Y on slots in `subset`, Y*X elsewhere.
inline Matrix subset_ordered_product(const Matrix& X, const Matrix& Y, int d, int n,
                                     unsigned subset) {
  const unsigned comp = (~subset) & ((n >= 32 ? 0u : (1u << n)) - 1u);
  const Matrix Xt = partial_transpose(X, d, n, comp);
  const Matrix Yt = partial_transpose(Y, d, n, comp);
  return partial_transpose(Xt * Yt, d, n, comp);
}

// Slotwise Jordan product: the n-fold tensor power of the single-particle
// Jordan product, extended bilinearly; equals (1/2^n) sum over slot
// orderings.
inline Matrix slotwise_jordan(const Matrix& X, const Matrix& Y, int d, int n) {
  if (n == 0) return X * Y;
  const long D = ipow(d, n);
  Matrix R = Matrix::Zero(D, D);
  const double w = std::pow(0.5, n);
  for (unsigned S = 0; S < (1u << n); ++S) R += w * subset_ordered_product(X, Y, d, n, S);
  return R;
}

// Slotwise Poisson bracket: derivation extension of {H, A} = i(HA - AH),
// one bracket slot and Jordan products elsewhere, summed over slots.
inline Matrix slotwise_poisson(const Matrix& X, const Matrix& Y, int d, int n) {
  const long D = ipow(d, n);
  if (n == 0) return Matrix::Zero(1, 1);
  Matrix R = Matrix::Zero(D, D);
  const double base = std::pow(0.5, n - 1);
  for (unsigned S = 0; S < (1u << n); ++S) {
    const int pop = __builtin_popcount(S);
    const Complex c = Complex(0, 1) * double(2 * pop - n) * base;
    if (c != Complex(0, 0)) R += c * subset_ordered_product(X, Y, d, n, S);
  }
  return R;
}

// Jordan products on the first n-1 slots and the Poisson bracket on the
// last slot (used by the identity-suite expansions).
inline Matrix slotwise_jordan_bracket_last(const Matrix& X, const Matrix& Y, int d, int n) {
  require(n >= 1, "slotwise_jordan_bracket_last: need n >= 1");
  const long D = ipow(d, n);
  Matrix R = Matrix::Zero(D, D);
  const double base = std::pow(0.5, n - 1);
  for (unsigned S = 0; S < (1u << n); ++S) {
    const bool last_forward = (S >> (n - 1)) & 1u;
    const Complex c = (last_forward ? Complex(0, 1) : Complex(0, -1)) * base;
    R += c * subset_ordered_product(X, Y, d, n, S);
  }
  return R;
}

// ---------------------------------------------------------------------------
// representing functionals

// A finite family {A^(n)} of permutation-commuting operators on the full
// tensor powers, with the scalar component A^(0); represents the
// functional exp(-<rho,I>/eps) sum_n <rho^{tensor n}, A^(n)> / (n! eps^{n-1}).
struct PolyFunctional {
  double epsilon = 1.0;
  int d = 1;
  Complex comp0{0.0, 0.0};
  std::vector<Matrix> components;  // components[n-1] on power n, n = 1..n_max

  int n_max() const { return int(components.size()); }
  const Matrix& component(int n) const { return components[size_t(n - 1)]; }
};

inline PolyFunctional functional_encode(int d, double epsilon, Complex comp0,
                                        std::vector<Matrix> components) {
  require(epsilon > 0.0, "functional_encode: epsilon must be positive");
  for (size_t i = 0; i < components.size(); ++i) {
    const int n = int(i) + 1;
    require(long(components[i].rows()) == ipow(d, n) && components[i].rows() == components[i].cols(),
            "functional_encode: component dimension mismatch at n = " + std::to_string(n));
    require(commutes_with_permutations(components[i], d, n),
            "functional_encode: component does not commute with permutations at n = " +
                std::to_string(n));
  }
  return PolyFunctional{epsilon, d, comp0, std::move(components)};
}

inline Complex functional_eval(const PolyFunctional& f, const Matrix& rho) {
  require(rho.rows() == f.d && rho.cols() == f.d, "functional_eval: density dimension mismatch");
  const Complex u = rho.trace();
  Complex acc = f.comp0 * f.epsilon;  // n = 0 term: <rho^0, A^(0)> / (0! eps^{-1})
  for (int n = 1; n <= f.n_max(); ++n) {
    const Matrix scalar = partial_contract(f.component(n), f.d, n, rho, n);
    acc += scalar(0, 0) / (factorial(n) * std::pow(f.epsilon, n - 1));
  }
  return std::exp(-u / f.epsilon) * acc;
}

inline const std::vector<Matrix>& functional_decode(const PolyFunctional& f) {
  return f.components;
}

// Representing functional of the linear observable <rho, A>:
// A^(n) = sum_i A_i on each power.
inline PolyFunctional linear_observable_functional(const Matrix& A, double epsilon, int n_max) {
  const int d = int(A.rows());
  std::vector<Matrix> comps;
  for (int n = 1; n <= n_max; ++n) {
    Matrix M = Matrix::Zero(ipow(d, n), ipow(d, n));
    for (int i = 0; i < n; ++i) M += embed_at_slots(A, d, 1, {i}, n);
    comps.push_back(std::move(M));
  }
  return functional_encode(d, epsilon, Complex(0, 0), std::move(comps));
}

// Representing functional of a polynomial Hamiltonian functional gamma:
// components are the full-power uniformized Hamiltonians H^(n).
inline PolyFunctional encode_polynomial(const HamiltonianFunctionalSpec& spec, double epsilon,
                                        int n_max, double t = 0.0) {
  std::vector<Matrix> comps;
  for (int n = 1; n <= n_max; ++n) comps.push_back(build_Hn_full(spec, n, epsilon, t));
  return functional_encode(spec.realization.d, epsilon, Complex(0, 0), std::move(comps));
}

// The unit of the uniformized Jordan product: identity on every power
// (the encoding of the constant eps).
inline PolyFunctional unit_functional(int d, double epsilon, int n_max) {
  std::vector<Matrix> comps;
  for (int n = 1; n <= n_max; ++n)
    comps.push_back(Matrix::Identity(ipow(d, n), ipow(d, n)));
  return functional_encode(d, epsilon, Complex(1, 0), std::move(comps));
}

inline void check_compatible(const PolyFunctional& f, const PolyFunctional& g) {
  require(f.epsilon == g.epsilon, "uniformized product: epsilon mismatch");
  require(f.d == g.d && f.n_max() == g.n_max(), "uniformized product: truncation mismatch");
}

inline PolyFunctional uniformized_jordan(const PolyFunctional& f, const PolyFunctional& g) {
  check_compatible(f, g);
  std::vector<Matrix> comps;
  for (int n = 1; n <= f.n_max(); ++n)
    comps.push_back(slotwise_jordan(f.component(n), g.component(n), f.d, n));
  return PolyFunctional{f.epsilon, f.d, f.comp0 * g.comp0, std::move(comps)};
}

inline PolyFunctional uniformized_poisson(const PolyFunctional& f, const PolyFunctional& g) {
  check_compatible(f, g);
  std::vector<Matrix> comps;
  for (int n = 1; n <= f.n_max(); ++n)
    comps.push_back(slotwise_poisson(f.component(n), g.component(n), f.d, n));
  return PolyFunctional{f.epsilon, f.d, Complex(0, 0), std::move(comps)};
}

// ---------------------------------------------------------------------------
// direct expansions of the uniformized products (dual evaluation path)

// delta^k gamma(rho): the order-k derivative tensor of the polynomial at rho.
inline Matrix derivative_tensor(const HamiltonianFunctionalSpec& spec, const Matrix& rho, int k,
                                double t = 0.0) {
  const int d = spec.realization.d;
  const long D = ipow(d, k);
  Matrix out = Matrix::Zero(D, D);
  for (int m = k; m <= spec.N; ++m)
    out += spec.scale(m, t) / factorial(m - k) * partial_contract(spec.W[m - 1], d, m, rho, m - k);
  return out;
}

// (gamma . alpha)(rho) via the expansion
//   sum_k eps^{k-1}/k! <rho^{tensor k}, delta^k gamma . delta^k alpha>,
// exact for polynomial functionals.
inline Complex uniformized_jordan_expansion(const HamiltonianFunctionalSpec& gamma,
                                            const HamiltonianFunctionalSpec& alpha,
                                            const Matrix& rho, double epsilon, double t = 0.0) {
  const int d = gamma.realization.d;
  Complex acc = gamma_eval(gamma, StateDensity::Quantum(gamma.realization, rho), t) *
                gamma_eval(alpha, StateDensity::Quantum(alpha.realization, rho), t) / epsilon;
  const int K = std::min(gamma.N, alpha.N);
  for (int k = 1; k <= K; ++k) {
    const Matrix prod =
        slotwise_jordan(derivative_tensor(gamma, rho, k, t), derivative_tensor(alpha, rho, k, t), d, k);
    const Matrix scalar = partial_contract(prod, d, k, rho, k);
    acc += std::pow(epsilon, k - 1) / factorial(k) * scalar(0, 0);
  }
  return acc;
}

// {gamma, alpha}(rho) via the expansion
//   sum_k eps^{k-1}/k! <rho^{tensor k}, {delta^k gamma, delta^k alpha}>.
inline Complex uniformized_poisson_expansion(const HamiltonianFunctionalSpec& gamma,
                                             const HamiltonianFunctionalSpec& alpha,
                                             const Matrix& rho, double epsilon, double t = 0.0) {
  const int d = gamma.realization.d;
  Complex acc(0, 0);
  const int K = std::min(gamma.N, alpha.N);
  for (int k = 1; k <= K; ++k) {
    const Matrix prod = slotwise_poisson(derivative_tensor(gamma, rho, k, t),
                                         derivative_tensor(alpha, rho, k, t), d, k);
    const Matrix scalar = partial_contract(prod, d, k, rho, k);
    acc += std::pow(epsilon, k - 1) / factorial(k) * scalar(0, 0);
  }
  return acc;
}

}  // namespace unf
