#pragma once

// Dense complex tensor-space machinery: labeled tensor-power spaces,
// symmetric/antisymmetric sector projectors and isometries, Kronecker
// products, metric-aware matrix exponentials and partial contractions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "uniformize/core.hpp"

namespace unf {

enum class Sector { Full, Symmetric, Antisymmetric };

inline const char* to_string(Sector s) {
  switch (s) {
    case Sector::Full: return "full";
    case Sector::Symmetric: return "symmetric";
    default: return "antisymmetric";
  }
}

struct SpaceLabel {
  int d = 1;        // single-particle dimension
  int n = 1;        // tensor power
  Sector sector = Sector::Full;

  long dim() const {
    switch (sector) {
      case Sector::Full: return ipow(d, n);
      case Sector::Symmetric: return long(binomial(n + d - 1, n) + 0.5);
      case Sector::Antisymmetric: return n > d ? 0 : long(binomial(d, n) + 0.5);
    }
    return 0;
  }
  bool operator==(const SpaceLabel& o) const {
    return d == o.d && n == o.n && sector == o.sector;
  }
};

// Single-particle metric J = J^dagger, invertible. The canonical
// constructors produce the identity (Hilbert case) or a +/-1 signature.
struct Metric {
  int d = 1;
  Matrix J;
  bool identity = true;

  static Metric Identity(int d) {
    Metric m;
    m.d = d;
    m.J = Matrix::Identity(d, d);
    m.identity = true;
    return m;
  }
  static Metric Signature(const std::vector<int>& signs) {
    Metric m;
    m.d = int(signs.size());
    m.J = Matrix::Zero(m.d, m.d);
    m.identity = true;
    for (int i = 0; i < m.d; ++i) {
      require(signs[i] == 1 || signs[i] == -1, "Metric: signature entries must be +/-1");
      m.J(i, i) = double(signs[i]);
      if (signs[i] != 1) m.identity = false;
    }
    return m;
  }
  static Metric General(const Matrix& J) {
    require(J.rows() == J.cols(), "Metric: J must be square");
    require((J - J.adjoint()).cwiseAbs().maxCoeff() <= kHermiticityTol, "Metric: J must be Hermitian");
    require(std::abs(J.determinant()) > 1e-12, "Metric: J must be invertible");
    Metric m;
    m.d = int(J.rows());
    m.J = J;
    m.identity = (J - Matrix::Identity(m.d, m.d)).cwiseAbs().maxCoeff() < kExactTol;
    return m;
  }

  bool definite() const {
    if (identity) return true;
    Eigen::SelfAdjointEigenSolver<Matrix> es(J);
    return es.eigenvalues().minCoeff() > 0.0;
  }
};

struct Ket {
  SpaceLabel space;
  Vector amplitudes;

  Ket() = default;
  Ket(SpaceLabel s, Vector a) : space(s), amplitudes(std::move(a)) {
    require(long(amplitudes.size()) == space.dim(), "Ket: amplitude length does not match space dimension");
    check_finite(amplitudes, "Ket");
  }
};

struct Operator {
  SpaceLabel space;
  Matrix entries;
  Metric metric;  // single-particle metric, inherited from construction

  Operator() = default;
  Operator(SpaceLabel s, Matrix e, Metric m)
      : space(s), entries(std::move(e)), metric(std::move(m)) {
    require(entries.rows() == entries.cols(), "Operator: matrix must be square");
    require(long(entries.rows()) == space.dim(), "Operator: dimension does not match space");
    require(metric.d == space.d, "Operator: metric dimension mismatch");
    check_finite(entries, "Operator");
  }
  static Operator OnFull(int d, int n, Matrix e, Metric m) {
    return Operator({d, n, Sector::Full}, std::move(e), std::move(m));
  }
};

// ---------------------------------------------------------------------------
// index helpers on (C^d)^{tensor n}; slot 0 is the slowest-varying index.

inline void unrank_index(long x, int d, int n, int* digits) {
  for (int s = n - 1; s >= 0; --s) {
    digits[s] = int(x % d);
    x /= d;
  }
}

inline long rank_index(const int* digits, int d, int n) {
  long x = 0;
  for (int s = 0; s < n; ++s) x = x * d + digits[s];
  return x;
}

// Permutation action R(pi)|x_1..x_n> = |x_{pi^{-1}(1)}..x_{pi^{-1}(n)}>
// realized as an index map: image basis index of |x> under pi.
inline long permute_basis_index(long x, const std::vector<int>& pi, int d) {
  const int n = int(pi.size());
  int in[16], out[16];
  unrank_index(x, d, n, in);
  for (int s = 0; s < n; ++s) out[pi[s]] = in[s];
  return rank_index(out, d, n);
}

// ---------------------------------------------------------------------------
// kron

inline Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix R(A.rows() * B.rows(), A.cols() * B.cols());
  for (long i = 0; i < A.rows(); ++i)
    for (long j = 0; j < A.cols(); ++j)
      R.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return R;
}

// Tensor product of operators on full powers of the same single-particle
// space; A's slots are slowest.
inline Operator kron(const Operator& A, const Operator& B) {
  require(A.space.sector == Sector::Full && B.space.sector == Sector::Full,
          "kron: both operands must live on full sectors");
  require(A.space.d == B.space.d, "kron: single-particle dimension mismatch");
  return Operator::OnFull(A.space.d, A.space.n + B.space.n, kron(A.entries, B.entries), A.metric);
}

inline Matrix kron_power(const Matrix& A, int n) {
  if (n == 0) return Matrix::Identity(1, 1);
  Matrix R = A;
  for (int i = 1; i < n; ++i) R = kron(R, A);
  return R;
}

inline Vector kron_power(const Vector& v, int n) {
  Vector r = Vector::Ones(1);
  for (int i = 0; i < n; ++i) {
    Vector t(r.size() * v.size());
    for (long a = 0; a < r.size(); ++a) t.segment(a * v.size(), v.size()) = r(a) * v;
    r = std::move(t);
  }
  return r;
}

// ---------------------------------------------------------------------------
// symmetrizer and sector bases

inline constexpr int kMaxPermutationPower = 6;  // n! <= 720 explicit terms

namespace detail {
template <typename F>
void for_each_permutation(int n, F&& f) {
  std::vector<int> pi(n);
  std::iota(pi.begin(), pi.end(), 0);
  do {
    f(pi);
  } while (std::next_permutation(pi.begin(), pi.end()));
}

inline int permutation_sign(std::vector<int> pi) {
  int sign = 1;
  for (size_t i = 0; i < pi.size(); ++i)
    while (pi[i] != int(i)) {
      std::swap(pi[i], pi[pi[i]]);
      sign = -sign;
    }
  return sign;
}
}  // namespace detail

enum class Parity { Plus, Minus };

inline Sector sector_of(Parity p) {
  return p == Parity::Plus ? Sector::Symmetric : Sector::Antisymmetric;
}

// Orthogonal projector onto the symmetric (+) or antisymmetric (-) subspace
// of (C^d)^{tensor n}, built as the explicit average over all n! slot
// permutations. Powers beyond n = 6 are rejected.
inline Matrix symmetrizer(int d, int n, Parity parity) {
  require(d >= 1 && n >= 0, "symmetrizer: need d >= 1, n >= 0");
  require(n <= kMaxPermutationPower, "symmetrizer: tensor power exceeds the supported n <= 6");
  const long D = ipow(d, n);
  if (n <= 1) return Matrix::Identity(D, D);
  Matrix P = Matrix::Zero(D, D);
  detail::for_each_permutation(n, [&](const std::vector<int>& pi) {
    const double sgn = parity == Parity::Plus ? 1.0 : detail::permutation_sign(pi);
    for (long x = 0; x < D; ++x) P(permute_basis_index(x, pi, d), x) += sgn;
  });
  P /= factorial(n);
  return P;
}

// Occupation vectors (n_1..n_d) with sum n, in lexicographically descending
// order; this fixes the symmetric sector basis once and for all.
inline std::vector<std::vector<int>> occupation_vectors(int d, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(d, 0);
  // descending lexicographic = first slot takes the largest count first
  std::function<void(int, int)> rec = [&](int slot, int left) {
    if (slot == d - 1) {
      cur[slot] = left;
      out.push_back(cur);
      return;
    }
    for (int k = left; k >= 0; --k) {
      cur[slot] = k;
      rec(slot + 1, left - k);
    }
  };
  rec(0, n);
  return out;
}

// Strictly increasing index subsets of {0..d-1} of size n (antisymmetric basis).
inline std::vector<std::vector<int>> index_subsets(int d, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (int(cur.size()) == n) {
      out.push_back(cur);
      return;
    }
    for (int k = start; k <= d - (n - int(cur.size())); ++k) {
      cur.push_back(k);
      rec(k + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Isometry S : sector space -> (C^d)^{tensor n} with S^dagger S = I and
// S S^dagger = symmetrizer(d, n, parity).
inline Matrix sector_isometry(int d, int n, Parity parity) {
  require(d >= 1 && n >= 0, "sector_isometry: need d >= 1, n >= 0");
  const long D = ipow(d, n);
  if (n == 0) return Matrix::Ones(1, 1);
  if (parity == Parity::Plus) {
    const auto occs = occupation_vectors(d, n);
    Matrix S = Matrix::Zero(D, long(occs.size()));
    std::map<std::vector<int>, long> col;
    for (size_t c = 0; c < occs.size(); ++c) col[occs[c]] = long(c);
    std::vector<int> digits(n);
    for (long x = 0; x < D; ++x) {
      unrank_index(x, d, n, digits.data());
      std::vector<int> occ(d, 0);
      for (int s = 0; s < n; ++s) occ[digits[s]]++;
      double w = factorial(n);
      for (int k = 0; k < d; ++k) w /= factorial(occ[k]);
      // amplitude sqrt(prod occ! / n!) on each of the n!/prod occ! arrangements
      S(x, col[occ]) = 1.0 / std::sqrt(w);
    }
    return S;
  }
  require(n <= kMaxPermutationPower, "sector_isometry: antisymmetric power exceeds n <= 6");
  const auto subsets = index_subsets(d, n);
  Matrix S = Matrix::Zero(D, long(subsets.size()));
  for (size_t c = 0; c < subsets.size(); ++c) {
    detail::for_each_permutation(n, [&](const std::vector<int>& pi) {
      std::vector<int> digits(n);
      for (int s = 0; s < n; ++s) digits[pi[s]] = subsets[c][s];
      S(rank_index(digits.data(), d, n), long(c)) +=
          double(detail::permutation_sign(pi)) / std::sqrt(factorial(n));
    });
  }
  return S;
}

// Restriction S^dagger A S of a permutation-commuting operator to the
// parity sector. Inputs that fail the commutation check are rejected with
// the offending commutator norm.
inline Operator compress(const Operator& A, Parity parity, double tol = kCommutationTol) {
  require(A.space.sector == Sector::Full, "compress: input must live on the full power");
  const int d = A.space.d, n = A.space.n;
  const Matrix P = symmetrizer(d, n, parity);
  const double comm = (A.entries * P - P * A.entries).cwiseAbs().maxCoeff();
  if (comm > tol * std::max(1.0, A.entries.cwiseAbs().maxCoeff()))
    throw Error("compress: operator does not commute with the symmetrizer (commutator norm " +
                std::to_string(comm) + ")");
  const Matrix S = sector_isometry(d, n, parity);
  return Operator({d, n, sector_of(parity)}, S.adjoint() * A.entries * S, A.metric);
}

// ---------------------------------------------------------------------------
// metric plumbing

// Metric matrix on the labeled space: J^{tensor n} on the full power,
// S^dagger J^{tensor n} S on a sector.
inline Matrix metric_matrix(const SpaceLabel& space, const Metric& metric) {
  if (metric.identity) return Matrix::Identity(space.dim(), space.dim());
  Matrix Jn = kron_power(metric.J, space.n);
  if (space.sector == Sector::Full) return Jn;
  const Matrix S = sector_isometry(space.d, space.n,
                                   space.sector == Sector::Symmetric ? Parity::Plus : Parity::Minus);
  return S.adjoint() * Jn * S;
}

inline Matrix pseudo_adjoint(const Matrix& A, const Matrix& J) {
  return J.inverse() * A.adjoint() * J;
}

inline bool is_metric_hermitian(const Matrix& A, const Matrix& J, double tol = kHermiticityTol) {
  return (pseudo_adjoint(A, J) - A).cwiseAbs().maxCoeff() <= tol * std::max(1.0, A.cwiseAbs().maxCoeff());
}

inline bool is_metric_hermitian(const Operator& A, double tol = kHermiticityTol) {
  if (A.metric.identity)
    return (A.entries - A.entries.adjoint()).cwiseAbs().maxCoeff() <=
           tol * std::max(1.0, A.entries.cwiseAbs().maxCoeff());
  return is_metric_hermitian(A.entries, metric_matrix(A.space, A.metric), tol);
}

// ---------------------------------------------------------------------------
// matrix exponential propagator

// exp(-i H dt) for a metric-Hermitian generator. Hermitian inputs (or
// inputs Hermitian after a definite-metric similarity) go through an exact
// eigendecomposition; indefinite metrics fall back to scaling-and-squaring.
inline Matrix expm_propagator_matrix(const Matrix& H, double dt, const Matrix& J,
                                     double tol = kHermiticityTol) {
  if (!is_metric_hermitian(H, J, tol))
    throw Error("expm_propagator: generator is not pseudo-Hermitian for the given metric");
  const bool identity_metric = (J - Matrix::Identity(J.rows(), J.cols())).cwiseAbs().maxCoeff() < kExactTol;
  const Complex mi(0.0, -1.0);
  if (identity_metric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
    Vector phases(es.eigenvalues().size());
    for (long k = 0; k < phases.size(); ++k) phases(k) = std::exp(mi * es.eigenvalues()(k) * dt);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> js(J);
  if (js.eigenvalues().minCoeff() > 0.0) {
    // definite metric: L H L^{-1} is Hermitian for J = L^dagger L
    Eigen::LLT<Matrix> llt(J);
    const Matrix L = llt.matrixL().adjoint();  // J = L^dagger L with upper L
    const Matrix Linv = L.inverse();
    const Matrix Hh = L * H * Linv;
    const Matrix U = expm_propagator_matrix((Hh + Hh.adjoint()) / 2.0, dt,
                                            Matrix::Identity(J.rows(), J.cols()), tol);
    return Linv * U * L;
  }
  Matrix G = mi * dt * H;
  return G.exp();  // scaling-and-squaring with diagonal Pade
}

inline Operator expm_propagator(const Operator& H, double dt, double tol = kHermiticityTol) {
  const Matrix J = metric_matrix(H.space, H.metric);
  Matrix U = expm_propagator_matrix(H.entries, dt, J, tol);
  const double uerr = (pseudo_adjoint(U, J) * U - Matrix::Identity(U.rows(), U.cols()))
                          .cwiseAbs()
                          .maxCoeff();
  if (uerr > kUnitarityTol)
    throw GuardError("expm_propagator: result violates metric unitarity (residual " + std::to_string(uerr) + ")");
  return Operator(H.space, std::move(U), H.metric);
}

// ---------------------------------------------------------------------------
// partial contraction

// Trace of W (full power m) against rho_1 x ... x rho_k over the first k
// slot pairs, leaving an operator on the remaining m - k slots.
inline Matrix partial_contract(const Matrix& W, int d, int m,
                               const std::vector<Matrix>& densities) {
  const int k = int(densities.size());
  require(k <= m, "partial_contract: more contraction slots than tensor factors");
  require(long(W.rows()) == ipow(d, m), "partial_contract: dimension mismatch");
  Matrix cur = W;
  int rem = m;
  for (int i = 0; i < k; ++i) {
    const Matrix& rho = densities[i];
    require(rho.rows() == d && rho.cols() == d, "partial_contract: density dimension mismatch");
    const long D = ipow(d, rem - 1);
    Matrix next = Matrix::Zero(D, D);
    for (int x = 0; x < d; ++x)
      for (int y = 0; y < d; ++y) {
        const Complex w = rho(y, x);
        if (w != Complex(0, 0)) next.noalias() += w * cur.block(long(x) * D, long(y) * D, D, D);
      }
    cur = std::move(next);
    --rem;
  }
  return cur;
}

inline Matrix partial_contract(const Matrix& W, int d, int m, const Matrix& rho, int k) {
  return partial_contract(W, d, m, std::vector<Matrix>(k, rho));
}

inline Operator partial_contract(const Operator& W, const std::vector<Matrix>& densities) {
  require(W.space.sector == Sector::Full, "partial_contract: operator must live on the full power");
  Matrix R = partial_contract(W.entries, W.space.d, W.space.n, densities);
  return Operator::OnFull(W.space.d, W.space.n - int(densities.size()), std::move(R), W.metric);
}

inline Matrix density_of(const Vector& psi, const Metric& metric) {
  if (metric.identity) return psi * psi.adjoint();
  return psi * psi.adjoint() * metric.J;
}

}  // namespace unf
