#pragma once

// Occupation-number machinery for the symmetric (bosonic) sectors: direct
// construction of one- and two-body sector operators, the branching
// embedding of sector n+1 into (sector n) x (single-particle space), and
// amplitudes of symmetrized product states. All of it reproduces the
// full-power construction compressed through sector_isometry, but scales
// to particle numbers far beyond the explicit permutation-sum limit.

#include <map>
#include <vector>

#include "uniformize/tensor.hpp"

namespace unf {

struct OccupationBasis {
  int d = 1;
  int n = 0;
  std::vector<std::vector<int>> states;          // lexicographically descending
  std::map<std::vector<int>, long> index;

  OccupationBasis() = default;
  OccupationBasis(int d_, int n_) : d(d_), n(n_), states(occupation_vectors(d_, n_)) {
    for (size_t i = 0; i < states.size(); ++i) index[states[i]] = long(i);
  }
  long dim() const { return long(states.size()); }
};

// Sector-n matrix of sum_i h_i for a one-body operator h on C^d:
// <nu'| a_a^dag a_b |nu> h_{ab}.
inline Matrix one_body_sector(const Matrix& h, const OccupationBasis& basis) {
  const int d = basis.d;
  require(h.rows() == d && h.cols() == d, "one_body_sector: dimension mismatch");
  Matrix M = Matrix::Zero(basis.dim(), basis.dim());
  for (long col = 0; col < basis.dim(); ++col) {
    const auto& nu = basis.states[col];
    for (int b = 0; b < d; ++b) {
      if (nu[b] == 0) continue;
      for (int a = 0; a < d; ++a) {
        if (h(a, b) == Complex(0, 0)) continue;
        std::vector<int> mu = nu;
        mu[b] -= 1;
        const double amp_b = std::sqrt(double(nu[b]));
        const double amp_a = std::sqrt(double(mu[a] + 1));
        mu[a] += 1;
        M(basis.index.at(mu), col) += h(a, b) * amp_a * amp_b;
      }
    }
  }
  return M;
}

// Sector-n matrix of sum_{i<j} w_{ij} for a two-body operator w on
// (C^d)^{tensor 2}: (1/2) w_{(ab),(cd)} a_a^dag a_b^dag a_d a_c.
inline Matrix two_body_sector(const Matrix& w, const OccupationBasis& basis) {
  const int d = basis.d;
  require(w.rows() == long(d) * d && w.cols() == long(d) * d, "two_body_sector: dimension mismatch");
  Matrix M = Matrix::Zero(basis.dim(), basis.dim());
  if (basis.n < 2) return M;
  for (long col = 0; col < basis.dim(); ++col) {
    const auto& nu = basis.states[col];
    for (int c = 0; c < d; ++c) {
      if (nu[c] == 0) continue;
      for (int e = 0; e < d; ++e) {
        std::vector<int> mu1 = nu;
        mu1[c] -= 1;
        if (mu1[e] == 0) continue;
        const double amp_ce = std::sqrt(double(nu[c])) * std::sqrt(double(mu1[e]));
        mu1[e] -= 1;
        for (int b = 0; b < d; ++b)
          for (int a = 0; a < d; ++a) {
            const Complex wv = w(long(a) * d + b, long(c) * d + e);
            if (wv == Complex(0, 0)) continue;
            std::vector<int> mu2 = mu1;
            const double amp_b = std::sqrt(double(mu2[b] + 1));
            mu2[b] += 1;
            const double amp_a = std::sqrt(double(mu2[a] + 1));
            mu2[a] += 1;
            M(basis.index.at(mu2), col) += 0.5 * wv * amp_a * amp_b * amp_ce;
          }
      }
    }
  }
  return M;
}

// Branching isometry E = (S_n^dag x I_d) S_{n+1} : sector_{n+1} ->
// sector_n x C^d, with <nu - e_k, k | E | nu> = sqrt(nu_k / (n+1)).
inline Matrix branching_embedding(const OccupationBasis& lower, const OccupationBasis& upper) {
  require(upper.n == lower.n + 1 && upper.d == lower.d, "branching_embedding: basis mismatch");
  const int d = lower.d;
  Matrix E = Matrix::Zero(lower.dim() * d, upper.dim());
  for (long col = 0; col < upper.dim(); ++col) {
    const auto& nu = upper.states[col];
    for (int k = 0; k < d; ++k) {
      if (nu[k] == 0) continue;
      std::vector<int> mu = nu;
      mu[k] -= 1;
      E(lower.index.at(mu) * d + k, col) = std::sqrt(double(nu[k]) / double(upper.n));
    }
  }
  return E;
}

// Sector amplitudes of the symmetrized product state S^dag phi^{tensor n}:
// <nu| = sqrt(n! / prod nu_k!) prod_k phi_k^{nu_k}.
inline Vector product_state_sector(const Vector& phi, const OccupationBasis& basis) {
  require(phi.size() == basis.d, "product_state_sector: dimension mismatch");
  Vector v(basis.dim());
  for (long i = 0; i < basis.dim(); ++i) {
    const auto& nu = basis.states[i];
    double w = factorial(basis.n);
    Complex amp(1.0, 0.0);
    for (int k = 0; k < basis.d; ++k) {
      w /= factorial(nu[k]);
      for (int r = 0; r < nu[k]; ++r) amp *= phi(k);
    }
    v(i) = amp * std::sqrt(w);
  }
  return v;
}

// Annihilation operator a_k : sector_{n} -> sector_{n-1},
// <nu - e_k| a_k |nu> = sqrt(nu_k).
inline Matrix annihilation_sector(int k, const OccupationBasis& upper, const OccupationBasis& lower) {
  require(upper.n == lower.n + 1 && upper.d == lower.d, "annihilation_sector: basis mismatch");
  Matrix A = Matrix::Zero(lower.dim(), upper.dim());
  for (long col = 0; col < upper.dim(); ++col) {
    const auto& nu = upper.states[col];
    if (nu[k] == 0) continue;
    std::vector<int> mu = nu;
    mu[k] -= 1;
    A(lower.index.at(mu), col) = std::sqrt(double(nu[k]));
  }
  return A;
}

}  // namespace unf
