#pragma once

// Concrete realizations of the Hamiltonian (Lie-Jordan) algebra and its
// predual state space: the quantum operator algebra with an optional
// indefinite metric, and the classical phase-space grid algebra. On top of
// both sit polynomial Hamiltonian functionals and their derivatives.

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "uniformize/tensor.hpp"

namespace unf {

struct GridSpec {
  double q_min = -1.0, q_max = 1.0;
  double p_min = -1.0, p_max = 1.0;
  int n_q = 8, n_p = 8;
  bool periodic_q = true, periodic_p = true;

  void validate() const {
    require(n_q >= 8 && n_p >= 8, "GridSpec: need n_q, n_p >= 8");
    require(q_max > q_min && p_max > p_min, "GridSpec: empty axis");
  }
  double h_q() const { return (q_max - q_min) / n_q; }
  double h_p() const { return (p_max - p_min) / n_p; }
  double q(int i) const { return q_min + i * h_q(); }
  double p(int j) const { return p_min + j * h_p(); }
  long cells() const { return long(n_q) * n_p; }
  bool operator==(const GridSpec& o) const {
    return q_min == o.q_min && q_max == o.q_max && p_min == o.p_min && p_max == o.p_max &&
           n_q == o.n_q && n_p == o.n_p && periodic_q == o.periodic_q && periodic_p == o.periodic_p;
  }
};

enum class RealizationKind { Quantum, Classical };

struct AlgebraRealization {
  RealizationKind kind = RealizationKind::Quantum;
  int d = 1;          // quantum single-particle dimension
  Metric metric;      // quantum metric
  GridSpec grid;      // classical phase-space grid

  static AlgebraRealization Quantum(int d, Metric m) {
    AlgebraRealization r;
    r.kind = RealizationKind::Quantum;
    r.d = d;
    r.metric = std::move(m);
    require(r.metric.d == d, "AlgebraRealization: metric dimension mismatch");
    return r;
  }
  static AlgebraRealization Quantum(int d) { return Quantum(d, Metric::Identity(d)); }
  static AlgebraRealization Classical(GridSpec g) {
    g.validate();
    AlgebraRealization r;
    r.kind = RealizationKind::Classical;
    r.grid = std::move(g);
    return r;
  }
  bool compatible(const AlgebraRealization& o) const {
    if (kind != o.kind) return false;
    if (kind == RealizationKind::Quantum) return d == o.d;
    return grid == o.grid;
  }
};

// Classical fields are real grid functions f(q, p), stored as values(iq, ip).
using Field = Eigen::MatrixXd;

// A single algebra element: quantum d x d operator or classical grid field.
struct AlgebraElement {
  AlgebraRealization realization;
  std::variant<Matrix, Field> value;

  static AlgebraElement Quantum(const AlgebraRealization& r, Matrix m) {
    require(r.kind == RealizationKind::Quantum, "AlgebraElement: realization is not quantum");
    require(m.rows() == r.d && m.cols() == r.d, "AlgebraElement: operator dimension mismatch");
    return AlgebraElement{r, std::move(m)};
  }
  static AlgebraElement Classical(const AlgebraRealization& r, Field f) {
    require(r.kind == RealizationKind::Classical, "AlgebraElement: realization is not classical");
    require(f.rows() == r.grid.n_q && f.cols() == r.grid.n_p, "AlgebraElement: field shape mismatch");
    return AlgebraElement{r, std::move(f)};
  }
  const Matrix& op() const { return std::get<Matrix>(value); }
  const Field& field() const { return std::get<Field>(value); }
};

struct StateDensity {
  AlgebraRealization realization;
  std::variant<Matrix, Field> value;

  static StateDensity Quantum(const AlgebraRealization& r, Matrix rho) {
    require(r.kind == RealizationKind::Quantum, "StateDensity: realization is not quantum");
    require(rho.rows() == r.d && rho.cols() == r.d, "StateDensity: dimension mismatch");
    return StateDensity{r, std::move(rho)};
  }
  static StateDensity Classical(const AlgebraRealization& r, Field f) {
    require(r.kind == RealizationKind::Classical, "StateDensity: realization is not classical");
    require(f.rows() == r.grid.n_q && f.cols() == r.grid.n_p, "StateDensity: field shape mismatch");
    return StateDensity{r, std::move(f)};
  }
  static StateDensity FromKet(const AlgebraRealization& r, const Vector& psi) {
    return Quantum(r, density_of(psi, r.metric));
  }
  const Matrix& rho() const { return std::get<Matrix>(value); }
  const Field& field() const { return std::get<Field>(value); }
};

inline void check_same_realization(const AlgebraRealization& a, const AlgebraRealization& b,
                                   const char* who) {
  require(a.compatible(b), std::string(who) + ": realization mismatch");
}

// ---------------------------------------------------------------------------
// pairing, Jordan product, Poisson bracket

inline Complex pairing(const StateDensity& rho, const AlgebraElement& A) {
  check_same_realization(rho.realization, A.realization, "pairing");
  if (rho.realization.kind == RealizationKind::Quantum) return (rho.rho() * A.op()).trace();
  const auto& g = rho.realization.grid;
  return Complex((rho.field().array() * A.field().array()).sum() * g.h_q() * g.h_p(), 0.0);
}

inline AlgebraElement jordan(const AlgebraElement& A, const AlgebraElement& B) {
  check_same_realization(A.realization, B.realization, "jordan");
  if (A.realization.kind == RealizationKind::Quantum)
    return AlgebraElement{A.realization, Matrix(0.5 * (A.op() * B.op() + B.op() * A.op()))};
  return AlgebraElement{A.realization, Field(A.field().array() * B.field().array())};
}

// 4th-order centered differences; periodic wrap or one-sided stencils at
// open boundaries.
inline Field grid_derivative(const Field& f, const GridSpec& g, bool along_q) {
  const int nq = g.n_q, np = g.n_p;
  const double h = along_q ? g.h_q() : g.h_p();
  const bool periodic = along_q ? g.periodic_q : g.periodic_p;
  const int n = along_q ? nq : np;
  Field out(nq, np);
  auto value = [&](int iq, int ip) { return f(iq, ip); };
  for (int iq = 0; iq < nq; ++iq)
    for (int ip = 0; ip < np; ++ip) {
      const int i = along_q ? iq : ip;
      auto at = [&](int k) {
        if (periodic) k = ((k % n) + n) % n;
        return along_q ? value(k, ip) : value(iq, k);
      };
      double v;
      if (periodic || (i >= 2 && i <= n - 3)) {
        v = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h);
      } else if (i < 2) {
        v = (-25.0 * at(i) + 48.0 * at(i + 1) - 36.0 * at(i + 2) + 16.0 * at(i + 3) -
             3.0 * at(i + 4)) /
            (12.0 * h);
      } else {
        v = (25.0 * at(i) - 48.0 * at(i - 1) + 36.0 * at(i - 2) - 16.0 * at(i - 3) +
             3.0 * at(i - 4)) /
            (12.0 * h);
      }
      out(iq, ip) = v;
    }
  return out;
}

// Quantum: {H, A} = i(HA - AH). Classical: dH/dp dA/dq - dH/dq dA/dp.
inline AlgebraElement poisson(const AlgebraElement& H, const AlgebraElement& A) {
  check_same_realization(H.realization, A.realization, "poisson");
  if (H.realization.kind == RealizationKind::Quantum)
    return AlgebraElement{H.realization, Matrix(Complex(0, 1) * (H.op() * A.op() - A.op() * H.op()))};
  const auto& g = H.realization.grid;
  Field dHq = grid_derivative(H.field(), g, true), dHp = grid_derivative(H.field(), g, false);
  Field dAq = grid_derivative(A.field(), g, true), dAp = grid_derivative(A.field(), g, false);
  return AlgebraElement{H.realization,
                        Field(dHp.array() * dAq.array() - dHq.array() * dAp.array())};
}

// ---------------------------------------------------------------------------
// polynomial Hamiltonian functionals

// Family {W^(m)} of symmetric interaction tensors, m = 1..N (N <= 3).
// Quantum tensors are dense operators on the full m-th power; classical
// kernels are a grid field (m = 1) and a cells x cells matrix (m = 2).
// Optional scalar modulations s_m(t) multiply each degree.
struct HamiltonianFunctionalSpec {
  AlgebraRealization realization;
  int N = 1;
  std::vector<Matrix> W;                         // quantum, W[m-1] on power m
  Field classicalW1;                             // classical one-body field
  RealMatrix classicalW2;                        // classical two-body kernel (may be empty)
  std::vector<std::function<double(double)>> modulation;  // optional, per degree

  double scale(int m, double t) const {
    if (modulation.empty()) return 1.0;
    const auto& f = modulation[size_t(m - 1)];
    return f ? f(t) : 1.0;
  }
  bool time_dependent() const {
    for (const auto& f : modulation)
      if (f) return true;
    return false;
  }
};

// Invariance under adjacent transpositions (they generate the full
// permutation group).
inline bool commutes_with_permutations(const Matrix& W, int d, int m, double tol = kCommutationTol) {
  if (m <= 1) return true;
  const long D = ipow(d, m);
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  for (int s = 0; s + 1 < m; ++s) {
    std::vector<int> pi(m);
    std::iota(pi.begin(), pi.end(), 0);
    std::swap(pi[s], pi[s + 1]);
    for (long x = 0; x < D; ++x) {
      const long px = permute_basis_index(x, pi, d);
      for (long y = 0; y < D; ++y) {
        const long py = permute_basis_index(y, pi, d);
        if (std::abs(W(px, py) - W(x, y)) > tol * scale) return false;
      }
    }
  }
  return true;
}

inline HamiltonianFunctionalSpec make_quantum_spec(const AlgebraRealization& r,
                                                   std::vector<Matrix> W) {
  require(r.kind == RealizationKind::Quantum, "make_quantum_spec: quantum realization required");
  require(!W.empty() && W.size() <= 3, "make_quantum_spec: degree must be 1..3");
  const Matrix J1 = r.metric.J;
  for (size_t m = 1; m <= W.size(); ++m) {
    const Matrix& Wm = W[m - 1];
    require(long(Wm.rows()) == ipow(r.d, int(m)), "make_quantum_spec: W^(m) dimension mismatch");
    require(commutes_with_permutations(Wm, r.d, int(m)),
            "make_quantum_spec: W^(" + std::to_string(m) + ") is not permutation-symmetric");
    const Matrix Jm = r.metric.identity ? Matrix() : kron_power(J1, int(m));
    const bool herm = r.metric.identity
                          ? (Wm - Wm.adjoint()).cwiseAbs().maxCoeff() <=
                                kHermiticityTol * std::max(1.0, Wm.cwiseAbs().maxCoeff())
                          : is_metric_hermitian(Wm, Jm);
    require(herm, "make_quantum_spec: W^(" + std::to_string(m) + ") is not metric-Hermitian");
  }
  HamiltonianFunctionalSpec spec;
  spec.realization = r;
  spec.N = int(W.size());
  spec.W = std::move(W);
  return spec;
}

inline HamiltonianFunctionalSpec make_classical_spec(const AlgebraRealization& r, Field W1,
                                                     RealMatrix W2 = RealMatrix()) {
  require(r.kind == RealizationKind::Classical, "make_classical_spec: classical realization required");
  require(W1.rows() == r.grid.n_q && W1.cols() == r.grid.n_p, "make_classical_spec: W1 shape mismatch");
  HamiltonianFunctionalSpec spec;
  spec.realization = r;
  spec.N = 1;
  spec.classicalW1 = std::move(W1);
  if (W2.size() > 0) {
    require(W2.rows() == r.grid.cells() && W2.cols() == r.grid.cells(),
            "make_classical_spec: W2 kernel shape mismatch");
    require((W2 - W2.transpose()).cwiseAbs().maxCoeff() <=
                kCommutationTol * std::max(1.0, W2.cwiseAbs().maxCoeff()),
            "make_classical_spec: W2 kernel must be symmetric");
    spec.classicalW2 = std::move(W2);
    spec.N = 2;
  }
  return spec;
}

inline Eigen::VectorXd flatten(const Field& f) {
  Eigen::VectorXd v(f.size());
  long k = 0;
  for (int iq = 0; iq < f.rows(); ++iq)
    for (int ip = 0; ip < f.cols(); ++ip) v(k++) = f(iq, ip);
  return v;
}

inline Field unflatten(const Eigen::VectorXd& v, const GridSpec& g) {
  Field f(g.n_q, g.n_p);
  long k = 0;
  for (int iq = 0; iq < g.n_q; ++iq)
    for (int ip = 0; ip < g.n_p; ++ip) f(iq, ip) = v(k++);
  return f;
}

// gamma(t, rho) = sum_m s_m(t)/m! <rho^{tensor m}, W^(m)>.
inline double gamma_eval(const HamiltonianFunctionalSpec& spec, const StateDensity& rho,
                         double t = 0.0) {
  check_same_realization(spec.realization, rho.realization, "gamma_eval");
  Complex acc(0, 0);
  if (spec.realization.kind == RealizationKind::Quantum) {
    const int d = spec.realization.d;
    for (int m = 1; m <= spec.N; ++m) {
      const Matrix full = partial_contract(spec.W[m - 1], d, m, rho.rho(), m);
      acc += spec.scale(m, t) / factorial(m) * full(0, 0);
    }
  } else {
    const auto& g = spec.realization.grid;
    const double w = g.h_q() * g.h_p();
    const Eigen::VectorXd r = flatten(rho.field());
    acc += spec.scale(1, t) * w * flatten(spec.classicalW1).dot(r);
    if (spec.N >= 2) acc += spec.scale(2, t) * 0.5 * w * w * r.dot(spec.classicalW2 * r);
  }
  require(std::abs(acc.imag()) <= 1e-10 * std::max(1.0, std::abs(acc.real())),
          "gamma_eval: non-real value");
  return acc.real();
}

// H(t, rho) = delta gamma = sum_{m=0}^{N-1} s_{m+1}(t)/m! <rho^{tensor m}, W^(m+1)>.
inline AlgebraElement vlasov_hamiltonian(const HamiltonianFunctionalSpec& spec,
                                         const StateDensity& rho, double t = 0.0) {
  check_same_realization(spec.realization, rho.realization, "vlasov_hamiltonian");
  if (spec.realization.kind == RealizationKind::Quantum) {
    const int d = spec.realization.d;
    Matrix H = Matrix::Zero(d, d);
    for (int m = 0; m < spec.N; ++m)
      H += spec.scale(m + 1, t) / factorial(m) * partial_contract(spec.W[m], d, m + 1, rho.rho(), m);
    return AlgebraElement::Quantum(spec.realization, std::move(H));
  }
  const auto& g = spec.realization.grid;
  Field H = spec.scale(1, t) * spec.classicalW1;
  if (spec.N >= 2)
    H += spec.scale(2, t) * g.h_q() * g.h_p() *
         unflatten(spec.classicalW2 * flatten(rho.field()), g);
  return AlgebraElement::Classical(spec.realization, std::move(H));
}

// {gamma, alpha}_cl(rho) = <rho, {delta gamma(rho), delta alpha(rho)}>.
inline Complex classical_bracket_functionals(const HamiltonianFunctionalSpec& gamma_spec,
                                             const HamiltonianFunctionalSpec& alpha_spec,
                                             const StateDensity& rho, double t = 0.0) {
  check_same_realization(gamma_spec.realization, alpha_spec.realization,
                         "classical_bracket_functionals");
  const AlgebraElement H = vlasov_hamiltonian(gamma_spec, rho, t);
  const AlgebraElement A = vlasov_hamiltonian(alpha_spec, rho, t);
  return pairing(rho, poisson(H, A));
}

}  // namespace unf
