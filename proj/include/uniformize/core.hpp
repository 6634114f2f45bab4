#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace unf {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Library-wide numerical tolerances. Functions that check a structural
// property (commutation, Hermiticity, unitarity) take one of these as a
// defaulted argument so individual call sites can override.
inline constexpr double kCommutationTol = 1e-10;
inline constexpr double kHermiticityTol = 1e-10;
inline constexpr double kUnitarityTol = 1e-9;
inline constexpr double kExactTol = 1e-12;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a numerical guard trips (conservation drift, CFL bound,
// truncation-tail weight, non-convergence) as opposed to invalid input.
class GuardError : public Error {
 public:
  explicit GuardError(const std::string& what) : Error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

inline void check_finite(const Matrix& m, const std::string& who) {
  if (!m.allFinite()) throw Error(who + ": non-finite entries");
}

inline void check_finite(const Vector& v, const std::string& who) {
  if (!v.allFinite()) throw Error(who + ": non-finite entries");
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * double(n - i) / double(i + 1);
  return r;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= double(i);
  return r;
}

inline long ipow(long base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace unf
