#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ang {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a factorization or downstream numeric step breaks down.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown for zero-norm or otherwise unusable inputs the caller should skip.
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Additive identity regularization strength (rho * I).
struct Damping {
  double rho;
  explicit Damping(double r) : rho(r) {
    if (!(r > 0.0)) throw std::invalid_argument("Damping: rho must be > 0");
  }
};

/// Number of dense matrix factorizations executed since the last reset.
/// Incremented by every Cholesky performed in this namespace; scalar
/// reciprocals do not count. Thread-local is deliberate: training drivers
/// assert per-run counts on their own thread.
long factorization_count();
void reset_factorization_count();

/// (rho*I + S)^-1 for symmetric positive semidefinite S, via Cholesky.
/// The result is exactly symmetric.
Matrix spd_inverse(const Matrix& S, Damping damping);

/// (rho*I + Y^T Y)^-1 through the Woodbury identity:
///   (1/rho) * [I - Y^T (rho*I_m + Y Y^T)^-1 Y]
/// For a single-row Y the inner inverse is a scalar reciprocal and no
/// factorization runs.
Matrix smw_inverse(const Matrix& Y, Damping damping);

/// gamma_inv * V * omega_inv, the un-vec of (omega_inv (x) gamma_inv) vec(V)
/// under the column-major vec convention.
Matrix kron_apply(const Matrix& omega_inv, const Matrix& gamma_inv,
                  const Matrix& V);

/// Materialized Kronecker product omega (x) gamma. Test-scale only
/// (product dimension capped at 64).
Matrix kron_explicit_oracle(const Matrix& omega, const Matrix& gamma);

void require_finite(const Matrix& M, const std::string& what);

/// Cholesky solve A X = B for SPD A, counted by the factorization counter.
Matrix counted_spd_solve(const Matrix& A, const Matrix& B);

}  // namespace ang
