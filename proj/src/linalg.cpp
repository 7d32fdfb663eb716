#include "ang/linalg.hpp"

namespace ang {

namespace {
thread_local long g_factorizations = 0;
}

long factorization_count() { return g_factorizations; }
void reset_factorization_count() { g_factorizations = 0; }

void require_finite(const Matrix& M, const std::string& what) {
  if (!M.allFinite())
    throw std::invalid_argument(what + ": non-finite entries");
}

Matrix spd_inverse(const Matrix& S, Damping damping) {
  if (S.rows() != S.cols())
    throw std::invalid_argument("spd_inverse: matrix must be square");
  require_finite(S, "spd_inverse");
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("spd_inverse: matrix not symmetric");

  const Eigen::Index n = S.rows();
  Matrix damped = S;
  damped.diagonal().array() += damping.rho;

  Eigen::LLT<Matrix> llt(damped);
  ++g_factorizations;
  if (llt.info() != Eigen::Success)
    throw NumericalError("spd_inverse: Cholesky factorization failed");

  Matrix inv = llt.solve(Matrix::Identity(n, n));
  // exact symmetry for downstream angle computations
  inv = ((inv + inv.transpose()) * 0.5).eval();
  return inv;
}

Matrix smw_inverse(const Matrix& Y, Damping damping) {
  require_finite(Y, "smw_inverse");
  const Eigen::Index m = Y.rows();
  const Eigen::Index n = Y.cols();
  const double rho = damping.rho;

  Matrix inv;
  if (m == 1) {
    // scalar inner inverse, no factorization
    const double denom = rho + Y.row(0).squaredNorm();
    inv = -(Y.transpose() * Y) / denom;
    inv.diagonal().array() += 1.0;
    inv /= rho;
  } else {
    Matrix inner = Y * Y.transpose();
    inner.diagonal().array() += rho;
    Eigen::LLT<Matrix> llt(inner);
    ++g_factorizations;
    if (llt.info() != Eigen::Success)
      throw NumericalError("smw_inverse: inner Cholesky failed");
    inv = -(Y.transpose() * llt.solve(Y));
    inv.diagonal().array() += 1.0;
    inv /= rho;
  }
  inv = ((inv + inv.transpose()) * 0.5).eval();
  return inv;
}

Matrix counted_spd_solve(const Matrix& A, const Matrix& B) {
  Eigen::LLT<Matrix> llt(A);
  ++g_factorizations;
  if (llt.info() != Eigen::Success)
    throw NumericalError("counted_spd_solve: Cholesky factorization failed");
  return llt.solve(B);
}

Matrix kron_apply(const Matrix& omega_inv, const Matrix& gamma_inv,
                  const Matrix& V) {
  if (V.rows() != gamma_inv.cols() || V.cols() != omega_inv.rows())
    throw std::invalid_argument("kron_apply: shape mismatch");
  return gamma_inv * V * omega_inv;
}

Matrix kron_explicit_oracle(const Matrix& omega, const Matrix& gamma) {
  const Eigen::Index p = omega.rows();
  const Eigen::Index q = gamma.rows();
  if (p != omega.cols() || q != gamma.cols())
    throw std::invalid_argument("kron_explicit_oracle: factors must be square");
  if (p * q > 64)
    throw std::invalid_argument("kron_explicit_oracle: test-scale only (dim <= 64)");
  Matrix K(p * q, p * q);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      K.block(i * q, j * q, q, q) = omega(i, j) * gamma;
  return K;
}

}  // namespace ang
