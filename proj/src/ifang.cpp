#include "ang/ifang.hpp"

#include <cmath>

namespace ang {

Matrix mean_reduce(const Matrix& Y, int s_prime) {
  const Eigen::Index M = Y.rows();
  if (s_prime < 1 || s_prime > M)
    throw std::invalid_argument("mean_reduce: s_prime out of [1, M]");
  if (s_prime == M) return Y;

  Matrix out(s_prime, Y.cols());
  const Eigen::Index base = M / s_prime;
  const Eigen::Index extra = M % s_prime;  // first `extra` groups one larger
  Eigen::Index row = 0;
  for (Eigen::Index g = 0; g < s_prime; ++g) {
    const Eigen::Index sz = base + (g < extra ? 1 : 0);
    out.row(g) = Y.middleRows(row, sz).colwise().mean();
    row += sz;
  }
  return out;
}

ReducedTape reduce_tape(const LayerTape& tape, int s_prime) {
  if (!tape.complete())
    throw std::invalid_argument("reduce_tape: tape incomplete");
  return {mean_reduce(tape.A, s_prime), mean_reduce(tape.DS, s_prime), s_prime};
}

Matrix ifang_factor_inverse(const Matrix& Y_tilde, Damping rho) {
  return smw_inverse(Y_tilde, rho);
}

namespace {

// X * (1/rho)[I - Yt^T inner^-1 Yt] without materializing the n x n inverse.
Matrix apply_right(const Matrix& X, const Matrix& Yt, double rho) {
  const Eigen::Index s = Yt.rows();
  Matrix XYt = X * Yt.transpose();  // (rows of X) x s'
  Matrix coef;                      // XYt * inner^-1
  if (s == 1) {
    coef = XYt / (rho + Yt.row(0).squaredNorm());
  } else {
    Matrix inner = Yt * Yt.transpose();
    inner.diagonal().array() += rho;
    coef = counted_spd_solve(inner, XYt.transpose()).transpose();
  }
  return (X - coef * Yt) / rho;
}

}  // namespace

Matrix ifang_direction(const Matrix& grad, const LayerTape& tape, int s_prime,
                       Damping rho, bool normalize) {
  ReducedTape red = reduce_tape(tape, s_prime);
  if (normalize) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(tape.A.rows()));
    red.A_tilde *= scale;
    red.DS_tilde *= scale;
  }
  if (grad.cols() != red.A_tilde.cols() || grad.rows() != red.DS_tilde.cols())
    throw std::invalid_argument("ifang_direction: gradient/tape shape mismatch");
  // gamma_inv * grad * omega_inv, each factor applied in low-rank form;
  // both factor inverses are symmetric so left application is a transposed
  // right application.
  Matrix left = apply_right(grad.transpose(), red.DS_tilde, rho.rho).transpose();
  return apply_right(left, red.A_tilde, rho.rho);
}

}  // namespace ang
