#include "ang/kfac.hpp"

#include <cmath>

namespace ang {

KroneckerFactors factor_stats(const LayerTape& tape) {
  if (!tape.complete())
    throw std::invalid_argument("factor_stats: tape incomplete (no DS)");
  const Eigen::Index M = tape.A.rows();
  if (M < 1) throw std::invalid_argument("factor_stats: empty batch");
  const double inv_m = 1.0 / static_cast<double>(M);
  return {tape.A.transpose() * tape.A * inv_m,
          tape.DS.transpose() * tape.DS * inv_m, static_cast<int>(M)};
}

Matrix damped_factor_inverse(const Matrix& Y, Damping rho) {
  const Eigen::Index M = Y.rows();
  const Eigen::Index n = Y.cols();
  if (M < 1 || n < 1)
    throw std::invalid_argument("damped_factor_inverse: empty input");
  if (M >= n)
    return spd_inverse(Y.transpose() * Y / static_cast<double>(M), rho);
  return smw_inverse(Y / std::sqrt(static_cast<double>(M)), rho);
}

FactorInverses layer_factor_inverses(const LayerTape& tape, Damping rho) {
  if (!tape.complete())
    throw std::invalid_argument("layer_factor_inverses: tape incomplete");
  return {damped_factor_inverse(tape.A, rho),
          damped_factor_inverse(tape.DS, rho), rho.rho};
}

FactorInverses invert_factors(const KroneckerFactors& f, Damping rho) {
  return {spd_inverse(f.omega_hat, rho), spd_inverse(f.gamma_hat, rho),
          rho.rho};
}

Matrix kfac_direction(const Matrix& grad, const FactorInverses& inv) {
  if (grad.rows() != inv.gamma_inv.cols() || grad.cols() != inv.omega_inv.rows())
    throw std::invalid_argument("kfac_direction: gradient/factor shape mismatch");
  return kron_apply(inv.omega_inv, inv.gamma_inv, grad);
}

}  // namespace ang
