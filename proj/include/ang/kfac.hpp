#pragma once

#include "ang/linalg.hpp"
#include "ang/net.hpp"

namespace ang {

/// Per-batch second moments of one layer's tape (activation and
/// pre-activation-derivative sides).
struct KroneckerFactors {
  Matrix omega_hat;  // (n_in+1) x (n_in+1) = A^T A / M
  Matrix gamma_hat;  // n_out x n_out = DS^T DS / M
  int batch_size;
};

/// Inverted damped factors for one layer.
struct FactorInverses {
  Matrix omega_inv;
  Matrix gamma_inv;
  double rho;
};

KroneckerFactors factor_stats(const LayerTape& tape);

/// (rho*I + Y^T Y / M)^-1, choosing the direct Cholesky route when M >= n
/// and the Woodbury route otherwise. Same value either way, cost differs.
Matrix damped_factor_inverse(const Matrix& Y, Damping rho);

/// Both factor inverses for one layer tape.
FactorInverses layer_factor_inverses(const LayerTape& tape, Damping rho);

/// Inverses from explicitly provided (possibly EMA-smoothed) factors.
FactorInverses invert_factors(const KroneckerFactors& f, Damping rho);

/// gamma_inv * grad * omega_inv: the Fisher-block preconditioned gradient.
Matrix kfac_direction(const Matrix& grad, const FactorInverses& inv);

}  // namespace ang
