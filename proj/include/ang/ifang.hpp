#pragma once

#include "ang/kfac.hpp"
#include "ang/linalg.hpp"
#include "ang/net.hpp"

namespace ang {

/// Group means of A and DS rows, s_prime groups each.
struct ReducedTape {
  Matrix A_tilde;   // s' x (n_in+1)
  Matrix DS_tilde;  // s' x n_out
  int s_prime;
};

/// Collapse M rows into s_prime contiguous group means. The first
/// (M mod s_prime) groups are one row larger.
Matrix mean_reduce(const Matrix& Y, int s_prime);

ReducedTape reduce_tape(const LayerTape& tape, int s_prime);

/// Damped inverse (rho*I + Y~^T Y~)^-1 built from the reduced rows via the
/// Woodbury identity. With s' = 1 the inner inverse is a scalar reciprocal.
Matrix ifang_factor_inverse(const Matrix& Y_tilde, Damping rho);

/// Preconditions grad with both reduced-tape factor inverses. The factor
/// inverses are applied in their low-rank form, never materialized, so the
/// per-layer cost stays O(s' n^2). With `normalize` the reduced rows are
/// scaled by 1/sqrt(M) first, matching the K-FAC /M statistics.
Matrix ifang_direction(const Matrix& grad, const LayerTape& tape, int s_prime,
                       Damping rho, bool normalize = false);

}  // namespace ang
