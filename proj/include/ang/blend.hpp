#pragma once

#include "ang/linalg.hpp"

namespace ang {

enum class Schedule { Linear, ExpConcave, PowerConvex };

Schedule schedule_from_string(const std::string& s);
std::string to_string(Schedule s);

/// Per-step blend bookkeeping, recorded into metrics.
struct BlendState {
  double lambda_blend = 0.0;  // in [0, 1]
  double omega_angle = 0.0;   // radians
  double amplitude = 0.0;     // norm of the preconditioned gradient
  Schedule schedule = Schedule::Linear;
};

/// Coefficients of the look-ahead estimator; the adaptive setting keeps
/// lambda1 - lambda2 = 1 exactly.
struct LookAheadCoefficients {
  double lambda1;
  double lambda2;
};

/// Throughout, `t` is the negative gradient and `g_n` the preconditioned
/// vector G^-1 t, both flattened over one layer (Frobenius norms and
/// entrywise inner products make matrices and vectors interchangeable).

/// The step amplitude: Euclidean norm of the preconditioned gradient.
double natural_norm(const Matrix& g_n);

/// lambda2 = |g_n| / |t|, lambda1 = lambda2 + 1.
LookAheadCoefficients lookahead_coefficients(const Matrix& t, const Matrix& g_n);

/// Stationary point of the look-ahead objective:
///   (1/(l1-l2)) g_n + (l2/(l1-l2)) t
Matrix closed_form_direction(const Matrix& t, const Matrix& g_n,
                             const LookAheadCoefficients& coeffs);

/// |g_n| * [(1-lambda) g_n/|g_n| + lambda t/|t|]. Norm never exceeds |g_n|.
Matrix linear_blend(const Matrix& t, const Matrix& g_n, double lambda_blend);

/// Angle between t and g_n, cosine clamped into (-1+1e-12, 1-1e-12).
double blend_angle(const Matrix& t, const Matrix& g_n);

/// Spherical interpolation between the normalized natural and Euclidean
/// directions, rescaled to |g_n|. Endpoints are exact: lambda 0 returns g_n,
/// lambda 1 returns (|g_n|/|t|) t. Near-parallel inputs (sin(omega) < 1e-6)
/// fall back to a renormalized linear blend.
Matrix slerp_blend(const Matrix& t, const Matrix& g_n, double lambda_blend);

/// Blend coefficient over training progress: 0 at step 0, 1 at step T,
/// monotone. Linear: t/T. ExpConcave: (1 - e^(-k t/T)) / (1 - e^(-k)).
/// PowerConvex: (t/T)^2. Steps past T clamp to 1.
double lambda_schedule(Schedule strategy, double step, double total,
                       double k = 3.0);

}  // namespace ang
