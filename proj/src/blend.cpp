#include "ang/blend.hpp"

#include <algorithm>
#include <cmath>

namespace ang {

Schedule schedule_from_string(const std::string& s) {
  if (s == "linear") return Schedule::Linear;
  if (s == "exp-concave" || s == "exp_concave") return Schedule::ExpConcave;
  if (s == "power-convex" || s == "power_convex") return Schedule::PowerConvex;
  throw std::invalid_argument("unknown schedule: " + s);
}

std::string to_string(Schedule s) {
  switch (s) {
    case Schedule::Linear: return "linear";
    case Schedule::ExpConcave: return "exp-concave";
    case Schedule::PowerConvex: return "power-convex";
  }
  return "?";
}

double natural_norm(const Matrix& g_n) {
  require_finite(g_n, "natural_norm");
  return g_n.norm();
}

LookAheadCoefficients lookahead_coefficients(const Matrix& t, const Matrix& g_n) {
  const double tn = t.norm();
  if (tn == 0.0) throw DegenerateInput("lookahead_coefficients: zero gradient");
  const double l2 = natural_norm(g_n) / tn;
  return {l2 + 1.0, l2};
}

Matrix closed_form_direction(const Matrix& t, const Matrix& g_n,
                             const LookAheadCoefficients& coeffs) {
  const double gap = coeffs.lambda1 - coeffs.lambda2;
  if (!(gap > 0.0))
    throw std::invalid_argument(
        "closed_form_direction: lambda1 <= lambda2, objective has no minimum");
  return (1.0 / gap) * g_n + (coeffs.lambda2 / gap) * t;
}

Matrix linear_blend(const Matrix& t, const Matrix& g_n, double lambda_blend) {
  const double tn = t.norm();
  const double gn = g_n.norm();
  if (tn == 0.0 || gn == 0.0)
    throw DegenerateInput("linear_blend: zero-norm input");
  return gn * ((1.0 - lambda_blend) / gn * g_n + lambda_blend / tn * t);
}

double blend_angle(const Matrix& t, const Matrix& g_n) {
  const double tn = t.norm();
  const double gn = g_n.norm();
  if (tn == 0.0 || gn == 0.0)
    throw DegenerateInput("blend_angle: zero-norm input");
  const double cosine = t.cwiseProduct(g_n).sum() / (tn * gn);
  return std::acos(std::clamp(cosine, -1.0 + 1e-12, 1.0 - 1e-12));
}

Matrix slerp_blend(const Matrix& t, const Matrix& g_n, double lambda_blend) {
  const double tn = t.norm();
  const double gn = g_n.norm();
  if (tn == 0.0 || gn == 0.0)
    throw DegenerateInput("slerp_blend: zero-norm input");
  if (lambda_blend == 0.0) return g_n;
  if (lambda_blend == 1.0) return (gn / tn) * t;

  const double omega = blend_angle(t, g_n);
  const double sin_omega = std::sin(omega);
  if (sin_omega < 1e-6) {
    Matrix lin = linear_blend(t, g_n, lambda_blend);
    const double ln = lin.norm();
    if (ln == 0.0) return g_n;  // exactly antipodal midpoint, cannot happen for PD preconditioners
    return (gn / ln) * lin;
  }
  const double wn = std::sin((1.0 - lambda_blend) * omega) / sin_omega;
  const double we = std::sin(lambda_blend * omega) / sin_omega;
  return gn * (wn / gn * g_n + we / tn * t);
}

double lambda_schedule(Schedule strategy, double step, double total, double k) {
  if (!(total > 0.0)) throw std::invalid_argument("lambda_schedule: total <= 0");
  if (step < 0.0) throw std::invalid_argument("lambda_schedule: negative step");
  const double x = std::min(step / total, 1.0);
  switch (strategy) {
    case Schedule::Linear:
      return x;
    case Schedule::ExpConcave:
      return (1.0 - std::exp(-k * x)) / (1.0 - std::exp(-k));
    case Schedule::PowerConvex:
      return x * x;
  }
  return x;
}

}  // namespace ang
