#include "ang/optim.hpp"

#include <algorithm>
#include <cmath>

namespace ang {

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "kfac") return OptimizerKind::Kfac;
  if (s == "ang") return OptimizerKind::Ang;
  if (s == "ifang") return OptimizerKind::Ifang;
  if (s == "truncated-kfac" || s == "truncated_kfac")
    return OptimizerKind::TruncatedKfac;
  throw std::invalid_argument("unknown optimizer: " + s);
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Kfac: return "kfac";
    case OptimizerKind::Ang: return "ang";
    case OptimizerKind::Ifang: return "ifang";
    case OptimizerKind::TruncatedKfac: return "truncated-kfac";
  }
  return "?";
}

namespace {

void check_shapes(const Network& net, const std::vector<Matrix>& grads) {
  if (grads.size() != net.layers.size())
    throw std::invalid_argument("optimizer: gradient count != layer count");
  for (std::size_t l = 0; l < grads.size(); ++l)
    if (grads[l].rows() != net.layers[l].W.rows() ||
        grads[l].cols() != net.layers[l].W.cols())
      throw std::invalid_argument("optimizer: gradient/weight shape mismatch");
}

/// Refresh cached factor inverses every t_inv steps (always on first step).
void refresh_inverses(const Network& net, const std::vector<LayerTape>& tapes,
                      const OptimizerConfig& cfg, OptimizerState& state) {
  const bool due = state.cached_inverses.empty() ||
                   (cfg.t_inv <= 1) ||
                   (state.steps_taken % cfg.t_inv == 0);
  state.inverted_this_step = due;
  if (!due) return;

  const Damping rho(cfg.damping);
  state.cached_inverses.clear();
  state.cached_inverses.reserve(net.layers.size());
  if (cfg.factor_ema) {
    const bool first = state.ema_factors.empty();
    for (std::size_t l = 0; l < tapes.size(); ++l) {
      KroneckerFactors cur = factor_stats(tapes[l]);
      if (first) {
        state.ema_factors.push_back(cur);
      } else {
        KroneckerFactors& ema = state.ema_factors[l];
        ema.omega_hat = cfg.ema_decay * ema.omega_hat + (1.0 - cfg.ema_decay) * cur.omega_hat;
        ema.gamma_hat = cfg.ema_decay * ema.gamma_hat + (1.0 - cfg.ema_decay) * cur.gamma_hat;
        ema.batch_size = cur.batch_size;
      }
      state.cached_inverses.push_back(invert_factors(state.ema_factors[l], rho));
    }
  } else {
    for (const LayerTape& tape : tapes)
      state.cached_inverses.push_back(layer_factor_inverses(tape, rho));
  }
}

double scheduled_lambda(const OptimizerConfig& cfg, const StepContext& ctx) {
  if (cfg.fixed_lambda >= 0.0) return cfg.fixed_lambda;
  return lambda_schedule(cfg.schedule, static_cast<double>(ctx.step_index),
                         static_cast<double>(ctx.total_steps), cfg.schedule_k);
}

/// Shared ANG/IFANG step body; `precondition` maps (layer, grad) to the
/// preconditioned gradient G⁻¹∇L. The blend works on t = −∇L and
/// g_n = −G⁻¹∇L, but negation commutes exactly with the linear combination,
/// so the update is applied as a single fused subtraction without
/// materializing either negated matrix.
template <typename Precondition>
BlendState blended_step(Network& net, const std::vector<Matrix>& grads,
                        const OptimizerConfig& cfg, const StepContext& ctx,
                        Precondition&& precondition) {
  check_shapes(net, grads);
  const double lambda = scheduled_lambda(cfg, ctx);
  BlendState bs;
  bs.schedule = cfg.schedule;
  bs.lambda_blend = lambda;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Matrix& grad = grads[l];
    const double tn = grad.norm();
    if (tn == 0.0) continue;  // degenerate layer, skip the blend
    Matrix g_d = precondition(l, grad);  // = −g_n
    const double gn = g_d.norm();
    const double cosine = grad.cwiseProduct(g_d).sum() / (tn * gn);
    bs.amplitude = gn;
    if (cosine <= 0.0) {
      // pure Euclidean direction with natural magnitude
      bs.omega_angle = std::acos(std::clamp(cosine, -1.0 + 1e-12, 1.0 - 1e-12));
      net.layers[l].W -= (ctx.eta * gn / tn) * grad;
    } else if (lambda == 0.0) {
      bs.omega_angle = 0.0;
      net.layers[l].W -= ctx.eta * g_d;  // identical arithmetic to kfac_step
    } else {
      const double omega =
          std::acos(std::clamp(cosine, -1.0 + 1e-12, 1.0 - 1e-12));
      bs.omega_angle = omega;
      const double sin_omega = std::sin(omega);
      if (sin_omega < 1e-6) {
        // near-parallel degeneracy: renormalized linear blend
        Matrix lin = (1.0 - lambda) * g_d + (lambda * gn / tn) * grad;
        const double ln = lin.norm();
        net.layers[l].W -= (ctx.eta * gn / (ln == 0.0 ? 1.0 : ln)) * lin;
      } else {
        const double wn = std::sin((1.0 - lambda) * omega) / sin_omega;
        const double we = std::sin(lambda * omega) / sin_omega;
        net.layers[l].W -= (ctx.eta * wn) * g_d + (ctx.eta * we * gn / tn) * grad;
      }
    }
  }
  return bs;
}

}  // namespace

void sgd_step(Network& net, const std::vector<Matrix>& grads, double eta) {
  check_shapes(net, grads);
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    net.layers[l].W -= eta * grads[l];
}

void kfac_step(Network& net, const std::vector<LayerTape>& tapes,
               const std::vector<Matrix>& grads, const OptimizerConfig& cfg,
               OptimizerState& state, const StepContext& ctx) {
  check_shapes(net, grads);
  refresh_inverses(net, tapes, cfg, state);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix dir = kfac_direction(grads[l], state.cached_inverses[l]);
    net.layers[l].W -= ctx.eta * dir;
  }
  ++state.steps_taken;
}

BlendState ang_step(Network& net, const std::vector<LayerTape>& tapes,
                    const std::vector<Matrix>& grads,
                    const OptimizerConfig& cfg, OptimizerState& state,
                    const StepContext& ctx) {
  refresh_inverses(net, tapes, cfg, state);
  BlendState bs = blended_step(net, grads, cfg, ctx, [&](std::size_t l, const Matrix& t) {
    return kfac_direction(t, state.cached_inverses[l]);
  });
  ++state.steps_taken;
  return bs;
}

BlendState ifang_step(Network& net, const std::vector<LayerTape>& tapes,
                      const std::vector<Matrix>& grads,
                      const OptimizerConfig& cfg, OptimizerState& state,
                      const StepContext& ctx) {
  const Damping rho(cfg.damping);
  state.inverted_this_step = true;  // every IFANG step rebuilds its factors
  BlendState bs = blended_step(net, grads, cfg, ctx, [&](std::size_t l, const Matrix& t) {
    return ifang_direction(t, tapes[l], cfg.s_prime, rho, cfg.ifang_normalize);
  });
  ++state.steps_taken;
  return bs;
}

void truncated_step(Network& net, const std::vector<LayerTape>& tapes,
                    const std::vector<Matrix>& grads,
                    const OptimizerConfig& cfg, OptimizerState& state,
                    const StepContext& ctx) {
  if (cfg.switch_epoch < 0)
    throw std::invalid_argument("truncated_step: switch_epoch not set");
  if (ctx.epoch < cfg.switch_epoch) {
    kfac_step(net, tapes, grads, cfg, state, ctx);
  } else {
    state.inverted_this_step = false;
    sgd_step(net, grads, ctx.eta);
    ++state.steps_taken;
  }
}

std::optional<BlendState> optimizer_step(Network& net,
                                         const std::vector<LayerTape>& tapes,
                                         const std::vector<Matrix>& grads,
                                         const OptimizerConfig& cfg,
                                         OptimizerState& state,
                                         const StepContext& ctx) {
  switch (cfg.kind) {
    case OptimizerKind::Sgd:
      state.inverted_this_step = false;
      sgd_step(net, grads, ctx.eta);
      ++state.steps_taken;
      return std::nullopt;
    case OptimizerKind::Kfac:
      kfac_step(net, tapes, grads, cfg, state, ctx);
      return std::nullopt;
    case OptimizerKind::Ang:
      return ang_step(net, tapes, grads, cfg, state, ctx);
    case OptimizerKind::Ifang:
      return ifang_step(net, tapes, grads, cfg, state, ctx);
    case OptimizerKind::TruncatedKfac:
      truncated_step(net, tapes, grads, cfg, state, ctx);
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace ang
