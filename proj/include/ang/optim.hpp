#pragma once

#include <optional>
#include <vector>

#include "ang/blend.hpp"
#include "ang/ifang.hpp"
#include "ang/kfac.hpp"
#include "ang/net.hpp"

namespace ang {

enum class OptimizerKind { Sgd, Kfac, Ang, Ifang, TruncatedKfac };

OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double learning_rate = 0.01;
  double damping = 1e-3;
  Schedule schedule = Schedule::Linear;
  double schedule_k = 3.0;
  double fixed_lambda = -1.0;  // >= 0 pins the blend coefficient (testing)
  int switch_epoch = -1;       // truncated mode only
  int t_inv = 1;               // recompute inverses every t_inv steps
  int s_prime = 1;             // IFANG group count
  bool ifang_normalize = false;
  bool factor_ema = false;
  double ema_decay = 0.95;
  std::vector<std::pair<int, double>> milestones;  // (epoch, lr multiplier)
};

/// Mutable per-run state: cached factor inverses for the t_inv knob and
/// optional EMA statistics.
struct OptimizerState {
  std::vector<FactorInverses> cached_inverses;
  std::vector<KroneckerFactors> ema_factors;
  long steps_taken = 0;
  bool inverted_this_step = false;  // whether the last step recomputed inverses
};

/// Per-step context supplied by the training loop.
struct StepContext {
  double eta;        // learning rate after milestone step-downs
  long step_index;   // global step, 0-based
  long total_steps;  // schedule horizon
  int epoch;
};

void sgd_step(Network& net, const std::vector<Matrix>& grads, double eta);

void kfac_step(Network& net, const std::vector<LayerTape>& tapes,
               const std::vector<Matrix>& grads, const OptimizerConfig& cfg,
               OptimizerState& state, const StepContext& ctx);

/// Algorithm: per layer, precondition t = -grad, blend with the scheduled
/// lambda on the sphere of radius |g_n|, then W += eta * direction.
/// Returns the blend state of the last non-degenerate layer.
BlendState ang_step(Network& net, const std::vector<LayerTape>& tapes,
                    const std::vector<Matrix>& grads,
                    const OptimizerConfig& cfg, OptimizerState& state,
                    const StepContext& ctx);

/// ang_step with the preconditioner supplied by the reduced-tape
/// inverse-free route.
BlendState ifang_step(Network& net, const std::vector<LayerTape>& tapes,
                      const std::vector<Matrix>& grads,
                      const OptimizerConfig& cfg, OptimizerState& state,
                      const StepContext& ctx);

/// K-FAC before the switch epoch, plain SGD from it onward.
void truncated_step(Network& net, const std::vector<LayerTape>& tapes,
                    const std::vector<Matrix>& grads,
                    const OptimizerConfig& cfg, OptimizerState& state,
                    const StepContext& ctx);

/// Dispatch on cfg.kind; returns the blend state when one applies.
std::optional<BlendState> optimizer_step(Network& net,
                                         const std::vector<LayerTape>& tapes,
                                         const std::vector<Matrix>& grads,
                                         const OptimizerConfig& cfg,
                                         OptimizerState& state,
                                         const StepContext& ctx);

}  // namespace ang
