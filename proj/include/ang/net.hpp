#pragma once

#include <vector>

#include "ang/linalg.hpp"

namespace ang {

enum class Activation { ReLU, Identity };
enum class Loss { SoftmaxCrossEntropy, MeanSquaredError };

/// Fully-connected layer with the bias folded into the last weight column.
struct LinearLayer {
  Matrix W;  // n_out x (n_in + 1)
  Eigen::Index fan_in() const { return W.cols() - 1; }
  Eigen::Index fan_out() const { return W.rows(); }
};

/// Per-layer capture from one forward/backward pass.
/// A carries the layer inputs with an all-ones bias column appended;
/// DS holds per-sample loss derivatives w.r.t. the pre-activations
/// (the mean-reduction over the batch happens once, in the gradient).
struct LayerTape {
  Matrix A;        // M x (n_in + 1)
  Matrix preact;   // M x n_out, needed for the activation derivative
  Matrix DS;       // M x n_out, filled by backward()
  bool complete() const { return DS.size() > 0; }
};

struct Network {
  std::vector<LinearLayer> layers;
  Activation hidden_activation = Activation::ReLU;
  Loss loss = Loss::SoftmaxCrossEntropy;

  Eigen::Index input_dim() const { return layers.front().fan_in(); }
  Eigen::Index output_dim() const { return layers.back().fan_out(); }
};

/// Targets for the configured loss: class labels for cross-entropy,
/// a dense target matrix for MSE.
struct Targets {
  Eigen::VectorXi labels;
  Matrix values;
};

/// He-style random init, deterministic by seed.
Network make_mlp(const std::vector<int>& dims, Activation hidden,
                 Loss loss, unsigned seed);

/// Forward pass; when tapes is non-null, records A and pre-activations
/// per layer for the curvature modules.
Matrix forward(const Network& net, const Matrix& X,
               std::vector<LayerTape>* tapes = nullptr);

/// Backward pass over tapes recorded by forward() on the same batch.
/// Fills DS per layer and returns grad_l = DS_l^T A_l / M.
std::vector<Matrix> backward(const Network& net, const Matrix& logits,
                             std::vector<LayerTape>& tapes,
                             const Targets& targets);

struct EvalResult {
  double loss;
  double accuracy;
};

/// Mean loss under the network's configured loss.
double batch_loss(const Network& net, const Matrix& X, const Targets& targets);

/// Mean softmax cross-entropy and argmax accuracy.
EvalResult loss_eval(const Network& net, const Matrix& X,
                     const Eigen::VectorXi& labels);

/// Central finite differences over every weight; returns the worst
/// relative error against backward().
double finite_diff_check(Network& net, const Matrix& X,
                         const Targets& targets, double eps);

}  // namespace ang
