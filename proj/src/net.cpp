#include "ang/net.hpp"

#include <cmath>
#include <random>

namespace ang {

namespace {

Matrix append_bias_column(const Matrix& X) {
  Matrix A(X.rows(), X.cols() + 1);
  A.leftCols(X.cols()) = X;
  A.col(X.cols()).setOnes();
  return A;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix P = logits;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const double mx = P.row(i).maxCoeff();
    P.row(i) = (P.row(i).array() - mx).exp();
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

// per-sample dloss/dlogits (not divided by M)
Matrix loss_delta(const Network& net, const Matrix& logits,
                  const Targets& targets) {
  if (net.loss == Loss::SoftmaxCrossEntropy) {
    if (targets.labels.size() != logits.rows())
      throw std::invalid_argument("backward: label count != batch size");
    Matrix delta = softmax_rows(logits);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const int y = targets.labels(i);
      if (y < 0 || y >= logits.cols())
        throw std::invalid_argument("backward: label out of range");
      delta(i, y) -= 1.0;
    }
    return delta;
  }
  if (targets.values.rows() != logits.rows() ||
      targets.values.cols() != logits.cols())
    throw std::invalid_argument("backward: MSE target shape mismatch");
  return logits - targets.values;
}

}  // namespace

Network make_mlp(const std::vector<int>& dims, Activation hidden,
                 Loss loss, unsigned seed) {
  if (dims.size() < 2)
    throw std::invalid_argument("make_mlp: need at least input and output dims");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Network net;
  net.hidden_activation = hidden;
  net.loss = loss;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int n_in = dims[l];
    const int n_out = dims[l + 1];
    const double scale = std::sqrt(2.0 / n_in);
    Matrix W(n_out, n_in + 1);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        W(i, j) = (j == n_in) ? 0.0 : scale * gauss(rng);
    net.layers.push_back({std::move(W)});
  }
  return net;
}

Matrix forward(const Network& net, const Matrix& X,
               std::vector<LayerTape>* tapes) {
  if (X.cols() != net.input_dim())
    throw std::invalid_argument("forward: input width != network fan-in");
  if (X.rows() < 1) throw std::invalid_argument("forward: empty batch");
  require_finite(X, "forward");

  if (tapes) {
    tapes->clear();
    tapes->reserve(net.layers.size());
  }
  Matrix h = X;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix A = append_bias_column(h);
    Matrix S = A * net.layers[l].W.transpose();
    const bool last = (l + 1 == net.layers.size());
    if (!last && net.hidden_activation == Activation::ReLU)
      h = S.cwiseMax(0.0);
    else
      h = S;
    if (tapes) tapes->push_back({std::move(A), std::move(S), {}});
  }
  return h;
}

std::vector<Matrix> backward(const Network& net, const Matrix& logits,
                             std::vector<LayerTape>& tapes,
                             const Targets& targets) {
  const std::size_t L = net.layers.size();
  if (tapes.size() != L)
    throw std::runtime_error("backward: tapes missing, run forward first");
  const Eigen::Index M = logits.rows();
  if (tapes[0].A.rows() != M)
    throw std::runtime_error("backward: tape/batch size mismatch");

  std::vector<Matrix> grads(L);
  Matrix delta = loss_delta(net, logits, targets);  // M x C, per-sample
  for (std::size_t li = L; li-- > 0;) {
    tapes[li].DS = delta;
    grads[li] = delta.transpose() * tapes[li].A / static_cast<double>(M);
    if (li > 0) {
      const Matrix& W = net.layers[li].W;
      delta = delta * W.leftCols(W.cols() - 1);  // drop bias column
      if (net.hidden_activation == Activation::ReLU)
        delta = delta.cwiseProduct(
            (tapes[li - 1].preact.array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

double batch_loss(const Network& net, const Matrix& X, const Targets& targets) {
  Matrix logits = forward(net, X);
  const Eigen::Index M = logits.rows();
  if (net.loss == Loss::SoftmaxCrossEntropy) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) {
      const double mx = logits.row(i).maxCoeff();
      const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
      const int y = targets.labels(i);
      if (y < 0 || y >= logits.cols())
        throw std::invalid_argument("batch_loss: label out of range");
      total += lse - logits(i, y);
    }
    return total / static_cast<double>(M);
  }
  return 0.5 * (logits - targets.values).squaredNorm() / static_cast<double>(M);
}

EvalResult loss_eval(const Network& net, const Matrix& X,
                     const Eigen::VectorXi& labels) {
  Matrix logits = forward(net, X);
  const Eigen::Index M = logits.rows();
  double total = 0.0;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < M; ++i) {
    const int y = labels(i);
    if (y < 0 || y >= logits.cols())
      throw std::invalid_argument("loss_eval: label out of range");
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    total += lse - logits(i, y);
    Eigen::Index argmax;
    logits.row(i).maxCoeff(&argmax);
    if (argmax == y) ++correct;
  }
  return {total / static_cast<double>(M),
          static_cast<double>(correct) / static_cast<double>(M)};
}

double finite_diff_check(Network& net, const Matrix& X,
                         const Targets& targets, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_check: eps <= 0");
  std::vector<LayerTape> tapes;
  Matrix logits = forward(net, X, &tapes);
  std::vector<Matrix> grads = backward(net, logits, tapes, targets);

  // floor the relative-error denominator at a fraction of the gradient scale:
  // below that, the central difference is dominated by rounding noise of the
  // loss itself (~1e-16 / eps absolute), not by backprop error
  double gscale = 0.0;
  for (const Matrix& g : grads) gscale = std::max(gscale, g.cwiseAbs().maxCoeff());
  const double floor = std::max(1e-8, 1e-4 * gscale);

  double worst = 0.0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix& W = net.layers[l].W;
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        const double saved = W(i, j);
        W(i, j) = saved + eps;
        const double lp = batch_loss(net, X, targets);
        W(i, j) = saved - eps;
        const double lm = batch_loss(net, X, targets);
        W(i, j) = saved;
        const double fd = (lp - lm) / (2.0 * eps);
        const double an = grads[l](i, j);
        const double denom = std::max({std::abs(fd), std::abs(an), floor});
        worst = std::max(worst, std::abs(fd - an) / denom);
      }
  }
  return worst;
}

}  // namespace ang
