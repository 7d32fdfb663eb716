#include <doctest.h>

#include "ang/kfac.hpp"
#include "test_util.hpp"

using namespace ang;
using test_util::Rng;
using test_util::rel_err;

namespace {

LayerTape random_tape(Rng& rng, int M, int n_in_plus1, int n_out) {
  LayerTape tape;
  tape.A = rng.randn(M, n_in_plus1);
  tape.A.col(n_in_plus1 - 1).setOnes();
  tape.DS = rng.randn(M, n_out);
  tape.preact = Matrix::Zero(M, n_out);
  return tape;
}

}  // namespace

TEST_CASE("factor_stats: identity activations") {
  LayerTape tape;
  tape.A = Matrix::Identity(2, 2);
  tape.DS = Matrix::Zero(2, 3);
  KroneckerFactors f = factor_stats(tape);
  CHECK(rel_err(f.omega_hat, 0.5 * Matrix::Identity(2, 2)) == 0.0);
  CHECK(f.gamma_hat.norm() == 0.0);  // dead-gradient batch
  CHECK(f.batch_size == 2);
}

TEST_CASE("factor_stats matches a scalar-loop second-moment oracle") {
  Rng rng(1);
  LayerTape tape = random_tape(rng, 7, 4, 3);
  KroneckerFactors f = factor_stats(tape);
  Matrix omega = Matrix::Zero(4, 4);
  Matrix gamma = Matrix::Zero(3, 3);
  for (int m = 0; m < 7; ++m) {
    omega += tape.A.row(m).transpose() * tape.A.row(m);
    gamma += tape.DS.row(m).transpose() * tape.DS.row(m);
  }
  CHECK(rel_err(f.omega_hat, omega / 7.0) < 1e-14);
  CHECK(rel_err(f.gamma_hat, gamma / 7.0) < 1e-14);
}

TEST_CASE("factor_stats: incomplete tape rejected") {
  LayerTape tape;
  tape.A = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(factor_stats(tape), std::invalid_argument);
}

TEST_CASE("damped_factor_inverse: zero input gives I/rho on either branch") {
  for (auto [m, n] : {std::pair{8, 2}, std::pair{2, 8}}) {
    Matrix inv = damped_factor_inverse(Matrix::Zero(m, n), Damping(0.25));
    CHECK(rel_err(inv, 4.0 * Matrix::Identity(n, n)) < 1e-14);
  }
}

TEST_CASE("damped_factor_inverse: both branches match the dense oracle") {
  Rng rng(2);
  Matrix Y_tall = rng.randn(8, 2);  // direct branch
  Matrix Y_wide = Y_tall.transpose();  // SMW branch on transposed data
  for (const Matrix& Y : {Y_tall, Y_wide}) {
    const int n = static_cast<int>(Y.cols());
    Matrix inv = damped_factor_inverse(Y, Damping(0.1));
    Matrix want = spd_inverse(Y.transpose() * Y / Y.rows(), Damping(0.1));
    CHECK(rel_err(inv, want) < 1e-8);
  }
}

TEST_CASE("damped_factor_inverse: square case, branches agree") {
  Rng rng(3);
  Matrix Y = rng.randn(5, 5);
  Matrix direct = spd_inverse(Y.transpose() * Y / 5.0, Damping(0.05));
  Matrix smw = smw_inverse(Y / std::sqrt(5.0), Damping(0.05));
  CHECK(rel_err(direct, smw) < 1e-8);
  CHECK(rel_err(damped_factor_inverse(Y, Damping(0.05)), direct) < 1e-12);
}

TEST_CASE("kfac_direction: identity inverses leave gradient unchanged") {
  Rng rng(4);
  Matrix grad = rng.randn(3, 4);
  FactorInverses inv{Matrix::Identity(4, 4), Matrix::Identity(3, 3), 1.0};
  CHECK(rel_err(kfac_direction(grad, inv), grad) == 0.0);
  CHECK(kfac_direction(Matrix::Zero(3, 4), inv).norm() == 0.0);
}

TEST_CASE("kfac_direction matches the explicit Fisher-block inverse") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_in1 = rng.uniform_int(1, 6);
    const int n_out = rng.uniform_int(1, 36 / n_in1);
    const int M = rng.uniform_int(1, 12);
    LayerTape tape = random_tape(rng, M, n_in1, n_out);
    Matrix grad = rng.randn(n_out, n_in1);
    const Damping rho(0.01);

    FactorInverses inv = layer_factor_inverses(tape, rho);
    Matrix fast = kfac_direction(grad, inv);

    KroneckerFactors f = factor_stats(tape);
    Matrix omega_d = f.omega_hat + rho.rho * Matrix::Identity(n_in1, n_in1);
    Matrix gamma_d = f.gamma_hat + rho.rho * Matrix::Identity(n_out, n_out);
    Matrix K = kron_explicit_oracle(omega_d, gamma_d);
    Vector solved = K.ldlt().solve(test_util::vec(grad));
    CHECK(rel_err(fast, test_util::unvec(solved, n_out, n_in1)) < 1e-8);
  }
}

TEST_CASE("preconditioner is positive definite on gradients") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_in1 = rng.uniform_int(1, 8);
    const int n_out = rng.uniform_int(1, 8);
    LayerTape tape = random_tape(rng, rng.uniform_int(1, 16), n_in1, n_out);
    Matrix grad = rng.randn(n_out, n_in1);
    if (grad.norm() == 0.0) continue;
    FactorInverses inv = layer_factor_inverses(tape, Damping(1e-3));
    Matrix dir = kfac_direction(grad, inv);
    CHECK(grad.cwiseProduct(dir).sum() > 0.0);
  }
}

TEST_CASE("factors are a pure function of the tape") {
  Rng rng(7);
  LayerTape tape = random_tape(rng, 5, 3, 2);
  KroneckerFactors a = factor_stats(tape);
  KroneckerFactors b = factor_stats(tape);
  CHECK((a.omega_hat - b.omega_hat).norm() == 0.0);
  CHECK((a.gamma_hat - b.gamma_hat).norm() == 0.0);
}

TEST_CASE("kfac_direction: shape mismatch rejected") {
  FactorInverses inv{Matrix::Identity(4, 4), Matrix::Identity(3, 3), 1.0};
  CHECK_THROWS_AS(kfac_direction(Matrix::Zero(4, 3), inv),
                  std::invalid_argument);
}
