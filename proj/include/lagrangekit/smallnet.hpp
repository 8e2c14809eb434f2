#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lagrangekit/optimizers.hpp"
#include "lagrangekit/problem.hpp"

namespace lagrangekit {

struct DenseNetSpec {
  std::vector<int> widths;  // input, hidden..., output
};

// Stretched-and-clamped binary relaxation. One gate per input feature and
// per hidden unit; output units are not gated.
struct GateParams {
  Vector log_alpha;
  double beta = 2.0 / 3.0;
  double gamma = -0.1;
  double zeta = 1.1;
};

// log_alpha init from a droprate d: ln((1-d)/d).
double droprate_log_alpha(double droprate);

// s = sigmoid((ln u - ln(1-u) + log_alpha) / beta)
// z = clamp(s (zeta - gamma) + gamma, 0, 1)
double hard_concrete_sample(double log_alpha, double beta, double gamma,
                            double zeta, double u);

// P(gate active) summed over gates: sum_i sigmoid(log_alpha_i -
// beta ln(-gamma/zeta)). Differentiable in log_alpha.
double expected_l0(const GateParams& gates);
Vector expected_l0_grad(const GateParams& gates);

struct DenseNet {
  DenseNetSpec spec;
  std::vector<Matrix> W;  // layer l: widths[l+1] x widths[l]
  std::vector<Vector> b;
};

DenseNet make_dense_net(const DenseNetSpec& spec, Rng& rng);

struct ClassDataset {
  Matrix X;                // n x d, row per sample
  Eigen::VectorXi labels;  // 0..k-1
  int num_classes = 0;
};

struct SparsityProblem {
  DenseNet net;
  GateParams gates;        // input gates, then hidden gates layer by layer
  ClassDataset data;
  double density_target = 0.5;

  int num_gates() const { return static_cast<int>(gates.log_alpha.size()); }
  double density() const;  // expected_l0 / num_gates
};

SparsityProblem make_sparsity_problem(const DenseNetSpec& spec,
                                      ClassDataset data, double density_target,
                                      std::uint64_t seed);

// A frozen gate realization. Stores the uniform draws through their logit
// so gradients (and finite differences) flow through log_alpha.
struct GateSample {
  Vector u_logit;  // ln u - ln(1-u) per gate
};

GateSample sample_gates(const SparsityProblem& problem, Rng& rng);

struct NetGradients {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  Vector dlog_alpha;  // cross-entropy path only
};

struct ForwardBackwardResult {
  double loss = 0.0;     // mean softmax cross-entropy over the batch
  double density = 0.0;  // expected_l0 / num_gates (closed form)
  NetGradients grads;
};

// One gated forward/backward pass over the given sample rows with a fixed
// gate realization. NaN in the forward raises EvaluationError.
ForwardBackwardResult forward_backward_with_sample(
    const SparsityProblem& problem, const std::vector<int>& batch,
    const GateSample& sample);

// Samples one gate realization per call (single-sample estimator).
ForwardBackwardResult forward_backward(const SparsityProblem& problem,
                                       const std::vector<int>& batch,
                                       Rng& rng);

// Accuracy with the deterministic test-time gates
// clamp(sigmoid(log_alpha) (zeta - gamma) + gamma, 0, 1).
double evaluate_accuracy(const SparsityProblem& problem);

struct SparsityTrainConfig {
  int epochs = 20;
  int batch = 10;
  double lr = 1e-3;  // Adam step size for model and gate parameters
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;

  enum class Mode { penalized, lagrangian } mode = Mode::penalized;
  double penalty_c = 0.0;  // penalized: coefficient on the expected L0 count
  DualOptConfig dual;      // lagrangian: dual ascent on density - target

  bool gates_frozen_at_one = false;  // train the ungated dynamics
};

struct SparsityTrainResult {
  double density = 0.0;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
  double lambda = 0.0;  // final multiplier (lagrangian mode)
};

SparsityTrainResult train_sparsity(SparsityProblem& problem,
                                   const SparsityTrainConfig& cfg);

// Plain ungated trainer with the same update order and rng usage as the
// frozen-gate mode; reference for the gate-neutrality property.
SparsityTrainResult train_ungated(DenseNet& net, const ClassDataset& data,
                                  const SparsityTrainConfig& cfg);

// IDX (big-endian magic, dims, raw bytes) loaders for the standard 28x28
// digit dataset. Pixel values are scaled to [0, 1].
ClassDataset load_idx(const std::string& images_path,
                      const std::string& labels_path, int limit = -1);

// Synthetic fallback: 10-class, 784-feature dataset whose gate-relevance
// profile spreads across the penalty range. A small set of strong class
// template features carries the label; the rest are pure noise columns
// with log-spread magnitudes, plus a few percent of label flips so the
// cross-entropy never saturates.
ClassDataset make_synthetic_digits(int n, std::uint64_t seed);

void save_checkpoint(const SparsityProblem& problem, const std::string& path);
SparsityProblem load_checkpoint(const std::string& path, ClassDataset data,
                                double density_target);

}  // namespace lagrangekit
