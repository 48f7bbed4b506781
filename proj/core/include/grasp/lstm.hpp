#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "grasp/features.hpp"
#include "grasp/state.hpp"

namespace grasp {

struct LstmHyperparams {
  std::size_t seq_len = 15;
  double learning_rate = 0.0005;
  std::size_t n_layers = 1;
  std::size_t epochs = 30;
  std::size_t hidden_size = 64;
  std::size_t batch_size = 32;
  double grad_clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parameter tensors of a single-layer LSTM with a linear read-out. Gate rows are
/// stacked input, forget, cell candidate, output (H rows each).
struct LstmTensors {
  Eigen::MatrixXd w_input;   // 4H x n
  Eigen::MatrixXd w_hidden;  // 4H x H
  Eigen::VectorXd bias;      // 4H
  Eigen::MatrixXd w_out;     // 4 x H
  Eigen::VectorXd b_out;     // 4

  std::size_t input_size() const noexcept { return static_cast<std::size_t>(w_input.cols()); }
  std::size_t hidden_size() const noexcept { return static_cast<std::size_t>(w_hidden.cols()); }
  std::size_t parameter_count() const noexcept;

  /// Visits every scalar parameter in a fixed order (w_input, w_hidden, bias, w_out, b_out).
  template <typename F>
  void for_each(F&& f) {
    for (Eigen::MatrixXd* m : {&w_input, &w_hidden, &w_out})
      for (Eigen::Index i = 0; i < m->size(); ++i) f(m->data()[i]);
    for (Eigen::VectorXd* v : {&bias, &b_out})
      for (Eigen::Index i = 0; i < v->size(); ++i) f(v->data()[i]);
  }

  bool operator==(const LstmTensors& o) const;
};

struct LstmModel : LstmTensors {
  static LstmModel zeros(std::size_t input_size, std::size_t hidden_size);
  /// Uniform(-1/sqrt(H), 1/sqrt(H)) for every weight and bias.
  static LstmModel random(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed);

  /// Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void validate() const;
};

struct LstmGradients : LstmTensors {
  static LstmGradients zeros_like(const LstmTensors& shape);
  double squared_norm() const;
};

/// Activations kept by the forward pass for backpropagation through time.
/// Matrices hold one column per sequence in the batch.
struct LstmCache {
  std::vector<Eigen::MatrixXd> inputs;  // per step: n x B
  std::vector<Eigen::MatrixXd> gates;   // per step: 4H x B, post-activation
  std::vector<Eigen::MatrixXd> cells;   // per step: H x B
  std::vector<Eigen::MatrixXd> cell_tanh;
  std::vector<Eigen::MatrixXd> hidden;  // per step: H x B
  Eigen::MatrixXd probabilities;        // 4 x B

  bool empty() const noexcept { return inputs.empty(); }
  std::size_t batch_size() const noexcept { return static_cast<std::size_t>(probabilities.cols()); }
};

using Probabilities = std::array<double, kNumStates>;

struct LstmForward {
  Probabilities probabilities{};
  LstmCache cache;
};

/// Runs the recurrence from zero state over a row-major (steps x n) sequence.
/// Throws std::invalid_argument if the length is not a positive multiple of n.
LstmForward lstm_forward(const LstmModel& model, std::span<const double> sequence);

/// Batched forward pass; every sequence must have the same length.
LstmCache lstm_forward_batch(const LstmModel& model, std::span<const std::span<const double>> sequences);

/// Exact gradients of the cross-entropy loss (mean over the cached batch).
/// Throws std::invalid_argument on an empty cache or a label count mismatch.
LstmGradients lstm_backward(const LstmModel& model, const LstmCache& cache,
                            std::span<const GraspState> labels);
LstmGradients lstm_backward(const LstmModel& model, const LstmCache& cache, GraspState label);

/// Mean cross-entropy of the cached probabilities against `labels`.
double cross_entropy(const LstmCache& cache, std::span<const GraspState> labels);

/// Canonical class order tie-break.
GraspState argmax_state(const Probabilities& p) noexcept;

GraspState lstm_predict(const LstmModel& model, std::span<const double> sequence);
std::vector<GraspState> lstm_predict(const LstmModel& model, const SequenceSet& sequences);

struct LstmTraining {
  LstmModel model;
  std::vector<double> epoch_loss;
};

/// Adam with global-norm clipping; samples are put into canonical order
/// (trial_id, end_frame, label, values) and then shuffled per epoch from (seed, epoch).
/// Throws std::invalid_argument on an empty set, a single class, or a seq_len mismatch.
LstmTraining lstm_train(const SequenceSet& sequences, const LstmHyperparams& hp);

}  // namespace grasp
