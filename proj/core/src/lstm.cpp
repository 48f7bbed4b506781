#include "grasp/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "grasp/rng.hpp"

namespace grasp {

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sigmoid(const MatrixXd& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

/// Column-wise softmax.
MatrixXd softmax(const MatrixXd& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Index c = 0; c < logits.cols(); ++c) {
    const double top = logits.col(c).maxCoeff();
    const VectorXd e = (logits.col(c).array() - top).exp().matrix();
    out.col(c) = e / e.sum();
  }
  return out;
}

std::size_t steps_of(const LstmModel& model, std::span<const double> sequence) {
  const std::size_t n = model.input_size();
  if (n == 0 || sequence.empty() || sequence.size() % n != 0)
    throw std::invalid_argument("sequence of " + std::to_string(sequence.size()) +
                                " values does not fit input width " + std::to_string(n));
  return sequence.size() / n;
}

template <typename F>
void for_each_pair(LstmTensors& a, const LstmTensors& b, F&& f) {
  const auto zip = [&](auto& x, const auto& y) {
    for (Index i = 0; i < x.size(); ++i) f(x.data()[i], y.data()[i]);
  };
  zip(a.w_input, b.w_input);
  zip(a.w_hidden, b.w_hidden);
  zip(a.bias, b.bias);
  zip(a.w_out, b.w_out);
  zip(a.b_out, b.b_out);
}

/// Orders sequences by (trial_id, end_frame, label, values).
std::vector<std::size_t> canonical_sequence_order(const SequenceSet& s) {
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s.trial_ids[a] != s.trial_ids[b]) return s.trial_ids[a] < s.trial_ids[b];
    if (s.end_frames[a] != s.end_frames[b]) return s.end_frames[a] < s.end_frames[b];
    if (s.labels[a] != s.labels[b]) return s.labels[a] < s.labels[b];
    const auto x = s.sequence(a);
    const auto y = s.sequence(b);
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
  });
  return order;
}

}  // namespace

void LstmHyperparams::validate() const {
  if (seq_len < 1) throw std::invalid_argument("seq_len must be at least 1");
  if (hidden_size < 1) throw std::invalid_argument("hidden_size must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (n_layers != 1) throw std::invalid_argument("only single-layer LSTMs are supported");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(grad_clip_norm > 0.0)) throw std::invalid_argument("grad_clip_norm must be positive");
}

std::size_t LstmTensors::parameter_count() const noexcept {
  return static_cast<std::size_t>(w_input.size() + w_hidden.size() + bias.size() + w_out.size() + b_out.size());
}

bool LstmTensors::operator==(const LstmTensors& o) const {
  const auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(w_input, o.w_input) && same(w_hidden, o.w_hidden) && same(bias, o.bias) &&
         same(w_out, o.w_out) && same(b_out, o.b_out);
}

LstmModel LstmModel::zeros(std::size_t input_size, std::size_t hidden_size) {
  const auto n = static_cast<Index>(input_size);
  const auto h = static_cast<Index>(hidden_size);
  LstmModel m;
  m.w_input = MatrixXd::Zero(4 * h, n);
  m.w_hidden = MatrixXd::Zero(4 * h, h);
  m.bias = VectorXd::Zero(4 * h);
  m.w_out = MatrixXd::Zero(static_cast<Index>(kNumStates), h);
  m.b_out = VectorXd::Zero(static_cast<Index>(kNumStates));
  return m;
}

LstmModel LstmModel::random(std::size_t input_size, std::size_t hidden_size, std::uint64_t seed) {
  LstmModel m = zeros(input_size, hidden_size);
  Rng rng = make_rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> dist(-bound, bound);
  m.for_each([&](double& v) { v = dist(rng); });
  return m;
}

void LstmModel::validate() const {
  const Index h = w_hidden.cols();
  const Index n = w_input.cols();
  const auto k = static_cast<Index>(kNumStates);
  if (h < 1 || n < 1) throw std::invalid_argument("LSTM needs positive input and hidden sizes");
  if (w_input.rows() != 4 * h || w_hidden.rows() != 4 * h || bias.size() != 4 * h || w_out.rows() != k ||
      w_out.cols() != h || b_out.size() != k)
    throw std::invalid_argument("LSTM parameter shapes are inconsistent");
  bool finite = true;
  const_cast<LstmModel*>(this)->for_each([&](double& v) { finite = finite && std::isfinite(v); });
  if (!finite) throw std::invalid_argument("LSTM parameters contain non-finite values");
}

LstmGradients LstmGradients::zeros_like(const LstmTensors& shape) {
  LstmGradients g;
  g.w_input = MatrixXd::Zero(shape.w_input.rows(), shape.w_input.cols());
  g.w_hidden = MatrixXd::Zero(shape.w_hidden.rows(), shape.w_hidden.cols());
  g.bias = VectorXd::Zero(shape.bias.size());
  g.w_out = MatrixXd::Zero(shape.w_out.rows(), shape.w_out.cols());
  g.b_out = VectorXd::Zero(shape.b_out.size());
  return g;
}

double LstmGradients::squared_norm() const {
  return w_input.squaredNorm() + w_hidden.squaredNorm() + bias.squaredNorm() + w_out.squaredNorm() +
         b_out.squaredNorm();
}

LstmCache lstm_forward_batch(const LstmModel& model, std::span<const std::span<const double>> sequences) {
  if (sequences.empty()) throw std::invalid_argument("empty LSTM batch");
  const std::size_t steps = steps_of(model, sequences.front());
  for (const auto& s : sequences)
    if (s.size() != sequences.front().size()) throw std::invalid_argument("LSTM batch mixes sequence lengths");

  const auto n = static_cast<Index>(model.input_size());
  const auto h = static_cast<Index>(model.hidden_size());
  const auto batch = static_cast<Index>(sequences.size());

  LstmCache cache;
  cache.inputs.reserve(steps);
  cache.gates.reserve(steps);
  cache.cells.reserve(steps);
  cache.cell_tanh.reserve(steps);
  cache.hidden.reserve(steps);

  MatrixXd h_prev = MatrixXd::Zero(h, batch);
  MatrixXd c_prev = MatrixXd::Zero(h, batch);
  for (std::size_t t = 0; t < steps; ++t) {
    MatrixXd x(n, batch);
    for (Index b = 0; b < batch; ++b)
      x.col(b) = Eigen::Map<const VectorXd>(sequences[static_cast<std::size_t>(b)].data() + t * model.input_size(), n);

    MatrixXd pre = model.w_input * x + model.w_hidden * h_prev;
    pre.colwise() += model.bias;
    MatrixXd gates(4 * h, batch);
    gates.topRows(2 * h) = sigmoid(pre.topRows(2 * h));
    gates.middleRows(2 * h, h) = pre.middleRows(2 * h, h).array().tanh().matrix();
    gates.bottomRows(h) = sigmoid(pre.bottomRows(h));

    const auto in = gates.topRows(h).array();
    const auto forget = gates.middleRows(h, h).array();
    const auto cand = gates.middleRows(2 * h, h).array();
    const auto out = gates.bottomRows(h).array();
    MatrixXd c = (forget * c_prev.array() + in * cand).matrix();
    MatrixXd c_tanh = c.array().tanh().matrix();
    MatrixXd hidden = (out * c_tanh.array()).matrix();

    cache.inputs.push_back(std::move(x));
    cache.gates.push_back(std::move(gates));
    cache.cells.push_back(c);
    cache.cell_tanh.push_back(std::move(c_tanh));
    cache.hidden.push_back(hidden);
    h_prev = std::move(hidden);
    c_prev = std::move(c);
  }
  MatrixXd logits = model.w_out * h_prev;
  logits.colwise() += model.b_out;
  cache.probabilities = softmax(logits);
  return cache;
}

LstmForward lstm_forward(const LstmModel& model, std::span<const double> sequence) {
  const std::span<const double> batch[] = {sequence};
  LstmForward result;
  result.cache = lstm_forward_batch(model, batch);
  for (std::size_t k = 0; k < kNumStates; ++k) result.probabilities[k] = result.cache.probabilities(static_cast<Index>(k), 0);
  return result;
}

LstmGradients lstm_backward(const LstmModel& model, const LstmCache& cache, std::span<const GraspState> labels) {
  if (cache.empty()) throw std::invalid_argument("LSTM backward pass needs a forward cache");
  const auto batch = static_cast<Index>(cache.batch_size());
  if (labels.size() != static_cast<std::size_t>(batch))
    throw std::invalid_argument("label count does not match cached batch");
  const auto h = static_cast<Index>(model.hidden_size());
  const std::size_t steps = cache.inputs.size();

  LstmGradients g = LstmGradients::zeros_like(model);
  MatrixXd d_logits = cache.probabilities;
  for (Index b = 0; b < batch; ++b) d_logits(static_cast<Index>(index_of(labels[static_cast<std::size_t>(b)])), b) -= 1.0;
  d_logits /= static_cast<double>(batch);

  g.w_out = d_logits * cache.hidden.back().transpose();
  g.b_out = d_logits.rowwise().sum();
  MatrixXd d_h = model.w_out.transpose() * d_logits;
  MatrixXd d_c = MatrixXd::Zero(h, batch);
  MatrixXd d_pre(4 * h, batch);

  for (std::size_t step = steps; step-- > 0;) {
    const MatrixXd& gates = cache.gates[step];
    const auto in = gates.topRows(h).array();
    const auto forget = gates.middleRows(h, h).array();
    const auto cand = gates.middleRows(2 * h, h).array();
    const auto out = gates.bottomRows(h).array();
    const auto c_tanh = cache.cell_tanh[step].array();
    const MatrixXd c_prev = step > 0 ? cache.cells[step - 1] : MatrixXd::Zero(h, batch);

    d_c.array() += d_h.array() * out * (1.0 - c_tanh.square());
    d_pre.topRows(h) = (d_c.array() * cand * in * (1.0 - in)).matrix();
    d_pre.middleRows(h, h) = (d_c.array() * c_prev.array() * forget * (1.0 - forget)).matrix();
    d_pre.middleRows(2 * h, h) = (d_c.array() * in * (1.0 - cand.square())).matrix();
    d_pre.bottomRows(h) = (d_h.array() * c_tanh * out * (1.0 - out)).matrix();

    g.w_input.noalias() += d_pre * cache.inputs[step].transpose();
    if (step > 0) g.w_hidden.noalias() += d_pre * cache.hidden[step - 1].transpose();
    g.bias += d_pre.rowwise().sum();

    d_h.noalias() = model.w_hidden.transpose() * d_pre;
    d_c = (d_c.array() * forget).matrix();
  }
  return g;
}

LstmGradients lstm_backward(const LstmModel& model, const LstmCache& cache, GraspState label) {
  const GraspState labels[] = {label};
  return lstm_backward(model, cache, labels);
}

double cross_entropy(const LstmCache& cache, std::span<const GraspState> labels) {
  if (labels.size() != cache.batch_size()) throw std::invalid_argument("label count does not match cached batch");
  double loss = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b)
    loss -= std::log(cache.probabilities(static_cast<Index>(index_of(labels[b])), static_cast<Index>(b)));
  return loss / static_cast<double>(labels.size());
}

GraspState argmax_state(const Probabilities& p) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumStates; ++k)
    if (p[k] > p[best]) best = k;
  return static_cast<GraspState>(best);
}

GraspState lstm_predict(const LstmModel& model, std::span<const double> sequence) {
  return argmax_state(lstm_forward(model, sequence).probabilities);
}

std::vector<GraspState> lstm_predict(const LstmModel& model, const SequenceSet& sequences) {
  if (sequences.size() > 0 && sequences.width != model.input_size())
    throw std::invalid_argument("LSTM expects input width " + std::to_string(model.input_size()) + ", got " +
                                std::to_string(sequences.width));
  constexpr std::size_t kChunk = 256;
  std::vector<GraspState> out;
  out.reserve(sequences.size());
  std::vector<std::span<const double>> batch;
  for (std::size_t start = 0; start < sequences.size(); start += kChunk) {
    const std::size_t end = std::min(sequences.size(), start + kChunk);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(sequences.sequence(i));
    const LstmCache cache = lstm_forward_batch(model, batch);
    for (Index b = 0; b < cache.probabilities.cols(); ++b) {
      Probabilities p{};
      for (std::size_t k = 0; k < kNumStates; ++k) p[k] = cache.probabilities(static_cast<Index>(k), b);
      out.push_back(argmax_state(p));
    }
  }
  return out;
}

LstmTraining lstm_train(const SequenceSet& sequences, const LstmHyperparams& hp) {
  hp.validate();
  if (sequences.size() == 0) throw std::invalid_argument("LSTM training needs at least one sequence");
  if (sequences.seq_len != hp.seq_len)
    throw std::invalid_argument("sequence length " + std::to_string(sequences.seq_len) +
                                " does not match seq_len " + std::to_string(hp.seq_len));
  std::array<bool, kNumStates> present{};
  for (GraspState s : sequences.labels) present[index_of(s)] = true;
  if (std::count(present.begin(), present.end(), true) < 2)
    throw std::invalid_argument("LSTM training data contains a single class");

  LstmTraining result;
  result.model = LstmModel::random(sequences.width, hp.hidden_size, hp.seed);
  LstmModel& model = result.model;
  LstmGradients m1 = LstmGradients::zeros_like(model);
  LstmGradients m2 = LstmGradients::zeros_like(model);

  const std::vector<std::size_t> canonical = canonical_sequence_order(sequences);
  std::vector<std::size_t> order(canonical.size());
  std::vector<std::span<const double>> batch;
  std::vector<GraspState> labels;
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    order = canonical;
    Rng rng = make_rng(hp.seed ^ splitmix64(0x65706f6368ULL + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(sequences.sequence(order[i]));
        labels.push_back(sequences.labels[order[i]]);
      }
      const LstmCache cache = lstm_forward_batch(model, batch);
      loss_sum += cross_entropy(cache, labels) * static_cast<double>(labels.size());
      LstmGradients grad = lstm_backward(model, cache, labels);

      const double norm = std::sqrt(grad.squared_norm());
      const double scale = norm > hp.grad_clip_norm ? hp.grad_clip_norm / norm : 1.0;

      ++step;
      const double c1 = 1.0 - std::pow(hp.adam_beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(hp.adam_beta2, static_cast<double>(step));
      for_each_pair(m1, grad, [&](double& m, double g) { m = hp.adam_beta1 * m + (1.0 - hp.adam_beta1) * g * scale; });
      for_each_pair(m2, grad, [&](double& v, double g) {
        const double gs = g * scale;
        v = hp.adam_beta2 * v + (1.0 - hp.adam_beta2) * gs * gs;
      });
      // model -= lr * m_hat / (sqrt(v_hat) + eps)
      LstmGradients update = m1;
      for_each_pair(update, m2, [&](double& u, double v) {
        u = hp.learning_rate * (u / c1) / (std::sqrt(v / c2) + hp.adam_epsilon);
      });
      for_each_pair(model, update, [](double& p, double u) { p -= u; });
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return result;
}

}  // namespace grasp
