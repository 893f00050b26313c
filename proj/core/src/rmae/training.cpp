#include "musculo/rmae/training.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>
#include <numeric>
#include <stdexcept>

namespace musculo {

namespace {

constexpr double kNormFloor = 1e-12;

// Adds w * |residual| to the loss and w * residual / |residual| to grad.
double norm_term(const Eigen::Ref<const Vector>& residual, double w, Eigen::Ref<Vector> grad_col,
                 bool want_grad) {
  const double n = residual.norm();
  if (want_grad && n > kNormFloor) grad_col += (w / n) * residual;
  return w * n;
}

struct Batch {
  Matrix inputs;
  Matrix targets;
  Matrix length_weights;
};

Batch gather(const std::vector<TrainingRow>& rows, const std::vector<std::size_t>& idx,
             std::size_t begin, std::size_t end) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  const auto& first = rows[idx[begin]];
  Batch b{Matrix(first.input.size(), n), Matrix(first.target.size(), n),
          Matrix(first.length_weights.size(), n)};
  for (Eigen::Index c = 0; c < n; ++c) {
    const auto& row = rows[idx[begin + static_cast<std::size_t>(c)]];
    b.inputs.col(c) = row.input;
    b.targets.col(c) = row.target;
    b.length_weights.col(c) = row.length_weights;
  }
  return b;
}

// One Adam step on a minibatch through encoder and decoder.
double train_step(RmaeModel& model, const Batch& batch, const LossWeights& w,
                  nn::AdamState& enc_state, nn::AdamState& dec_state) {
  auto enc = nn::forward(model.encoder(), batch.inputs);
  auto dec = nn::forward(model.decoder(), enc.output);
  Matrix grad;
  const double loss = reconstruction_loss(dec.output, batch.targets, batch.length_weights,
                                          model.joints(), model.muscles(), w, &grad);
  if (!std::isfinite(loss)) throw std::domain_error("training loss became non-finite");
  auto dec_back = nn::backward(dec.tape, model.decoder(), grad);
  auto enc_back = nn::backward(enc.tape, model.encoder(), dec_back.input_grads);
  nn::adam_step(model.decoder(), dec_back.param_grads, dec_state);
  nn::adam_step(model.encoder(), enc_back.param_grads, enc_state);
  return loss;
}

std::vector<TrainingRow> rows_for_modes(const RmaeModel& model, const std::vector<SensorTriple>& data,
                                        const std::vector<MaskMode>& modes) {
  std::vector<TrainingRow> rows;
  rows.reserve(data.size());
  const Vector ones = Vector::Ones(model.muscles());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SensorTriple s = scale(data[i], ScaleDirection::ToNetwork, model.scaling());
    rows.push_back({model.assemble_input(s, modes[i]), flatten(s), ones, modes[i]});
  }
  return rows;
}

}  // namespace

double reconstruction_loss(const Matrix& pred, const Matrix& target, const Matrix& length_weights,
                           int joints, int muscles, const LossWeights& w, Matrix* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      pred.rows() != joints + 2 * muscles || length_weights.rows() != muscles ||
      length_weights.cols() != pred.cols()) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch");
  }
  const auto n = pred.cols();
  if (n == 0) throw std::invalid_argument("reconstruction_loss: empty batch");
  const Matrix residual = pred - target;
  const bool want_grad = grad != nullptr;
  if (want_grad) grad->setZero(pred.rows(), n);
  Vector scratch = Vector::Zero(pred.rows());
  double total = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    scratch.setZero();
    total += norm_term(residual.col(c).segment(0, joints), w.theta, scratch.segment(0, joints),
                       want_grad);
    total += norm_term(residual.col(c).segment(joints, muscles), w.tension,
                       scratch.segment(joints, muscles), want_grad);
    const Vector masked_l =
        residual.col(c).segment(joints + muscles, muscles).cwiseProduct(length_weights.col(c));
    Vector gl = Vector::Zero(muscles);
    total += norm_term(masked_l, w.length, gl, want_grad);
    if (want_grad) {
      // d|r*x|/dx = r * (r*x)/|r*x|
      scratch.segment(joints + muscles, muscles) = gl.cwiseProduct(length_weights.col(c));
      grad->col(c) = scratch / static_cast<double>(n);
    }
  }
  return total / static_cast<double>(n);
}

double ChannelErrors::max() const { return std::max({theta, tension, length}); }

ChannelErrors channel_errors(const RmaeModel& model, const std::vector<SensorTriple>& data) {
  if (data.empty()) throw std::invalid_argument("channel_errors: empty dataset");
  ChannelErrors e;
  const int d = model.joints();
  const int m = model.muscles();
  for (const auto mode : kAllMaskModes) {
    std::vector<MaskMode> modes(data.size(), mode);
    const auto rows = rows_for_modes(model, data, modes);
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto batch = gather(rows, idx, 0, rows.size());
    const Matrix residual = model.reconstruct_batch(batch.inputs) - batch.targets;
    for (Eigen::Index c = 0; c < residual.cols(); ++c) {
      e.theta += residual.col(c).segment(0, d).norm();
      e.tension += residual.col(c).segment(d, m).norm();
      e.length += residual.col(c).segment(d + m, m).norm();
    }
  }
  const double denom = 3.0 * static_cast<double>(data.size());
  e.theta /= denom;
  e.tension /= denom;
  e.length /= denom;
  return e;
}

void split_dataset(const std::vector<SensorTriple>& data, double holdout_fraction,
                   std::uint64_t seed, std::vector<SensorTriple>& train,
                   std::vector<SensorTriple>& test) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_test = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(data.size())));
  if (data.size() >= 2 && holdout_fraction > 0.0) n_test = std::max<std::size_t>(n_test, 1);
  n_test = std::min(n_test, data.size() - 1);
  train.clear();
  test.clear();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    (k < idx.size() - n_test ? train : test).push_back(data[idx[k]]);
  }
}

RmaeModel train_initial(const RmaeModel& model, const std::vector<SensorTriple>& data,
                        const InitialTrainingOptions& options, TrainingReport* report) {
  if (data.empty()) throw std::invalid_argument("train_initial: empty dataset");
  if (options.batch_size <= 0 || options.epochs <= 0) {
    throw std::invalid_argument("train_initial: batch size and epochs must be positive");
  }
  std::vector<SensorTriple> train;
  std::vector<SensorTriple> test;
  split_dataset(data, options.holdout_fraction, options.seed, train, test);
  // a single-sample dataset is its own test set
  if (test.empty()) test = train;

  std::vector<TrainingRow> test_rows;
  for (const auto mode : kAllMaskModes) {
    auto rows = rows_for_modes(model, test, std::vector<MaskMode>(test.size(), mode));
    test_rows.insert(test_rows.end(), rows.begin(), rows.end());
  }

  std::mt19937_64 rng(options.seed + 1);
  std::uniform_int_distribution<int> pick_mode(0, 2);

  RmaeModel current = model;
  RmaeModel best = model;
  auto enc_state = nn::AdamState::for_network(current.encoder(), options.adam);
  auto dec_state = nn::AdamState::for_network(current.decoder(), options.adam);

  TrainingReport local;
  local.train_size = train.size();
  local.test_size = test.size();
  local.best_test_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const double lr0 = options.adam.learning_rate;
  const double lr1 = options.final_learning_rate > 0.0 ? options.final_learning_rate : lr0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // geometric schedule from lr0 at the first epoch to lr1 at the last
    const double frac = options.epochs > 1 ? static_cast<double>(epoch) / (options.epochs - 1) : 0.0;
    enc_state.config.learning_rate = lr0 * std::pow(lr1 / lr0, frac);
    dec_state.config.learning_rate = enc_state.config.learning_rate;
    std::vector<MaskMode> modes(train.size());
    for (auto& m : modes) m = kAllMaskModes[static_cast<std::size_t>(pick_mode(rng))];
    const auto rows = rows_for_modes(current, train, modes);
    std::shuffle(order.begin(), order.end(), rng);

    double sum = 0.0;
    int steps = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
      sum += train_step(current, gather(rows, order, begin, end), options.weights, enc_state,
                        dec_state);
      ++steps;
    }
    const double test_loss = rows_loss(current, test_rows, options.weights);
    local.epochs.push_back({epoch, sum / steps, test_loss});
    if (test_loss < local.best_test_loss) {
      local.best_test_loss = test_loss;
      local.best_epoch = epoch;
      best = current;
    }
    if (options.on_epoch) options.on_epoch(local.epochs.back());
  }
  if (report != nullptr) *report = std::move(local);
  return best;
}

double rows_loss(const RmaeModel& model, const std::vector<TrainingRow>& rows,
                 const LossWeights& w) {
  if (rows.empty()) throw std::invalid_argument("rows_loss: no rows");
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto b = gather(rows, idx, 0, rows.size());
  return reconstruction_loss(model.reconstruct_batch(b.inputs), b.targets, b.length_weights,
                             model.joints(), model.muscles(), w, nullptr);
}

TrainingBuffer::TrainingBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("TrainingBuffer capacity must be positive");
}

void TrainingBuffer::push(const SensorTriple& sample) {
  if (samples_.size() == capacity_) samples_.pop_front();
  samples_.push_back(sample);
}

std::vector<TrainingRow> expand_sample(const RmaeModel& model, const SensorTriple& sample,
                                       const Vector& length_weights) {
  const SensorTriple s = scale(sample, ScaleDirection::ToNetwork, model.scaling());
  std::vector<TrainingRow> rows;
  rows.reserve(3);
  for (const auto mode : kAllMaskModes) {
    rows.push_back({model.assemble_input(s, mode), flatten(s), length_weights, mode});
  }
  return rows;
}

std::vector<TrainingRow> make_online_batch(const TrainingBuffer& buffer,
                                           const SensorTriple& latest, const RuptureState& r,
                                           const RmaeModel& model,
                                           const OnlineBatchOptions& options,
                                           std::mt19937_64& rng) {
  if (options.threshold <= 0 || options.data_count <= 0) {
    throw std::invalid_argument("make_online_batch: counts must be positive");
  }
  if (buffer.size() < static_cast<std::size_t>(options.threshold)) {
    throw std::length_error("make_online_batch: buffer holds " + std::to_string(buffer.size()) +
                            " samples, needs " + std::to_string(options.threshold));
  }
  if (r.muscles() != model.muscles()) {
    throw std::invalid_argument("make_online_batch: rupture state size mismatch");
  }
  const auto n = std::min(static_cast<std::size_t>(options.data_count), buffer.size());
  std::vector<std::size_t> all(buffer.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> picks;
  picks.reserve(n);
  std::sample(all.begin(), all.end(), std::back_inserter(picks), static_cast<std::ptrdiff_t>(n),
              rng);

  std::vector<SensorTriple> samples;
  samples.reserve(n + 2);
  for (auto i : picks) samples.push_back(buffer[i]);
  samples.push_back(latest);
  samples.push_back(SensorTriple::zeros(model.joints(), model.muscles()));

  const Vector weights = r.weights();
  const auto ruptured = r.ruptured_indices();
  std::vector<TrainingRow> rows;
  rows.reserve(3 * samples.size());
  for (auto& s : samples) {
    if (!ruptured.empty()) {
      for (int i : ruptured) s.tension(i) = 0.0;
      const Vector l_pred = model.decode_length(model.encode(s, MaskMode::KnownThetaTension));
      for (int i : ruptured) s.length(i) = l_pred(i);
    }
    auto expanded = expand_sample(model, s, weights);
    rows.insert(rows.end(), expanded.begin(), expanded.end());
  }
  return rows;
}

RmaeModel online_update(const RmaeModel& model, const std::vector<TrainingRow>& rows,
                        const OnlineUpdateOptions& options, std::mt19937_64& rng) {
  if (rows.empty()) throw std::invalid_argument("online_update: empty batch");
  if (options.batch_size <= 0 || options.epochs < 0) {
    throw std::invalid_argument("online_update: bad batch size or epoch count");
  }
  RmaeModel current = model;
  auto enc_state = nn::AdamState::for_network(current.encoder(), options.adam);
  auto dec_state = nn::AdamState::for_network(current.decoder(), options.adam);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(options.batch_size));
      train_step(current, gather(rows, order, begin, end), options.weights, enc_state, dec_state);
    }
  }
  return current;
}

}  // namespace musculo
