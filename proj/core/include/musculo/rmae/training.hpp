#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <vector>

#include "musculo/nn/adam.hpp"
#include "musculo/rmae/model.hpp"

namespace musculo {

/// Weights of the per-sample reconstruction loss
///   w_theta |theta - theta^pred| + w_f |f - f^pred| + w_l |r * (l - l^pred)|
/// where |.| is the Euclidean norm in network units.
struct LossWeights {
  double theta = 1.0;
  double tension = 10.0;
  double length = 100.0;
};

/// One supervised row in network units.
struct TrainingRow {
  Vector input;           // assembled encoder input (masked slot zero, mask bits appended)
  Vector target;          // [theta; f; l]
  Vector length_weights;  // per-muscle factor on the l residual (r, or all ones)
  MaskMode mode = MaskMode::KnownThetaTension;
};

/// Batch-mean loss over columns of `pred`/`target`. When `grad` is non-null it
/// receives dL/dpred (already divided by the batch size). A zero residual
/// contributes a zero subgradient.
double reconstruction_loss(const Matrix& pred, const Matrix& target, const Matrix& length_weights,
                           int joints, int muscles, const LossWeights& w, Matrix* grad);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

struct InitialTrainingOptions {
  int batch_size = 100;
  int epochs = 100;
  LossWeights weights;
  double holdout_fraction = 0.1;
  nn::AdamConfig adam;
  /// Learning rate reached at the last epoch by geometric decay from
  /// adam.learning_rate; <= 0 keeps the rate constant.
  double final_learning_rate = 0.0;
  std::uint64_t seed = 1;
  /// Called after every epoch; may throw to abort training.
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainingReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_test_loss = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Per-channel mean reconstruction error in network units, averaged over the
/// three mask modes: the mean over samples of |x - x^pred| for each channel.
struct ChannelErrors {
  double theta = 0.0;
  double tension = 0.0;
  double length = 0.0;
  double max() const;
};

ChannelErrors channel_errors(const RmaeModel& model, const std::vector<SensorTriple>& data);

/// Split used by train_initial: shuffle with the options' seed, last
/// holdout_fraction is the test set.
void split_dataset(const std::vector<SensorTriple>& data, double holdout_fraction,
                   std::uint64_t seed, std::vector<SensorTriple>& train,
                   std::vector<SensorTriple>& test);

/// Trains with one random mask mode per sample per epoch and returns the
/// epoch snapshot with the lowest held-out loss (all three modes per test
/// sample). Throws std::invalid_argument on an empty dataset.
RmaeModel train_initial(const RmaeModel& model, const std::vector<SensorTriple>& data,
                        const InitialTrainingOptions& options, TrainingReport* report = nullptr);

/// FIFO store of accepted online samples (physical units).
class TrainingBuffer {
 public:
  explicit TrainingBuffer(std::size_t capacity = 1000);

  void push(const SensorTriple& sample);
  void clear() { samples_.clear(); }

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return samples_.empty(); }
  const SensorTriple& operator[](std::size_t i) const { return samples_[i]; }
  const SensorTriple& latest() const { return samples_.back(); }
  const std::deque<SensorTriple>& samples() const { return samples_; }

 private:
  std::size_t capacity_;
  std::deque<SensorTriple> samples_;
};

struct OnlineBatchOptions {
  int data_count = 10;  // random buffer samples per batch
  int threshold = 10;   // buffer size that enables updates
};

/// Builds 3 * (n + 2) rows: n random buffer samples (n = min(data_count,
/// buffer size)), `latest`, and the all-zero triple, each expanded over the
/// three mask modes. For every ruptured muscle i the tension is zeroed, the
/// length replaced by the model's (theta, f) -> l prediction, and the l loss
/// weight set to 0. Throws std::length_error when the buffer holds fewer than
/// `threshold` samples.
std::vector<TrainingRow> make_online_batch(const TrainingBuffer& buffer,
                                           const SensorTriple& latest, const RuptureState& r,
                                           const RmaeModel& model,
                                           const OnlineBatchOptions& options, std::mt19937_64& rng);

/// Rows for a single physical-unit sample under all three modes.
std::vector<TrainingRow> expand_sample(const RmaeModel& model, const SensorTriple& sample,
                                       const Vector& length_weights);

struct OnlineUpdateOptions {
  int batch_size = 10;
  int epochs = 10;
  LossWeights weights;
  nn::AdamConfig adam;
};

/// Adam on the rows with fresh moment state; no model selection. Throws
/// std::invalid_argument on an empty batch and std::domain_error if the loss
/// becomes non-finite.
RmaeModel online_update(const RmaeModel& model, const std::vector<TrainingRow>& rows,
                        const OnlineUpdateOptions& options, std::mt19937_64& rng);

/// Mean loss of `rows` under `model`.
double rows_loss(const RmaeModel& model, const std::vector<TrainingRow>& rows,
                 const LossWeights& w);

}  // namespace musculo
