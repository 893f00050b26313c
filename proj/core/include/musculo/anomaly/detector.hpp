#pragma once

#include <cstddef>
#include <deque>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "musculo/rmae/model.hpp"
#include "musculo/rmae/sensor.hpp"

namespace musculo::anomaly {

inline constexpr std::size_t kDetectWindow = 50;
inline constexpr double kDetectThreshold = 30.0;

/// FIFO of the most recent sensor triples used to fit the residual model.
class AnomalyWindow {
 public:
  explicit AnomalyWindow(std::size_t capacity = kDetectWindow);

  void push(const SensorTriple& sample);
  void clear() { samples_.clear(); }
  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return samples_.size() == capacity_; }
  const std::deque<SensorTriple>& samples() const { return samples_; }

 private:
  std::size_t capacity_;
  std::deque<SensorTriple> samples_;
};

/// Per-muscle residual pairs (f - f_pred, l - l_pred) in network units, with
/// predictions from the (f, l) -> everything reconstruction.
std::vector<Eigen::Vector2d> residuals(const RmaeModel& model, const Vector& f, const Vector& l);

/// Streaming mean and covariance (Welford), unbiased normalization.
class RunningMoments {
 public:
  void add(const Eigen::Vector2d& x);
  std::size_t count() const { return n_; }
  const Eigen::Vector2d& mean() const { return mean_; }
  /// Sample covariance; zero for fewer than two points.
  Eigen::Matrix2d covariance() const;

 private:
  std::size_t n_ = 0;
  Eigen::Vector2d mean_ = Eigen::Vector2d::Zero();
  Eigen::Matrix2d m2_ = Eigen::Matrix2d::Zero();
};

struct AnomalyModel {
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();  // regularized
  double threshold = kDetectThreshold;
  std::size_t pairs = 0;
};

struct DetectorConfig {
  std::size_t min_samples = kDetectWindow;
  double threshold = kDetectThreshold;
  double ridge = 1e-6;  // times trace(Sigma)/2, added to the diagonal
};

/// Pools the residual pairs of every healthy muscle over every window sample
/// into a single 2-D Gaussian; muscles marked in `known` are left out. Throws
/// std::length_error when the window holds fewer than min_samples triples.
AnomalyModel rebuild_anomaly_model(const RmaeModel& model, const AnomalyWindow& window,
                                   const DetectorConfig& config = {},
                                   const RuptureState& known = {});

/// Same, for residual pairs that are already computed.
AnomalyModel fit_residuals(const std::vector<Eigen::Vector2d>& pairs, const DetectorConfig& config);

double mahalanobis(const Eigen::Vector2d& e, const AnomalyModel& model);

struct AnomalyReport {
  Vector d;                  // per-muscle distance
  std::vector<int> flagged;  // indices with d > threshold, ascending
};

/// Distances for every muscle; muscles already marked in `known` are never flagged.
AnomalyReport score(const RmaeModel& model, const AnomalyModel& anomaly, const Vector& f,
                    const Vector& l, const RuptureState& known = {});

/// Anomaly CSV: time, d_1..d_M, flag_1..flag_M.
void write_anomaly_header(std::ostream& os, int muscles);
void write_anomaly_row(std::ostream& os, double time, const AnomalyReport& report);

}  // namespace musculo::anomaly
