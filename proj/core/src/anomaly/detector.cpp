#include "musculo/anomaly/detector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace musculo::anomaly {

namespace {

bool known_ruptured(const RuptureState& known, int i) {
  return i < known.muscles() && known.is_ruptured(i);
}

}  // namespace

AnomalyWindow::AnomalyWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("AnomalyWindow capacity must be positive");
}

void AnomalyWindow::push(const SensorTriple& sample) {
  if (samples_.size() == capacity_) samples_.pop_front();
  samples_.push_back(sample);
}

std::vector<Eigen::Vector2d> residuals(const RmaeModel& model, const Vector& f, const Vector& l) {
  const SensorTriple pred =
      model.decode_scaled(model.encode({Vector(), f, l}, MaskMode::KnownTensionLength));
  const auto& s = model.scaling();
  std::vector<Eigen::Vector2d> out(static_cast<std::size_t>(model.muscles()));
  for (int i = 0; i < model.muscles(); ++i) {
    out[static_cast<std::size_t>(i)] =
        Eigen::Vector2d(f[i] / s.tension - pred.tension[i], l[i] / s.length - pred.length[i]);
  }
  return out;
}

void RunningMoments::add(const Eigen::Vector2d& x) {
  ++n_;
  const Eigen::Vector2d delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_).transpose();
}

Eigen::Matrix2d RunningMoments::covariance() const {
  if (n_ < 2) return Eigen::Matrix2d::Zero();
  const Eigen::Matrix2d c = m2_ / static_cast<double>(n_ - 1);
  return 0.5 * (c + c.transpose());
}

AnomalyModel fit_residuals(const std::vector<Eigen::Vector2d>& pairs, const DetectorConfig& config) {
  if (pairs.empty()) throw std::length_error("fit_residuals: no residuals");
  RunningMoments mom;
  for (const auto& e : pairs) mom.add(e);
  AnomalyModel m;
  m.mu = mom.mean();
  const Eigen::Matrix2d cov = mom.covariance();
  // the absolute floor keeps a window of identical residuals solvable
  const double ridge = config.ridge * cov.trace() / 2.0 + 1e-12;
  m.sigma = cov + ridge * Eigen::Matrix2d::Identity();
  m.threshold = config.threshold;
  m.pairs = pairs.size();
  return m;
}

AnomalyModel rebuild_anomaly_model(const RmaeModel& model, const AnomalyWindow& window,
                                   const DetectorConfig& config, const RuptureState& known) {
  if (window.size() < config.min_samples) {
    throw std::length_error("rebuild_anomaly_model: window holds " + std::to_string(window.size()) +
                            " samples, need " + std::to_string(config.min_samples));
  }
  std::vector<Eigen::Vector2d> pairs;
  pairs.reserve(window.size() * static_cast<std::size_t>(model.muscles()));
  for (const auto& s : window.samples()) {
    const auto res = residuals(model, s.tension, s.length);
    for (int i = 0; i < model.muscles(); ++i) {
      if (!known_ruptured(known, i)) pairs.push_back(res[static_cast<std::size_t>(i)]);
    }
  }
  return fit_residuals(pairs, config);
}

double mahalanobis(const Eigen::Vector2d& e, const AnomalyModel& model) {
  const Eigen::Vector2d diff = e - model.mu;
  const Eigen::Vector2d x = model.sigma.ldlt().solve(diff);
  return std::sqrt(std::max(0.0, diff.dot(x)));
}

AnomalyReport score(const RmaeModel& model, const AnomalyModel& anomaly, const Vector& f,
                    const Vector& l, const RuptureState& known) {
  const auto res = residuals(model, f, l);
  AnomalyReport r;
  r.d.resize(model.muscles());
  for (int i = 0; i < model.muscles(); ++i) {
    r.d[i] = mahalanobis(res[static_cast<std::size_t>(i)], anomaly);
    if (r.d[i] > anomaly.threshold && !known_ruptured(known, i)) r.flagged.push_back(i);
  }
  return r;
}

void write_anomaly_header(std::ostream& os, int muscles) {
  os << "time";
  for (int i = 0; i < muscles; ++i) os << ",d" << i + 1;
  for (int i = 0; i < muscles; ++i) os << ",flag" << i + 1;
  os << '\n';
}

void write_anomaly_row(std::ostream& os, double time, const AnomalyReport& report) {
  os << time;
  for (Eigen::Index i = 0; i < report.d.size(); ++i) os << ',' << report.d[i];
  for (Eigen::Index i = 0; i < report.d.size(); ++i) {
    bool f = false;
    for (const int k : report.flagged) f = f || k == i;
    os << ',' << (f ? 1 : 0);
  }
  os << '\n';
}

}  // namespace musculo::anomaly
