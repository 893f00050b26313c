#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "musculo/anomaly/detector.hpp"
#include "musculo/anomaly/verification.hpp"

using namespace musculo;
using namespace musculo::anomaly;

TEST_CASE("Mahalanobis with identity covariance is the Euclidean distance") {
  AnomalyModel m;
  CHECK(mahalanobis({3.0, 4.0}, m) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("Mahalanobis matches the closed-form 2x2 inverse") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const double a = 0.5 + std::abs(u(rng));
    const double c = 0.5 + std::abs(u(rng));
    const double b = 0.4 * std::sqrt(a * c) * u(rng) / 2.0;
    AnomalyModel m;
    m.mu = {u(rng), u(rng)};
    m.sigma << a, b, b, c;
    const Eigen::Vector2d e(u(rng), u(rng));
    const double x = e[0] - m.mu[0];
    const double y = e[1] - m.mu[1];
    const double det = a * c - b * b;
    const double q = (c * x * x - 2.0 * b * x * y + a * y * y) / det;
    CHECK(std::abs(mahalanobis(e, m) - std::sqrt(q)) < 1e-10);
  }
}

TEST_CASE("running moments agree with a two-pass estimate") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(1.0, 2.0);
  std::vector<Eigen::Vector2d> xs;
  RunningMoments rm;
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d x(n(rng), 0.5 * n(rng));
    xs.push_back(x);
    rm.add(x);
  }
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(xs.size() - 1);
  CHECK((rm.mean() - mean).norm() < 1e-12);
  CHECK((rm.covariance() - cov).norm() < 1e-10);
  CHECK(RunningMoments{}.covariance().isZero());
}

TEST_CASE("fit adds a small ridge and rejects empty input") {
  const std::vector<Eigen::Vector2d> pairs{{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
  const AnomalyModel m = fit_residuals(pairs, {});
  CHECK(m.mu.isApprox(Eigen::Vector2d(2.0, 2.0)));
  CHECK(m.sigma.determinant() > 0.0);
  CHECK(std::isfinite(mahalanobis({0.0, 1.0}, m)));
  CHECK(m.pairs == 3);
  CHECK_THROWS_AS(fit_residuals({}, {}), std::length_error);
}

TEST_CASE("anomaly window is a 50-sample FIFO") {
  AnomalyWindow w;
  CHECK(w.capacity() == 50);
  for (int k = 0; k < 60; ++k) {
    SensorTriple t = SensorTriple::zeros(1, 1);
    t.theta[0] = k;
    w.push(t);
  }
  CHECK(w.full());
  CHECK(w.samples().front().theta[0] == 10.0);
  CHECK(w.samples().back().theta[0] == 59.0);
}

TEST_CASE("rebuild needs a full window and skips known muscles") {
  const RmaeModel model = RmaeModel::create(1, 3, 3);
  AnomalyWindow w;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 49; ++k) {
    w.push({Vector{{u(rng)}}, Vector::Constant(3, 50.0 * u(rng)), Vector::Constant(3, u(rng))});
  }
  CHECK_THROWS_AS(rebuild_anomaly_model(model, w), std::length_error);
  w.push({Vector{{0.1}}, Vector::Constant(3, 20.0), Vector::Zero(3)});
  CHECK(rebuild_anomaly_model(model, w).pairs == 150);
  const RuptureState known = RuptureState::all_healthy(3).with_ruptured(1);
  CHECK(rebuild_anomaly_model(model, w, {}, known).pairs == 100);
}

TEST_CASE("score flags only distances above the threshold and never known muscles") {
  const RmaeModel model = RmaeModel::create(1, 3, 3);
  const Vector f{{20.0, 30.0, 40.0}};
  const Vector l{{1.0, -2.0, 0.5}};
  const auto res = residuals(model, f, l);
  AnomalyModel am;
  am.mu = res[1];
  am.sigma = 1e-8 * Eigen::Matrix2d::Identity();
  const AnomalyReport rep = score(model, am, f, l);
  CHECK(rep.d[1] == doctest::Approx(0.0));
  CHECK(rep.flagged == std::vector<int>{0, 2});
  const AnomalyReport masked = score(model, am, f, l, RuptureState::all_healthy(3).with_ruptured(0));
  CHECK(masked.flagged == std::vector<int>{2});
  CHECK(masked.d[0] == rep.d[0]);
}

TEST_CASE("pull test on a cut wire reports (a)") {
  const auto cfg = plant::default_elbow_config();
  plant::PlantState s = plant::initial_state(cfg, Vector{{0.6}});
  s = plant::actuate(s, cfg, s.l_ref, 1.0);
  plant::inject_rupture(s, cfg, {2, plant::Health::WireCut, 0.0, s.time});
  s = plant::actuate(s, cfg, s.l_ref, 1.0);
  const RmaeModel model = RmaeModel::create(1, 3, 1);
  const auto out = verify_muscle(s, cfg, s.l_ref, Vector::Zero(3), 2, model, {}, {}, {});
  CHECK(out.kind == Outcome::Ruptured);
  CHECK(out.delta_f == 0.0);
  CHECK(out.finished > out.started);
}

TEST_CASE("outcomes update the adaptive state") {
  AdaptiveState st(RmaeModel::create(1, 3, 1));
  st.rupture = RuptureState::all_healthy(3);
  st.length_correction = Vector::Zero(3);
  st.buffer.push(SensorTriple::zeros(1, 3));
  st.window.push(SensorTriple::zeros(1, 3));

  apply_outcome(st, {1, Outcome::FalseAlarm});
  CHECK(st.buffer.size() == 1);
  CHECK_FALSE(st.rupture.any_ruptured());
  CHECK_FALSE(st.models.has_restore_point());

  VerificationOutcome offset{2, Outcome::OffsetUsable};
  offset.corrected_origin = 57.0;
  apply_outcome(st, offset);
  CHECK(st.length_correction[2] == 57.0);
  CHECK(st.buffer.empty());
  CHECK(st.window.size() == 0);
  CHECK(st.models.has_restore_point());

  apply_outcome(st, {0, Outcome::Ruptured});
  CHECK(st.rupture.is_ruptured(0));
  st.models.publish(RmaeModel::create(1, 3, 9));
  replace_muscle(st, 0);
  CHECK_FALSE(st.rupture.is_ruptured(0));
  CHECK(*st.models.current() == RmaeModel::create(1, 3, 1));
  CHECK_FALSE(st.paused);
}

TEST_CASE("verification records are one JSON object per line") {
  std::ostringstream os;
  VerificationOutcome o{1, Outcome::Ruptured};
  write_verification_record(os, o);
  write_verification_record(os, o);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 2);
  CHECK(s.find("\"outcome\":\"ruptured\"") != std::string::npos);
}
