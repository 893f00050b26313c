#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "musculo/control/controller.hpp"
#include "musculo/control/estimator.hpp"

using namespace musculo;
using namespace musculo::control;

TEST_CASE("length compensation inverts the stiffness law") {
  const ActuationLaw law{5.0, 2.0};
  CHECK(length_compensation(5.0, law) == 0.0);
  CHECK(length_compensation(25.0, law) == doctest::Approx(-10.0));
  CHECK(length_compensation(0.0, law) == doctest::Approx(2.5));
  const Vector f{{5.0, 45.0}};
  CHECK(length_compensation(f, law) == Vector{{0.0, -20.0}});
}

TEST_CASE("muscle jacobian is the forward difference of the learned length map") {
  const RmaeModel model = RmaeModel::create(2, 3, 4);
  const Vector theta{{0.3, 0.7}};
  const Vector f{{40.0, 60.0, 20.0}};
  const double h = 1e-3;
  const Matrix g = muscle_jacobian(model, theta, f, h);
  REQUIRE(g.rows() == 3);
  REQUIRE(g.cols() == 2);
  const Vector l0 = model.reconstruct({theta, f, Vector()}, MaskMode::KnownThetaTension).length;
  for (int j = 0; j < 2; ++j) {
    Vector t = theta;
    t[j] += h;
    const Vector l1 = model.reconstruct({t, f, Vector()}, MaskMode::KnownThetaTension).length;
    CHECK(((l1 - l0) / h - g.col(j)).norm() < 1e-9);
  }
}

TEST_CASE("controller: monotone descent, clamped tensions, compensated command") {
  const RmaeModel model = RmaeModel::create(1, 3, 7);
  const ActuationLaw law;
  for (const auto& w : {ControlWeights{}, smooth_control_weights()}) {
    const auto res = solve_control(model, Vector{{0.6}}, Vector{{0.5}}, Vector::Constant(3, 30.0),
                                   RuptureState::all_healthy(3), w, law);
    double prev = res.trace.initial_loss;
    for (const double v : res.trace.epoch_losses) {
      CHECK(v <= prev);
      prev = v;
    }
    CHECK(res.f_pred.minCoeff() >= 0.0);
    CHECK((res.l_ref - (res.l_pred + length_compensation(res.f_pred, law))).norm() < 1e-12);
  }
}

TEST_CASE("controller: a ruptured muscle gets less tension") {
  const RmaeModel model = RmaeModel::create(1, 3, 7);
  const auto w = smooth_control_weights();
  const Vector f = Vector::Constant(3, 80.0);
  const auto healthy =
      solve_control(model, Vector{{0.6}}, Vector{{0.5}}, f, RuptureState::all_healthy(3), w, {});
  const auto cut = solve_control(model, Vector{{0.6}}, Vector{{0.5}}, f,
                                 RuptureState::all_healthy(3).with_ruptured(1), w, {});
  CHECK(cut.f_pred[1] < healthy.f_pred[1]);
  CHECK_THROWS_AS(solve_control(model, Vector{{0.6, 0.1}}, Vector{{0.5}}, f,
                                RuptureState::all_healthy(3), w, {}),
                  std::invalid_argument);
}

TEST_CASE("estimator A reduces to direct without rupture") {
  const RmaeModel model = RmaeModel::create(1, 3, 2);
  const Vector f{{30.0, 50.0, 10.0}};
  const Vector l{{-5.0, 3.0, 8.0}};
  CHECK(estimate_a(model, Vector{{0.4}}, f, l, RuptureState::all_healthy(3)) ==
        estimate_direct(model, f, l));
}

TEST_CASE("estimator A ignores the ruptured muscle's readings") {
  const RmaeModel model = RmaeModel::create(1, 3, 2);
  const RuptureState r = RuptureState::all_healthy(3).with_ruptured(0);
  const Vector f{{30.0, 50.0, 10.0}};
  const Vector l{{-5.0, 3.0, 8.0}};
  Vector f2 = f;
  Vector l2 = l;
  f2[0] = 170.0;
  l2[0] = -90.0;
  CHECK(estimate_a(model, Vector{{0.4}}, f, l, r) == estimate_a(model, Vector{{0.4}}, f2, l2, r));
}

TEST_CASE("estimator A' descends monotonically and ignores ruptured readings") {
  const RmaeModel model = RmaeModel::create(1, 3, 5);
  const RuptureState r = RuptureState::all_healthy(3).with_ruptured(2);
  const Vector f{{30.0, 50.0, 10.0}};
  const Vector l{{-5.0, 3.0, 8.0}};
  DescentTrace trace;
  const Vector a = estimate_a_prime(model, f, l, r, a_prime_weights(), a_prime_descent(), &trace);
  double prev = trace.initial_loss;
  for (const double v : trace.epoch_losses) {
    CHECK(v <= prev);
    prev = v;
  }
  CHECK(trace.epoch_losses.back() < trace.initial_loss);
  CHECK(a.allFinite());
}

TEST_CASE("offset re-initialization returns a finite model length") {
  const RmaeModel model = RmaeModel::create(1, 3, 5);
  const double l = reinit_offset(model, Vector{{0.4}}, Vector{{30.0, 50.0, 10.0}},
                                 Vector{{-5.0, 3.0, 8.0}}, 1, {}, {});
  CHECK(std::isfinite(l));
  CHECK_THROWS_AS(reinit_offset(model, Vector{{0.4}}, Vector::Zero(3), Vector::Zero(3), 3, {}, {}),
                  std::out_of_range);
}

TEST_CASE("estimator names") {
  for (const auto k : {EstimatorKind::Direct, EstimatorKind::A, EstimatorKind::APrime}) {
    CHECK(parse_estimator(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_estimator("b"), std::invalid_argument);
}
