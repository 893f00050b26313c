#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "musculo/plant/config.hpp"
#include "musculo/plant/geometry.hpp"
#include "musculo/plant/plant.hpp"

using namespace musculo;
using namespace musculo::plant;

TEST_CASE("default elbow at theta = 0: lengths are the via-point distances") {
  const auto cfg = default_elbow_config();
  const GeoLengths g = geo_lengths(cfg, Vector::Zero(1));
  // link frame at rest: along = (0, -1), lateral = (1, 0)
  CHECK(g.abs[0] == doctest::Approx(1000.0 * std::hypot(0.04 - 0.03, 0.22 + 0.06)));
  CHECK(g.abs[1] == doctest::Approx(200.0));
  CHECK(g.abs[2] == doctest::Approx(180.0));
  CHECK(g.rel.isZero());
}

TEST_CASE("flexion shortens flexors and lengthens the extensor") {
  const auto cfg = default_elbow_config();
  const GeoLengths g = geo_lengths(cfg, Vector{{1.0}});
  CHECK(g.rel[0] < 0.0);
  CHECK(g.rel[1] < 0.0);
  CHECK(g.rel[2] > 0.0);
  const Vector t = true_lengths(cfg, Vector{{1.0}}) - true_lengths(cfg, Vector::Zero(1));
  for (int i = 0; i < 3; ++i) CHECK(std::signbit(t[i]) == std::signbit(g.rel[i]));
}

TEST_CASE("wrapped segment: clear line is straight, diametric line is a half-circle plus tangents") {
  const Eigen::Vector2d c(0.0, 0.0);
  CHECK(wrapped_segment_length({-1.0, 1.0}, {1.0, 1.0}, c, 0.5) == doctest::Approx(2.0));
  const double r = 0.5;
  // an attachment inside the cylinder goes straight
  CHECK(wrapped_segment_length({-0.2, 0.0}, {2.0, 0.0}, c, r) == doctest::Approx(2.2));
  // tangent legs of length sqrt(d^2 - r^2) plus the arc between the tangent points
  const double d = 1.0;
  const double leg = std::sqrt(d * d - r * r);
  const double arc = r * (std::numbers::pi - 2.0 * std::acos(r / d));
  CHECK(wrapped_segment_length({-d, 0.0}, {d, 0.0}, c, r) == doctest::Approx(2.0 * leg + arc));
  // forcing the long way round adds the rest of the circle
  const double ccw = wrapped_segment_length({-d, 0.0}, {d, 0.0}, c, r, WrapSide::CounterClockwise);
  const double cw = wrapped_segment_length({-d, 0.0}, {d, 0.0}, c, r, WrapSide::Clockwise);
  CHECK(ccw == doctest::Approx(cw));
  const double up_ccw =
      wrapped_segment_length({-d, 0.1}, {d, 0.1}, c, r, WrapSide::CounterClockwise);
  const double up_cw = wrapped_segment_length({-d, 0.1}, {d, 0.1}, c, r, WrapSide::Clockwise);
  CHECK(std::abs(up_ccw - up_cw) > 1e-3);
}

TEST_CASE("elastic stretch is monotone and inverted by elastic_tension") {
  const auto cfg = default_elbow_config();
  double prev = -1.0;
  for (double f = 0.0; f <= 400.0; f += 25.0) {
    const double s = elastic_stretch(cfg, 250.0, f);
    CHECK(s > prev);
    prev = s;
    CHECK(elastic_tension(cfg, 250.0, s) == doctest::Approx(f).epsilon(1e-8));
    const double h = 1e-4;
    const double num = (elastic_stretch(cfg, 250.0, f + h) - elastic_stretch(cfg, 250.0, f)) / h;
    CHECK(elastic_compliance(cfg, 250.0, f) == doctest::Approx(num).epsilon(1e-4));
  }
  CHECK(elastic_tension(cfg, 250.0, -3.0) == 0.0);
}

TEST_CASE("synthetic samples obey the static straight-line model") {
  const auto cfg = default_elbow_config();
  const auto data = synthetic_dataset(cfg, 300, 12);
  REQUIRE(data.size() == 300);
  for (const auto& s : data) {
    CHECK(within_limits(cfg, s.theta));
    CHECK(s.tension.minCoeff() >= 0.0);
    CHECK(s.tension.maxCoeff() <= cfg.f_max);
    CHECK(s == sample_static(cfg, s.theta, s.tension));
  }
  CHECK(synthetic_dataset(cfg, 5, 12)[4] == data[4]);
  CHECK_FALSE(synthetic_dataset(cfg, 5, 13)[4] == data[4]);
  CHECK_THROWS_AS(sample_static(cfg, Vector{{2.0}}, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("tension stays nonnegative under random commands") {
  for (const auto& cfg : {default_elbow_config(), planar_arm_config()}) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-80.0, 80.0);
    PlantState s = initial_state(cfg, Vector::Constant(cfg.joints(), 0.3));
    for (int k = 0; k < 30; ++k) {
      Vector cmd = s.l_ref;
      for (int i = 0; i < cmd.size(); ++i) cmd[i] += u(rng);
      s = actuate(s, cfg, cmd, 0.1);
      CHECK(s.tension.minCoeff() >= 0.0);
      CHECK(s.theta.allFinite());
      CHECK(within_limits(cfg, s.theta));
    }
  }
}

TEST_CASE("stiffness law holds tension at f_bias when the command equals the length") {
  auto cfg = default_elbow_config();
  const PlantState s0 = initial_state(cfg, Vector{{0.5}});
  for (int i = 0; i < 3; ++i) CHECK(s0.tension[i] == doctest::Approx(cfg.f_bias).epsilon(1e-6));
}

TEST_CASE("wire cut drops tension and the motor stops 100 mm past the command") {
  const auto cfg = default_elbow_config();
  PlantState s = initial_state(cfg, Vector{{0.5}});
  s = actuate(s, cfg, s.l_ref, 0.5);
  inject_rupture(s, cfg, {0, Health::WireCut, 0.0, s.time});
  CHECK(s.tension[0] == 0.0);
  const Vector cmd = s.l_ref;
  double lowest = s.motor_pos[0];
  for (int k = 0; k < 40; ++k) {
    s = actuate(s, cfg, cmd, 0.1);
    lowest = std::min(lowest, s.motor_pos[0]);
    CHECK(s.tension[0] == 0.0);
  }
  CHECK(lowest >= cmd[0] - cfg.max_overwind - 1e-9);
  CHECK_THROWS_AS(inject_rupture(s, cfg, {0, Health::WireCut, 0.0, s.time}), std::logic_error);
}

TEST_CASE("endpoint offset shifts the reported length by the offset") {
  const auto cfg = default_elbow_config();
  PlantState s = initial_state(cfg, Vector{{0.5}});
  s = actuate(s, cfg, s.l_ref, 1.0);
  const double before = s.motor_pos[1];
  inject_rupture(s, cfg, {1, Health::EndpointOffset, 57.0, s.time});
  CHECK(s.motor_pos[1] == doctest::Approx(before - 57.0));
  CHECK(s.health[1] == MuscleHealth{Health::EndpointOffset, 57.0});
  CHECK_THROWS_AS(inject_rupture(s, cfg, {2, Health::EndpointOffset, -1.0, s.time}),
                  std::invalid_argument);
}

TEST_CASE("simulation is deterministic") {
  const auto cfg = planar_arm_config();
  PlantState a = initial_state(cfg, Vector{{0.2, 0.4}});
  PlantState b = a;
  Vector cmd = a.l_ref;
  cmd[0] -= 20.0;
  a = actuate(a, cfg, cmd, 0.7);
  b = actuate(b, cfg, cmd, 0.7);
  CHECK(a.theta == b.theta);
  CHECK(a.tension == b.tension);
  CHECK(a.motor_pos == b.motor_pos);
}

TEST_CASE("stationary detector needs the full hold time") {
  StationaryDetector det(0.01, 0.2);
  for (int k = 0; k < 9; ++k) CHECK_FALSE(det.update(Vector{{0.001}}, 0.02));
  CHECK(det.update(Vector{{0.001}}, 0.02));
  CHECK_FALSE(det.update(Vector{{0.5}}, 0.02));
}

TEST_CASE("plant configs validate and round trip through JSON") {
  for (const auto& cfg : {default_elbow_config(), planar_arm_config()}) {
    CHECK_NOTHROW(cfg.validate());
    const auto back = plant_config_from_json(plant_config_to_json(cfg));
    CHECK(plant_config_to_json(back) == plant_config_to_json(cfg));
  }
  auto bad = default_elbow_config();
  bad.joint_max = {-1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("gravity torque vanishes hanging straight down") {
  const auto cfg = planar_arm_config();
  CHECK(gravity_torque(cfg, Vector::Zero(2)).norm() < 1e-12);
  CHECK(gravity_torque(default_elbow_config(), Vector{{1.0}})[0] > 0.0);
}
