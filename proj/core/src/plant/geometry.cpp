#include "musculo/plant/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace musculo::plant {

namespace {

constexpr double kHalfPi = 1.5707963267948966;
constexpr double kPi = 3.141592653589793;

struct Frame {
  Eigen::Vector2d origin;
  Eigen::Vector2d along;
  Eigen::Vector2d lateral;
};

void check_theta(const PlantConfig& config, const Vector& theta) {
  if (theta.size() != config.joints()) {
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) +
                                " entries, plant has " + std::to_string(config.joints()) +
                                " joints");
  }
}

// frames[k] belongs to the link distal to joint k+1
std::vector<Frame> link_frames(const PlantConfig& config, const Vector& theta) {
  check_theta(config, theta);
  std::vector<Frame> frames;
  frames.reserve(config.links.size());
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double psi = -kHalfPi;
  for (int k = 0; k < config.joints(); ++k) {
    psi += theta[k];
    const Eigen::Vector2d u(std::cos(psi), std::sin(psi));
    const Eigen::Vector2d n(-std::sin(psi), std::cos(psi));
    frames.push_back({origin, u, n});
    origin += config.links[static_cast<std::size_t>(k)].length * u;
  }
  return frames;
}

Eigen::Vector2d to_world(const std::vector<Frame>& frames, const ViaPoint& p) {
  if (p.link == 0) return p.pos;
  const auto& f = frames[static_cast<std::size_t>(p.link - 1)];
  return f.origin + p.pos.x() * f.along + p.pos.y() * f.lateral;
}

double polyline_mm(const std::vector<Eigen::Vector2d>& pts) {
  double sum = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) sum += (pts[i] - pts[i - 1]).norm();
  return sum * 1000.0;
}

}  // namespace

std::vector<Eigen::Vector2d> joint_positions(const PlantConfig& config, const Vector& theta) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& f : link_frames(config, theta)) out.push_back(f.origin);
  return out;
}

std::vector<Eigen::Vector2d> via_point_positions(const PlantConfig& config, int muscle,
                                                 const Vector& theta) {
  if (muscle < 0 || muscle >= config.muscles()) {
    throw std::out_of_range("muscle index " + std::to_string(muscle));
  }
  const auto frames = link_frames(config, theta);
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : config.routes[static_cast<std::size_t>(muscle)].points) {
    pts.push_back(to_world(frames, p));
  }
  return pts;
}

GeoLengths geo_lengths(const PlantConfig& config, const Vector& theta) {
  const int m = config.muscles();
  GeoLengths out{Vector(m), Vector(m)};
  const Vector zero = Vector::Zero(config.joints());
  for (int i = 0; i < m; ++i) {
    out.abs[i] = polyline_mm(via_point_positions(config, i, theta));
    out.rel[i] = out.abs[i] - polyline_mm(via_point_positions(config, i, zero));
  }
  return out;
}

double wrapped_segment_length(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& centre, double radius, WrapSide side) {
  const Eigen::Vector2d p = a - centre;
  const Eigen::Vector2d q = b - centre;
  const double np = p.norm();
  const double nq = q.norm();
  const double straight = (b - a).norm();
  if (radius <= 0.0 || np <= radius || nq <= radius) return straight;
  // angle travelled around the centre from p to q in the wrapping direction
  const double ccw = std::atan2(p.x() * q.y() - p.y() * q.x(), p.dot(q));
  double beta = 0.0;
  switch (side) {
    case WrapSide::Shortest: beta = std::abs(ccw); break;
    case WrapSide::CounterClockwise: beta = ccw >= 0.0 ? ccw : ccw + 2.0 * kPi; break;
    case WrapSide::Clockwise: beta = ccw <= 0.0 ? -ccw : 2.0 * kPi - ccw; break;
  }
  const double alpha_p = std::acos(radius / np);
  const double alpha_q = std::acos(radius / nq);
  if (beta <= alpha_p + alpha_q) return straight;
  return std::sqrt(np * np - radius * radius) + std::sqrt(nq * nq - radius * radius) +
         radius * (beta - alpha_p - alpha_q);
}

Vector true_lengths(const PlantConfig& config, const Vector& theta) {
  const auto frames = link_frames(config, theta);
  const auto rest = link_frames(config, Vector::Zero(config.joints()));
  const int m = config.muscles();
  Vector out(m);
  for (int i = 0; i < m; ++i) {
    const auto& route = config.routes[static_cast<std::size_t>(i)];
    double sum = 0.0;
    for (std::size_t s = 1; s < route.points.size(); ++s) {
      const auto& pa = route.points[s - 1];
      const auto& pb = route.points[s];
      const Eigen::Vector2d a = to_world(frames, pa);
      const Eigen::Vector2d b = to_world(frames, pb);
      if (std::abs(pa.link - pb.link) == 1) {
        const auto joint = static_cast<std::size_t>(std::max(pa.link, pb.link) - 1);
        const Eigen::Vector2d ra = to_world(rest, pa) - rest[joint].origin;
        const Eigen::Vector2d rb = to_world(rest, pb) - rest[joint].origin;
        const WrapSide side = ra.x() * rb.y() - ra.y() * rb.x() >= 0.0 ? WrapSide::CounterClockwise
                                                                       : WrapSide::Clockwise;
        sum += wrapped_segment_length(a, b, frames[joint].origin, route.wrap_radius, side);
      } else {
        sum += (b - a).norm();
      }
    }
    out[i] = sum * 1000.0;
  }
  return out;
}

double elastic_stretch(const PlantConfig& config, double l_abs, double f) {
  if (!(f >= 0.0)) throw std::invalid_argument("elastic_stretch: tension must be >= 0");
  return config.k_wire * l_abs * f + config.k_nle * (1.0 - std::exp(-f / config.f0));
}

double elastic_compliance(const PlantConfig& config, double l_abs, double f) {
  return config.k_wire * l_abs + config.k_nle / config.f0 * std::exp(-f / config.f0);
}

double elastic_tension(const PlantConfig& config, double l_abs, double stretch) {
  if (!std::isfinite(stretch)) throw std::domain_error("elastic_tension: non-finite stretch");
  if (stretch <= 0.0) return 0.0;
  // stretch(f) is concave and increasing, so Newton from f = 0 approaches the
  // root monotonically from below
  double f = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double r = elastic_stretch(config, l_abs, f) - stretch;
    const double step = r / elastic_compliance(config, l_abs, f);
    f -= step;
    if (std::abs(step) <= 1e-12 * std::max(1.0, f)) break;
  }
  return std::max(f, 0.0);
}

Vector gravity_torque(const PlantConfig& config, const Vector& theta) {
  const auto frames = link_frames(config, theta);
  const int d = config.joints();
  Vector tau = Vector::Zero(d);
  for (int j = 0; j < d; ++j) {
    for (int k = j; k < d; ++k) {
      const auto& link = config.links[static_cast<std::size_t>(k)];
      const auto& f = frames[static_cast<std::size_t>(k)];
      const Eigen::Vector2d com = f.origin + link.com * f.along;
      tau[j] += link.mass * config.gravity * (com.x() - frames[static_cast<std::size_t>(j)].origin.x());
    }
  }
  return tau;
}

Matrix length_jacobian(const PlantConfig& config, const Vector& theta, LengthModel model,
                       double step) {
  const int d = config.joints();
  Matrix jac(config.muscles(), d);
  const auto eval = [&](const Vector& t) {
    return model == LengthModel::True ? true_lengths(config, t) : geo_lengths(config, t).abs;
  };
  for (int j = 0; j < d; ++j) {
    Vector hi = theta;
    Vector lo = theta;
    hi[j] += step;
    lo[j] -= step;
    jac.col(j) = (eval(hi) - eval(lo)) / (2.0 * step);
  }
  return jac;
}

Vector clamp_to_limits(const PlantConfig& config, const Vector& theta) {
  check_theta(config, theta);
  Vector out = theta;
  for (int j = 0; j < config.joints(); ++j) {
    out[j] = std::clamp(out[j], config.joint_min[static_cast<std::size_t>(j)],
                        config.joint_max[static_cast<std::size_t>(j)]);
  }
  return out;
}

bool within_limits(const PlantConfig& config, const Vector& theta, double tol) {
  if (theta.size() != config.joints()) return false;
  for (int j = 0; j < config.joints(); ++j) {
    if (!(theta[j] >= config.joint_min[static_cast<std::size_t>(j)] - tol &&
          theta[j] <= config.joint_max[static_cast<std::size_t>(j)] + tol)) {
      return false;
    }
  }
  return true;
}

}  // namespace musculo::plant
