#include "musculo/plant/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace musculo::plant {

using nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("PlantConfig: " + what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

ViaPoint base(double x, double y) { return {0, Eigen::Vector2d(x, y)}; }
ViaPoint on(int link, double along, double lateral) {
  return {link, Eigen::Vector2d(along, lateral)};
}

}  // namespace

void PlantConfig::validate() const {
  require(!links.empty(), "at least one joint is required");
  require(!routes.empty(), "at least one muscle is required");
  const auto d = links.size();
  require(joint_min.size() == d && joint_max.size() == d, "joint limits must have D entries");
  for (std::size_t j = 0; j < d; ++j) {
    require(std::isfinite(joint_min[j]) && std::isfinite(joint_max[j]) &&
                joint_min[j] < joint_max[j],
            "joint limits must be finite and ordered (joint " + std::to_string(j) + ")");
    const auto& l = links[j];
    require(positive(l.length) && positive(l.inertia), "link length and inertia must be positive");
    require(std::isfinite(l.mass) && l.mass >= 0.0, "link mass must be >= 0");
    require(std::isfinite(l.com), "link COM must be finite");
  }
  for (const auto& m : routes) {
    require(m.points.size() >= 2, "muscle '" + m.name + "' needs at least two via-points");
    require(positive(m.wrap_radius), "muscle '" + m.name + "' wrap radius must be positive");
    for (const auto& p : m.points) {
      require(p.link >= 0 && static_cast<std::size_t>(p.link) <= d,
              "muscle '" + m.name + "' via-point link index out of range");
      require(p.pos.allFinite(), "muscle '" + m.name + "' via-point not finite");
    }
  }
  require(positive(damping), "damping must be positive");
  require(std::isfinite(coulomb) && coulomb >= 0.0, "coulomb friction must be >= 0");
  require(positive(coulomb_velocity) && positive(gravity), "coulomb_velocity, gravity > 0");
  require(positive(k_wire) && positive(k_nle) && positive(f0), "elastic constants must be > 0");
  require(positive(f_bias) && positive(k_stiff) && f_max > f_bias,
          "f_bias, k_stiff must be > 0 and f_max > f_bias");
  require(positive(max_overwind) && positive(motor_speed), "motor limits must be > 0");
  require(positive(dt), "dt must be > 0");
}

PlantConfig default_elbow_config() {
  PlantConfig c;
  c.links = {{0.30, 1.2, 0.15, 0.05}};
  c.joint_min = {0.0};
  c.joint_max = {1.57};
  c.routes = {
      {"flexor_long", {base(0.04, 0.22), on(1, 0.06, 0.03)}, 0.025},
      {"flexor_short", {base(0.012, 0.10), on(1, 0.10, 0.012)}, 0.025},
      {"extensor", {base(-0.015, 0.15), on(1, 0.03, -0.015)}, 0.025},
  };
  return c;
}

PlantConfig planar_arm_config() {
  PlantConfig c;
  c.links = {{0.30, 2.0, 0.15, 0.10}, {0.28, 1.2, 0.14, 0.05}};
  c.joint_min = {0.0, 0.0};
  c.joint_max = {1.2, 1.57};
  c.routes = {
      {"shoulder_flexor", {base(0.04, 0.10), on(1, 0.08, 0.02)}, 0.02},
      {"shoulder_extensor", {base(-0.04, 0.10), on(1, 0.08, -0.02)}, 0.02},
      {"elbow_flexor", {on(1, 0.10, 0.025), on(2, 0.04, 0.02)}, 0.02},
      {"elbow_extensor", {on(1, 0.10, -0.025), on(2, -0.005, -0.025)}, 0.02},
      {"biarticular", {base(0.03, 0.06), on(1, 0.15, 0.03), on(2, 0.05, 0.022)}, 0.02},
  };
  return c;
}

namespace {

json to_json(const PlantConfig& c) {
  json links = json::array();
  for (const auto& l : c.links) {
    links.push_back({{"length", l.length}, {"mass", l.mass}, {"com", l.com}, {"inertia", l.inertia}});
  }
  json muscles = json::array();
  for (const auto& m : c.routes) {
    json pts = json::array();
    for (const auto& p : m.points) pts.push_back({{"link", p.link}, {"pos", {p.pos.x(), p.pos.y()}}});
    muscles.push_back({{"name", m.name}, {"points", pts}, {"wrap_radius", m.wrap_radius}});
  }
  return {
      {"links", links},
      {"muscles", muscles},
      {"joint_min", c.joint_min},
      {"joint_max", c.joint_max},
      {"damping", c.damping},
      {"coulomb", c.coulomb},
      {"coulomb_velocity", c.coulomb_velocity},
      {"gravity", c.gravity},
      {"k_wire", c.k_wire},
      {"k_nle", c.k_nle},
      {"f0", c.f0},
      {"f_bias", c.f_bias},
      {"k_stiff", c.k_stiff},
      {"f_max", c.f_max},
      {"max_overwind", c.max_overwind},
      {"motor_speed", c.motor_speed},
      {"dt", c.dt},
      {"seed", c.seed},
  };
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PlantConfig from_json(const json& j) {
  // unspecified keys keep the elbow defaults
  PlantConfig c = default_elbow_config();
  if (j.contains("links")) {
    c.links.clear();
    for (const auto& l : j.at("links")) {
      LinkConfig lc;
      read_opt(l, "length", lc.length);
      read_opt(l, "mass", lc.mass);
      read_opt(l, "com", lc.com);
      read_opt(l, "inertia", lc.inertia);
      c.links.push_back(lc);
    }
  }
  if (j.contains("muscles")) {
    c.routes.clear();
    for (const auto& m : j.at("muscles")) {
      MuscleRoute r;
      read_opt(m, "name", r.name);
      read_opt(m, "wrap_radius", r.wrap_radius);
      for (const auto& p : m.at("points")) {
        const auto pos = p.at("pos").get<std::vector<double>>();
        if (pos.size() != 2) throw std::invalid_argument("PlantConfig: via-point pos needs 2 values");
        r.points.push_back({p.at("link").get<int>(), Eigen::Vector2d(pos[0], pos[1])});
      }
      c.routes.push_back(std::move(r));
    }
  }
  read_opt(j, "joint_min", c.joint_min);
  read_opt(j, "joint_max", c.joint_max);
  read_opt(j, "damping", c.damping);
  read_opt(j, "coulomb", c.coulomb);
  read_opt(j, "coulomb_velocity", c.coulomb_velocity);
  read_opt(j, "gravity", c.gravity);
  read_opt(j, "k_wire", c.k_wire);
  read_opt(j, "k_nle", c.k_nle);
  read_opt(j, "f0", c.f0);
  read_opt(j, "f_bias", c.f_bias);
  read_opt(j, "k_stiff", c.k_stiff);
  read_opt(j, "f_max", c.f_max);
  read_opt(j, "max_overwind", c.max_overwind);
  read_opt(j, "motor_speed", c.motor_speed);
  read_opt(j, "dt", c.dt);
  read_opt(j, "seed", c.seed);
  c.validate();
  return c;
}

}  // namespace

std::string plant_config_to_json(const PlantConfig& config) { return to_json(config).dump(2); }

PlantConfig plant_config_from_json(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("PlantConfig: malformed JSON: ") + e.what());
  }
}

PlantConfig load_plant_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open plant config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return plant_config_from_json(ss.str());
}

void save_plant_config(const std::filesystem::path& path, const PlantConfig& config) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << plant_config_to_json(config) << '\n';
}

}  // namespace musculo::plant
