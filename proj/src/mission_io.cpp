#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stlplan/mission.hpp"

namespace stlplan {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError("CONFIG_FORMAT", where + ": " + what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) bad(where, "unknown key '" + key + "'");
  }
}

const json& required(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) bad(where, std::string("missing key '") + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) bad(where, "expected an array of 3 numbers");
  return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

Box box(const json& j, const std::string& where) {
  only_keys(j, where, {"lo", "hi"});
  return Box{vec3(required(j, where, "lo"), where + ".lo"), vec3(required(j, where, "hi"), where + ".hi")};
}

std::vector<Box> boxes(const json& root, const char* key) {
  std::vector<Box> out;
  if (!root.contains(key)) return out;
  const auto& arr = root.at(key);
  if (!arr.is_array()) bad(key, "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(box(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
  return out;
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json box_json(const Box& b) { return json{{"lo", vec_json(b.lo)}, {"hi", vec_json(b.hi)}}; }

}  // namespace

MissionConfig parse_mission(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad("mission file", e.what());
  }
  only_keys(root, "mission", {"workspace", "obstacles", "targets", "blades", "homes", "vehicles", "timing", "params",
                              "blade_speed_band"});
  MissionConfig cfg;
  cfg.workspace = box(required(root, "mission", "workspace"), "workspace");
  cfg.obstacles = boxes(root, "obstacles");
  cfg.targets = boxes(root, "targets");
  cfg.homes = boxes(root, "homes");

  if (root.contains("blades")) {
    const auto& arr = root.at("blades");
    if (!arr.is_array()) bad("blades", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "blades[" + std::to_string(i) + "]";
      only_keys(arr[i], where, {"box", "a", "b"});
      BladeSegment s;
      s.id = static_cast<int>(i);
      s.box = box(required(arr[i], where, "box"), where + ".box");
      s.a = vec3(required(arr[i], where, "a"), where + ".a");
      s.b = vec3(required(arr[i], where, "b"), where + ".b");
      cfg.blades.push_back(s);
    }
  }

  const auto& vehicles = required(root, "mission", "vehicles");
  if (!vehicles.is_array()) bad("vehicles", "expected an array");
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const std::string where = "vehicles[" + std::to_string(i) + "]";
    const auto& v = vehicles[i];
    only_keys(v, where, {"name", "depot", "v_min", "v_max", "a_min", "a_max"});
    VehicleSpec spec;
    spec.id = static_cast<int>(i);
    if (v.contains("name")) {
      if (!v.at("name").is_string()) bad(where + ".name", "expected a string");
      spec.name = v.at("name").get<std::string>();
    }
    spec.depot = vec3(required(v, where, "depot"), where + ".depot");
    spec.v_min = vec3(required(v, where, "v_min"), where + ".v_min");
    spec.v_max = vec3(required(v, where, "v_max"), where + ".v_max");
    spec.a_min = vec3(required(v, where, "a_min"), where + ".a_min");
    spec.a_max = vec3(required(v, where, "a_max"), where + ".a_max");
    cfg.vehicles.push_back(spec);
  }

  const auto& timing = required(root, "mission", "timing");
  only_keys(timing, "timing", {"TN", "Tins", "Tbla", "Ts"});
  cfg.timing.horizon = number(required(timing, "timing", "TN"), "timing.TN");
  cfg.timing.inspection = number(required(timing, "timing", "Tins"), "timing.Tins");
  cfg.timing.blade = number(required(timing, "timing", "Tbla"), "timing.Tbla");
  cfg.timing.ts = number(required(timing, "timing", "Ts"), "timing.Ts");

  const auto& params = required(root, "mission", "params");
  only_keys(params, "params", {"gamma_dis", "gamma_bla", "eps", "zeta", "beta"});
  cfg.params.gamma_dis = number(required(params, "params", "gamma_dis"), "params.gamma_dis");
  cfg.params.gamma_bla = number(required(params, "params", "gamma_bla"), "params.gamma_bla");
  cfg.params.eps = number(required(params, "params", "eps"), "params.eps");
  cfg.params.zeta = number(required(params, "params", "zeta"), "params.zeta");
  if (params.contains("beta")) cfg.params.beta = number(params.at("beta"), "params.beta");

  if (root.contains("blade_speed_band")) {
    const auto& band = root.at("blade_speed_band");
    if (!band.is_array() || band.size() != 2) bad("blade_speed_band", "expected [lo, hi]");
    cfg.blade_speed_band = SpeedRange{number(band[0], "blade_speed_band"), number(band[1], "blade_speed_band")};
  }
  return cfg;
}

MissionConfig load_mission(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("CONFIG_UNREADABLE", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mission(ss.str());
}

std::string mission_to_json(const MissionConfig& cfg) {
  json root;
  root["workspace"] = box_json(cfg.workspace);
  root["obstacles"] = json::array();
  for (const auto& b : cfg.obstacles) root["obstacles"].push_back(box_json(b));
  root["targets"] = json::array();
  for (const auto& b : cfg.targets) root["targets"].push_back(box_json(b));
  root["blades"] = json::array();
  for (const auto& s : cfg.blades) root["blades"].push_back({{"box", box_json(s.box)}, {"a", vec_json(s.a)}, {"b", vec_json(s.b)}});
  root["homes"] = json::array();
  for (const auto& b : cfg.homes) root["homes"].push_back(box_json(b));
  root["vehicles"] = json::array();
  for (const auto& v : cfg.vehicles) {
    json jv{{"depot", vec_json(v.depot)}, {"v_min", vec_json(v.v_min)}, {"v_max", vec_json(v.v_max)},
            {"a_min", vec_json(v.a_min)}, {"a_max", vec_json(v.a_max)}};
    if (!v.name.empty()) jv["name"] = v.name;
    root["vehicles"].push_back(jv);
  }
  root["timing"] = {{"TN", cfg.timing.horizon}, {"Tins", cfg.timing.inspection}, {"Tbla", cfg.timing.blade},
                    {"Ts", cfg.timing.ts}};
  root["params"] = {{"gamma_dis", cfg.params.gamma_dis}, {"gamma_bla", cfg.params.gamma_bla}, {"eps", cfg.params.eps},
                    {"zeta", cfg.params.zeta}, {"beta", cfg.params.beta}};
  if (cfg.blade_speed_band) root["blade_speed_band"] = json::array({cfg.blade_speed_band->lo, cfg.blade_speed_band->hi});
  return root.dump(2);
}

}  // namespace stlplan
