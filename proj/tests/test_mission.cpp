#include <algorithm>
#include <string>

#include "doctest.h"
#include "stlplan/mission.hpp"
#include "stlplan/robustness.hpp"

using namespace stlplan;

namespace {

const std::string kToy = std::string(STLPLAN_DATA_DIR) + "/toy_mission.json";

bool has_code(const std::vector<ValidationIssue>& issues, const std::string& code) {
  return std::any_of(issues.begin(), issues.end(), [&](const ValidationIssue& i) { return i.code == code; });
}

// A vehicle hovering at p for n + 1 samples.
stl::VehicleTrace hover(const Vec3& p, int n) {
  stl::VehicleTrace t;
  for (int j = 0; j < 3; ++j) {
    t.pos[j].assign(n + 1, p[j]);
    t.vel[j].assign(n + 1, 0.0);
  }
  return t;
}

}  // namespace

TEST_CASE("the toy mission loads and validates") {
  const MissionConfig cfg = load_mission(kToy);
  CHECK(validate(cfg).empty());
  CHECK(cfg.vehicle_count() == 2);
  CHECK(cfg.task_count() == 3);
  CHECK(cfg.steps() == 60);
  CHECK(task_name(cfg, 0) == "target1");
  CHECK(task_name(cfg, 2) == "blade1");
  CHECK(task_window(cfg, 0) == cfg.inspection_window());
  CHECK(task_window(cfg, 2) == cfg.blade_window());
}

TEST_CASE("mission JSON round-trips") {
  const MissionConfig cfg = load_mission(kToy);
  const std::string text = mission_to_json(cfg);
  CHECK(mission_to_json(parse_mission(text)) == text);
}

TEST_CASE("malformed mission files are rejected with a format error") {
  try {
    (void)parse_mission(R"({"workspace": {"lo": [0,0,0], "hi": [1,1,1]}, "bogus": 1})");
    FAIL("expected a format error");
  } catch (const ConfigError& e) {
    REQUIRE_FALSE(e.issues().empty());
    CHECK(e.issues().front().code == "CONFIG_FORMAT");
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_mission("{not json"), ConfigError);
  CHECK_THROWS_AS(load_mission("/nonexistent/mission.json"), ConfigError);
}

TEST_CASE("validation reports each broken invariant") {
  const MissionConfig good = load_mission(kToy);

  MissionConfig c = good;
  c.obstacles.push_back({Vec3(1, 1, 1), Vec3(1, 2, 2)});
  CHECK(has_code(validate(c), "BOX_DEGENERATE"));

  c = good;
  c.homes.pop_back();
  CHECK(has_code(validate(c), "HOME_COUNT_MISMATCH"));

  c = good;
  c.vehicles[0].v_min = Vec3(0.5, -1, -1);
  CHECK(has_code(validate(c), "VEHICLE_BOUNDS"));

  c = good;
  c.vehicles[1].depot = Vec3(4, 8, 4);
  CHECK(has_code(validate(c), "DEPOT_IN_OBSTACLE"));

  c = good;
  c.vehicles[1].depot = Vec3(100, 0, 2);
  CHECK(has_code(validate(c), "DEPOT_OUTSIDE_WORKSPACE"));

  c = good;
  c.timing.inspection = 100;
  CHECK(has_code(validate(c), "WINDOW_EXCEEDS_HORIZON"));

  c = good;
  c.params.eps = 0.0;
  CHECK(has_code(validate(c), "PARAM_RANGE"));

  c = good;
  c.blades[0].b = c.blades[0].a;
  CHECK(has_code(validate(c), "SEGMENT_DEGENERATE"));

  c = good;
  c.blades[0].b = Vec3(4, 20, 40);
  CHECK(has_code(validate(c), "BLADE_OUTSIDE_BOX"));

  c = good;
  c.vehicles.clear();
  c.homes.clear();
  CHECK(has_code(validate(c), "NO_VEHICLES"));
}

TEST_CASE("the specification has one labelled conjunct per clause") {
  const MissionConfig cfg = load_mission(kToy);
  const stl::Formula phi = build_formula(cfg);
  REQUIRE(phi.op() == stl::Op::And);
  const auto labels = clause_labels(cfg);
  CHECK(labels.size() == phi.children().size());
  CHECK(labels.size() == 2 + 3 + 2 + 2);
  CHECK(labels.front() == "safety[p1]");
  CHECK(labels.back() == "stay_home[p2]");
  CHECK(stl::horizon(phi) == cfg.steps());
}

TEST_CASE("hovering at the depots is safe but inspects nothing") {
  const MissionConfig cfg = load_mission(kToy);
  const stl::Formula phi = build_formula(cfg);
  stl::Signal s;
  s.ts = cfg.timing.ts;
  for (const auto& v : cfg.vehicles) s.vehicles.push_back(hover(v.depot, cfg.steps()));
  for (int d = 0; d < 2; ++d) CHECK(rho(phi.child(d), s) > 0.0);
  CHECK(rho(phi.child(2), s) < 0.0);
  CHECK_FALSE(stl::eval_bool(phi, s));
}

TEST_CASE("task regions contain the routing points") {
  const MissionConfig cfg = load_mission(kToy);
  stl::Signal s;
  for (int q = 0; q < cfg.task_count(); ++q) {
    s.vehicles = {hover(task_point(cfg, q), 0)};
    CAPTURE(task_name(cfg, q));
    CHECK(rho(task_region(cfg, q, 0), s) > 0.0);
  }
  const Vec3 p = task_point(cfg, 2);
  CHECK(dist_to_segment(p, cfg.blades[0]) == doctest::Approx(cfg.params.gamma_bla));
}
