#include <sstream>

#include "doctest.h"
#include "stlplan/replanner.hpp"

using namespace stlplan;

namespace {

const std::string kToy = std::string(STLPLAN_DATA_DIR) + "/toy_mission.json";

std::vector<Trajectory> toy_seed(const MissionConfig& cfg) {
  const RoutingGraph g = build_graph(cfg);
  return seed_trajectories(repair_subtours(solve_milp(g).z, g), cfg);
}

std::vector<Event> events_from(const std::string& text) {
  std::istringstream in(text);
  return parse_events(in);
}

OptimizeOptions quick(const MissionConfig& cfg) {
  OptimizeOptions o;
  o.beta = cfg.params.beta;
  o.max_iters = 40;
  o.keep_log = false;
  return o;
}

}  // namespace

TEST_CASE("event files parse with comments, header and mixed case") {
  const auto ev = events_from(
      "k,kind,vehicle,param\n"
      "# disturbances\n"
      "9,deviation,2,0.5,-1,0\n"
      "\n"
      "3,DROPOUT,1\n"
      "3,Delay,2,2.5\n");
  REQUIRE(ev.size() == 3);
  CHECK(ev[0].kind == EventKind::Dropout);
  CHECK(ev[0].vehicle == 0);
  CHECK(ev[1].kind == EventKind::Delay);
  CHECK(ev[1].hold_seconds == 2.5);
  CHECK(ev[2].k == 9);
  CHECK(ev[2].offset == Vec3(0.5, -1, 0));
}

TEST_CASE("malformed events are rejected") {
  CHECK_THROWS_AS(events_from("3,TELEPORT,1\n"), EventError);
  CHECK_THROWS_AS(events_from("3,DELAY,0,1\n"), EventError);
  CHECK_THROWS_AS(events_from("3,DELAY,1\n"), EventError);
  CHECK_THROWS_AS(events_from("-1,DROPOUT,1\n"), EventError);
  CHECK_THROWS_AS(events_from("3,DEVIATION,1,1,2\n"), EventError);
  CHECK_THROWS_AS(load_events("/nonexistent/events.csv"), EventError);
}

TEST_CASE("undisturbed execution reproduces the plan and certifies every dwell") {
  const MissionConfig cfg = load_mission(kToy);
  const auto plan = toy_seed(cfg);
  const SimulationResult r = simulate(plan, {}, cfg);
  CHECK(r.trace.size() == static_cast<std::size_t>(cfg.steps() + 1));
  for (int d = 0; d < 2; ++d)
    for (int k = 0; k <= cfg.steps(); ++k) CHECK((r.executed[d].position(k) - plan[d].position(k)).norm() < 1e-12);
  CHECK(r.trace.back().completed == std::set<int>{0, 1, 2});
  CHECK(r.trace.front().completed.empty());
}

TEST_CASE("a delay holds the vehicle and then resumes the plan") {
  const MissionConfig cfg = load_mission(kToy);
  const auto plan = toy_seed(cfg);
  const SimulationResult r = simulate(plan, events_from("5,DELAY,1,3\n"), cfg);
  const Trajectory& t = r.executed[0];
  for (int k = 5; k <= 8; ++k) {
    CHECK((t.position(k) - plan[0].position(5)).norm() < 1e-12);
    CHECK(t.velocity(k).norm() == 0.0);
  }
  for (int k = 9; k <= 20; ++k) CHECK((t.position(k) - plan[0].position(k - 3)).norm() < 1e-12);
  CHECK((r.executed[1].position(20) - plan[1].position(20)).norm() < 1e-12);
}

TEST_CASE("a dropout freezes the vehicle and a deviation shifts it") {
  const MissionConfig cfg = load_mission(kToy);
  const auto plan = toy_seed(cfg);
  const SimulationResult r = simulate(plan, events_from("4,DROPOUT,2\n6,DEVIATION,1,0,0,1\n"), cfg);
  // trace[k] is recorded before the events scheduled at k fire.
  CHECK(r.trace[4].active[1]);
  CHECK_FALSE(r.trace[5].active[1]);
  CHECK(r.trace[5].pending_dropouts.count(1));
  for (int k = 4; k <= cfg.steps(); ++k) CHECK((r.executed[1].position(k) - plan[1].position(4)).norm() < 1e-12);
  for (int k = 6; k <= 12; ++k)
    CHECK((r.executed[0].position(k) - plan[0].position(k) - Vec3(0, 0, 1)).norm() < 1e-12);
  // Vehicle 2 owned target 2 and the blade; only target 1 is certified.
  CHECK(r.trace.back().completed == std::set<int>{0});
  const auto again = simulate(plan, events_from("4,DROPOUT,2\n8,DROPOUT,2\n"), cfg);
  CHECK_FALSE(again.notes.empty());
}

TEST_CASE("trigger rules") {
  const MissionConfig cfg = load_mission(kToy);
  const auto seed = toy_seed(cfg);
  const ActivePlan plan{0, seed};
  CHECK(planned_tasks(plan, 0, cfg) == std::set<int>{0});
  CHECK(planned_tasks(plan, 1, cfg) == std::set<int>{1, 2});

  Executor quiet(cfg, plan, {});
  quiet.apply_events();
  CHECK_FALSE(should_replan(quiet.state(), plan, cfg).replan);

  Executor small(cfg, plan, events_from("0,DEVIATION,1,0.5,0,0\n"));
  small.apply_events();
  CHECK_FALSE(should_replan(small.state(), plan, cfg).replan);

  Executor large(cfg, plan, events_from("0,DEVIATION,1,1,0,0\n"));
  large.apply_events();
  CHECK(should_replan(large.state(), plan, cfg).replan);

  Executor dropped(cfg, plan, events_from("0,DROPOUT,2\n"));
  dropped.apply_events();
  const TriggerDecision d = should_replan(dropped.state(), plan, cfg);
  CHECK(d.replan);
  CHECK_FALSE(d.reasons.empty());

  Executor held(cfg, plan, events_from("0,DELAY,1,3\n0,DEVIATION,2,5,0,0\n"));
  held.apply_events();
  CHECK_FALSE(should_replan(held.state(), plan, cfg).replan);  // deferred while holding
}

TEST_CASE("the residual mission keeps what is left") {
  const MissionConfig cfg = load_mission(kToy);
  const auto seed = toy_seed(cfg);
  Executor ex(cfg, {0, seed}, events_from("3,DROPOUT,2\n"));
  for (int k = 0; k < 3; ++k) {
    ex.apply_events();
    ex.step();
  }
  ex.apply_events();
  const ResidualMission res = residual_mission(ex.state(), cfg);
  CHECK(res.vehicles == std::vector<int>{0});
  CHECK(res.tasks == std::vector<int>{0, 1, 2});
  CHECK(res.cfg.vehicle_count() == 1);
  CHECK(res.cfg.obstacles.size() == cfg.obstacles.size() + 1);
  CHECK(res.cfg.steps() == cfg.steps() - 3);
  CHECK((res.starts[0].p - ex.state().states[0].p).norm() == 0.0);
  CHECK(res.cfg.vehicles[0].depot == res.starts[0].p);
  CHECK(validate(res.cfg).empty());
  const Box& frozen = res.cfg.obstacles.back();
  CHECK(frozen.contains(ex.state().states[1].p));
  CHECK_FALSE(frozen.contains(ex.state().states[0].p));
}

TEST_CASE("replanning covers the residual tasks from the current sample") {
  const MissionConfig cfg = load_mission(kToy);
  Executor ex(cfg, {0, toy_seed(cfg)}, events_from("3,DROPOUT,2\n"));
  for (int k = 0; k < 3; ++k) {
    ex.apply_events();
    ex.step();
  }
  ex.apply_events();
  const ReplanResult r = replan(ex.state(), cfg, quick(cfg));
  CHECK(r.plan.start == 3);
  REQUIRE(r.plan.trajectories.size() == 2);
  CHECK(r.plan.trajectories[0].steps() == cfg.steps() - 3);
  CHECK((r.plan.trajectories[0].position(0) - ex.state().states[0].p).norm() < 1e-12);
  CHECK(planned_tasks(r.plan, 0, cfg) == std::set<int>{0, 1, 2});
  // The dropped vehicle's plan is a hold in place.
  CHECK((r.plan.trajectories[1].position(10) - ex.state().states[1].p).norm() < 1e-12);
}

TEST_CASE("a residual that cannot fit the remaining horizon is reported") {
  const MissionConfig cfg = load_mission(kToy);
  ExecutionState s;
  s.k = cfg.steps() - 4;
  for (const auto& v : cfg.vehicles) s.states.push_back({v.depot, Vec3::Zero()});
  s.active = {true, true};
  s.holding = {0, 0};
  try {
    (void)replan(s, cfg, quick(cfg));
    FAIL("expected ResidualInfeasible");
  } catch (const ResidualInfeasible& e) {
    CHECK(e.required_steps() > 4);
  }
}

TEST_CASE("an undisturbed mission runs without replanning") {
  const MissionConfig cfg = load_mission(kToy);
  const auto plan = toy_seed(cfg);
  const MissionRun run = run_mission(cfg, plan, {}, quick(cfg));
  CHECK(run.replans.empty());
  CHECK(run.final_state.completed.size() == 3u);
  CHECK((run.executed[1].position(cfg.steps()) - plan[1].position(cfg.steps())).norm() < 1e-12);
}

TEST_CASE("a mid-mission dropout is absorbed by replanning") {
  const MissionConfig cfg = load_mission(kToy);
  const MissionRun run = run_mission(cfg, toy_seed(cfg), events_from("3,DROPOUT,2\n"), quick(cfg));
  REQUIRE_FALSE(run.replans.empty());
  CHECK(run.replans.front().k == 3);
  CHECK(run.replans.front().active_vehicles == std::vector<int>{0});
  CHECK(run.final_state.completed == std::set<int>{0, 1, 2});
  CHECK(run.executed[1].position(cfg.steps()) == run.executed[1].position(3));
}
