#include "stlplan/replanner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stlplan {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Delay:
      return "DELAY";
    case EventKind::Dropout:
      return "DROPOUT";
    case EventKind::Deviation:
      return "DEVIATION";
  }
  return "UNKNOWN";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

bool parse_int(const std::string& s, int& out) {
  std::size_t used = 0;
  try {
    out = std::stoi(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

bool parse_double(const std::string& s, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

}  // namespace

std::vector<Event> parse_events(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  int lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = "events line " + std::to_string(lineno) + ": ";
    Event ev;
    if (fields.size() < 3 || !parse_int(fields[0], ev.k)) {
      if (first_content) {  // header
        first_content = false;
        continue;
      }
      throw EventError(where + "expected k,kind,vehicle[,param]");
    }
    first_content = false;
    if (ev.k < 0) throw EventError(where + "event sample must be non-negative");
    std::string kind = fields[1];
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::toupper(c); });
    int vehicle = 0;
    if (!parse_int(fields[2], vehicle) || vehicle < 1) throw EventError(where + "vehicle ids start at 1");
    ev.vehicle = vehicle - 1;
    if (kind == "DELAY") {
      ev.kind = EventKind::Delay;
      if (fields.size() != 4 || !parse_double(fields[3], ev.hold_seconds) || ev.hold_seconds < 0.0) {
        throw EventError(where + "DELAY takes one non-negative duration in seconds");
      }
    } else if (kind == "DROPOUT") {
      ev.kind = EventKind::Dropout;
      if (fields.size() != 3) throw EventError(where + "DROPOUT takes no parameter");
    } else if (kind == "DEVIATION") {
      ev.kind = EventKind::Deviation;
      if (fields.size() != 6) throw EventError(where + "DEVIATION takes three offsets dx,dy,dz");
      for (int j = 0; j < 3; ++j) {
        if (!parse_double(fields[3 + j], ev.offset[j])) throw EventError(where + "offsets must be finite numbers");
      }
    } else {
      throw EventError(where + "unknown event kind '" + fields[1] + "'");
    }
    events.push_back(ev);
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.k < b.k; });
  return events;
}

std::vector<Event> load_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EventError("cannot open " + path);
  return parse_events(in);
}

Vec3 ActivePlan::position(int vehicle, int k) const {
  const Trajectory& t = trajectories.at(vehicle);
  return t.position(std::clamp(k - start, 0, t.steps()));
}

bool ExecutionState::any_active() const { return std::find(active.begin(), active.end(), true) != active.end(); }

bool ExecutionState::any_holding() const {
  for (std::size_t d = 0; d < holding.size(); ++d) {
    if (active[d] && holding[d] > 0) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<stl::Formula>> task_regions(const MissionConfig& cfg) {
  std::vector<std::vector<stl::Formula>> out(cfg.task_count());
  for (int q = 0; q < cfg.task_count(); ++q) {
    for (int d = 0; d < cfg.vehicle_count(); ++d) out[q].push_back(task_region(cfg, q, d));
  }
  return out;
}

Trajectory hold_trajectory(int vehicle, const Vec3& p, int steps, double ts) {
  AxisSeries acc;
  for (auto& a : acc) a.assign(steps, 0.0);
  return rollout(vehicle, {p, Vec3::Zero()}, acc, ts);
}

}  // namespace

Executor::Executor(const MissionConfig& cfg, ActivePlan plan, std::vector<Event> events)
    : cfg_(cfg), steps_(cfg.steps()), plan_(std::move(plan)) {
  const int nv = cfg.vehicle_count();
  if (static_cast<int>(plan_.trajectories.size()) != nv) throw std::invalid_argument("one plan per vehicle");
  for (auto& ev : events) {
    if (ev.k < 0 || ev.k >= steps_) {
      notes_.push_back({ev.k, to_string(ev.kind) + " outside the horizon ignored"});
    } else if (ev.vehicle >= nv) {
      notes_.push_back({ev.k, to_string(ev.kind) + " for unknown vehicle " + std::to_string(ev.vehicle + 1) +
                                  " ignored"});
    } else {
      events_.push_back(ev);
    }
  }
  std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) { return a.k < b.k; });
  state_.k = 0;
  state_.active.assign(nv, true);
  state_.holding.assign(nv, 0);
  cursor_.assign(nv, 0);
  offset_.assign(nv, Vec3::Zero());
  pos_.resize(nv);
  vel_.resize(nv);
  acc_.resize(nv);
  for (int d = 0; d < nv; ++d) {
    state_.states.push_back(plan_.trajectories[d].state(0));
    for (int j = 0; j < 3; ++j) {
      pos_[d][j].push_back(state_.states[d].p[j]);
      vel_[d][j].push_back(state_.states[d].v[j]);
    }
  }
  run_.assign(cfg.task_count(), std::vector<int>(nv, 0));
  regions_ = task_regions(cfg);
  certify();
}

void Executor::apply_events() {
  while (next_event_ < events_.size() && events_[next_event_].k <= state_.k) {
    const Event& ev = events_[next_event_++];
    const int d = ev.vehicle;
    if (!state_.active[d]) {
      notes_.push_back({state_.k, to_string(ev.kind) + " for inactive vehicle " + std::to_string(d + 1) + " ignored"});
      continue;
    }
    State& s = state_.states[d];
    switch (ev.kind) {
      case EventKind::Delay:
        state_.holding[d] += static_cast<int>(std::lround(ev.hold_seconds / cfg_.timing.ts));
        if (state_.holding[d] > 0) s.v.setZero();
        break;
      case EventKind::Dropout:
        state_.active[d] = false;
        state_.holding[d] = 0;
        state_.pending_dropouts.insert(d);
        s.v.setZero();
        break;
      case EventKind::Deviation:
        offset_[d] += ev.offset;
        s.p += ev.offset;
        break;
    }
    // The recorded sample reflects the disturbed state.
    for (int j = 0; j < 3; ++j) {
      pos_[d][j].back() = s.p[j];
      vel_[d][j].back() = s.v[j];
    }
  }
}

void Executor::step() {
  if (finished()) return;
  for (std::size_t d = 0; d < state_.states.size(); ++d) {
    State& s = state_.states[d];
    Vec3 a = Vec3::Zero();
    if (!state_.active[d]) {
      s.v.setZero();
    } else if (state_.holding[d] > 0) {
      --state_.holding[d];
      s.v.setZero();
    } else {
      const Trajectory& t = plan_.trajectories[d];
      if (cursor_[d] < t.steps()) {
        a = t.acceleration(cursor_[d]);
        ++cursor_[d];
        s.p = t.position(cursor_[d]) + offset_[d];
        s.v = t.velocity(cursor_[d]);
      } else {
        s.v.setZero();
      }
    }
    for (int j = 0; j < 3; ++j) {
      acc_[d][j].push_back(a[j]);
      pos_[d][j].push_back(s.p[j]);
      vel_[d][j].push_back(s.v[j]);
    }
  }
  ++state_.k;
  certify();
}

void Executor::replace_plan(ActivePlan plan) {
  if (plan.trajectories.size() != plan_.trajectories.size()) throw std::invalid_argument("one plan per vehicle");
  plan_ = std::move(plan);
  std::fill(cursor_.begin(), cursor_.end(), 0);
  std::fill(offset_.begin(), offset_.end(), Vec3::Zero());
  state_.pending_dropouts.clear();
}

std::vector<Trajectory> Executor::executed() const {
  std::vector<Trajectory> out;
  for (std::size_t d = 0; d < pos_.size(); ++d) {
    Trajectory t;
    t.vehicle = static_cast<int>(d);
    t.ts = cfg_.timing.ts;
    t.pos = pos_[d];
    t.vel = vel_[d];
    t.acc = acc_[d];
    out.push_back(std::move(t));
  }
  return out;
}

void Executor::certify() {
  stl::Signal now;
  now.ts = cfg_.timing.ts;
  for (const auto& s : state_.states) {
    stl::VehicleTrace tr;
    for (int j = 0; j < 3; ++j) {
      tr.pos[j] = {s.p[j]};
      tr.vel[j] = {s.v[j]};
    }
    now.vehicles.push_back(std::move(tr));
  }
  for (int q = 0; q < cfg_.task_count(); ++q) {
    const int need = task_window(cfg_, q) + 1;
    for (std::size_t d = 0; d < state_.states.size(); ++d) {
      if (state_.active[d] && stl::eval_bool(regions_[q][d], now, 0)) {
        ++run_[q][d];
      } else {
        run_[q][d] = 0;
      }
      if (run_[q][d] >= need) state_.completed.insert(q);
    }
  }
}

SimulationResult simulate(const std::vector<Trajectory>& plan, const std::vector<Event>& events,
                          const MissionConfig& cfg) {
  Executor ex(cfg, ActivePlan{0, plan}, events);
  SimulationResult out;
  out.trace.push_back(ex.state());
  while (!ex.finished()) {
    ex.apply_events();
    ex.step();
    out.trace.push_back(ex.state());
  }
  out.executed = ex.executed();
  out.notes = ex.notes();
  return out;
}

std::set<int> planned_tasks(const ActivePlan& plan, int vehicle, const MissionConfig& cfg) {
  std::set<int> out;
  const stl::Signal s = to_signal(plan.trajectories);
  const int n = s.last_index();
  for (int q = 0; q < cfg.task_count(); ++q) {
    const stl::Formula region = task_region(cfg, q, vehicle);
    const int need = task_window(cfg, q) + 1;
    int run = 0;
    for (int k = 0; k <= n && run < need; ++k) run = stl::eval_bool(region, s, k) ? run + 1 : 0;
    if (run >= need) out.insert(q);
  }
  return out;
}

TriggerDecision should_replan(const ExecutionState& state, const ActivePlan& plan, const MissionConfig& cfg) {
  TriggerDecision out;
  // A held vehicle is expected to lag its plan; decide once the hold ends.
  if (state.any_holding()) return out;
  const int nv = static_cast<int>(state.states.size());
  const double threshold = 0.5 * cfg.params.gamma_dis;
  for (int d = 0; d < nv; ++d) {
    if (!state.active[d]) continue;
    const double dev = (state.states[d].p - plan.position(d, state.k)).norm();
    if (dev > threshold) {
      std::ostringstream msg;
      msg << "vehicle " << d + 1 << " deviates " << dev << " m from its plan";
      out.reasons.push_back(msg.str());
    }
  }
  for (int d : state.pending_dropouts) {
    std::vector<int> owned;
    for (int q : planned_tasks(plan, d, cfg)) {
      if (!state.completed.count(q)) owned.push_back(q);
    }
    if (!owned.empty()) {
      std::string msg = "vehicle " + std::to_string(d + 1) + " dropped out owning";
      for (int q : owned) msg += " " + task_name(cfg, q);
      out.reasons.push_back(msg);
    }
  }
  const double residual = (cfg.steps() - state.k) * cfg.timing.ts;
  for (int q = 0; q < cfg.task_count(); ++q) {
    if (state.completed.count(q)) continue;
    double best = std::numeric_limits<double>::infinity();
    const Vec3 point = task_point(cfg, q);
    for (int d = 0; d < nv; ++d) {
      if (!state.active[d]) continue;
      const double speed = cfg.vehicles[d].v_max.norm();
      const double t = (state.states[d].p - point).norm() / speed + task_window(cfg, q) * cfg.timing.ts +
                       (point - cfg.homes[d].center()).norm() / speed;
      best = std::min(best, t);
    }
    if (best > residual) out.reasons.push_back("not enough time left for " + task_name(cfg, q));
  }
  for (int d = 0; d < nv; ++d) {
    if (!state.active[d]) continue;
    const double t = (state.states[d].p - cfg.homes[d].center()).norm() / cfg.vehicles[d].v_max.norm();
    if (t > residual) out.reasons.push_back("vehicle " + std::to_string(d + 1) + " cannot reach home in time");
  }
  out.replan = !out.reasons.empty();
  return out;
}

ResidualInfeasible::ResidualInfeasible(const std::string& message, int required_steps, double ts)
    : std::runtime_error(message), required_steps_(required_steps), required_horizon_(required_steps * ts) {}

ResidualMission residual_mission(const ExecutionState& state, const MissionConfig& cfg) {
  const double ts = cfg.timing.ts;
  if (!state.any_active()) throw ResidualInfeasible("no active vehicles remain", -1, ts);
  const int steps_left = cfg.steps() - state.k;
  if (steps_left < 1) throw ResidualInfeasible("no samples remain in the horizon", -1, ts);

  ResidualMission r;
  r.cfg.workspace = cfg.workspace;
  r.cfg.obstacles = cfg.obstacles;
  r.cfg.timing = cfg.timing;
  r.cfg.timing.horizon = steps_left * ts;
  r.cfg.params = cfg.params;
  r.cfg.blade_speed_band = cfg.blade_speed_band;
  for (int q = 0; q < cfg.task_count(); ++q) {
    if (state.completed.count(q)) continue;
    const TaskRef ref = task_ref(cfg, q);
    if (ref.kind == TaskKind::Target) {
      r.cfg.targets.push_back(cfg.targets[ref.index]);
    } else {
      BladeSegment b = cfg.blades[ref.index];
      b.id = static_cast<int>(r.cfg.blades.size());
      r.cfg.blades.push_back(b);
    }
  }
  // Tasks are numbered targets first, so rebuild the map in that order.
  for (int q = 0; q < cfg.task_count(); ++q) {
    if (!state.completed.count(q) && task_ref(cfg, q).kind == TaskKind::Target) r.tasks.push_back(q);
  }
  for (int q = 0; q < cfg.task_count(); ++q) {
    if (!state.completed.count(q) && task_ref(cfg, q).kind == TaskKind::Blade) r.tasks.push_back(q);
  }

  const int nv = static_cast<int>(state.states.size());
  for (int d = 0; d < nv; ++d) {
    if (!state.active[d]) continue;
    VehicleSpec spec = cfg.vehicles[d];
    spec.id = static_cast<int>(r.vehicles.size());
    spec.depot = state.states[d].p;
    r.cfg.vehicles.push_back(spec);
    r.cfg.homes.push_back(cfg.homes[d]);
    r.vehicles.push_back(d);
    r.starts.push_back(state.states[d]);
  }
  for (int d = 0; d < nv; ++d) {
    if (state.active[d]) continue;
    const Vec3 p = state.states[d].p;
    double clearance = std::numeric_limits<double>::infinity();
    for (int a : r.vehicles) clearance = std::min(clearance, (state.states[a].p - p).cwiseAbs().maxCoeff());
    const double half = std::min(cfg.params.gamma_dis, 0.95 * clearance);
    if (!(half > 0.0)) {
      throw ResidualInfeasible("vehicle " + std::to_string(d + 1) + " dropped out on top of another vehicle", -1, ts);
    }
    Box frozen{(p.array() - half).matrix(), (p.array() + half).matrix()};
    frozen.lo = frozen.lo.cwiseMax(cfg.workspace.lo);
    frozen.hi = frozen.hi.cwiseMin(cfg.workspace.hi);
    r.cfg.obstacles.push_back(frozen);
  }
  const auto issues = validate(r.cfg);
  if (!issues.empty()) {
    std::string msg = "residual mission is invalid:";
    for (const auto& i : issues) msg += " " + i.code + " (" + i.message + ")";
    throw ResidualInfeasible(msg, -1, ts);
  }
  return r;
}

ReplanResult replan(const ExecutionState& state, const MissionConfig& cfg, const OptimizeOptions& opts) {
  ReplanResult out;
  out.residual = residual_mission(state, cfg);
  const auto& res = out.residual;
  const RoutingGraph g = build_graph(res.cfg, res.starts);
  const EdgeSelection sel = solve_milp(g);
  out.routes = repair_subtours(sel.z, g);
  const stl::Formula phi = build_formula(res.cfg);
  std::vector<Trajectory> seed;
  try {
    seed = seed_trajectories(out.routes, g, res.cfg.steps());
  } catch (const HorizonTooShort& e) {
    throw ResidualInfeasible(std::string("residual mission: ") + e.what(), e.required_steps(), cfg.timing.ts);
  }
  OptimizeOptions o = opts;
  o.beta = cfg.params.beta;
  out.outcome = optimize(res.cfg, phi, seed, o);

  const int steps_left = res.cfg.steps();
  out.plan.start = state.k;
  for (std::size_t d = 0; d < state.states.size(); ++d) {
    out.plan.trajectories.push_back(hold_trajectory(static_cast<int>(d), state.states[d].p, steps_left, cfg.timing.ts));
  }
  for (std::size_t i = 0; i < res.vehicles.size(); ++i) {
    Trajectory t = out.outcome.trajectories[i];
    t.vehicle = res.vehicles[i];
    out.plan.trajectories[res.vehicles[i]] = std::move(t);
  }
  return out;
}

MissionRun run_mission(const MissionConfig& cfg, const std::vector<Trajectory>& plan,
                       const std::vector<Event>& events, const OptimizeOptions& opts) {
  Executor ex(cfg, ActivePlan{0, plan}, events);
  MissionRun out;
  int last_replan = -1;
  while (!ex.finished()) {
    ex.apply_events();
    const TriggerDecision decision = should_replan(ex.state(), ex.plan(), cfg);
    if (decision.replan && ex.state().k != last_replan) {
      last_replan = ex.state().k;
      ReplanRecord rec;
      rec.k = ex.state().k;
      rec.reasons = decision.reasons;
      for (int q = 0; q < cfg.task_count(); ++q) {
        if (!ex.state().completed.count(q)) rec.remaining_tasks.push_back(q);
      }
      for (int d = 0; d < cfg.vehicle_count(); ++d) {
        if (ex.state().active[d]) rec.active_vehicles.push_back(d);
      }
      ReplanResult rr = replan(ex.state(), cfg, opts);
      rec.residual_steps = rr.residual.cfg.steps();
      rec.required_steps = rr.routes.required_steps;
      rec.rho = rr.outcome.rho;
      rec.rho_smooth = rr.outcome.rho_smooth;
      rec.zeta_satisfied = rr.outcome.zeta_satisfied;
      out.replans.push_back(std::move(rec));
      ex.replace_plan(std::move(rr.plan));
    }
    ex.step();
  }
  out.executed = ex.executed();
  out.notes = ex.notes();
  out.final_state = ex.state();
  return out;
}

}  // namespace stlplan
