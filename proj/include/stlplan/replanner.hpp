#pragma once

// Execution simulator with disturbance injection and the event-triggered
// replanning loop. A replan solves the residual mission (remaining tasks,
// surviving vehicles starting from their current states, remaining horizon)
// with the same router + optimizer pipeline as the initial plan.

#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlplan/dynamics.hpp"
#include "stlplan/mission.hpp"
#include "stlplan/optimizer.hpp"
#include "stlplan/router.hpp"

namespace stlplan {

enum class EventKind { Delay, Dropout, Deviation };
std::string to_string(EventKind kind);

struct Event {
  int k = 0;  // trigger sample
  EventKind kind = EventKind::Delay;
  int vehicle = 0;  // 0-based
  double hold_seconds = 0.0;
  Vec3 offset = Vec3::Zero();
};

class EventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lines `k,kind,vehicle[,param]` with 1-based vehicle ids; DELAY takes the
/// hold in seconds, DEVIATION three offsets `dx,dy,dz`. Blank lines, `#`
/// comments and a leading header line are skipped. Result is sorted by k
/// (stable).
std::vector<Event> parse_events(std::istream& in);
std::vector<Event> load_events(const std::string& path);

/// Trajectories indexed by original vehicle id; sample i of each describes
/// absolute sample start + i.
struct ActivePlan {
  int start = 0;
  std::vector<Trajectory> trajectories;

  /// Planned position at absolute sample k (held after the plan ends).
  [[nodiscard]] Vec3 position(int vehicle, int k) const;
};

struct ExecutionState {
  int k = 0;
  std::vector<State> states;
  std::set<int> completed;  // task ids with a certified dwell
  std::vector<bool> active;
  std::vector<int> holding;       // remaining hold samples per vehicle
  std::set<int> pending_dropouts;  // dropped since the current plan was made

  [[nodiscard]] bool any_active() const;
  [[nodiscard]] bool any_holding() const;
};

struct Note {
  int k = 0;
  std::string message;
};

/// Steps the plan sample by sample while applying events.
class Executor {
 public:
  Executor(const MissionConfig& cfg, ActivePlan plan, std::vector<Event> events);

  [[nodiscard]] const ExecutionState& state() const { return state_; }
  [[nodiscard]] const ActivePlan& plan() const { return plan_; }
  [[nodiscard]] bool finished() const { return state_.k >= steps_; }
  [[nodiscard]] const std::vector<Note>& notes() const { return notes_; }

  /// Applies the events scheduled at the current sample.
  void apply_events();
  /// Advances one sample.
  void step();
  /// Switches to a plan starting at the current sample.
  void replace_plan(ActivePlan plan);
  /// Executed motion for samples 0..k of every vehicle.
  [[nodiscard]] std::vector<Trajectory> executed() const;

 private:
  void certify();

  const MissionConfig& cfg_;
  int steps_;
  ActivePlan plan_;
  std::vector<Event> events_;
  std::size_t next_event_ = 0;
  ExecutionState state_;
  std::vector<int> cursor_;  // sample index into the plan trajectory
  std::vector<Vec3> offset_;
  std::vector<AxisSeries> pos_, vel_, acc_;
  std::vector<std::vector<stl::Formula>> regions_;  // [task][vehicle]
  std::vector<std::vector<int>> run_;                // [task][vehicle] current dwell run
  std::vector<Note> notes_;
};

struct SimulationResult {
  std::vector<ExecutionState> trace;  // one entry per sample 0..N
  std::vector<Trajectory> executed;
  std::vector<Note> notes;
};

/// Executes the plan with the events and no replanning.
SimulationResult simulate(const std::vector<Trajectory>& plan, const std::vector<Event>& events,
                          const MissionConfig& cfg);

struct TriggerDecision {
  bool replan = false;
  std::vector<std::string> reasons;
};

/// Tasks whose dwell the plan of `vehicle` certifies.
std::set<int> planned_tasks(const ActivePlan& plan, int vehicle, const MissionConfig& cfg);

TriggerDecision should_replan(const ExecutionState& state, const ActivePlan& plan, const MissionConfig& cfg);

class ResidualInfeasible : public std::runtime_error {
 public:
  ResidualInfeasible(const std::string& message, int required_steps, double ts);
  /// Smallest residual horizon in samples the seed needs, or -1 when unknown.
  [[nodiscard]] int required_steps() const { return required_steps_; }
  [[nodiscard]] double required_horizon() const { return required_horizon_; }

 private:
  int required_steps_;
  double required_horizon_;
};

struct ResidualMission {
  MissionConfig cfg;
  std::vector<int> vehicles;  // residual index -> original vehicle
  std::vector<int> tasks;     // residual task -> original task
  std::vector<State> starts;
};

/// Remaining tasks, active vehicles starting from their current states, the
/// remaining horizon, and each dropped vehicle frozen in place as an obstacle.
ResidualMission residual_mission(const ExecutionState& state, const MissionConfig& cfg);

struct ReplanResult {
  ResidualMission residual;
  RoutePlan routes;  // in residual indices
  SolveOutcome outcome;
  ActivePlan plan;   // in original vehicle ids, starting at state.k
};

ReplanResult replan(const ExecutionState& state, const MissionConfig& cfg, const OptimizeOptions& opts);

struct ReplanRecord {
  int k = 0;
  std::vector<std::string> reasons;
  std::vector<int> remaining_tasks;
  std::vector<int> active_vehicles;
  int residual_steps = 0;
  int required_steps = 0;
  double rho = 0.0;
  double rho_smooth = 0.0;
  bool zeta_satisfied = false;
};

struct MissionRun {
  std::vector<Trajectory> executed;
  std::vector<ReplanRecord> replans;
  std::vector<Note> notes;
  ExecutionState final_state;
};

/// Executes the plan, replanning whenever should_replan fires. Throws
/// ResidualInfeasible when a residual problem cannot be seeded.
MissionRun run_mission(const MissionConfig& cfg, const std::vector<Trajectory>& plan,
                       const std::vector<Event>& events, const OptimizeOptions& opts);

}  // namespace stlplan
