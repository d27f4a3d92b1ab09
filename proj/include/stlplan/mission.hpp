#pragma once

// Inspection mission description and the builder for its specification:
//
//   AND_d  G[0,N] (workspace_d AND avoid-obstacles_d AND separation_d)
//   AND_q  F[0,N-Nins] OR_d G[0,Nins] in-target_{q,d}
//   AND_q  F[0,N-Nbla] OR_d G[0,Nbla] (in-blade-box_{q,d} AND blade-standoff_{q,d})
//   AND_d  F[1,N] home_d
//   AND_d  G[1,N-1] (home_d -> X home_d)

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlplan/dynamics.hpp"
#include "stlplan/geometry.hpp"
#include "stlplan/stl.hpp"

namespace stlplan {

struct BladeSegment {
  int id = 0;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Box box;
};

struct Timing {
  double horizon = 0.0;     // T_N
  double inspection = 0.0;  // T_ins
  double blade = 0.0;       // T_bla
  double ts = 1.0;          // T_s
};

struct MissionParams {
  double gamma_dis = 1.0;
  double gamma_bla = 1.0;
  double eps = 0.5;
  double zeta = 0.0;
  double beta = 10.0;
};

struct SpeedRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct MissionConfig {
  Box workspace;
  std::vector<Box> obstacles;
  std::vector<Box> targets;
  std::vector<BladeSegment> blades;
  std::vector<Box> homes;  // one per vehicle
  std::vector<VehicleSpec> vehicles;
  Timing timing;
  MissionParams params;
  std::optional<SpeedRange> blade_speed_band;

  [[nodiscard]] int vehicle_count() const { return static_cast<int>(vehicles.size()); }
  [[nodiscard]] int task_count() const { return static_cast<int>(targets.size() + blades.size()); }
  [[nodiscard]] int steps() const { return seconds_to_samples(timing.horizon, timing.ts); }
  [[nodiscard]] int inspection_window() const { return seconds_to_samples(timing.inspection, timing.ts); }
  [[nodiscard]] int blade_window() const { return seconds_to_samples(timing.blade, timing.ts); }
};

// Tasks are numbered targets first, then blade sides.
enum class TaskKind { Target, Blade };

struct TaskRef {
  TaskKind kind = TaskKind::Target;
  int index = 0;
};

TaskRef task_ref(const MissionConfig& cfg, int task);
/// Window length in samples of the Always-dwell for a task.
int task_window(const MissionConfig& cfg, int task);
/// Routing point for a task: target box center, or the blade segment midpoint
/// moved Gamma_bla along the horizontal normal toward the blade box center.
Vec3 task_point(const MissionConfig& cfg, int task);
std::string task_name(const MissionConfig& cfg, int task);

double dist_to_segment(const Vec3& p, const BladeSegment& seg);

struct ValidationIssue {
  std::string code;
  std::string message;
};

/// Every invariant violation with a machine-readable code; empty when valid.
std::vector<ValidationIssue> validate(const MissionConfig& cfg);

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ValidationIssue> issues);
  ConfigError(std::string code, std::string message);
  [[nodiscard]] const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Predicate groups used by the builder and by dwell certification.
stl::Formula in_box(int vehicle, const Box& box);
stl::Formula outside_box(int vehicle, const Box& box);
stl::Formula safety_clause(const MissionConfig& cfg, int vehicle);
stl::Formula home_region(const MissionConfig& cfg, int vehicle);
/// State formula that must hold during the whole dwell of `task` by `vehicle`.
stl::Formula task_region(const MissionConfig& cfg, int task, int vehicle);

stl::Formula build_formula(const MissionConfig& cfg);
/// Names for the top-level conjuncts of build_formula, in order.
std::vector<std::string> clause_labels(const MissionConfig& cfg);

/// Names matching the config, for printing formulas.
stl::Bindings bindings_for(const MissionConfig& cfg);

// JSON file format.
MissionConfig parse_mission(std::string_view json_text);
MissionConfig load_mission(const std::string& path);
std::string mission_to_json(const MissionConfig& cfg);

}  // namespace stlplan
