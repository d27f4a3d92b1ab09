#pragma once

// Per-axis double integrator with zero-order-hold accelerations:
//   p[k+1] = p[k] + v[k] Ts + 0.5 a[k] Ts^2
//   v[k+1] = v[k] + a[k] Ts

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlplan/geometry.hpp"
#include "stlplan/stl.hpp"

namespace stlplan {

struct VehicleSpec {
  int id = 0;
  std::string name;
  Vec3 depot = Vec3::Zero();
  Vec3 v_min = Vec3::Constant(-1.0);
  Vec3 v_max = Vec3::Constant(1.0);
  Vec3 a_min = Vec3::Constant(-1.0);
  Vec3 a_max = Vec3::Constant(1.0);

  /// Infinity norm of the upper velocity bounds.
  [[nodiscard]] double max_axis_speed() const { return v_max.cwiseAbs().maxCoeff(); }
};

struct State {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
};

using AxisSeries = std::array<std::vector<double>, 3>;

struct Trajectory {
  int vehicle = 0;
  double ts = 1.0;
  AxisSeries pos;  // N + 1 samples
  AxisSeries vel;  // N + 1 samples
  AxisSeries acc;  // N samples

  [[nodiscard]] int steps() const { return static_cast<int>(pos[0].size()) - 1; }
  [[nodiscard]] Vec3 position(int k) const { return {pos[0][k], pos[1][k], pos[2][k]}; }
  [[nodiscard]] Vec3 velocity(int k) const { return {vel[0][k], vel[1][k], vel[2][k]}; }
  [[nodiscard]] Vec3 acceleration(int k) const { return {acc[0][k], acc[1][k], acc[2][k]}; }
  [[nodiscard]] State state(int k) const { return {position(k), velocity(k)}; }
};

Trajectory rollout(const VehicleSpec& spec, const State& start, const AxisSeries& accels, double ts);
Trajectory rollout(int vehicle, const State& start, const AxisSeries& accels, double ts);

class InconsistentTrajectory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kConsistencyTol = 1e-9;

/// Largest absolute residual of the double-integrator recursion.
double consistency_residual(const Trajectory& traj);
/// Throws InconsistentTrajectory when the residual exceeds kConsistencyTol or
/// the sequence lengths disagree.
void require_consistent(const Trajectory& traj);

enum class Quantity { Velocity, Acceleration };

struct Violation {
  int k = 0;
  int axis = 0;
  Quantity quantity = Quantity::Velocity;
  double magnitude = 0.0;
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  [[nodiscard]] bool feasible() const { return violations.empty(); }
};

FeasibilityReport check_feasible(const Trajectory& traj, const VehicleSpec& spec);

struct TimeGrid {
  int steps = 0;          // N
  std::vector<double> t;  // t_k = k Ts, k = 0..N
};

/// N = round(TN / Ts) with halves rounded up.
TimeGrid time_grid(double horizon, double ts);
int seconds_to_samples(double seconds, double ts);

stl::Signal to_signal(const std::vector<Trajectory>& trajs);

/// `t,vehicle,px,py,pz,vx,vy,vz,ax,ay,az`, rows ordered by sample then
/// vehicle, 9 decimals, vehicle ids 1-based. The final sample repeats zero
/// acceleration.
void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& trajs);

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse of write_trajectory_csv; one Trajectory per vehicle id, sorted by
/// id. Throws CsvError on malformed or empty input.
std::vector<Trajectory> read_trajectory_csv(std::istream& in);

/// Values after a write/read cycle through the CSV formatting.
std::vector<Trajectory> quantized(const std::vector<Trajectory>& trajs);

}  // namespace stlplan
