#pragma once

// Task allocation by a multi-vehicle routing MILP without subtour
// elimination:
//
//   minimize   sum w_{ij|d} z_{ij|d}
//   subject to in-flow = out-flow at every task node, per vehicle
//              every task node entered at least once by some vehicle
//              exactly one departure from and one return to each depot
//
// solved by best-first branch and bound over LP relaxations. Disconnected
// subtours in the solution are spliced into depot cycles afterwards.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlplan/dynamics.hpp"
#include "stlplan/mission.hpp"

namespace stlplan {

struct RouteNode {
  enum class Kind { Depot, Task };
  Kind kind = Kind::Depot;
  int index = 0;  // vehicle for depots, task id for tasks
  Vec3 position = Vec3::Zero();
  int dwell = 0;  // samples spent at the node (window + 1 for tasks)
};

/// One decision variable z_{from,to|vehicle}.
struct Arc {
  int vehicle = 0;
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

struct RoutingGraph {
  int vehicle_count = 0;
  int task_count = 0;
  double ts = 1.0;
  std::vector<RouteNode> nodes;  // depots 0..vehicle_count-1, then tasks
  std::vector<VehicleSpec> vehicles;
  std::vector<State> starts;
  std::vector<Vec3> home_points;
  /// Arcs of each vehicle's complete digraph over its own depot and the task
  /// nodes, ordered by (vehicle, from, to).
  std::vector<Arc> arcs;

  [[nodiscard]] int node_count() const { return static_cast<int>(nodes.size()); }
  /// Directed edges of the complete digraph over all nodes.
  [[nodiscard]] int edge_count() const { return node_count() * (node_count() - 1); }
  [[nodiscard]] int task_node(int task) const { return vehicle_count + task; }
  [[nodiscard]] bool is_task(int node) const { return node >= vehicle_count; }
  /// Flight time of vehicle d between two nodes: distance / max axis speed.
  [[nodiscard]] double weight(int vehicle, int from, int to) const;
  [[nodiscard]] std::vector<int> in_neighbors(int node) const;
  [[nodiscard]] std::vector<int> out_neighbors(int node) const;
};

RoutingGraph build_graph(const MissionConfig& cfg);
/// Same graph with explicit start states (positions replace the depots).
RoutingGraph build_graph(const MissionConfig& cfg, const std::vector<State>& starts);

struct MilpOptions {
  int max_nodes = 200000;
};

struct EdgeSelection {
  std::vector<std::uint8_t> z;  // aligned with RoutingGraph::arcs
  double objective = 0.0;
  double root_bound = 0.0;
  int nodes_explored = 0;
  bool node_limit_hit = false;
};

class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

EdgeSelection solve_milp(const RoutingGraph& g, const MilpOptions& opts = {});

/// LP relaxation value of the routing model (z in [0, 1]).
double routing_lp_bound(const RoutingGraph& g);

struct RouteStop {
  int node = 0;
  int arrival = 0;    // first sample at the node
  int departure = 0;  // last sample at the node
};

struct VehicleRoute {
  int vehicle = 0;
  std::vector<int> cycle;  // starts and ends at the vehicle's depot
  std::vector<RouteStop> stops;
  double cost = 0.0;
};

struct RoutePlan {
  std::vector<VehicleRoute> routes;
  double total_cost = 0.0;
  /// Samples needed by the slowest vehicle to finish and reach home.
  int required_steps = 0;
};

RoutePlan repair_subtours(const std::vector<std::uint8_t>& z, const RoutingGraph& g);

/// Fills stop timings and required_steps from the seed timing model.
void schedule(RoutePlan& plan, const RoutingGraph& g);

class HorizonTooShort : public std::runtime_error {
 public:
  HorizonTooShort(int required_steps, double ts);
  [[nodiscard]] int required_steps() const { return required_steps_; }
  [[nodiscard]] double required_horizon() const { return required_horizon_; }

 private:
  int required_steps_;
  double required_horizon_;
};

/// Fraction of the velocity and acceleration limits used by seeds.
constexpr double kSeedLimitFraction = 0.7;

/// Rest-to-rest straight leg sampled at ts: speeds v_0..v_M along the leg
/// with v_0 = v_M = 0, covering `length` under the given caps.
std::vector<double> leg_speed_profile(double length, double speed_cap, double accel_cap, double ts);

std::vector<Trajectory> seed_trajectories(const RoutePlan& plan, const RoutingGraph& g, int steps);
std::vector<Trajectory> seed_trajectories(const RoutePlan& plan, const MissionConfig& cfg);

}  // namespace stlplan
