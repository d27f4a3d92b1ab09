#include "stlplan/router.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace stlplan {

HorizonTooShort::HorizonTooShort(int required_steps, double ts)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "horizon too short: the seed needs " << required_steps << " samples (" << required_steps * ts
            << " s)";
        return msg.str();
      }()),
      required_steps_(required_steps),
      required_horizon_(required_steps * ts) {}

namespace {

// Total distance covered by the plateau profile min(k a Ts, h, (M - k) a Ts).
double plateau_distance(int m, double h, double accel_cap, double ts) {
  double sum = 0.0;
  for (int k = 1; k < m; ++k) {
    sum += std::min({k * accel_cap * ts, h, (m - k) * accel_cap * ts});
  }
  return sum * ts;
}

}  // namespace

std::vector<double> leg_speed_profile(double length, double speed_cap, double accel_cap, double ts) {
  if (!(speed_cap > 0.0) || !(accel_cap > 0.0) || !(ts > 0.0)) {
    throw std::invalid_argument("leg_speed_profile: caps and ts must be positive");
  }
  if (length <= 1e-12) return {0.0};
  int m = 2;
  while (plateau_distance(m, speed_cap, accel_cap, ts) < length) {
    // Grow geometrically, then back off to the minimal count.
    if (plateau_distance(2 * m, speed_cap, accel_cap, ts) < length) {
      m *= 2;
    } else {
      ++m;
    }
  }
  while (m > 2 && plateau_distance(m - 1, speed_cap, accel_cap, ts) >= length) --m;

  double lo = 0.0, hi = speed_cap;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * speed_cap; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (plateau_distance(m, mid, accel_cap, ts) < length) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  std::vector<double> v(m + 1, 0.0);
  double covered = 0.0;
  for (int k = 1; k < m; ++k) {
    v[k] = std::min({k * accel_cap * ts, hi, (m - k) * accel_cap * ts});
    covered += v[k] * ts;
  }
  const double scale = length / covered;
  for (double& s : v) s *= scale;
  return v;
}

namespace {

struct VehicleSeed {
  AxisSeries acc;
  std::vector<RouteStop> stops;
  int home_arrival = 0;
};

double speed_limit(const VehicleSpec& s, int axis, double direction) {
  return direction >= 0.0 ? s.v_max[axis] : -s.v_min[axis];
}

double accel_limit(const VehicleSpec& s, int axis) { return std::min(s.a_max[axis], -s.a_min[axis]); }

void append_hold(AxisSeries& acc, int samples) {
  for (auto& axis : acc) axis.insert(axis.end(), static_cast<std::size_t>(samples), 0.0);
}

// Rest-to-rest straight flight from `from` to `to`; returns the samples used.
int append_leg(AxisSeries& acc, const VehicleSpec& spec, const Vec3& from, const Vec3& to, double ts) {
  const Vec3 delta = to - from;
  const double length = delta.norm();
  if (length <= 1e-12) return 0;
  const Vec3 u = delta / length;
  double speed_cap = std::numeric_limits<double>::infinity();
  double accel_cap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; ++j) {
    if (std::abs(u[j]) < 1e-12) continue;
    speed_cap = std::min(speed_cap, kSeedLimitFraction * speed_limit(spec, j, u[j]) / std::abs(u[j]));
    accel_cap = std::min(accel_cap, kSeedLimitFraction * accel_limit(spec, j) / std::abs(u[j]));
  }
  const auto v = leg_speed_profile(length, speed_cap, accel_cap, ts);
  const int m = static_cast<int>(v.size()) - 1;
  for (int k = 0; k < m; ++k) {
    const double a = (v[k + 1] - v[k]) / ts;
    for (int j = 0; j < 3; ++j) acc[j].push_back(u[j] * a);
  }
  return m;
}

// Constant deceleration to rest; returns the samples used and the stop point.
int append_brake(AxisSeries& acc, const VehicleSpec& spec, const State& start, double ts, Vec3& stop) {
  int samples = 0;
  for (int j = 0; j < 3; ++j) {
    const double cap = kSeedLimitFraction * accel_limit(spec, j) * ts;
    if (start.v[j] != 0.0) samples = std::max(samples, static_cast<int>(std::ceil(std::abs(start.v[j]) / cap - 1e-12)));
  }
  stop = start.p;
  if (samples == 0) return 0;
  for (int j = 0; j < 3; ++j) {
    const double a = -start.v[j] / (samples * ts);
    acc[j].insert(acc[j].end(), static_cast<std::size_t>(samples), a);
    // p_B = p_0 + v_0 B Ts / 2 under constant deceleration to rest.
    stop[j] += 0.5 * start.v[j] * samples * ts;
  }
  return samples;
}

VehicleSeed build_vehicle_seed(const VehicleRoute& route, const RoutingGraph& g) {
  const int d = route.vehicle;
  const VehicleSpec& spec = g.vehicles.at(d);
  const State& start = g.starts.at(d);
  VehicleSeed out;
  Vec3 here;
  int k = append_brake(out.acc, spec, start, g.ts, here);
  out.stops.push_back({d, 0, k});
  for (std::size_t i = 1; i + 1 < route.cycle.size(); ++i) {
    const RouteNode& node = g.nodes.at(route.cycle[i]);
    k += append_leg(out.acc, spec, here, node.position, g.ts);
    here = node.position;
    const int hold = std::max(node.dwell - 1, 0);
    append_hold(out.acc, hold);
    out.stops.push_back({route.cycle[i], k, k + hold});
    k += hold;
  }
  const bool idle = route.cycle.size() <= 2;
  const Vec3 home = g.home_points.at(d);
  if (!(idle && k == 0 && start.v.isZero())) {
    k += append_leg(out.acc, spec, here, home, g.ts);
  }
  out.stops.push_back({d, k, k});
  out.home_arrival = k;
  return out;
}

}  // namespace

void schedule(RoutePlan& plan, const RoutingGraph& g) {
  plan.required_steps = 0;
  for (auto& route : plan.routes) {
    const VehicleSeed s = build_vehicle_seed(route, g);
    route.stops = s.stops;
    plan.required_steps = std::max(plan.required_steps, s.home_arrival);
  }
}

std::vector<Trajectory> seed_trajectories(const RoutePlan& plan, const RoutingGraph& g, int steps) {
  int required = 0;
  std::vector<VehicleSeed> seeds;
  for (const auto& route : plan.routes) {
    seeds.push_back(build_vehicle_seed(route, g));
    required = std::max(required, seeds.back().home_arrival);
  }
  if (steps < required) throw HorizonTooShort(required, g.ts);
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < plan.routes.size(); ++i) {
    auto& acc = seeds[i].acc;
    append_hold(acc, steps - static_cast<int>(acc[0].size()));
    const int d = plan.routes[i].vehicle;
    out.push_back(rollout(g.vehicles.at(d), g.starts.at(d), acc, g.ts));
  }
  return out;
}

std::vector<Trajectory> seed_trajectories(const RoutePlan& plan, const MissionConfig& cfg) {
  return seed_trajectories(plan, build_graph(cfg), cfg.steps());
}

}  // namespace stlplan
