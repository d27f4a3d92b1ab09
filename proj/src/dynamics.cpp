#include "stlplan/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace stlplan {

Trajectory rollout(int vehicle, const State& start, const AxisSeries& accels, double ts) {
  if (!(ts > 0.0)) throw std::invalid_argument("rollout: sampling period must be positive");
  const std::size_t n = accels[0].size();
  if (accels[1].size() != n || accels[2].size() != n) throw std::invalid_argument("rollout: axis length mismatch");
  Trajectory out;
  out.vehicle = vehicle;
  out.ts = ts;
  out.acc = accels;
  const double half_ts2 = 0.5 * ts * ts;
  for (int j = 0; j < 3; ++j) {
    auto& p = out.pos[j];
    auto& v = out.vel[j];
    p.resize(n + 1);
    v.resize(n + 1);
    p[0] = start.p[j];
    v[0] = start.v[j];
    for (std::size_t k = 0; k < n; ++k) {
      p[k + 1] = p[k] + v[k] * ts + half_ts2 * accels[j][k];
      v[k + 1] = v[k] + accels[j][k] * ts;
    }
  }
  return out;
}

Trajectory rollout(const VehicleSpec& spec, const State& start, const AxisSeries& accels, double ts) {
  return rollout(spec.id, start, accels, ts);
}

double consistency_residual(const Trajectory& traj) {
  const std::size_t n = traj.acc[0].size();
  for (int j = 0; j < 3; ++j) {
    if (traj.pos[j].size() != n + 1 || traj.vel[j].size() != n + 1 || traj.acc[j].size() != n) {
      throw InconsistentTrajectory("trajectory sequence lengths disagree");
    }
  }
  const double ts = traj.ts;
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double a = traj.acc[j][k];
      worst = std::max(worst, std::abs(traj.pos[j][k + 1] - (traj.pos[j][k] + traj.vel[j][k] * ts + 0.5 * a * ts * ts)));
      worst = std::max(worst, std::abs(traj.vel[j][k + 1] - (traj.vel[j][k] + a * ts)));
    }
  }
  return worst;
}

void require_consistent(const Trajectory& traj) {
  const double r = consistency_residual(traj);
  if (!(r <= kConsistencyTol)) {
    throw InconsistentTrajectory("trajectory violates the double-integrator recursion (residual " +
                                 std::to_string(r) + ")");
  }
}

FeasibilityReport check_feasible(const Trajectory& traj, const VehicleSpec& spec) {
  require_consistent(traj);
  FeasibilityReport rep;
  const int n = traj.steps();
  for (int k = 0; k <= n; ++k) {
    for (int j = 0; j < 3; ++j) {
      const double v = traj.vel[j][k];
      if (v > spec.v_max[j]) rep.violations.push_back({k, j, Quantity::Velocity, v - spec.v_max[j]});
      if (v < spec.v_min[j]) rep.violations.push_back({k, j, Quantity::Velocity, spec.v_min[j] - v});
      if (k < n) {
        const double a = traj.acc[j][k];
        if (a > spec.a_max[j]) rep.violations.push_back({k, j, Quantity::Acceleration, a - spec.a_max[j]});
        if (a < spec.a_min[j]) rep.violations.push_back({k, j, Quantity::Acceleration, spec.a_min[j] - a});
      }
    }
  }
  return rep;
}

int seconds_to_samples(double seconds, double ts) { return static_cast<int>(std::floor(seconds / ts + 0.5)); }

TimeGrid time_grid(double horizon, double ts) {
  if (!(ts > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("time_grid: horizon and period must be positive");
  if (horizon < ts) throw std::invalid_argument("time_grid: horizon shorter than one period");
  TimeGrid g;
  g.steps = seconds_to_samples(horizon, ts);
  g.t.resize(static_cast<std::size_t>(g.steps) + 1);
  for (int k = 0; k <= g.steps; ++k) g.t[k] = k * ts;
  return g;
}

stl::Signal to_signal(const std::vector<Trajectory>& trajs) {
  stl::Signal s;
  if (!trajs.empty()) s.ts = trajs.front().ts;
  for (const auto& t : trajs) s.vehicles.push_back({t.pos, t.vel});
  return s;
}

void write_trajectory_csv(std::ostream& out, const std::vector<Trajectory>& trajs) {
  out << "t,vehicle,px,py,pz,vx,vy,vz,ax,ay,az\n";
  if (trajs.empty()) return;
  const int n = trajs.front().steps();
  char buf[64];
  auto put = [&](double v) {
    if (v == 0.0) v = 0.0;  // no negative zero
    std::snprintf(buf, sizeof buf, ",%.9f", v);
    out << buf;
  };
  for (int k = 0; k <= n; ++k) {
    for (const auto& t : trajs) {
      std::snprintf(buf, sizeof buf, "%.9f,%d", k * t.ts, t.vehicle + 1);
      out << buf;
      for (int j = 0; j < 3; ++j) put(t.pos[j][k]);
      for (int j = 0; j < 3; ++j) put(t.vel[j][k]);
      for (int j = 0; j < 3; ++j) put(k < n ? t.acc[j][k] : 0.0);
      out << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("trajectory file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,vehicle,px,py,pz,vx,vy,vz,ax,ay,az") throw CsvError("unexpected trajectory header: " + line);

  struct Row {
    double t;
    double v[9];
  };
  std::map<int, std::vector<Row>> by_vehicle;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw CsvError("line " + std::to_string(lineno) + ": expected 11 columns");
    Row r{};
    int vehicle = 0;
    try {
      r.t = std::stod(cells[0]);
      vehicle = std::stoi(cells[1]);
      for (int i = 0; i < 9; ++i) r.v[i] = std::stod(cells[static_cast<std::size_t>(i) + 2]);
    } catch (const std::exception&) {
      throw CsvError("line " + std::to_string(lineno) + ": malformed number");
    }
    if (vehicle < 1) throw CsvError("line " + std::to_string(lineno) + ": vehicle ids start at 1");
    by_vehicle[vehicle - 1].push_back(r);
  }
  if (by_vehicle.empty()) throw CsvError("trajectory file has no rows");

  std::vector<Trajectory> out;
  std::size_t rows = 0;
  for (auto& [vehicle, list] : by_vehicle) {
    if (rows == 0) rows = list.size();
    if (list.size() != rows) throw CsvError("vehicles have different sample counts");
    if (rows < 2) throw CsvError("trajectory needs at least two samples");
    Trajectory t;
    t.vehicle = vehicle;
    t.ts = list[1].t - list[0].t;
    if (!(t.ts > 0.0)) throw CsvError("time column must increase");
    for (int j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < rows; ++k) {
        t.pos[j].push_back(list[k].v[j]);
        t.vel[j].push_back(list[k].v[3 + j]);
        if (k + 1 < rows) t.acc[j].push_back(list[k].v[6 + j]);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Trajectory> quantized(const std::vector<Trajectory>& trajs) {
  std::stringstream ss;
  write_trajectory_csv(ss, trajs);
  auto out = read_trajectory_csv(ss);
  // The period is recovered from the rounded time column; keep the exact one.
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].ts = trajs[i].ts;
    out[i].vehicle = trajs[i].vehicle;
  }
  return out;
}

}  // namespace stlplan
