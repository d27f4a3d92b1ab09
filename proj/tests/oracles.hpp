#pragma once

// Independent reference implementations used by the tests: exhaustive
// routing enumeration, a routing-constraint validator, random formula and
// signal generators, and central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "stlplan/mission.hpp"
#include "stlplan/router.hpp"
#include "stlplan/stl.hpp"

namespace oracle {

using stlplan::Vec3;

// ---------------------------------------------------------------------------
// Routing

/// Minimum objective over every binary assignment satisfying flow
/// conservation, coverage and the depot degree rows. Each vehicle's arcs are
/// enumerated on their own (the rows other than coverage only couple arcs of
/// one vehicle), keeping the cheapest assignment per set of entered tasks;
/// coverage is then checked over all combinations of those sets.
inline double brute_force_routing(const stlplan::RoutingGraph& g) {
  const int nv = g.vehicle_count;
  const int nt = g.task_count;
  const double inf = std::numeric_limits<double>::infinity();
  if (nt == 0) return 0.0;
  const std::uint32_t full = (1u << nt) - 1;
  std::vector<std::vector<double>> best(nv, std::vector<double>(full + 1, inf));

  for (int d = 0; d < nv; ++d) {
    std::vector<int> depot_out, depot_in, inner;
    for (int e = 0; e < static_cast<int>(g.arcs.size()); ++e) {
      const auto& a = g.arcs[e];
      if (a.vehicle != d) continue;
      if (a.from == d) depot_out.push_back(e);
      else if (a.to == d) depot_in.push_back(e);
      else inner.push_back(e);
    }
    const int m = static_cast<int>(inner.size());
    // Any assignment with depot out/in degree != 1 is infeasible, so only
    // the single-arc choices for the depot rows need enumerating; the task
    // arcs are walked in Gray-code order.
    for (int eo : depot_out) {
      for (int ei : depot_in) {
        std::vector<int> in(g.node_count(), 0), out(g.node_count(), 0);
        double cost = g.arcs[eo].weight + g.arcs[ei].weight;
        ++out[g.arcs[eo].from];
        ++in[g.arcs[eo].to];
        ++out[g.arcs[ei].from];
        ++in[g.arcs[ei].to];
        std::vector<char> on(m, 0);
        const std::uint64_t total = std::uint64_t{1} << m;
        for (std::uint64_t step = 0; step < total; ++step) {
          if (step > 0) {
            const int bit = __builtin_ctzll(step);
            const auto& a = g.arcs[inner[bit]];
            const int delta = on[bit] ? -1 : 1;
            on[bit] = !on[bit];
            out[a.from] += delta;
            in[a.to] += delta;
            cost += delta * a.weight;
          }
          bool balanced = true;
          std::uint32_t mask = 0;
          for (int t = 0; t < nt && balanced; ++t) {
            const int node = nv + t;
            if (in[node] != out[node]) balanced = false;
            if (in[node] > 0) mask |= 1u << t;
          }
          if (balanced && cost < best[d][mask]) best[d][mask] = cost;
        }
      }
    }
  }

  // Combine the vehicles' mask tables.
  std::vector<double> acc(full + 1, inf);
  acc[0] = 0.0;
  for (int d = 0; d < nv; ++d) {
    std::vector<double> next(full + 1, inf);
    for (std::uint32_t a = 0; a <= full; ++a) {
      if (acc[a] == inf) continue;
      for (std::uint32_t b = 0; b <= full; ++b) {
        if (best[d][b] == inf) continue;
        next[a | b] = std::min(next[a | b], acc[a] + best[d][b]);
      }
    }
    acc = std::move(next);
  }
  return acc[full];
}

/// Empty when z satisfies every routing row; otherwise a description of the
/// first violation.
inline std::string routing_violation(const std::vector<std::uint8_t>& z, const stlplan::RoutingGraph& g) {
  if (z.size() != g.arcs.size()) return "size mismatch";
  const int n = g.node_count();
  std::vector<int> covered(n, 0);
  for (int d = 0; d < g.vehicle_count; ++d) {
    std::vector<int> in(n, 0), out(n, 0);
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (z[e] > 1) return "non-binary entry";
      if (!z[e] || g.arcs[e].vehicle != d) continue;
      ++out[g.arcs[e].from];
      ++in[g.arcs[e].to];
      ++covered[g.arcs[e].to];
    }
    for (int t = 0; t < g.task_count; ++t) {
      if (in[g.vehicle_count + t] != out[g.vehicle_count + t]) {
        return "flow conservation fails at task " + std::to_string(t) + " for vehicle " + std::to_string(d);
      }
    }
    if (g.task_count > 0 && (out[d] != 1 || in[d] != 1)) {
      return "depot degree of vehicle " + std::to_string(d) + " is out " + std::to_string(out[d]) + " in " +
             std::to_string(in[d]);
    }
  }
  for (int t = 0; t < g.task_count; ++t) {
    if (covered[g.vehicle_count + t] < 1) return "task " + std::to_string(t) + " not covered";
  }
  return {};
}

/// Mission with random depots and target boxes, used to build routing graphs.
inline stlplan::MissionConfig random_routing_mission(std::mt19937_64& rng, int vehicles, int tasks) {
  std::uniform_real_distribution<double> coord(0.0, 20.0);
  std::uniform_real_distribution<double> speed(1.0, 4.0);
  stlplan::MissionConfig cfg;
  cfg.workspace = {Vec3(-5, -5, -5), Vec3(30, 30, 30)};
  for (int d = 0; d < vehicles; ++d) {
    stlplan::VehicleSpec v;
    v.id = d;
    v.depot = Vec3(coord(rng), coord(rng), coord(rng));
    const double s = speed(rng);
    v.v_max = Vec3::Constant(s);
    v.v_min = -v.v_max;
    v.a_max = Vec3::Constant(2.0);
    v.a_min = -v.a_max;
    cfg.vehicles.push_back(v);
    cfg.homes.push_back({v.depot.array() - 0.5, v.depot.array() + 0.5});
  }
  for (int t = 0; t < tasks; ++t) {
    const Vec3 c(coord(rng), coord(rng), coord(rng));
    cfg.targets.push_back({c.array() - 1.0, c.array() + 1.0});
  }
  cfg.timing = {200.0, 2.0, 2.0, 1.0};
  return cfg;
}

// ---------------------------------------------------------------------------
// Formulas and signals

inline stlplan::stl::Signal random_signal(std::mt19937_64& rng, int vehicles, int samples, double scale = 5.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  stlplan::stl::Signal s;
  s.ts = 1.0;
  s.vehicles.resize(vehicles);
  for (auto& v : s.vehicles) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < samples; ++k) {
        v.pos[j].push_back(u(rng));
        v.vel[j].push_back(0.5 * u(rng));
      }
    }
  }
  return s;
}

inline stlplan::stl::Predicate random_predicate(std::mt19937_64& rng, int vehicles) {
  using namespace stlplan::stl;
  std::uniform_int_distribution<int> veh(0, vehicles - 1), axis(0, 2), kind(0, 9);
  std::uniform_real_distribution<double> u(-5.0, 5.0), width(0.5, 6.0);
  const int pick = kind(rng);
  if (pick < 5) {
    AxisBand b;
    b.vehicle = veh(rng);
    b.axis = axis(rng);
    const double lo = u(rng);
    b.lo = lo;
    b.hi = lo + width(rng);
    if (pick == 1) b.lo = -std::numeric_limits<double>::infinity();
    if (pick == 2) b.hi = std::numeric_limits<double>::infinity();
    b.negated = pick == 3;
    return b;
  }
  if (pick < 7 && vehicles > 1) {
    PairDistance p;
    p.first = veh(rng);
    do p.second = veh(rng); while (p.second == p.first);
    p.threshold = width(rng);
    return p;
  }
  if (pick < 9) {
    SegmentDistanceBand s;
    s.vehicle = veh(rng);
    s.a = Vec3(u(rng), u(rng), u(rng));
    s.b = Vec3(u(rng), u(rng), u(rng));
    s.lo = 0.5 * width(rng);
    s.hi = s.lo + width(rng);
    return s;
  }
  SpeedBand sp;
  sp.vehicle = veh(rng);
  sp.lo = 0.2 * width(rng);
  sp.hi = sp.lo + width(rng);
  return sp;
}

inline stlplan::stl::Formula random_formula(std::mt19937_64& rng, int vehicles, int depth) {
  using stlplan::stl::Formula;
  std::uniform_int_distribution<int> op(0, depth <= 0 ? 0 : 8), win(0, 3), fan(2, 3);
  const int pick = op(rng);
  auto sub = [&] { return random_formula(rng, vehicles, depth - 1); };
  auto window = [&] {
    const int a = win(rng);
    return stlplan::stl::Window{a, a + win(rng)};
  };
  switch (pick) {
    case 0:
    case 1:
      return Formula::atom(random_predicate(rng, vehicles));
    case 2:
      return Formula::negation(sub());
    case 3:
    case 4: {
      std::vector<Formula> kids;
      const int n = fan(rng);
      for (int i = 0; i < n; ++i) kids.push_back(sub());
      return pick == 3 ? Formula::conjunction(kids) : Formula::disjunction(kids);
    }
    case 5:
      return Formula::implication(sub(), sub());
    case 6:
      return Formula::always(window(), sub());
    case 7:
      return Formula::eventually(window(), sub());
    default:
      return Formula::next(sub());
  }
}

// ---------------------------------------------------------------------------
// Finite differences

/// Central differences of f at x with step h.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// max |a - b| / max(max |b|, floor).
inline double relative_max_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-3) {
  double err = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    err = std::max(err, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return err / scale;
}

}  // namespace oracle
