#include "stlplan/router.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "stlplan/simplex.hpp"

namespace stlplan {

double RoutingGraph::weight(int vehicle, int from, int to) const {
  if (from == to) return 0.0;
  const double dist = (nodes.at(from).position - nodes.at(to).position).norm();
  return dist / vehicles.at(vehicle).max_axis_speed();
}

std::vector<int> RoutingGraph::in_neighbors(int node) const {
  std::vector<int> out;
  for (int i = 0; i < node_count(); ++i) {
    if (i != node) out.push_back(i);
  }
  return out;
}

std::vector<int> RoutingGraph::out_neighbors(int node) const { return in_neighbors(node); }

RoutingGraph build_graph(const MissionConfig& cfg) {
  std::vector<State> starts;
  for (const auto& v : cfg.vehicles) starts.push_back({v.depot, Vec3::Zero()});
  return build_graph(cfg, starts);
}

RoutingGraph build_graph(const MissionConfig& cfg, const std::vector<State>& starts) {
  if (starts.size() != cfg.vehicles.size()) throw std::invalid_argument("build_graph: one start state per vehicle");
  RoutingGraph g;
  g.vehicle_count = cfg.vehicle_count();
  g.task_count = cfg.task_count();
  g.ts = cfg.timing.ts;
  g.vehicles = cfg.vehicles;
  g.starts = starts;
  for (int d = 0; d < g.vehicle_count; ++d) {
    g.nodes.push_back({RouteNode::Kind::Depot, d, starts[d].p, 0});
    g.home_points.push_back(cfg.homes.at(d).center());
  }
  for (int q = 0; q < g.task_count; ++q) {
    g.nodes.push_back({RouteNode::Kind::Task, q, task_point(cfg, q), task_window(cfg, q) + 1});
  }
  for (int d = 0; d < g.vehicle_count; ++d) {
    std::vector<int> own{d};
    for (int q = 0; q < g.task_count; ++q) own.push_back(g.task_node(q));
    for (int i : own) {
      for (int j : own) {
        if (i != j) g.arcs.push_back({d, i, j, g.weight(d, i, j)});
      }
    }
  }
  return g;
}

namespace {

constexpr double kIntTol = 1e-6;

struct Model {
  LinearProgram lp;
};

/// Rows: flow conservation (vehicle, task), coverage (task), depot departure
/// (vehicle), depot return (vehicle).
Model routing_model(const RoutingGraph& g) {
  const int nv = static_cast<int>(g.arcs.size());
  const int rows = g.vehicle_count * g.task_count + g.task_count + 2 * g.vehicle_count;
  Model m;
  m.lp.a = Eigen::MatrixXd::Zero(rows, nv);
  m.lp.b = Eigen::VectorXd::Zero(rows);
  m.lp.sense.assign(rows, RowSense::Equal);
  m.lp.cost.resize(nv);
  m.lp.upper = Eigen::VectorXd::Ones(nv);
  const int cover0 = g.vehicle_count * g.task_count;
  const int depart0 = cover0 + g.task_count;
  const int return0 = depart0 + g.vehicle_count;
  for (int t = 0; t < g.task_count; ++t) {
    m.lp.sense[cover0 + t] = RowSense::GreaterEqual;
    m.lp.b[cover0 + t] = 1.0;
  }
  for (int d = 0; d < g.vehicle_count; ++d) {
    m.lp.b[depart0 + d] = 1.0;
    m.lp.b[return0 + d] = 1.0;
  }
  for (int e = 0; e < nv; ++e) {
    const Arc& a = g.arcs[e];
    m.lp.cost[e] = a.weight;
    if (g.is_task(a.to)) {
      const int t = a.to - g.vehicle_count;
      m.lp.a(a.vehicle * g.task_count + t, e) += 1.0;
      m.lp.a(cover0 + t, e) += 1.0;
    }
    if (g.is_task(a.from)) {
      m.lp.a(a.vehicle * g.task_count + (a.from - g.vehicle_count), e) -= 1.0;
    }
    if (a.from == a.vehicle) m.lp.a(depart0 + a.vehicle, e) += 1.0;
    if (a.to == a.vehicle) m.lp.a(return0 + a.vehicle, e) += 1.0;
  }
  return m;
}

struct Relaxation {
  bool feasible = false;
  double bound = 0.0;
  Eigen::VectorXd x;  // full-length, fixed entries filled in
};

Relaxation relax(const Model& model, const std::vector<std::int8_t>& fix) {
  const auto& lp = model.lp;
  const int n = static_cast<int>(lp.cost.size());
  std::vector<int> free;
  Eigen::VectorXd rhs = lp.b;
  double fixed_cost = 0.0;
  for (int j = 0; j < n; ++j) {
    if (fix[j] < 0) {
      free.push_back(j);
    } else if (fix[j] == 1) {
      rhs -= lp.a.col(j);
      fixed_cost += lp.cost[j];
    }
  }
  LinearProgram sub;
  sub.a.resize(lp.a.rows(), static_cast<Eigen::Index>(free.size()));
  sub.cost.resize(static_cast<Eigen::Index>(free.size()));
  for (std::size_t k = 0; k < free.size(); ++k) {
    sub.a.col(static_cast<Eigen::Index>(k)) = lp.a.col(free[k]);
    sub.cost[static_cast<Eigen::Index>(k)] = lp.cost[free[k]];
  }
  sub.b = rhs;
  sub.sense = lp.sense;
  sub.upper = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(free.size()));
  const LpResult r = solve_lp(sub);
  Relaxation out;
  if (r.status == LpStatus::IterationLimit) throw RoutingError("LP relaxation hit the pivot limit");
  if (r.status != LpStatus::Optimal) return out;
  out.feasible = true;
  out.bound = fixed_cost + r.objective;
  out.x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (fix[j] == 1) out.x[j] = 1.0;
  }
  for (std::size_t k = 0; k < free.size(); ++k) out.x[free[k]] = r.x[static_cast<Eigen::Index>(k)];
  return out;
}

struct BbNode {
  double bound;
  long id;
  std::vector<std::int8_t> fix;
  Eigen::VectorXd x;
};

struct WorseFirst {
  bool operator()(const BbNode& a, const BbNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

double routing_lp_bound(const RoutingGraph& g) {
  if (g.task_count == 0) return 0.0;
  const Model model = routing_model(g);
  const auto r = relax(model, std::vector<std::int8_t>(g.arcs.size(), -1));
  if (!r.feasible) throw RoutingError("routing relaxation is infeasible");
  return r.bound;
}

EdgeSelection solve_milp(const RoutingGraph& g, const MilpOptions& opts) {
  if (g.vehicle_count < 1) throw RoutingError("routing needs at least one vehicle");
  EdgeSelection out;
  out.z.assign(g.arcs.size(), 0);
  // Without tasks every vehicle simply stays; the depot-degree rows do not
  // apply.
  if (g.task_count == 0) return out;

  const Model model = routing_model(g);
  const int n = static_cast<int>(g.arcs.size());
  std::priority_queue<BbNode, std::vector<BbNode>, WorseFirst> open;
  long next_id = 0;

  std::vector<std::int8_t> root_fix(n, -1);
  Relaxation root = relax(model, root_fix);
  if (!root.feasible) throw RoutingError("routing model is infeasible");
  out.root_bound = root.bound;
  open.push({root.bound, next_id++, root_fix, root.x});

  double incumbent = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> best;
  while (!open.empty()) {
    BbNode node = open.top();
    open.pop();
    if (node.bound >= incumbent - 1e-9) continue;
    if (++out.nodes_explored > opts.max_nodes) {
      out.node_limit_hit = true;
      break;
    }
    int branch = -1;
    double frac_best = kIntTol;
    for (int j = 0; j < n; ++j) {
      const double f = std::min(node.x[j], 1.0 - node.x[j]);
      if (f > frac_best + 1e-12) {
        frac_best = f;
        branch = j;
      }
    }
    if (branch < 0) {
      incumbent = node.bound;
      best.assign(n, 0);
      for (int j = 0; j < n; ++j) best[j] = node.x[j] > 0.5 ? 1 : 0;
      continue;
    }
    for (std::int8_t value : {std::int8_t{1}, std::int8_t{0}}) {
      auto fix = node.fix;
      fix[branch] = value;
      Relaxation child = relax(model, fix);
      if (child.feasible && child.bound < incumbent - 1e-9) {
        open.push({child.bound, next_id++, std::move(fix), std::move(child.x)});
      }
    }
  }
  if (best.empty()) {
    throw RoutingError(out.node_limit_hit ? "branch and bound hit the node limit without an integer solution"
                                          : "routing model has no integer solution");
  }
  out.z = std::move(best);
  out.objective = 0.0;
  for (int j = 0; j < n; ++j) {
    if (out.z[j]) out.objective += g.arcs[j].weight;
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double cycle_cost(const RoutingGraph& g, int vehicle, const std::vector<int>& cyc) {
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < cyc.size(); ++i) c += g.weight(vehicle, cyc[i], cyc[i + 1]);
  return c;
}

}  // namespace

RoutePlan repair_subtours(const std::vector<std::uint8_t>& z, const RoutingGraph& g) {
  if (z.size() != g.arcs.size()) throw RoutingError("edge selection does not match the graph");
  const int nn = g.node_count();

  std::vector<std::vector<int>> trunks(g.vehicle_count);
  struct Subtour {
    int vehicle;
    std::vector<int> nodes;
  };
  std::vector<Subtour> subtours;

  for (int d = 0; d < g.vehicle_count; ++d) {
    std::vector<std::vector<int>> out_adj(nn);
    std::vector<int> indeg(nn, 0), outdeg(nn, 0);
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (!z[e] || g.arcs[e].vehicle != d) continue;
      out_adj[g.arcs[e].from].push_back(g.arcs[e].to);
      ++outdeg[g.arcs[e].from];
      ++indeg[g.arcs[e].to];
    }
    for (int v = 0; v < nn; ++v) {
      if (indeg[v] != outdeg[v]) {
        throw RoutingError("flow conservation violated at node " + std::to_string(v) + " for vehicle " +
                           std::to_string(d + 1));
      }
    }
    const bool has_tasks = g.task_count > 0;
    if (has_tasks && (outdeg[d] != 1 || indeg[d] != 1)) {
      throw RoutingError("vehicle " + std::to_string(d + 1) + " must leave and re-enter its depot exactly once");
    }
    if (!has_tasks && outdeg[d] != 0) throw RoutingError("vehicle routes without tasks must be empty");
    for (auto& adj : out_adj) std::sort(adj.begin(), adj.end(), std::greater<>());  // pop_back yields lowest

    // Closed walks from the depot first, then from the lowest node with
    // spare out-edges; each walk is split into simple cycles.
    std::vector<std::vector<int>> cycles;
    auto walk_from = [&](int start) {
      std::vector<int> walk{start};
      int cur = start;
      while (!out_adj[cur].empty()) {
        const int nxt = out_adj[cur].back();
        out_adj[cur].pop_back();
        walk.push_back(nxt);
        cur = nxt;
        if (cur == start && out_adj[cur].empty()) break;
      }
      std::vector<int> stack;
      for (int v : walk) {
        const auto it = std::find(stack.begin(), stack.end(), v);
        if (it == stack.end()) {
          stack.push_back(v);
          continue;
        }
        std::vector<int> cyc(it, stack.end());
        stack.erase(it + 1, stack.end());
        cycles.push_back(std::move(cyc));
      }
    };
    if (!out_adj[d].empty()) walk_from(d);
    for (int v = 0; v < nn; ++v) {
      while (!out_adj[v].empty()) walk_from(v);
    }

    trunks[d] = {d};
    for (auto& cyc : cycles) {
      if (std::find(cyc.begin(), cyc.end(), d) != cyc.end()) {
        std::rotate(cyc.begin(), std::find(cyc.begin(), cyc.end(), d), cyc.end());
        trunks[d] = cyc;
      } else {
        subtours.push_back({d, cyc});
      }
    }
  }

  std::sort(subtours.begin(), subtours.end(), [](const Subtour& a, const Subtour& b) {
    const int ma = *std::min_element(a.nodes.begin(), a.nodes.end());
    const int mb = *std::min_element(b.nodes.begin(), b.nodes.end());
    return std::tie(ma, a.vehicle) < std::tie(mb, b.vehicle);
  });

  for (const auto& sub : subtours) {
    std::vector<int> path;
    for (int v : sub.nodes) {
      const bool covered = std::any_of(trunks.begin(), trunks.end(), [&](const std::vector<int>& t) {
        return std::find(t.begin(), t.end(), v) != t.end();
      });
      if (!covered) path.push_back(v);
    }
    if (path.empty()) continue;

    double best_add = std::numeric_limits<double>::infinity();
    int best_vehicle = -1;
    std::size_t best_pos = 0, best_rot = 0;
    for (int d = 0; d < g.vehicle_count; ++d) {
      const auto& trunk = trunks[d];
      for (std::size_t p = 0; p < trunk.size(); ++p) {
        const int u = trunk[p];
        const int v = trunk[(p + 1) % trunk.size()];
        for (std::size_t r = 0; r < path.size(); ++r) {
          double add = g.weight(d, u, path[r]) - g.weight(d, u, v);
          for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            add += g.weight(d, path[(r + i) % path.size()], path[(r + i + 1) % path.size()]);
          }
          add += g.weight(d, path[(r + path.size() - 1) % path.size()], v);
          if (add < best_add) {
            best_add = add;
            best_vehicle = d;
            best_pos = p;
            best_rot = r;
          }
        }
      }
    }
    auto& trunk = trunks[best_vehicle];
    std::vector<int> rotated;
    for (std::size_t i = 0; i < path.size(); ++i) rotated.push_back(path[(best_rot + i) % path.size()]);
    trunk.insert(trunk.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1, rotated.begin(), rotated.end());
  }

  RoutePlan plan;
  for (int d = 0; d < g.vehicle_count; ++d) {
    VehicleRoute r;
    r.vehicle = d;
    r.cycle = trunks[d];
    r.cycle.push_back(d);
    r.cost = cycle_cost(g, d, r.cycle);
    plan.total_cost += r.cost;
    plan.routes.push_back(std::move(r));
  }
  schedule(plan, g);
  return plan;
}

}  // namespace stlplan
