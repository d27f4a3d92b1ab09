#include "stlplan/report.hpp"

#include <cstdio>
#include <ostream>

namespace stlplan {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const MissionConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(mission_to_json(cfg))));
  return std::string("fnv1a64:") + buf;
}

std::string node_name(const RoutingGraph& g, const MissionConfig& cfg, int node) {
  const RouteNode& n = g.nodes.at(node);
  if (n.kind == RouteNode::Kind::Depot) return "depot" + std::to_string(n.index + 1);
  return task_name(cfg, n.index);
}

json route_plan_json(const RoutePlan& plan, const RoutingGraph& g, const MissionConfig& cfg) {
  const stl::Bindings names = bindings_for(cfg);
  json routes = json::array();
  for (const auto& r : plan.routes) {
    json cycle = json::array();
    for (int n : r.cycle) cycle.push_back(node_name(g, cfg, n));
    json stops = json::array();
    for (const auto& s : r.stops) {
      stops.push_back({{"node", node_name(g, cfg, s.node)}, {"arrival", s.arrival}, {"departure", s.departure}});
    }
    routes.push_back({{"vehicle", names.vehicle_name(r.vehicle)},
                      {"cycle", cycle},
                      {"stops", stops},
                      {"cost", r.cost}});
  }
  return {{"routes", routes}, {"total_cost", plan.total_cost}, {"required_steps", plan.required_steps}};
}

json milp_json(const EdgeSelection& sel) {
  return {{"objective", sel.objective},
          {"root_bound", sel.root_bound},
          {"nodes_explored", sel.nodes_explored},
          {"node_limit_hit", sel.node_limit_hit}};
}

json robustness_json(const RobustnessReport& r) {
  json breakdown = json::array();
  for (const auto& b : r.breakdown) {
    breakdown.push_back({{"path", b.path}, {"k", b.k}, {"rho", b.rho}, {"formula", b.text}});
  }
  return {{"rho", r.rho},
          {"rho_smooth", r.rho_smooth},
          {"beta", r.beta},
          {"verdict", r.verdict},
          {"breakdown", breakdown}};
}

json outcome_json(const SolveOutcome& o) {
  return {{"iterations", o.iterations},
          {"termination", to_string(o.termination)},
          {"start_index", o.start_index},
          {"seed_rho", o.seed_rho},
          {"rho", o.rho},
          {"rho_smooth", o.rho_smooth},
          {"zeta", o.zeta},
          {"zeta_satisfied", o.zeta_satisfied},
          {"velocity_violation", o.velocity_violation},
          {"velocity_feasible", o.velocity_feasible}};
}

json clauses_json(const MissionConfig& cfg, const stl::Formula& phi, const stl::Signal& s) {
  const auto labels = clause_labels(cfg);
  json out = json::array();
  const auto& kids = phi.op() == stl::Op::And ? phi.children() : std::vector<stl::Formula>{phi};
  for (std::size_t i = 0; i < kids.size(); ++i) {
    const double r = rho(kids[i], s, 0);
    out.push_back({{"clause", i < labels.size() ? labels[i] : std::to_string(i)},
                   {"rho", r},
                   {"satisfied", stl::eval_bool(kids[i], s, 0)}});
  }
  return out;
}

json replans_json(const std::vector<ReplanRecord>& records, const MissionConfig& cfg) {
  const stl::Bindings names = bindings_for(cfg);
  json out = json::array();
  for (const auto& r : records) {
    json tasks = json::array();
    for (int q : r.remaining_tasks) tasks.push_back(task_name(cfg, q));
    json vehicles = json::array();
    for (int d : r.active_vehicles) vehicles.push_back(names.vehicle_name(d));
    out.push_back({{"k", r.k},
                   {"reasons", r.reasons},
                   {"remaining_tasks", tasks},
                   {"active_vehicles", vehicles},
                   {"residual_steps", r.residual_steps},
                   {"required_steps", r.required_steps},
                   {"rho", r.rho},
                   {"rho_smooth", r.rho_smooth},
                   {"zeta_satisfied", r.zeta_satisfied}});
  }
  return out;
}

json notes_json(const std::vector<Note>& notes) {
  json out = json::array();
  for (const auto& n : notes) out.push_back({{"k", n.k}, {"message", n.message}});
  return out;
}

void write_margins_csv(std::ostream& out, const MissionConfig& cfg, const stl::Formula& phi, const stl::Signal& s) {
  const auto labels = clause_labels(cfg);
  const auto& kids = phi.op() == stl::Op::And ? phi.children() : std::vector<stl::Formula>{phi};
  out << "clause,k,rho\n";
  char buf[64];
  for (std::size_t i = 0; i < kids.size(); ++i) {
    const std::string label = i < labels.size() ? labels[i] : std::to_string(i);
    const stl::Formula& c = kids[i];
    const bool temporal = c.op() == stl::Op::Always || c.op() == stl::Op::Eventually;
    const stl::Formula body = temporal ? c.child() : c;
    const int first = temporal ? c.window().lo : 0;
    const int last = temporal ? c.window().hi : 0;
    const auto series = rho_series(body, s);
    for (int k = first; k <= last && k < static_cast<int>(series.size()); ++k) {
      std::snprintf(buf, sizeof buf, "%.9f", series[k]);
      out << label << ',' << k << ',' << buf << '\n';
    }
  }
}

}  // namespace stlplan
