#pragma once

// JSON fragments for mission reports, the configuration digest, and the
// per-clause margin time series.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stlplan/mission.hpp"
#include "stlplan/optimizer.hpp"
#include "stlplan/replanner.hpp"
#include "stlplan/robustness.hpp"
#include "stlplan/router.hpp"

namespace stlplan {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
/// "fnv1a64:<16 hex digits>" of the canonical JSON form of the config.
std::string config_digest(const MissionConfig& cfg);

/// Display name of a routing node: the vehicle's depot or the task name.
std::string node_name(const RoutingGraph& g, const MissionConfig& cfg, int node);

nlohmann::json route_plan_json(const RoutePlan& plan, const RoutingGraph& g, const MissionConfig& cfg);
nlohmann::json milp_json(const EdgeSelection& sel);
nlohmann::json robustness_json(const RobustnessReport& r);
nlohmann::json outcome_json(const SolveOutcome& o);
nlohmann::json clauses_json(const MissionConfig& cfg, const stl::Formula& phi, const stl::Signal& s);
nlohmann::json replans_json(const std::vector<ReplanRecord>& records, const MissionConfig& cfg);
nlohmann::json notes_json(const std::vector<Note>& notes);

/// `clause,k,rho`: for each top-level clause, the robustness of the body of
/// its outer temporal operator at every sample where it is defined.
void write_margins_csv(std::ostream& out, const MissionConfig& cfg, const stl::Formula& phi, const stl::Signal& s);

}  // namespace stlplan
