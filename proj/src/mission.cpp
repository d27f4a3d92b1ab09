#include "stlplan/mission.hpp"

#include <cmath>
#include <limits>

namespace stlplan {

using stl::Formula;
using stl::Window;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string issues_text(const std::vector<ValidationIssue>& issues) {
  std::string out = "invalid mission configuration:";
  for (const auto& i : issues) out += "\n  " + i.code + ": " + i.message;
  return out;
}

bool finite(const Vec3& v) { return v.allFinite(); }
bool finite(const Box& b) { return b.lo.allFinite() && b.hi.allFinite(); }

}  // namespace

ConfigError::ConfigError(std::vector<ValidationIssue> issues)
    : std::runtime_error(issues_text(issues)), issues_(std::move(issues)) {}

ConfigError::ConfigError(std::string code, std::string message)
    : ConfigError(std::vector<ValidationIssue>{{std::move(code), std::move(message)}}) {}

TaskRef task_ref(const MissionConfig& cfg, int task) {
  const int n_tr = static_cast<int>(cfg.targets.size());
  if (task < 0 || task >= cfg.task_count()) throw std::out_of_range("task index out of range");
  if (task < n_tr) return {TaskKind::Target, task};
  return {TaskKind::Blade, task - n_tr};
}

int task_window(const MissionConfig& cfg, int task) {
  return task_ref(cfg, task).kind == TaskKind::Target ? cfg.inspection_window() : cfg.blade_window();
}

Vec3 task_point(const MissionConfig& cfg, int task) {
  const TaskRef ref = task_ref(cfg, task);
  if (ref.kind == TaskKind::Target) return cfg.targets[ref.index].center();
  const BladeSegment& seg = cfg.blades[ref.index];
  const Vec3 mid = 0.5 * (seg.a + seg.b);
  const Vec3 n = horizontal_normal(seg.b - seg.a);
  const Vec3 plus = mid + cfg.params.gamma_bla * n;
  const Vec3 minus = mid - cfg.params.gamma_bla * n;
  const Vec3 c = seg.box.center();
  return (minus - c).norm() < (plus - c).norm() ? minus : plus;
}

std::string task_name(const MissionConfig& cfg, int task) {
  const TaskRef ref = task_ref(cfg, task);
  return (ref.kind == TaskKind::Target ? "target" : "blade") + std::to_string(ref.index + 1);
}

double dist_to_segment(const Vec3& p, const BladeSegment& seg) { return project_on_segment(p, seg.a, seg.b).distance; }

std::vector<ValidationIssue> validate(const MissionConfig& cfg) {
  std::vector<ValidationIssue> out;
  auto issue = [&](std::string code, std::string msg) { out.push_back({std::move(code), std::move(msg)}); };

  auto check_box = [&](const Box& b, const std::string& what, bool in_workspace) {
    if (!finite(b)) {
      issue("NONFINITE", what + " has non-finite bounds");
      return;
    }
    if (b.degenerate()) issue("BOX_DEGENERATE", what + " needs lo < hi on every axis");
    if (in_workspace && !b.degenerate() && !b.intersects(cfg.workspace)) {
      issue("BOX_OUTSIDE_WORKSPACE", what + " does not intersect the workspace");
    }
  };

  check_box(cfg.workspace, "workspace", false);
  for (std::size_t i = 0; i < cfg.obstacles.size(); ++i) check_box(cfg.obstacles[i], "obstacle " + std::to_string(i + 1), true);
  for (std::size_t i = 0; i < cfg.targets.size(); ++i) check_box(cfg.targets[i], "target " + std::to_string(i + 1), true);
  for (std::size_t i = 0; i < cfg.homes.size(); ++i) check_box(cfg.homes[i], "home " + std::to_string(i + 1), true);
  for (std::size_t i = 0; i < cfg.blades.size(); ++i) {
    const auto& s = cfg.blades[i];
    const std::string name = "blade " + std::to_string(i + 1);
    check_box(s.box, name + " box", true);
    if (!finite(s.a) || !finite(s.b)) {
      issue("NONFINITE", name + " has non-finite endpoints");
      continue;
    }
    if (!((s.b - s.a).norm() > 0.0)) issue("SEGMENT_DEGENERATE", name + " endpoints coincide");
    const Box inflated = s.box.inflated(cfg.params.gamma_bla + cfg.params.eps);
    if (!inflated.contains(s.a) || !inflated.contains(s.b)) {
      issue("BLADE_OUTSIDE_BOX", name + " segment leaves its box inflated by gamma_bla + eps");
    }
  }

  if (cfg.vehicles.empty()) issue("NO_VEHICLES", "at least one vehicle is required");
  if (cfg.homes.size() != cfg.vehicles.size()) {
    issue("HOME_COUNT_MISMATCH", "expected one home box per vehicle (" + std::to_string(cfg.vehicles.size()) +
                                     " vehicles, " + std::to_string(cfg.homes.size()) + " homes)");
  }
  for (std::size_t d = 0; d < cfg.vehicles.size(); ++d) {
    const auto& v = cfg.vehicles[d];
    const std::string name = "vehicle " + std::to_string(d + 1);
    if (!finite(v.depot) || !finite(v.v_min) || !finite(v.v_max) || !finite(v.a_min) || !finite(v.a_max)) {
      issue("NONFINITE", name + " has non-finite values");
      continue;
    }
    if (!((v.v_min.array() < 0.0).all() && (v.v_max.array() > 0.0).all())) {
      issue("VEHICLE_BOUNDS", name + " velocity bounds must satisfy v_min < 0 < v_max");
    }
    if (!((v.a_min.array() < 0.0).all() && (v.a_max.array() > 0.0).all())) {
      issue("VEHICLE_BOUNDS", name + " acceleration bounds must satisfy a_min < 0 < a_max");
    }
    if (finite(cfg.workspace) && !cfg.workspace.contains_strict(v.depot)) {
      issue("DEPOT_OUTSIDE_WORKSPACE", name + " depot lies outside the workspace");
    }
    for (std::size_t q = 0; q < cfg.obstacles.size(); ++q) {
      if (cfg.obstacles[q].contains(v.depot)) {
        issue("DEPOT_IN_OBSTACLE", name + " depot lies inside obstacle " + std::to_string(q + 1));
      }
    }
  }

  const auto& t = cfg.timing;
  const auto& p = cfg.params;
  if (!(t.ts > 0.0) || !std::isfinite(t.ts)) issue("PARAM_RANGE", "Ts must be positive");
  if (!(t.horizon >= t.ts) || !std::isfinite(t.horizon)) issue("PARAM_RANGE", "TN must be at least Ts");
  if (!(t.inspection >= 0.0) || !(t.blade >= 0.0)) issue("PARAM_RANGE", "dwell times must be nonnegative");
  if (!cfg.targets.empty() && t.inspection > t.horizon) {
    issue("WINDOW_EXCEEDS_HORIZON", "Tins exceeds TN");
  }
  if (!cfg.blades.empty() && t.blade > t.horizon) {
    issue("WINDOW_EXCEEDS_HORIZON", "Tbla exceeds TN");
  }
  if (t.ts > 0.0 && std::isfinite(t.horizon) && t.horizon >= t.ts && cfg.steps() < 2) {
    issue("WINDOW_EXCEEDS_HORIZON", "the return-home clauses need at least two samples");
  }
  if (!(p.gamma_dis > 0.0)) issue("PARAM_RANGE", "gamma_dis must be positive");
  if (!(p.gamma_bla >= 0.0)) issue("PARAM_RANGE", "gamma_bla must be nonnegative");
  if (!(p.eps > 0.0)) issue("PARAM_RANGE", "eps must be positive");
  if (!(p.zeta >= 0.0)) issue("PARAM_RANGE", "zeta must be nonnegative");
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) issue("PARAM_RANGE", "beta must be positive");
  if (!cfg.blades.empty() && p.gamma_bla - p.eps < 0.0) {
    issue("PARAM_RANGE", "gamma_bla - eps must be nonnegative");
  }
  if (cfg.blade_speed_band && !(cfg.blade_speed_band->lo < cfg.blade_speed_band->hi)) {
    issue("SPEED_BAND_INVALID", "blade speed band needs lo < hi");
  }
  return out;
}

// ---------------------------------------------------------------------------

Formula in_box(int vehicle, const Box& box) {
  std::vector<Formula> parts;
  for (int j = 0; j < 3; ++j) parts.push_back(Formula::atom(stl::AxisBand{vehicle, j, box.lo[j], box.hi[j], false}));
  return Formula::conjunction(std::move(parts));
}

Formula outside_box(int vehicle, const Box& box) {
  std::vector<Formula> parts;
  for (int j = 0; j < 3; ++j) {
    parts.push_back(Formula::atom(stl::AxisBand{vehicle, j, box.hi[j], kInf, false}));
    parts.push_back(Formula::atom(stl::AxisBand{vehicle, j, -kInf, box.lo[j], false}));
  }
  return Formula::disjunction(std::move(parts));
}

Formula safety_clause(const MissionConfig& cfg, int vehicle) {
  std::vector<Formula> parts;
  for (int j = 0; j < 3; ++j) {
    parts.push_back(Formula::atom(stl::AxisBand{vehicle, j, cfg.workspace.lo[j], cfg.workspace.hi[j], false}));
  }
  for (const auto& obs : cfg.obstacles) parts.push_back(outside_box(vehicle, obs));
  for (int m = 0; m < cfg.vehicle_count(); ++m) {
    if (m == vehicle) continue;
    parts.push_back(Formula::atom(stl::PairDistance{std::min(vehicle, m), std::max(vehicle, m), cfg.params.gamma_dis}));
  }
  return all_of(std::move(parts));
}

Formula home_region(const MissionConfig& cfg, int vehicle) { return in_box(vehicle, cfg.homes.at(vehicle)); }

Formula task_region(const MissionConfig& cfg, int task, int vehicle) {
  const TaskRef ref = task_ref(cfg, task);
  if (ref.kind == TaskKind::Target) return in_box(vehicle, cfg.targets[ref.index]);
  const BladeSegment& seg = cfg.blades[ref.index];
  std::vector<Formula> parts;
  for (int j = 0; j < 3; ++j) parts.push_back(Formula::atom(stl::AxisBand{vehicle, j, seg.box.lo[j], seg.box.hi[j], false}));
  const double g = cfg.params.gamma_bla;
  const double e = cfg.params.eps;
  parts.push_back(Formula::atom(stl::SegmentDistanceBand{vehicle, ref.index, seg.a, seg.b, g - e, g + e}));
  if (cfg.blade_speed_band) {
    parts.push_back(Formula::atom(stl::SpeedBand{vehicle, cfg.blade_speed_band->lo, cfg.blade_speed_band->hi}));
  }
  return Formula::conjunction(std::move(parts));
}

Formula build_formula(const MissionConfig& cfg) {
  if (auto issues = validate(cfg); !issues.empty()) throw ConfigError(std::move(issues));
  const int n = cfg.steps();
  const int delta = cfg.vehicle_count();
  std::vector<Formula> clauses;

  for (int d = 0; d < delta; ++d) clauses.push_back(Formula::always({0, n}, safety_clause(cfg, d)));

  for (int q = 0; q < cfg.task_count(); ++q) {
    const int w = task_window(cfg, q);
    if (n - w < 0) throw stl::HorizonError("dwell window of " + task_name(cfg, q) + " exceeds the horizon");
    std::vector<Formula> options;
    for (int d = 0; d < delta; ++d) options.push_back(Formula::always({0, w}, task_region(cfg, q, d)));
    clauses.push_back(Formula::eventually({0, n - w}, any_of(std::move(options))));
  }

  if (n - 1 < 1) throw stl::HorizonError("return-home clauses need at least two samples");
  for (int d = 0; d < delta; ++d) clauses.push_back(Formula::eventually({1, n}, home_region(cfg, d)));
  for (int d = 0; d < delta; ++d) {
    clauses.push_back(Formula::always(
        {1, n - 1}, Formula::implication(home_region(cfg, d), Formula::next(home_region(cfg, d)))));
  }
  return all_of(std::move(clauses));
}

std::vector<std::string> clause_labels(const MissionConfig& cfg) {
  std::vector<std::string> out;
  const auto name = [&](int d) { return cfg.vehicles[d].name.empty() ? "p" + std::to_string(d + 1) : cfg.vehicles[d].name; };
  for (int d = 0; d < cfg.vehicle_count(); ++d) out.push_back("safety[" + name(d) + "]");
  for (int q = 0; q < cfg.task_count(); ++q) out.push_back("task[" + task_name(cfg, q) + "]");
  for (int d = 0; d < cfg.vehicle_count(); ++d) out.push_back("return[" + name(d) + "]");
  for (int d = 0; d < cfg.vehicle_count(); ++d) out.push_back("stay_home[" + name(d) + "]");
  return out;
}

stl::Bindings bindings_for(const MissionConfig& cfg) {
  stl::Bindings b;
  b.ts = cfg.timing.ts;
  bool named = true;
  for (const auto& v : cfg.vehicles) named = named && !v.name.empty();
  if (named) {
    for (const auto& v : cfg.vehicles) b.vehicle_names.push_back(v.name);
  }
  for (std::size_t i = 0; i < cfg.blades.size(); ++i) {
    b.segments.push_back({"blade" + std::to_string(i + 1), cfg.blades[i].a, cfg.blades[i].b});
  }
  for (int d = 0; d < cfg.vehicle_count() && d < static_cast<int>(cfg.homes.size()); ++d) {
    b.macros.emplace("home" + std::to_string(d + 1), home_region(cfg, d));
  }
  return b;
}

}  // namespace stlplan
