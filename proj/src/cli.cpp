#include "stlplan/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "stlplan/dynamics.hpp"
#include "stlplan/mission.hpp"
#include "stlplan/optimizer.hpp"
#include "stlplan/replanner.hpp"
#include "stlplan/report.hpp"
#include "stlplan/robustness.hpp"
#include "stlplan/router.hpp"

namespace fs = std::filesystem;

namespace stlplan {

using nlohmann::json;

namespace {

struct Flags {
  std::string out_dir = "out";
  std::optional<double> beta;
  int max_iters = 5000;
  int multi_start = 1;
  std::uint64_t seed = 0;
  bool margins = false;
};

class Stopwatch {
 public:
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    seconds_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  [[nodiscard]] json to_json() const {
    json j = json::object();
    for (const auto& [k, v] : seconds_) j[k] = v;
    return j;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> seconds_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_trajectories(const fs::path& path, const std::vector<Trajectory>& trajs) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(f, trajs);
}

void print_issues(std::ostream& err, const ConfigError& e) {
  if (e.issues().empty()) {
    err << e.what() << "\n";
    return;
  }
  for (const auto& i : e.issues()) err << i.code << ": " << i.message << "\n";
}

MissionConfig load_valid(const std::string& path) {
  MissionConfig cfg = load_mission(path);
  auto issues = validate(cfg);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

void print_horizon(std::ostream& err, const HorizonTooShort& e, const MissionConfig& cfg) {
  err << "HORIZON_TOO_SHORT: " << e.what() << "; configured " << cfg.steps() << " samples ("
      << cfg.timing.horizon << " s); minimal feasible horizon " << e.required_horizon() << " s\n";
}

json trajectory_files(const MissionConfig& cfg, const std::string& file) {
  const stl::Bindings names = bindings_for(cfg);
  json j = json::object();
  for (int d = 0; d < cfg.vehicle_count(); ++d) j[names.vehicle_name(d)] = file;
  return j;
}

// Router + seed + optimizer, shared by plan and simulate.
struct Pipeline {
  explicit Pipeline(stl::Formula f) : phi(std::move(f)) {}
  stl::Formula phi;
  RoutingGraph graph;
  EdgeSelection milp;
  RoutePlan routes;
  SolveOutcome outcome;
  std::vector<Trajectory> trajectories;  // as written to CSV
};

OptimizeOptions optimizer_options(const Flags& flags, const MissionConfig& cfg) {
  OptimizeOptions o;
  o.beta = flags.beta.value_or(cfg.params.beta);
  o.max_iters = flags.max_iters;
  o.multi_start = flags.multi_start;
  o.seed = flags.seed;
  return o;
}

Pipeline run_pipeline(const MissionConfig& cfg, const Flags& flags, Stopwatch& clock) {
  Pipeline p(build_formula(cfg));
  p.graph = build_graph(cfg);
  clock.lap("build");
  p.milp = solve_milp(p.graph);
  p.routes = repair_subtours(p.milp.z, p.graph);
  clock.lap("route");
  const auto seed = seed_trajectories(p.routes, p.graph, cfg.steps());
  clock.lap("seed");
  p.outcome = optimize(cfg, p.phi, seed, optimizer_options(flags, cfg));
  clock.lap("optimize");
  p.trajectories = quantized(p.outcome.trajectories);
  return p;
}

int cmd_plan(const std::string& config_path, const Flags& flags, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  MissionConfig cfg;
  try {
    cfg = load_valid(config_path);
  } catch (const ConfigError& e) {
    print_issues(err, e);
    return kExitInput;
  }
  clock.lap("load");
  std::optional<Pipeline> pipeline;
  try {
    pipeline.emplace(run_pipeline(cfg, flags, clock));
  } catch (const HorizonTooShort& e) {
    print_horizon(err, e, cfg);
    return kExitHorizon;
  }
  const Pipeline& p = *pipeline;
  const double beta = flags.beta.value_or(cfg.params.beta);
  const stl::Signal s = to_signal(p.trajectories);
  const RobustnessReport rob = robustness_report(p.phi, s, 0, beta, bindings_for(cfg));
  const bool ok = rob.rho_smooth >= cfg.params.zeta;

  const fs::path dir(flags.out_dir);
  fs::create_directories(dir);
  write_trajectories(dir / "trajectories.csv", p.trajectories);
  {
    std::ofstream f(dir / "iterations.csv", std::ios::binary);
    write_iteration_log(f, p.outcome.log);
  }
  json report = {
      {"command", "plan"},
      {"config_digest", config_digest(cfg)},
      {"status", ok ? "ok" : "below_zeta"},
      {"horizon", {{"steps", cfg.steps()}, {"ts", cfg.timing.ts}}},
      {"beta", beta},
      {"zeta", cfg.params.zeta},
      {"milp", milp_json(p.milp)},
      {"route_plan", route_plan_json(p.routes, p.graph, cfg)},
      {"trajectories", trajectory_files(cfg, "trajectories.csv")},
      {"iteration_log", "iterations.csv"},
      {"timings", "timings.json"},
      {"optimizer", outcome_json(p.outcome)},
      {"clauses", clauses_json(cfg, p.phi, s)},
      {"robustness", robustness_json(rob)},
  };
  report["optimizer"]["max_iters"] = flags.max_iters;
  report["optimizer"]["multi_start"] = flags.multi_start;
  report["optimizer"]["seed"] = flags.seed;
  if (flags.margins) {
    std::ofstream f(dir / "margins.csv", std::ios::binary);
    write_margins_csv(f, cfg, p.phi, s);
    report["margins"] = "margins.csv";
  }
  write_json(dir / "report.json", report);
  clock.lap("report");
  write_json(dir / "timings.json", clock.to_json());

  out << std::setprecision(12) << "rho=" << rob.rho << " rho_smooth=" << rob.rho_smooth << " beta=" << beta
      << " zeta=" << cfg.params.zeta << " verdict=" << (rob.verdict ? "satisfied" : "violated") << "\n";
  out << "wrote " << (dir / "report.json").string() << "\n";
  if (!ok) {
    err << "BELOW_ZETA: smooth robustness " << rob.rho_smooth << " < zeta " << cfg.params.zeta << "\n";
    return kExitBelowZeta;
  }
  return kExitOk;
}

int cmd_check(const std::string& config_path, const std::vector<std::string>& traj_paths, const Flags& flags,
              bool out_given, std::ostream& out, std::ostream& err) {
  MissionConfig cfg;
  try {
    cfg = load_valid(config_path);
  } catch (const ConfigError& e) {
    print_issues(err, e);
    return kExitInput;
  }
  std::map<int, Trajectory> by_vehicle;
  try {
    for (const auto& path : traj_paths) {
      std::ifstream in(path);
      if (!in) throw CsvError("cannot open " + path);
      for (auto& t : read_trajectory_csv(in)) {
        if (by_vehicle.count(t.vehicle)) throw CsvError("vehicle " + std::to_string(t.vehicle + 1) + " appears twice");
        by_vehicle.emplace(t.vehicle, std::move(t));
      }
    }
  } catch (const CsvError& e) {
    err << "SHAPE_MISMATCH: " << e.what() << "\n";
    return kExitInput;
  }
  std::vector<Trajectory> trajs;
  for (auto& [d, t] : by_vehicle) trajs.push_back(std::move(t));
  const int n = cfg.steps();
  std::string problem;
  if (static_cast<int>(trajs.size()) != cfg.vehicle_count()) {
    problem = "expected " + std::to_string(cfg.vehicle_count()) + " vehicles, found " + std::to_string(trajs.size());
  }
  for (std::size_t d = 0; d < trajs.size() && problem.empty(); ++d) {
    if (trajs[d].vehicle != static_cast<int>(d)) problem = "vehicle ids must be 1.." + std::to_string(cfg.vehicle_count());
    else if (trajs[d].steps() != n) {
      problem = "vehicle " + std::to_string(d + 1) + " has " + std::to_string(trajs[d].steps() + 1) +
                " samples, expected " + std::to_string(n + 1);
    } else if (std::abs(trajs[d].ts - cfg.timing.ts) > 1e-6) {
      problem = "sample period does not match the configuration";
    }
    trajs[d].ts = cfg.timing.ts;
  }
  if (!problem.empty()) {
    err << "SHAPE_MISMATCH: " << problem << "\n";
    return kExitInput;
  }
  const double beta = flags.beta.value_or(cfg.params.beta);
  const stl::Formula phi = build_formula(cfg);
  const stl::Signal s = to_signal(trajs);
  const RobustnessReport rob = robustness_report(phi, s, 0, beta, bindings_for(cfg));

  out << std::setprecision(12) << "rho=" << rob.rho << "\n"
      << "rho_smooth=" << rob.rho_smooth << " (beta=" << beta << ")\n"
      << "verdict=" << (stl::eval_bool(phi, s, 0) ? "satisfied" : "violated") << "\n";
  for (const auto& c : clauses_json(cfg, phi, s)) {
    out << "clause " << c["clause"].get<std::string>() << " rho=" << c["rho"].get<double>() << "\n";
  }
  for (const auto& b : rob.breakdown) out << "  [" << b.path << "] k=" << b.k << " rho=" << b.rho << "  " << b.text << "\n";
  if (out_given) {
    const fs::path dir(flags.out_dir);
    fs::create_directories(dir);
    write_json(dir / "check.json", {{"command", "check"},
                                    {"config_digest", config_digest(cfg)},
                                    {"clauses", clauses_json(cfg, phi, s)},
                                    {"robustness", robustness_json(rob)}});
    if (flags.margins) {
      std::ofstream f(dir / "margins.csv", std::ios::binary);
      write_margins_csv(f, cfg, phi, s);
    }
  }
  return rob.rho > 0.0 ? kExitOk : kExitViolated;
}

int cmd_seed(const std::string& config_path, const Flags& flags, bool out_given, std::ostream& out,
             std::ostream& err) {
  MissionConfig cfg;
  try {
    cfg = load_valid(config_path);
  } catch (const ConfigError& e) {
    print_issues(err, e);
    return kExitInput;
  }
  const RoutingGraph g = build_graph(cfg);
  const EdgeSelection sel = solve_milp(g);
  const RoutePlan plan = repair_subtours(sel.z, g);
  json report = {{"command", "seed"},
                 {"config_digest", config_digest(cfg)},
                 {"horizon", {{"steps", cfg.steps()}, {"ts", cfg.timing.ts}}},
                 {"milp", milp_json(sel)},
                 {"route_plan", route_plan_json(plan, g, cfg)}};
  std::vector<Trajectory> seed;
  try {
    seed = seed_trajectories(plan, g, cfg.steps());
  } catch (const HorizonTooShort& e) {
    out << report.dump(2) << "\n";
    print_horizon(err, e, cfg);
    return kExitHorizon;
  }
  if (out_given) {
    const fs::path dir(flags.out_dir);
    fs::create_directories(dir);
    write_trajectories(dir / "seed_trajectories.csv", seed);
    report["trajectories"] = trajectory_files(cfg, "seed_trajectories.csv");
    write_json(dir / "routes.json", report);
  }
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& events_path, const Flags& flags,
                 std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  MissionConfig cfg;
  std::vector<Event> events;
  try {
    cfg = load_valid(config_path);
    events = load_events(events_path);
  } catch (const ConfigError& e) {
    print_issues(err, e);
    return kExitInput;
  } catch (const EventError& e) {
    err << "EVENTS: " << e.what() << "\n";
    return kExitInput;
  }
  clock.lap("load");
  std::optional<Pipeline> pipeline;
  try {
    pipeline.emplace(run_pipeline(cfg, flags, clock));
  } catch (const HorizonTooShort& e) {
    print_horizon(err, e, cfg);
    return kExitHorizon;
  }
  const Pipeline& p = *pipeline;
  const double beta = flags.beta.value_or(cfg.params.beta);
  const fs::path dir(flags.out_dir);
  fs::create_directories(dir);
  write_trajectories(dir / "trajectories.csv", p.trajectories);

  json report = {{"command", "simulate"},
                 {"config_digest", config_digest(cfg)},
                 {"horizon", {{"steps", cfg.steps()}, {"ts", cfg.timing.ts}}},
                 {"beta", beta},
                 {"zeta", cfg.params.zeta},
                 {"route_plan", route_plan_json(p.routes, p.graph, cfg)},
                 {"planned_trajectories", trajectory_files(cfg, "trajectories.csv")},
                 {"optimizer", outcome_json(p.outcome)},
                 {"timings", "timings.json"}};
  MissionRun run;
  try {
    run = run_mission(cfg, p.trajectories, events, optimizer_options(flags, cfg));
  } catch (const ResidualInfeasible& e) {
    clock.lap("simulate");
    report["status"] = "residual_infeasible";
    report["error"] = e.what();
    if (e.required_steps() >= 0) report["required_residual_horizon"] = e.required_horizon();
    write_json(dir / "report.json", report);
    write_json(dir / "timings.json", clock.to_json());
    err << "RESIDUAL_INFEASIBLE: " << e.what();
    if (e.required_steps() >= 0) err << "; minimal feasible residual horizon " << e.required_horizon() << " s";
    err << "\n";
    return kExitResidual;
  }
  clock.lap("simulate");
  const auto executed = quantized(run.executed);
  write_trajectories(dir / "executed.csv", executed);
  const stl::Signal s = to_signal(executed);
  const bool verdict = stl::eval_bool(p.phi, s, 0);
  const RobustnessReport rob = robustness_report(p.phi, s, 0, beta, bindings_for(cfg));
  json completed = json::array();
  for (int q : run.final_state.completed) completed.push_back(task_name(cfg, q));
  report["status"] = verdict ? "satisfied" : "violated";
  report["executed_trajectories"] = trajectory_files(cfg, "executed.csv");
  report["replans"] = replans_json(run.replans, cfg);
  report["notes"] = notes_json(run.notes);
  report["completed_tasks"] = completed;
  report["clauses"] = clauses_json(cfg, p.phi, s);
  report["robustness"] = robustness_json(rob);
  if (flags.margins) {
    std::ofstream f(dir / "margins.csv", std::ios::binary);
    write_margins_csv(f, cfg, p.phi, s);
    report["margins"] = "margins.csv";
  }
  write_json(dir / "report.json", report);
  clock.lap("report");
  write_json(dir / "timings.json", clock.to_json());
  out << "replans=" << run.replans.size() << " completed=" << completed.size() << "/" << cfg.task_count()
      << " verdict=" << (verdict ? "satisfied" : "violated") << "\n";
  for (const auto& n : run.notes) err << "note k=" << n.k << ": " << n.message << "\n";
  return verdict ? kExitOk : kExitViolated;
}

void add_common(CLI::App* cmd, Flags& f, bool& out_given) {
  cmd->add_option("--out", f.out_dir, "Output directory")->each([&out_given](const std::string&) { out_given = true; });
  cmd->add_option("--beta", f.beta, "Final LSE sharpness (default: config params.beta)")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", f.max_iters, "Optimizer iteration limit")->check(CLI::NonNegativeNumber);
  cmd->add_option("--multi-start", f.multi_start, "Number of optimizer starts")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed for multi-start perturbations");
  cmd->add_flag("--margins", f.margins, "Write per-clause robustness time series");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-vehicle inspection planner driven by signal temporal logic robustness", "stlplan"};
  app.require_subcommand(1);
  Flags flags;
  bool out_given = false;
  std::string config, events;
  std::vector<std::string> traj_paths;

  auto* plan = app.add_subcommand("plan", "Route, seed and optimize trajectories");
  plan->add_option("config", config, "Mission JSON")->required();
  add_common(plan, flags, out_given);

  auto* check = app.add_subcommand("check", "Evaluate trajectories against the mission specification");
  check->add_option("config", config, "Mission JSON")->required();
  check->add_option("trajectories", traj_paths, "Trajectory CSV files")->required();
  add_common(check, flags, out_given);

  auto* seed = app.add_subcommand("seed", "Solve the routing problem and emit seed trajectories");
  seed->add_option("config", config, "Mission JSON")->required();
  add_common(seed, flags, out_given);

  auto* sim = app.add_subcommand("simulate", "Plan, execute with events and replan on triggers");
  sim->add_option("config", config, "Mission JSON")->required();
  sim->add_option("events", events, "Event script CSV")->required();
  add_common(sim, flags, out_given);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (plan->parsed()) return cmd_plan(config, flags, out, err);
    if (check->parsed()) return cmd_check(config, traj_paths, flags, out_given, out, err);
    if (seed->parsed()) return cmd_seed(config, flags, out_given, out, err);
    if (sim->parsed()) return cmd_simulate(config, events, flags, out, err);
  } catch (const ConfigError& e) {
    print_issues(err, e);
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace stlplan
