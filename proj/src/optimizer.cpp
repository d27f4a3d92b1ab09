#include "stlplan/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <ostream>
#include <random>

namespace stlplan {

OptimizerError::OptimizerError(const std::string& message, std::string path)
    : std::runtime_error(path.empty() ? message : message + " (subformula " + path + ")"), path_(std::move(path)) {}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::IterationLimit:
      return "iteration-limit";
    case Termination::Stalled:
      return "stalled";
  }
  return "unknown";
}

Problem::Problem(const MissionConfig& cfg, stl::Formula phi, std::vector<State> starts, double penalty_weight)
    : phi_(std::move(phi)),
      specs_(cfg.vehicles),
      starts_(std::move(starts)),
      steps_(cfg.steps()),
      ts_(cfg.timing.ts),
      penalty_weight_(penalty_weight),
      evaluator_(phi_) {
  if (starts_.size() != specs_.size()) throw OptimizerError("one start state per vehicle is required");
  if (steps_ < 1) throw OptimizerError("horizon must span at least one sample");
  if (stl::horizon(phi_) > steps_) throw OptimizerError("formula horizon exceeds the mission horizon");
  lower_.resize(dimension());
  upper_.resize(dimension());
  for (int d = 0; d < vehicle_count(); ++d) {
    for (int j = 0; j < 3; ++j) {
      lower_.segment((3 * d + j) * steps_, steps_).setConstant(specs_[d].a_min[j]);
      upper_.segment((3 * d + j) * steps_, steps_).setConstant(specs_[d].a_max[j]);
    }
  }
  stl::Signal shape;
  shape.ts = ts_;
  shape.vehicles.resize(specs_.size());
  for (auto& v : shape.vehicles) {
    for (int j = 0; j < 3; ++j) {
      v.pos[j].assign(steps_ + 1, 0.0);
      v.vel[j].assign(steps_ + 1, 0.0);
    }
  }
  signal_grad_ = SignalGradient::zeros_like(shape);
}

Eigen::VectorXd Problem::encode(const std::vector<Trajectory>& trajs) const {
  if (static_cast<int>(trajs.size()) != vehicle_count()) throw OptimizerError("trajectory count mismatch");
  Eigen::VectorXd x(dimension());
  for (int d = 0; d < vehicle_count(); ++d) {
    if (trajs[d].steps() != steps_) throw OptimizerError("trajectory length does not match the horizon");
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < steps_; ++k) x[(3 * d + j) * steps_ + k] = trajs[d].acc[j][k];
    }
  }
  return x;
}

std::vector<Trajectory> Problem::decode(const Eigen::VectorXd& x) const {
  std::vector<Trajectory> out;
  out.reserve(specs_.size());
  for (int d = 0; d < vehicle_count(); ++d) {
    AxisSeries acc;
    for (int j = 0; j < 3; ++j) {
      const double* p = x.data() + (3 * d + j) * steps_;
      acc[j].assign(p, p + steps_);
    }
    out.push_back(rollout(specs_[d], starts_[d], acc, ts_));
  }
  return out;
}

Eigen::VectorXd Problem::project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

double Problem::velocity_violation(const std::vector<Trajectory>& trajs) const {
  double total = 0.0;
  for (int d = 0; d < vehicle_count(); ++d) {
    for (int j = 0; j < 3; ++j) {
      for (int m = 1; m <= steps_; ++m) {
        const double v = trajs[d].vel[j][m];
        const double over = std::max(0.0, v - specs_[d].v_max[j]) + std::max(0.0, specs_[d].v_min[j] - v);
        total += over * over;
      }
    }
  }
  return total;
}

double Problem::objective(const Eigen::VectorXd& x, double beta) { return evaluate(x, beta, nullptr); }

double Problem::objective_and_gradient(const Eigen::VectorXd& x, double beta, Eigen::VectorXd& grad) {
  return evaluate(x, beta, &grad);
}

double Problem::evaluate(const Eigen::VectorXd& x, double beta, Eigen::VectorXd* grad) {
  if (x.size() != dimension()) throw OptimizerError("decision vector has the wrong length");
  const auto trajs = decode(x);
  const stl::Signal s = to_signal(trajs);
  double smooth = 0.0;
  if (grad) {
    for (auto* part : {&signal_grad_.pos, &signal_grad_.vel}) {
      for (auto& axes : *part) {
        for (auto& series : axes) std::fill(series.begin(), series.end(), 0.0);
      }
    }
    smooth = evaluator_.value_and_gradient(s, 0, beta, signal_grad_);
  } else {
    smooth = evaluator_.value(s, 0, beta);
  }
  if (!std::isfinite(smooth)) {
    throw OptimizerError("smooth robustness is not finite", first_nonfinite_path(phi_, s, 0));
  }

  double penalty = 0.0;
  const double ts2 = ts_ * ts_;
  if (grad) grad->resize(dimension());
  std::vector<double> gv(steps_ + 1);
  for (int d = 0; d < vehicle_count(); ++d) {
    for (int j = 0; j < 3; ++j) {
      const auto& vel = trajs[d].vel[j];
      for (int m = 1; m <= steps_; ++m) {
        const double over = std::max(0.0, vel[m] - specs_[d].v_max[j]);
        const double under = std::max(0.0, specs_[d].v_min[j] - vel[m]);
        penalty += over * over + under * under;
        gv[m] = -2.0 * penalty_weight_ * (over - under);
      }
      if (!grad) continue;
      const auto& gp_sig = signal_grad_.pos[d][j];
      const auto& gv_sig = signal_grad_.vel[d][j];
      // d/da_k = sum_{m>k} gp_m (m - k - 1/2) Ts^2 + gv_m Ts, via suffix sums.
      double sp = 0.0, smp = 0.0, sv = 0.0;
      for (int k = steps_ - 1; k >= 0; --k) {
        const int m = k + 1;
        sp += gp_sig[m];
        smp += m * gp_sig[m];
        sv += gv_sig[m] + gv[m];
        (*grad)[(3 * d + j) * steps_ + k] = ts2 * (smp - (k + 0.5) * sp) + ts_ * sv;
      }
    }
  }
  const double value = smooth - penalty_weight_ * penalty;
  if (!std::isfinite(value)) throw OptimizerError("objective is not finite");
  return value;
}

ObjectiveGradient objective_and_gradient(const MissionConfig& cfg, const stl::Formula& phi,
                                         const Eigen::VectorXd& x) {
  std::vector<State> starts;
  for (const auto& v : cfg.vehicles) starts.push_back({v.depot, Vec3::Zero()});
  Problem problem(cfg, phi, starts);
  ObjectiveGradient out;
  out.value = problem.objective_and_gradient(x, cfg.params.beta, out.gradient);
  return out;
}

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kGradTol = 1e-6;
constexpr double kStallTol = 1e-9;
constexpr int kStallWindow = 10;
constexpr int kMaxHalvings = 60;

double projected_grad_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                           const Eigen::VectorXd& hi) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double gi = g[i];
    if ((x[i] <= lo[i] && gi < 0.0) || (x[i] >= hi[i] && gi > 0.0)) gi = 0.0;
    norm = std::max(norm, std::abs(gi));
  }
  return norm;
}

struct Candidate {
  Eigen::VectorXd x;
  double rho = -std::numeric_limits<double>::infinity();
  bool valid = false;
};

struct RunResult {
  Candidate best;
  int iterations = 0;
  Termination termination = Termination::IterationLimit;
  std::vector<IterationRecord> log;
};

RunResult run_ascent(Problem& problem, const Eigen::VectorXd& x0, double seed_violation, const OptimizeOptions& opts) {
  RunResult out;
  const std::array<double, 4> stages{opts.beta / 8.0, opts.beta / 4.0, opts.beta / 2.0, opts.beta};
  const int per_stage = std::max(1, opts.max_iters / static_cast<int>(stages.size()));
  const double tolerance = seed_violation + 1e-12;

  auto consider = [&](const Eigen::VectorXd& x, const std::vector<Trajectory>& trajs, double rho_exact) {
    if (problem.velocity_violation(trajs) > tolerance) return;
    if (!out.best.valid || rho_exact > out.best.rho) {
      out.best.x = x;
      out.best.rho = rho_exact;
      out.best.valid = true;
    }
  };

  Eigen::VectorXd x = problem.project(x0);
  {
    const auto trajs = problem.decode(x);
    consider(x, trajs, rho(problem.formula(), to_signal(trajs), 0));
  }
  Eigen::VectorXd g, g_trial;
  int iter = 0;
  for (std::size_t s = 0; s < stages.size() && iter < opts.max_iters; ++s) {
    const double beta = stages[s];
    const bool last_stage = s + 1 == stages.size();
    const int budget = last_stage ? opts.max_iters - iter : per_stage;
    double f = problem.objective_and_gradient(x, beta, g);
    std::vector<double> history{f};
    out.termination = Termination::IterationLimit;
    double next_step = 1.0;
    for (int it = 0; it < budget; ++it) {
      const double gnorm = projected_grad_norm(x, g, problem.lower(), problem.upper());
      if (gnorm < kGradTol) {
        out.termination = Termination::Converged;
        break;
      }
      double step = next_step;
      bool accepted = false;
      Eigen::VectorXd x_trial;
      double f_trial = 0.0;
      for (int h = 0; h < kMaxHalvings; ++h, step *= 0.5) {
        x_trial = problem.project(x + step * g);
        const double gain = g.dot(x_trial - x);
        if (gain <= 0.0) continue;
        f_trial = problem.objective(x_trial, beta);
        if (f_trial >= f + kArmijo * gain) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        out.termination = Termination::Stalled;
        break;
      }
      next_step = std::min(1.0, 2.0 * step);
      x = std::move(x_trial);
      f = problem.objective_and_gradient(x, beta, g);
      ++iter;
      const auto trajs = problem.decode(x);
      const double rho_exact = rho(problem.formula(), to_signal(trajs), 0);
      consider(x, trajs, rho_exact);
      if (opts.keep_log) {
        out.log.push_back({iter, beta, rho_exact, f, projected_grad_norm(x, g, problem.lower(), problem.upper()),
                           step});
      }
      history.push_back(f);
      if (static_cast<int>(history.size()) > kStallWindow &&
          std::abs(history.back() - history[history.size() - 1 - kStallWindow]) < kStallTol) {
        out.termination = Termination::Stalled;
        break;
      }
    }
  }
  out.iterations = iter;
  return out;
}

}  // namespace

SolveOutcome optimize(const MissionConfig& cfg, const stl::Formula& phi, const std::vector<Trajectory>& seed,
                      const OptimizeOptions& opts) {
  if (!(opts.beta > 0.0) || !std::isfinite(opts.beta)) throw OptimizerError("beta must be positive and finite");
  if (opts.max_iters < 0) throw OptimizerError("iteration limit must be non-negative");
  if (opts.multi_start < 1) throw OptimizerError("multi-start count must be at least 1");
  if (static_cast<int>(seed.size()) != cfg.vehicle_count()) throw OptimizerError("one seed trajectory per vehicle");
  std::vector<State> starts;
  for (const auto& t : seed) {
    require_consistent(t);
    starts.push_back(t.state(0));
  }

  Problem probe(cfg, phi, starts, opts.penalty_weight);
  const Eigen::VectorXd x_seed = probe.encode(seed);
  const auto seed_trajs = probe.decode(x_seed);
  const double seed_violation = probe.velocity_violation(seed_trajs);
  const double seed_rho = rho(phi, to_signal(seed_trajs), 0);

  // Start points are drawn up front so the result does not depend on
  // scheduling.
  std::vector<Eigen::VectorXd> inits{x_seed};
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int r = 1; r < opts.multi_start; ++r) {
    Eigen::VectorXd x = x_seed;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] += 0.25 * (probe.upper()[i] - probe.lower()[i]) * noise(rng);
    }
    inits.push_back(probe.project(x));
  }

  std::vector<std::future<RunResult>> jobs;
  for (const auto& x0 : inits) {
    jobs.push_back(std::async(std::launch::async, [&, x0] {
      Problem problem(cfg, phi, starts, opts.penalty_weight);
      return run_ascent(problem, x0, seed_violation, opts);
    }));
  }
  std::vector<RunResult> runs;
  for (auto& j : jobs) runs.push_back(j.get());

  int winner = -1;
  for (int r = 0; r < static_cast<int>(runs.size()); ++r) {
    if (!runs[r].best.valid) continue;
    if (winner < 0 || runs[r].best.rho > runs[winner].best.rho) winner = r;
  }
  SolveOutcome out;
  Eigen::VectorXd x_best = x_seed;
  if (winner >= 0) {
    x_best = runs[winner].best.x;
    out.iterations = runs[winner].iterations;
    out.termination = runs[winner].termination;
    out.log = std::move(runs[winner].log);
    out.start_index = winner;
  }
  out.trajectories = probe.decode(x_best);
  out.seed_rho = seed_rho;
  out.rho = rho(phi, to_signal(out.trajectories), 0);
  if (out.rho < seed_rho) {
    out.trajectories = seed_trajs;
    out.rho = seed_rho;
  }
  out.rho_smooth = rho_smooth(phi, to_signal(out.trajectories), 0, opts.beta);
  out.zeta = cfg.params.zeta;
  out.zeta_satisfied = out.rho_smooth >= cfg.params.zeta;
  out.velocity_violation = probe.velocity_violation(out.trajectories);
  out.velocity_feasible = out.velocity_violation == 0.0;
  for (auto& t : out.trajectories) t.vehicle = seed[&t - out.trajectories.data()].vehicle;
  return out;
}

void write_iteration_log(std::ostream& out, const std::vector<IterationRecord>& log) {
  out << "iter,beta,rho_exact,rho_smooth,grad_norm,step\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.beta, r.rho_exact, r.rho_smooth,
                  r.grad_norm, r.step);
    out << buf;
  }
}

}  // namespace stlplan
