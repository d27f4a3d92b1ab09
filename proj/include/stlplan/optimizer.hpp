#pragma once

// Smooth-robustness maximization over the acceleration sequences of all
// vehicles:
//
//   maximize   rho~_beta(rollout(a)) - lambda * sum max(0, velocity violation)^2
//   subject to a_min <= a <= a_max   (per axis, enforced by projection)
//
// by projected gradient ascent with Armijo backtracking and a beta
// continuation schedule.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stlplan/dynamics.hpp"
#include "stlplan/mission.hpp"
#include "stlplan/robustness.hpp"
#include "stlplan/stl.hpp"

namespace stlplan {

class OptimizerError : public std::runtime_error {
 public:
  OptimizerError(const std::string& message, std::string path = {});
  /// Subformula path that produced a non-finite value, when applicable.
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
};

constexpr double kDefaultPenaltyWeight = 10.0;

/// Decision vector layout: a^(j)_k of vehicle d sits at index (3 d + j) N + k.
class Problem {
 public:
  Problem(const MissionConfig& cfg, stl::Formula phi, std::vector<State> starts,
          double penalty_weight = kDefaultPenaltyWeight);

  [[nodiscard]] int vehicle_count() const { return static_cast<int>(specs_.size()); }
  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] Eigen::Index dimension() const { return 3 * static_cast<Eigen::Index>(specs_.size()) * steps_; }
  [[nodiscard]] const Eigen::VectorXd& lower() const { return lower_; }
  [[nodiscard]] const Eigen::VectorXd& upper() const { return upper_; }
  [[nodiscard]] const stl::Formula& formula() const { return phi_; }

  [[nodiscard]] Eigen::VectorXd encode(const std::vector<Trajectory>& trajs) const;
  [[nodiscard]] std::vector<Trajectory> decode(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& x) const;

  /// Sum of squared velocity-bound violations over samples 1..N.
  [[nodiscard]] double velocity_violation(const std::vector<Trajectory>& trajs) const;

  /// Objective value; throws OptimizerError when it is not finite.
  double objective(const Eigen::VectorXd& x, double beta);
  double objective_and_gradient(const Eigen::VectorXd& x, double beta, Eigen::VectorXd& grad);

 private:
  double evaluate(const Eigen::VectorXd& x, double beta, Eigen::VectorXd* grad);

  stl::Formula phi_;
  std::vector<VehicleSpec> specs_;
  std::vector<State> starts_;
  int steps_ = 0;
  double ts_ = 1.0;
  double penalty_weight_ = kDefaultPenaltyWeight;
  Eigen::VectorXd lower_, upper_;
  SmoothEvaluator evaluator_;
  SignalGradient signal_grad_;
};

struct ObjectiveGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Objective and gradient for vehicles starting at rest at their depots, with
/// the configured beta.
ObjectiveGradient objective_and_gradient(const MissionConfig& cfg, const stl::Formula& phi,
                                         const Eigen::VectorXd& x);

enum class Termination { Converged, IterationLimit, Stalled };
std::string to_string(Termination t);

struct IterationRecord {
  int iter = 0;
  double beta = 0.0;
  double rho_exact = 0.0;
  double rho_smooth = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct OptimizeOptions {
  double beta = 10.0;  // final sharpness beta_0
  int max_iters = 5000;
  int multi_start = 1;
  std::uint64_t seed = 0;
  double penalty_weight = kDefaultPenaltyWeight;
  bool keep_log = true;
};

struct SolveOutcome {
  std::vector<Trajectory> trajectories;
  double rho = 0.0;
  double rho_smooth = 0.0;  // at the final beta
  double seed_rho = 0.0;
  double zeta = 0.0;
  bool zeta_satisfied = false;
  double velocity_violation = 0.0;
  bool velocity_feasible = false;
  int iterations = 0;
  int start_index = 0;  // which multi-start produced the result
  Termination termination = Termination::IterationLimit;
  std::vector<IterationRecord> log;
};

/// Starts from `seed` (one trajectory per vehicle, in vehicle order). The
/// returned trajectories are the best iterate by exact robustness among those
/// whose velocity violation does not exceed the seed's.
SolveOutcome optimize(const MissionConfig& cfg, const stl::Formula& phi, const std::vector<Trajectory>& seed,
                      const OptimizeOptions& opts);

/// `iter,beta,rho_exact,rho_smooth,grad_norm,step`
void write_iteration_log(std::ostream& out, const std::vector<IterationRecord>& log);

}  // namespace stlplan
