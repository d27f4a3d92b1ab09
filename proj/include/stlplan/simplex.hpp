#pragma once

// Dense two-phase tableau simplex for small linear programs
//   minimize c.x  subject to  A x (<=|=|>=) b,  0 <= x <= upper.
// Pivoting follows Dantzig's rule and falls back to Bland's rule once
// 3 * (column count) pivots pass without objective progress.

#include <Eigen/Core>
#include <vector>

namespace stlplan {

enum class RowSense { LessEqual, Equal, GreaterEqual };

struct LinearProgram {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::vector<RowSense> sense;
  Eigen::VectorXd cost;
  Eigen::VectorXd upper;  // +inf for no upper bound; empty means all unbounded
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  int pivots = 0;
  bool used_bland = false;
};

LpResult solve_lp(const LinearProgram& lp, int max_pivots = 100000);

}  // namespace stlplan
