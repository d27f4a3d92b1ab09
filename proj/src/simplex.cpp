#include "stlplan/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stlplan {

namespace {

constexpr double kEps = 1e-9;

class Tableau {
 public:
  Tableau(int rows, int cols) : t_(Eigen::MatrixXd::Zero(rows, cols + 1)), basis_(rows, -1), cols_(cols) {}

  double& at(int r, int c) { return t_(r, c); }
  double& rhs(int r) { return t_(r, cols_); }
  [[nodiscard]] int rows() const { return static_cast<int>(t_.rows()); }
  [[nodiscard]] int cols() const { return cols_; }
  std::vector<int>& basis() { return basis_; }

  void pivot(int r, int e) {
    t_.row(r) /= t_(r, e);
    for (int i = 0; i < rows(); ++i) {
      if (i != r && t_(i, e) != 0.0) t_.row(i) -= t_(i, e) * t_.row(r);
    }
    basis_[r] = e;
  }

  /// Minimizes cost over the current basis. `banned` columns never enter.
  LpStatus optimize(const Eigen::VectorXd& cost, const std::vector<bool>& banned, int max_pivots, int& pivots,
                    bool& used_bland) {
    const int stall_limit = 3 * cols_;
    bool bland = false;
    int stalled = 0;
    double last_obj = objective(cost);
    for (;;) {
      // Reduced costs d_j = c_j - c_B^T column_j.
      Eigen::VectorXd d = cost;
      for (int i = 0; i < rows(); ++i) {
        const double cb = cost[basis_[i]];
        if (cb != 0.0) d -= cb * t_.row(i).head(cols_).transpose();
      }
      int enter = -1;
      double best = -kEps;
      for (int j = 0; j < cols_; ++j) {
        if (banned[j] || d[j] >= -kEps) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (d[j] < best) {
          best = d[j];
          enter = j;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a <= kEps) continue;
        const double q = t_(i, cols_) / a;
        if (q < ratio - kEps || (q <= ratio + kEps && leave >= 0 && basis_[i] < basis_[leave])) {
          ratio = std::min(ratio, q);
          leave = i;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      if (++pivots > max_pivots) return LpStatus::IterationLimit;
      pivot(leave, enter);
      for (int i = 0; i < rows(); ++i) {
        if (t_(i, cols_) < 0.0 && t_(i, cols_) > -kEps) t_(i, cols_) = 0.0;
      }

      const double obj = objective(cost);
      if (obj < last_obj - 1e-12) {
        stalled = 0;
        last_obj = obj;
      } else if (!bland && ++stalled >= stall_limit) {
        bland = true;
        used_bland = true;
      }
    }
  }

  double objective(const Eigen::VectorXd& cost) const {
    double v = 0.0;
    for (int i = 0; i < static_cast<int>(basis_.size()); ++i) v += cost[basis_[i]] * t_(i, cols_);
    return v;
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  int cols_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, int max_pivots) {
  const int m = static_cast<int>(lp.a.rows());
  const int n = static_cast<int>(lp.a.cols());
  if (lp.b.size() != m || static_cast<int>(lp.sense.size()) != m || lp.cost.size() != n) {
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  }
  if (lp.upper.size() != 0 && lp.upper.size() != n) throw std::invalid_argument("solve_lp: upper bound size");

  std::vector<int> bounded;
  for (int j = 0; j < n; ++j) {
    if (lp.upper.size() != 0 && std::isfinite(lp.upper[j])) {
      if (lp.upper[j] < 0.0) return LpResult{LpStatus::Infeasible, 0.0, {}, 0, false};
      bounded.push_back(j);
    }
  }

  // Column layout: originals | slack or surplus per inequality row |
  // slack per upper bound | artificials.
  std::vector<RowSense> sense = lp.sense;
  Eigen::MatrixXd a = lp.a;
  Eigen::VectorXd b = lp.b;
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      a.row(i) *= -1.0;
      b[i] = -b[i];
      if (sense[i] == RowSense::LessEqual) {
        sense[i] = RowSense::GreaterEqual;
      } else if (sense[i] == RowSense::GreaterEqual) {
        sense[i] = RowSense::LessEqual;
      }
    }
  }
  int n_slack = 0;
  int n_art = 0;
  for (auto s : sense) {
    if (s != RowSense::Equal) ++n_slack;
    if (s != RowSense::LessEqual) ++n_art;
  }
  const int n_ub = static_cast<int>(bounded.size());
  const int cols = n + n_slack + n_ub + n_art;
  const int rows = m + n_ub;
  Tableau tab(rows, cols);

  int slack = n;
  int art = n + n_slack + n_ub;
  std::vector<bool> is_art(cols, false);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tab.at(i, j) = a(i, j);
    tab.rhs(i) = b[i];
    switch (sense[i]) {
      case RowSense::LessEqual:
        tab.at(i, slack) = 1.0;
        tab.basis()[i] = slack++;
        break;
      case RowSense::GreaterEqual:
        tab.at(i, slack++) = -1.0;
        tab.at(i, art) = 1.0;
        is_art[art] = true;
        tab.basis()[i] = art++;
        break;
      case RowSense::Equal:
        tab.at(i, art) = 1.0;
        is_art[art] = true;
        tab.basis()[i] = art++;
        break;
    }
  }
  for (int k = 0; k < n_ub; ++k) {
    const int r = m + k;
    tab.at(r, bounded[k]) = 1.0;
    tab.at(r, slack) = 1.0;
    tab.rhs(r) = lp.upper[bounded[k]];
    tab.basis()[r] = slack++;
  }

  LpResult res;
  std::vector<bool> none(cols, false);
  if (n_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    for (int j = 0; j < cols; ++j) {
      if (is_art[j]) phase1[j] = 1.0;
    }
    const LpStatus st = tab.optimize(phase1, none, max_pivots, res.pivots, res.used_bland);
    if (st == LpStatus::IterationLimit) {
      res.status = st;
      return res;
    }
    if (tab.objective(phase1) > 1e-7) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    // Drive zero-valued artificials out of the basis where possible.
    for (int r = 0; r < rows; ++r) {
      if (!is_art[tab.basis()[r]]) continue;
      for (int j = 0; j < cols; ++j) {
        if (!is_art[j] && std::abs(tab.at(r, j)) > kEps) {
          tab.pivot(r, j);
          break;
        }
      }
    }
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost.head(n) = lp.cost;
  res.status = tab.optimize(cost, is_art, max_pivots, res.pivots, res.used_bland);
  if (res.status != LpStatus::Optimal) return res;

  res.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < rows; ++r) {
    if (tab.basis()[r] < n) res.x[tab.basis()[r]] = tab.rhs(r);
  }
  res.objective = lp.cost.dot(res.x);
  return res;
}

}  // namespace stlplan
