#pragma once

// Quantitative semantics: exact robustness (min/max) and the log-sum-exp
// smoothed robustness with its analytic gradient.

#include <span>
#include <string>
#include <vector>

#include "stlplan/stl.hpp"

namespace stlplan {

/// Soft maximum (1/beta) log sum exp(beta r_i), evaluated with the max
/// subtracted first. Infinite entries are skipped; `weights`, when given,
/// receives the softmax weights (zero for skipped entries).
double lse_max(std::span<const double> r, double beta, std::span<double> weights = {});
/// Soft minimum -(1/beta) log sum exp(-beta r_i).
double lse_min(std::span<const double> r, double beta, std::span<double> weights = {});

double rho(const stl::Formula& phi, const stl::Signal& s, int k = 0);
double rho_smooth(const stl::Formula& phi, const stl::Signal& s, int k, double beta);

/// Partial derivatives with respect to every position and velocity entry,
/// laid out exactly like the signal.
struct SignalGradient {
  std::vector<std::array<std::vector<double>, 3>> pos;
  std::vector<std::array<std::vector<double>, 3>> vel;

  static SignalGradient zeros_like(const stl::Signal& s);
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] double max_abs() const;
};

struct SmoothValue {
  double value = 0.0;
  SignalGradient gradient;
};

SmoothValue grad_rho_smooth(const stl::Formula& phi, const stl::Signal& s, int k, double beta);

/// Reusable evaluator for repeated smooth evaluations of one formula (the
/// optimizer's inner loop). Holds a tape; not thread-safe, one per thread.
class SmoothEvaluator {
 public:
  explicit SmoothEvaluator(stl::Formula phi);

  double value(const stl::Signal& s, int k, double beta);
  /// Writes the gradient into `grad`, which must already be shaped like `s`.
  double value_and_gradient(const stl::Signal& s, int k, double beta, SignalGradient& grad);

  [[nodiscard]] const stl::Formula& formula() const { return phi_; }

 private:
  struct Edge {
    std::uint32_t child;
    double weight;
  };
  struct Leaf {
    std::uint32_t vehicle;
    std::uint8_t axis;
    bool velocity;
    std::int32_t k;
    double d;
  };
  struct Entry {
    double value;
    std::uint32_t edge_begin, edge_end;
    std::uint32_t leaf_begin, leaf_end;
  };

  std::uint32_t record(const stl::Formula& phi, const stl::Signal& s, int k, double beta);
  std::uint32_t record_predicate(const stl::Predicate& p, const stl::Signal& s, int k, double beta);
  std::uint32_t push_soft(std::span<const std::uint32_t> kids, bool is_max, double beta, double sign_in = 1.0);

  stl::Formula phi_;
  bool record_partials_ = false;
  std::vector<Entry> entries_;
  std::vector<Edge> edges_;
  std::vector<Leaf> leaves_;
  std::vector<std::uint32_t> kid_stack_;
  std::vector<double> scratch_values_;
  std::vector<double> scratch_weights_;
  std::vector<double> adjoint_;
};

struct SubformulaValue {
  std::string path;  // child indices from the root, e.g. "0/3"
  int k = 0;
  double rho = 0.0;
  std::string text;
};

struct RobustnessReport {
  double rho = 0.0;
  double rho_smooth = 0.0;
  double beta = 0.0;
  bool verdict = false;
  std::vector<SubformulaValue> breakdown;
};

/// Exact values are reported per subformula down to the temporal operators
/// reached from the root without crossing a window.
RobustnessReport robustness_report(const stl::Formula& phi, const stl::Signal& s, int k, double beta,
                                   const stl::Bindings& names = {});

/// Exact robustness of `node` at every sample where it can be evaluated.
std::vector<double> rho_series(const stl::Formula& phi, const stl::Signal& s);

/// Largest fan-in of any min/max node, counting two-sided bands as fan-in 2.
int max_fanin(const stl::Formula& phi);
/// Largest number of min/max nodes on a root-to-leaf path, counting a window
/// as one node and two-sided bands as one node.
int minmax_depth(const stl::Formula& phi);

/// Path ("0/2/1") of the first subformula whose exact value is not finite, or
/// empty when every subformula is finite.
std::string first_nonfinite_path(const stl::Formula& phi, const stl::Signal& s, int k);

}  // namespace stlplan
