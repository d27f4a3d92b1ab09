#include "stlplan/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stlplan {

using stl::Formula;
using stl::Op;
using stl::Signal;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("smoothing sharpness beta must be positive");
}

// Margin terms of a band lo < x < hi; each term is (value, d value / d x).
struct BandTerms {
  double value[2];
  double slope[2];
  int count = 0;
};

BandTerms band_terms(double x, double lo, double hi) {
  BandTerms t;
  if (std::isfinite(lo)) {
    t.value[t.count] = x - lo;
    t.slope[t.count] = 1.0;
    ++t.count;
  }
  if (std::isfinite(hi)) {
    t.value[t.count] = hi - x;
    t.slope[t.count] = -1.0;
    ++t.count;
  }
  return t;
}

double exact_band(double x, double lo, double hi) {
  const BandTerms t = band_terms(x, lo, hi);
  return t.count == 1 ? t.value[0] : std::min(t.value[0], t.value[1]);
}

double exact_predicate(const stl::Predicate& p, const Signal& s, int k) {
  return std::visit(
      [&](const auto& q) -> double {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, stl::AxisBand>) {
          const double m = exact_band(s.vehicles.at(q.vehicle).pos[q.axis][k], q.lo, q.hi);
          return q.negated ? -m : m;
        } else if constexpr (std::is_same_v<T, stl::PairDistance>) {
          return (s.position(q.first, k) - s.position(q.second, k)).norm() - q.threshold;
        } else if constexpr (std::is_same_v<T, stl::SegmentDistanceBand>) {
          return exact_band(project_on_segment(s.position(q.vehicle, k), q.a, q.b).distance, q.lo, q.hi);
        } else {
          return exact_band(s.velocity(q.vehicle, k).norm(), q.lo, q.hi);
        }
      },
      p);
}

double rho_rec(const Formula& phi, const Signal& s, int k) {
  switch (phi.op()) {
    case Op::Predicate:
      return exact_predicate(phi.predicate(), s, k);
    case Op::Not:
      return -rho_rec(phi.child(), s, k);
    case Op::And: {
      double r = kInf;
      for (const auto& c : phi.children()) r = std::min(r, rho_rec(c, s, k));
      return r;
    }
    case Op::Or: {
      double r = -kInf;
      for (const auto& c : phi.children()) r = std::max(r, rho_rec(c, s, k));
      return r;
    }
    case Op::Implies:
      return std::max(-rho_rec(phi.child(0), s, k), rho_rec(phi.child(1), s, k));
    case Op::Always: {
      double r = kInf;
      for (int i = phi.window().lo; i <= phi.window().hi; ++i) r = std::min(r, rho_rec(phi.child(), s, k + i));
      return r;
    }
    case Op::Eventually: {
      double r = -kInf;
      for (int i = phi.window().lo; i <= phi.window().hi; ++i) r = std::max(r, rho_rec(phi.child(), s, k + i));
      return r;
    }
    case Op::Next:
      return rho_rec(phi.child(), s, k + 1);
  }
  return 0.0;
}

}  // namespace

namespace {

// Soft maximum of sign * r, returned with the sign applied back; sign = -1
// turns it into the soft minimum. exp is evaluated once per entry.
double soft_extreme(std::span<const double> r, double beta, std::span<double> weights, double sign) {
  check_beta(beta);
  if (!weights.empty() && weights.size() != r.size()) throw std::invalid_argument("lse: weight span size mismatch");
  std::fill(weights.begin(), weights.end(), 0.0);
  double m = -kInf;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double v = sign * r[i];
    if (v == kInf) {
      if (!weights.empty()) weights[i] = 1.0;
      return sign * kInf;
    }
    if (std::isfinite(v)) m = std::max(m, v);
  }
  if (m == -kInf) return -sign * kInf;
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double v = sign * r[i];
    if (!std::isfinite(v)) continue;
    const double e = std::exp(beta * (v - m));
    if (!weights.empty()) weights[i] = e;
    sum += e;
  }
  for (double& w : weights) w /= sum;
  return sign * (m + std::log(sum) / beta);
}

}  // namespace

double lse_max(std::span<const double> r, double beta, std::span<double> weights) {
  return soft_extreme(r, beta, weights, 1.0);
}

double lse_min(std::span<const double> r, double beta, std::span<double> weights) {
  return soft_extreme(r, beta, weights, -1.0);
}

double rho(const Formula& phi, const Signal& s, int k) {
  s.check_shape();
  stl::require_horizon(phi, s, k);
  return rho_rec(phi, s, k);
}

double rho_smooth(const Formula& phi, const Signal& s, int k, double beta) {
  SmoothEvaluator eval(phi);
  return eval.value(s, k, beta);
}

SignalGradient SignalGradient::zeros_like(const Signal& s) {
  SignalGradient g;
  const auto n = static_cast<std::size_t>(s.last_index() + 1);
  g.pos.resize(s.vehicles.size());
  g.vel.resize(s.vehicles.size());
  for (std::size_t d = 0; d < s.vehicles.size(); ++d) {
    for (int j = 0; j < 3; ++j) {
      g.pos[d][j].assign(n, 0.0);
      g.vel[d][j].assign(n, 0.0);
    }
  }
  return g;
}

std::size_t SignalGradient::size() const {
  std::size_t n = 0;
  for (const auto& v : pos)
    for (const auto& a : v) n += a.size();
  for (const auto& v : vel)
    for (const auto& a : v) n += a.size();
  return n;
}

double SignalGradient::max_abs() const {
  double m = 0.0;
  for (const auto* block : {&pos, &vel}) {
    for (const auto& v : *block)
      for (const auto& a : v)
        for (double x : a) m = std::max(m, std::abs(x));
  }
  return m;
}

SmoothValue grad_rho_smooth(const Formula& phi, const Signal& s, int k, double beta) {
  SmoothEvaluator eval(phi);
  SmoothValue out;
  out.gradient = SignalGradient::zeros_like(s);
  out.value = eval.value_and_gradient(s, k, beta, out.gradient);
  return out;
}

// ---------------------------------------------------------------------------
// Tape-based evaluator. Children are always recorded before their parent, so
// a single reverse sweep over the entries propagates adjoints.

SmoothEvaluator::SmoothEvaluator(Formula phi) : phi_(std::move(phi)) {}

double SmoothEvaluator::value(const Signal& s, int k, double beta) {
  check_beta(beta);
  s.check_shape();
  stl::require_horizon(phi_, s, k);
  entries_.clear();
  edges_.clear();
  leaves_.clear();
  record_partials_ = false;
  const auto root = record(phi_, s, k, beta);
  return entries_[root].value;
}

double SmoothEvaluator::value_and_gradient(const Signal& s, int k, double beta, SignalGradient& grad) {
  check_beta(beta);
  s.check_shape();
  stl::require_horizon(phi_, s, k);
  entries_.clear();
  edges_.clear();
  leaves_.clear();
  record_partials_ = true;
  const auto root = record(phi_, s, k, beta);

  adjoint_.assign(entries_.size(), 0.0);
  adjoint_[root] = 1.0;
  for (std::size_t e = entries_.size(); e-- > 0;) {
    const double adj = adjoint_[e];
    if (adj == 0.0) continue;
    const Entry& en = entries_[e];
    for (auto i = en.edge_begin; i < en.edge_end; ++i) adjoint_[edges_[i].child] += adj * edges_[i].weight;
    for (auto i = en.leaf_begin; i < en.leaf_end; ++i) {
      const Leaf& l = leaves_[i];
      auto& target = l.velocity ? grad.vel[l.vehicle][l.axis] : grad.pos[l.vehicle][l.axis];
      target[static_cast<std::size_t>(l.k)] += adj * l.d;
    }
  }
  return entries_[root].value;
}

std::uint32_t SmoothEvaluator::push_soft(std::span<const std::uint32_t> kids, bool is_max, double beta,
                                         double sign_in) {
  scratch_values_.resize(kids.size());
  scratch_weights_.resize(kids.size());
  for (std::size_t i = 0; i < kids.size(); ++i) scratch_values_[i] = entries_[kids[i]].value;
  if (sign_in < 0.0) scratch_values_[0] = -scratch_values_[0];
  const double v = is_max ? lse_max(scratch_values_, beta, scratch_weights_)
                          : lse_min(scratch_values_, beta, scratch_weights_);
  Entry en{v, static_cast<std::uint32_t>(edges_.size()), 0, static_cast<std::uint32_t>(leaves_.size()),
           static_cast<std::uint32_t>(leaves_.size())};
  if (record_partials_) {
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const double w = (i == 0 && sign_in < 0.0) ? -scratch_weights_[i] : scratch_weights_[i];
      if (w != 0.0) edges_.push_back({kids[i], w});
    }
  }
  en.edge_end = static_cast<std::uint32_t>(edges_.size());
  entries_.push_back(en);
  return static_cast<std::uint32_t>(entries_.size() - 1);
}

std::uint32_t SmoothEvaluator::record_predicate(const stl::Predicate& p, const Signal& s, int k, double beta) {
  Entry en{0.0, static_cast<std::uint32_t>(edges_.size()), static_cast<std::uint32_t>(edges_.size()),
           static_cast<std::uint32_t>(leaves_.size()), 0};
  auto leaf = [&](int vehicle, int axis, bool velocity, double d) {
    if (record_partials_ && d != 0.0) {
      leaves_.push_back({static_cast<std::uint32_t>(vehicle), static_cast<std::uint8_t>(axis), velocity, k, d});
    }
  };
  // Soft minimum over the finite sides of a band; returns d value / d x.
  auto soft_band = [&](double x, double lo, double hi, double& slope) {
    const BandTerms t = band_terms(x, lo, hi);
    if (t.count == 1) {
      slope = t.slope[0];
      return t.value[0];
    }
    double w[2];
    const double v = lse_min(std::span<const double>(t.value, 2), beta, std::span<double>(w, 2));
    slope = w[0] * t.slope[0] + w[1] * t.slope[1];
    return v;
  };

  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, stl::AxisBand>) {
          double slope = 0.0;
          double v = soft_band(s.vehicles.at(q.vehicle).pos[q.axis][k], q.lo, q.hi, slope);
          if (q.negated) {
            v = -v;
            slope = -slope;
          }
          en.value = v;
          leaf(q.vehicle, q.axis, false, slope);
        } else if constexpr (std::is_same_v<T, stl::PairDistance>) {
          const Vec3 diff = s.position(q.first, k) - s.position(q.second, k);
          const double n = diff.norm();
          en.value = n - q.threshold;
          if (n > 0.0) {
            for (int j = 0; j < 3; ++j) {
              leaf(q.first, j, false, diff[j] / n);
              leaf(q.second, j, false, -diff[j] / n);
            }
          }
        } else if constexpr (std::is_same_v<T, stl::SegmentDistanceBand>) {
          const Vec3 p = s.position(q.vehicle, k);
          const auto proj = project_on_segment(p, q.a, q.b);
          double slope = 0.0;
          en.value = soft_band(proj.distance, q.lo, q.hi, slope);
          if (proj.distance > 0.0) {
            const Vec3 dir = (p - proj.closest) / proj.distance;
            for (int j = 0; j < 3; ++j) leaf(q.vehicle, j, false, slope * dir[j]);
          }
        } else {
          const Vec3 v = s.velocity(q.vehicle, k);
          const double n = v.norm();
          double slope = 0.0;
          en.value = soft_band(n, q.lo, q.hi, slope);
          if (n > 0.0) {
            for (int j = 0; j < 3; ++j) leaf(q.vehicle, j, true, slope * v[j] / n);
          }
        }
      },
      p);
  en.leaf_end = static_cast<std::uint32_t>(leaves_.size());
  entries_.push_back(en);
  return static_cast<std::uint32_t>(entries_.size() - 1);
}

std::uint32_t SmoothEvaluator::record(const Formula& phi, const Signal& s, int k, double beta) {
  switch (phi.op()) {
    case Op::Predicate:
      return record_predicate(phi.predicate(), s, k, beta);
    case Op::Not:
    case Op::Next: {
      const bool neg = phi.op() == Op::Not;
      const auto c = record(phi.child(), s, neg ? k : k + 1, beta);
      Entry en{neg ? -entries_[c].value : entries_[c].value, static_cast<std::uint32_t>(edges_.size()), 0,
               static_cast<std::uint32_t>(leaves_.size()), static_cast<std::uint32_t>(leaves_.size())};
      if (record_partials_) edges_.push_back({c, neg ? -1.0 : 1.0});
      en.edge_end = static_cast<std::uint32_t>(edges_.size());
      entries_.push_back(en);
      return static_cast<std::uint32_t>(entries_.size() - 1);
    }
    case Op::And:
    case Op::Or:
    case Op::Implies: {
      const std::size_t base = kid_stack_.size();
      for (const auto& c : phi.children()) {
        const auto id = record(c, s, k, beta);
        kid_stack_.push_back(id);
      }
      const std::span<const std::uint32_t> kids(kid_stack_.data() + base, kid_stack_.size() - base);
      const auto id = phi.op() == Op::Implies ? push_soft(kids, true, beta, -1.0)
                                              : push_soft(kids, phi.op() == Op::Or, beta);
      kid_stack_.resize(base);
      return id;
    }
    case Op::Always:
    case Op::Eventually: {
      const auto w = phi.window();
      const std::size_t base = kid_stack_.size();
      for (int i = w.lo; i <= w.hi; ++i) {
        const auto id = record(phi.child(), s, k + i, beta);
        kid_stack_.push_back(id);
      }
      const std::span<const std::uint32_t> kids(kid_stack_.data() + base, kid_stack_.size() - base);
      const auto id = push_soft(kids, phi.op() == Op::Eventually, beta);
      kid_stack_.resize(base);
      return id;
    }
  }
  throw std::logic_error("unreachable formula node");
}

// ---------------------------------------------------------------------------

namespace {

std::string clip(std::string text) {
  constexpr std::size_t kMax = 160;
  if (text.size() > kMax) {
    text.resize(kMax - 3);
    text += "...";
  }
  return text;
}

void breakdown_rec(const Formula& phi, const Signal& s, int k, const std::string& path, const stl::Bindings& names,
                   std::vector<SubformulaValue>& out) {
  out.push_back({path.empty() ? "root" : path, k, rho_rec(phi, s, k), clip(stl::print(phi, names))});
  if (phi.op() == Op::Always || phi.op() == Op::Eventually || phi.op() == Op::Predicate) return;
  const int child_k = phi.op() == Op::Next ? k + 1 : k;
  for (std::size_t i = 0; i < phi.children().size(); ++i) {
    breakdown_rec(phi.child(i), s, child_k, path.empty() ? std::to_string(i) : path + "/" + std::to_string(i), names,
                  out);
  }
}

bool nonfinite_rec(const Formula& phi, const Signal& s, int k, const std::string& path, std::string& found) {
  // Report the deepest offending node so the diagnostic names the source.
  if (phi.op() != Op::Predicate) {
    const auto w = phi.op() == Op::Always || phi.op() == Op::Eventually ? phi.window() : stl::Window{0, 0};
    const int shift = phi.op() == Op::Next ? 1 : 0;
    for (std::size_t i = 0; i < phi.children().size(); ++i) {
      for (int t = w.lo; t <= w.hi; ++t) {
        const std::string sub = path.empty() ? std::to_string(i) : path + "/" + std::to_string(i);
        if (nonfinite_rec(phi.child(i), s, k + t + shift, sub, found)) return true;
      }
    }
  }
  if (!std::isfinite(rho_rec(phi, s, k))) {
    found = path.empty() ? "root" : path;
    return true;
  }
  return false;
}

}  // namespace

RobustnessReport robustness_report(const Formula& phi, const Signal& s, int k, double beta,
                                   const stl::Bindings& names) {
  RobustnessReport r;
  r.beta = beta;
  r.rho = rho(phi, s, k);
  r.rho_smooth = rho_smooth(phi, s, k, beta);
  r.verdict = r.rho > 0.0;
  breakdown_rec(phi, s, k, "", names, r.breakdown);
  return r;
}

std::vector<double> rho_series(const Formula& phi, const Signal& s) {
  s.check_shape();
  const int last = s.last_index() - stl::horizon(phi);
  std::vector<double> out;
  for (int k = 0; k <= last; ++k) out.push_back(rho_rec(phi, s, k));
  return out;
}

int max_fanin(const Formula& phi) {
  int m = 1;
  switch (phi.op()) {
    case Op::Predicate:
      std::visit(
          [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (!std::is_same_v<T, stl::PairDistance>) {
              if (std::isfinite(q.lo) && std::isfinite(q.hi)) m = 2;
            }
          },
          phi.predicate());
      return m;
    case Op::Always:
    case Op::Eventually:
      m = phi.window().hi - phi.window().lo + 1;
      break;
    case Op::And:
    case Op::Or:
    case Op::Implies:
      m = static_cast<int>(phi.children().size());
      break;
    default:
      break;
  }
  for (const auto& c : phi.children()) m = std::max(m, max_fanin(c));
  return m;
}

int minmax_depth(const Formula& phi) {
  switch (phi.op()) {
    case Op::Predicate:
      return max_fanin(phi) == 2 ? 1 : 0;
    case Op::Not:
    case Op::Next:
      return minmax_depth(phi.child());
    default: {
      int d = 0;
      for (const auto& c : phi.children()) d = std::max(d, minmax_depth(c));
      return d + 1;
    }
  }
}

std::string first_nonfinite_path(const Formula& phi, const Signal& s, int k) {
  std::string found;
  nonfinite_rec(phi, s, k, "", found);
  return found;
}

}  // namespace stlplan
