#include "stlplan/stl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlplan::stl {

struct Formula::Node {
  Op op = Op::Predicate;
  Predicate predicate;
  std::vector<Formula> children;
  Window window;
};

namespace {

void check_predicate(const Predicate& p) {
  std::visit(
      [](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, AxisBand>) {
          if (q.axis < 0 || q.axis > 2) throw FormulaError("axis band: axis must be 0, 1 or 2");
          if (!(q.lo < q.hi)) throw FormulaError("axis band: lo must be below hi");
          if (std::isinf(q.lo) && std::isinf(q.hi)) throw FormulaError("axis band: unbounded on both sides");
        } else if constexpr (std::is_same_v<T, PairDistance>) {
          if (q.first == q.second) throw FormulaError("pair distance: vehicles must differ");
          if (!(q.threshold >= 0.0)) throw FormulaError("pair distance: threshold must be nonnegative");
        } else if constexpr (std::is_same_v<T, SegmentDistanceBand>) {
          if (!(q.lo < q.hi)) throw FormulaError("segment distance band: empty band");
          if (!std::isfinite(q.lo) || !std::isfinite(q.hi)) throw FormulaError("segment distance band: bounds must be finite");
        } else {
          if (!(q.lo < q.hi)) throw FormulaError("speed band: empty band");
          if (std::isinf(q.lo) && std::isinf(q.hi)) throw FormulaError("speed band: unbounded on both sides");
        }
      },
      p);
}

void check_window(Window w) {
  if (w.lo < 0 || w.lo > w.hi) throw FormulaError("temporal window must satisfy 0 <= lo <= hi");
}

}  // namespace

Formula Formula::atom(Predicate p) {
  check_predicate(p);
  auto n = std::make_shared<Node>();
  n->op = Op::Predicate;
  n->predicate = std::move(p);
  return Formula(std::move(n));
}

Formula Formula::negation(Formula child) {
  if (child.op() == Op::Predicate) {
    if (const auto* band = std::get_if<AxisBand>(&child.predicate())) {
      AxisBand flipped = *band;
      flipped.negated = !flipped.negated;
      return atom(flipped);
    }
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Not;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::conjunction(std::vector<Formula> children) {
  if (children.size() < 2) throw FormulaError("conjunction needs at least two operands");
  auto n = std::make_shared<Node>();
  n->op = Op::And;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::disjunction(std::vector<Formula> children) {
  if (children.size() < 2) throw FormulaError("disjunction needs at least two operands");
  auto n = std::make_shared<Node>();
  n->op = Op::Or;
  n->children = std::move(children);
  return Formula(std::move(n));
}

Formula Formula::implication(Formula lhs, Formula rhs) {
  auto n = std::make_shared<Node>();
  n->op = Op::Implies;
  n->children = {std::move(lhs), std::move(rhs)};
  return Formula(std::move(n));
}

Formula Formula::always(Window w, Formula child) {
  check_window(w);
  auto n = std::make_shared<Node>();
  n->op = Op::Always;
  n->window = w;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::eventually(Window w, Formula child) {
  check_window(w);
  auto n = std::make_shared<Node>();
  n->op = Op::Eventually;
  n->window = w;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Formula Formula::next(Formula child) {
  auto n = std::make_shared<Node>();
  n->op = Op::Next;
  n->children.push_back(std::move(child));
  return Formula(std::move(n));
}

Op Formula::op() const { return node_->op; }

const Predicate& Formula::predicate() const {
  if (node_->op != Op::Predicate) throw FormulaError("not a predicate node");
  return node_->predicate;
}

const std::vector<Formula>& Formula::children() const { return node_->children; }

Window Formula::window() const { return node_->window; }

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  if (a.op() == Op::Predicate) return a.predicate() == b.predicate();
  if ((a.op() == Op::Always || a.op() == Op::Eventually) && !(a.window() == b.window())) return false;
  return a.children() == b.children();
}

Formula all_of(std::vector<Formula> children) {
  if (children.empty()) throw FormulaError("empty conjunction");
  if (children.size() == 1) return std::move(children.front());
  return Formula::conjunction(std::move(children));
}

Formula any_of(std::vector<Formula> children) {
  if (children.empty()) throw FormulaError("empty disjunction");
  if (children.size() == 1) return std::move(children.front());
  return Formula::disjunction(std::move(children));
}

// ---------------------------------------------------------------------------

int Signal::last_index() const {
  if (vehicles.empty()) return -1;
  return static_cast<int>(vehicles.front().pos[0].size()) - 1;
}

Vec3 Signal::position(int vehicle, int k) const {
  const auto& v = vehicles.at(static_cast<std::size_t>(vehicle));
  return {v.pos[0][k], v.pos[1][k], v.pos[2][k]};
}

Vec3 Signal::velocity(int vehicle, int k) const {
  const auto& v = vehicles.at(static_cast<std::size_t>(vehicle));
  return {v.vel[0][k], v.vel[1][k], v.vel[2][k]};
}

void Signal::check_shape() const {
  if (!(ts > 0.0)) throw FormulaError("signal sampling period must be positive");
  const auto n = static_cast<std::size_t>(last_index() + 1);
  for (const auto& v : vehicles) {
    for (int j = 0; j < 3; ++j) {
      if (v.pos[j].size() != n || v.vel[j].size() != n) {
        throw FormulaError("signal sequences must share one length");
      }
    }
  }
}

int horizon(const Formula& phi) {
  switch (phi.op()) {
    case Op::Predicate:
      return 0;
    case Op::Not:
      return horizon(phi.child());
    case Op::And:
    case Op::Or:
    case Op::Implies: {
      int h = 0;
      for (const auto& c : phi.children()) h = std::max(h, horizon(c));
      return h;
    }
    case Op::Always:
    case Op::Eventually:
      return phi.window().hi + horizon(phi.child());
    case Op::Next:
      return 1 + horizon(phi.child());
  }
  return 0;
}

void require_horizon(const Formula& phi, const Signal& s, int k) {
  const int need = horizon(phi) + k;
  if (k < 0 || need > s.last_index()) {
    throw HorizonError("formula needs samples up to index " + std::to_string(need) +
                       " but the signal ends at " + std::to_string(s.last_index()));
  }
}

bool holds(const Predicate& p, const Signal& s, int k) {
  return std::visit(
      [&](const auto& q) -> bool {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, AxisBand>) {
          const double x = s.vehicles.at(q.vehicle).pos[q.axis][k];
          const bool inside = q.lo < x && x < q.hi;
          return q.negated ? !inside : inside;
        } else if constexpr (std::is_same_v<T, PairDistance>) {
          return (s.position(q.first, k) - s.position(q.second, k)).norm() >= q.threshold;
        } else if constexpr (std::is_same_v<T, SegmentDistanceBand>) {
          const double d = project_on_segment(s.position(q.vehicle, k), q.a, q.b).distance;
          return q.lo < d && d < q.hi;
        } else {
          const double v = s.velocity(q.vehicle, k).norm();
          return q.lo < v && v < q.hi;
        }
      },
      p);
}

namespace {

bool eval_rec(const Formula& phi, const Signal& s, int k) {
  switch (phi.op()) {
    case Op::Predicate:
      return holds(phi.predicate(), s, k);
    case Op::Not:
      return !eval_rec(phi.child(), s, k);
    case Op::And:
      return std::all_of(phi.children().begin(), phi.children().end(),
                         [&](const Formula& c) { return eval_rec(c, s, k); });
    case Op::Or:
      return std::any_of(phi.children().begin(), phi.children().end(),
                         [&](const Formula& c) { return eval_rec(c, s, k); });
    case Op::Implies:
      return !eval_rec(phi.child(0), s, k) || eval_rec(phi.child(1), s, k);
    case Op::Always:
      for (int i = phi.window().lo; i <= phi.window().hi; ++i) {
        if (!eval_rec(phi.child(), s, k + i)) return false;
      }
      return true;
    case Op::Eventually:
      for (int i = phi.window().lo; i <= phi.window().hi; ++i) {
        if (eval_rec(phi.child(), s, k + i)) return true;
      }
      return false;
    case Op::Next:
      return eval_rec(phi.child(), s, k + 1);
  }
  return false;
}

}  // namespace

bool eval_bool(const Formula& phi, const Signal& s, int k) {
  s.check_shape();
  require_horizon(phi, s, k);
  return eval_rec(phi, s, k);
}

}  // namespace stlplan::stl
