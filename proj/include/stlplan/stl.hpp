#pragma once

// Signal Temporal Logic over discrete-time, multi-vehicle signals.
//
// Formulas are immutable trees that share structure through shared_ptr, so
// copying a Formula is cheap and evaluation is safe from any number of
// threads. Temporal windows are closed intervals of sample indices.

#include <array>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "stlplan/geometry.hpp"

namespace stlplan::stl {

/// Open band lo < p^(axis) < hi on one position coordinate. Either bound may
/// be infinite (one-sided half-space), but not both.
struct AxisBand {
  int vehicle = 0;
  int axis = 0;  // 0, 1, 2 for x, y, z
  double lo = 0.0;
  double hi = 0.0;
  bool negated = false;

  bool operator==(const AxisBand&) const = default;
};

/// ||p_first - p_second|| >= threshold.
struct PairDistance {
  int first = 0;
  int second = 0;
  double threshold = 0.0;

  bool operator==(const PairDistance&) const = default;
};

/// Distance from a vehicle to a line segment lies in the open band (lo, hi),
/// i.e. |dist - center| < halfwidth.
struct SegmentDistanceBand {
  int vehicle = 0;
  int segment = 0;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] double halfwidth() const { return 0.5 * (hi - lo); }
  bool operator==(const SegmentDistanceBand&) const = default;
};

/// Speed magnitude ||v|| in the open band (lo, hi).
struct SpeedBand {
  int vehicle = 0;
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const SpeedBand&) const = default;
};

using Predicate = std::variant<AxisBand, PairDistance, SegmentDistanceBand, SpeedBand>;

enum class Op { Predicate, Not, And, Or, Implies, Always, Eventually, Next };

struct Window {
  int lo = 0;
  int hi = 0;
  bool operator==(const Window&) const = default;
};

class FormulaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Formula {
 public:
  static Formula atom(Predicate p);
  /// Negating an AxisBand folds into its `negated` flag; any other child
  /// gets a Not node.
  static Formula negation(Formula child);
  static Formula conjunction(std::vector<Formula> children);
  static Formula disjunction(std::vector<Formula> children);
  static Formula implication(Formula lhs, Formula rhs);
  static Formula always(Window w, Formula child);
  static Formula eventually(Window w, Formula child);
  static Formula next(Formula child);

  [[nodiscard]] Op op() const;
  [[nodiscard]] const Predicate& predicate() const;
  [[nodiscard]] const std::vector<Formula>& children() const;
  [[nodiscard]] const Formula& child(std::size_t i = 0) const { return children().at(i); }
  [[nodiscard]] Window window() const;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Conjunction/disjunction that return the lone child when given one.
Formula all_of(std::vector<Formula> children);
Formula any_of(std::vector<Formula> children);

/// Per-vehicle position and velocity sequences sharing one sampling period.
struct VehicleTrace {
  std::array<std::vector<double>, 3> pos;
  std::array<std::vector<double>, 3> vel;
};

struct Signal {
  double ts = 1.0;
  std::vector<VehicleTrace> vehicles;

  /// Last sample index N (sequences have N + 1 entries).
  [[nodiscard]] int last_index() const;
  [[nodiscard]] Vec3 position(int vehicle, int k) const;
  [[nodiscard]] Vec3 velocity(int vehicle, int k) const;
  /// Throws FormulaError when sequence lengths disagree or ts <= 0.
  void check_shape() const;
};

class HorizonError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Samples a signal needs beyond k for phi to be evaluable at k.
int horizon(const Formula& phi);

/// Throws HorizonError unless horizon(phi) + k <= N.
void require_horizon(const Formula& phi, const Signal& s, int k);

bool eval_bool(const Formula& phi, const Signal& s, int k = 0);

/// Boolean value of a single predicate at sample k.
bool holds(const Predicate& p, const Signal& s, int k);

// ---------------------------------------------------------------------------
// Text form

struct NamedSegment {
  std::string name;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
};

/// Name resolution and unit conversion used when parsing and printing.
/// Without explicit names, vehicles are `p1, p2, ...` and segments are
/// `b1, b2, ...`; window bounds are seconds converted with round(t / ts).
struct Bindings {
  double ts = 1.0;
  std::vector<std::string> vehicle_names;
  std::vector<NamedSegment> segments;
  std::map<std::string, Formula> macros;

  [[nodiscard]] std::string vehicle_name(int id) const;
  [[nodiscard]] std::string segment_name(int id) const;
};

struct SourceLocation {
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceLocation where, std::string found, std::vector<std::string> expected);
  [[nodiscard]] SourceLocation where() const { return where_; }
  [[nodiscard]] const std::string& found() const { return found_; }
  [[nodiscard]] const std::vector<std::string>& expected() const { return expected_; }

 private:
  SourceLocation where_;
  std::string found_;
  std::vector<std::string> expected_;
};

class UnknownIdentifierError : public std::runtime_error {
 public:
  UnknownIdentifierError(SourceLocation where, std::string name);
  [[nodiscard]] SourceLocation where() const { return where_; }
  [[nodiscard]] const std::string& name() const { return name_; }

 private:
  SourceLocation where_;
  std::string name_;
};

Formula parse(std::string_view text, const Bindings& bindings = {});
std::string print(const Formula& phi, const Bindings& bindings = {});

}  // namespace stlplan::stl
