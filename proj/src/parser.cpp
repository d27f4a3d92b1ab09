// Recursive-descent parser and printer for the textual formula grammar:
//
//   formula := term (("or" | "->") term)*
//   term    := factor ("and" factor)*
//   factor  := "not" factor | "G[" num "," num "]" factor
//            | "F[" num "," num "]" factor | "X" factor
//            | "(" formula ")" | atom
//   atom    := ident "." axis "in (" num "," num ")"
//            | "dist(" ident "," ident ") >=" num
//            | "bladedist(" ident "," ident ") in (" num "," num ")"
//            | "speed(" ident ") in (" num "," num ")"
//            | ident

#include <charconv>
#include <cmath>
#include <sstream>

#include "stlplan/stl.hpp"

namespace stlplan::stl {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
  std::string out;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i > 0) out += i + 1 == expected.size() ? " or " : ", ";
    out += expected[i];
  }
  return out;
}

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLocation where;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.where = {line_, col_};
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text += take();
        }
      } else if (c == '-' && peek(1) == '>') {
        t.kind = Tok::Punct;
        t.text = "->";
        take();
        take();
      } else if (c == '>' && peek(1) == '=') {
        t.kind = Tok::Punct;
        t.text = ">=";
        take();
        take();
      } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) ||
                 c == '-' || c == '+') {
        t.kind = Tok::Number;
        t.text = lex_number();
      } else if (std::string_view("()[],.").find(c) != std::string_view::npos) {
        t.kind = Tok::Punct;
        t.text = std::string(1, take());
      } else {
        throw ParseError(t.where, std::string(1, c), {"a token"});
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char take() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) take();
  }
  std::string lex_number() {
    std::string s;
    if (src_[pos_] == '-' || src_[pos_] == '+') s += take();
    if (src_.substr(pos_, 3) == "inf") {
      s += take();
      s += take();
      s += take();
      return s;
    }
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) s += take();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      s += take();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      s += take();
      if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) s += take();
      digits();
    }
    return s;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, const Bindings& b) : toks_(std::move(toks)), b_(b) {}

  Formula run() {
    Formula f = formula();
    if (cur().kind != Tok::End) fail({"'or'", "'->'", "'and'", "end of input"});
    return f;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& ahead(std::size_t n) const { return toks_[std::min(pos_ + n, toks_.size() - 1)]; }
  bool is(std::string_view text) const { return cur().kind != Tok::End && cur().kind != Tok::Number && cur().text == text; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const auto& t = cur();
    throw ParseError(t.where, t.kind == Tok::End ? "end of input" : t.text, std::move(expected));
  }

  void expect(std::string_view text) {
    if (!is(text)) fail({"'" + std::string(text) + "'"});
    ++pos_;
  }

  Formula formula() {
    Formula lhs = term();
    std::vector<Formula> disjuncts;
    for (;;) {
      if (is("or")) {
        ++pos_;
        if (disjuncts.empty()) disjuncts.push_back(lhs);
        disjuncts.push_back(term());
      } else if (is("->")) {
        ++pos_;
        if (!disjuncts.empty()) {
          lhs = Formula::disjunction(std::move(disjuncts));
          disjuncts.clear();
        }
        lhs = Formula::implication(std::move(lhs), term());
      } else {
        break;
      }
    }
    if (!disjuncts.empty()) return Formula::disjunction(std::move(disjuncts));
    return lhs;
  }

  Formula term() {
    std::vector<Formula> parts{factor()};
    while (is("and")) {
      ++pos_;
      parts.push_back(factor());
    }
    return all_of(std::move(parts));
  }

  Formula factor() {
    if (is("not")) {
      ++pos_;
      return Formula::negation(factor());
    }
    if ((is("G") || is("F")) && ahead(1).text == "[") {
      const bool always = is("G");
      pos_ += 2;
      const SourceLocation where = cur().where;
      const double a = number();
      expect(",");
      const double b = number();
      expect("]");
      const Window w{to_samples(a), to_samples(b)};
      if (w.lo < 0 || w.lo > w.hi) {
        throw ParseError(where, "[" + format_number(a) + ", " + format_number(b) + "]",
                         {"a window with 0 <= lo <= hi"});
      }
      Formula child = factor();
      return always ? Formula::always(w, std::move(child)) : Formula::eventually(w, std::move(child));
    }
    if (is("X") && ahead(1).text != ".") {
      ++pos_;
      return Formula::next(factor());
    }
    if (is("(")) {
      ++pos_;
      Formula f = formula();
      expect(")");
      return f;
    }
    if (cur().kind == Tok::Ident) return atom();
    fail({"'not'", "'G['", "'F['", "'X'", "'('", "identifier"});
  }

  Formula atom() {
    const Token id = cur();
    ++pos_;
    if (id.text == "dist" && is("(")) {
      ++pos_;
      const int a = vehicle();
      expect(",");
      const int b = vehicle();
      expect(")");
      expect(">=");
      const double g = number();
      return Formula::atom(PairDistance{a, b, g});
    }
    if (id.text == "bladedist" && is("(")) {
      ++pos_;
      const int v = vehicle();
      expect(",");
      const auto [seg, a, b] = segment();
      expect(")");
      const auto [lo, hi] = band();
      return Formula::atom(SegmentDistanceBand{v, seg, a, b, lo, hi});
    }
    if (id.text == "speed" && is("(")) {
      ++pos_;
      const int v = vehicle();
      expect(")");
      const auto [lo, hi] = band();
      return Formula::atom(SpeedBand{v, lo, hi});
    }
    if (is(".")) {
      ++pos_;
      const int v = resolve_vehicle(id);
      int axis = -1;
      if (is("x")) axis = 0;
      if (is("y")) axis = 1;
      if (is("z")) axis = 2;
      if (axis < 0) fail({"'x'", "'y'", "'z'"});
      ++pos_;
      const auto [lo, hi] = band();
      return Formula::atom(AxisBand{v, axis, lo, hi, false});
    }
    const auto it = b_.macros.find(id.text);
    if (it == b_.macros.end()) throw UnknownIdentifierError(id.where, id.text);
    return it->second;
  }

  std::pair<double, double> band() {
    expect("in");
    expect("(");
    const SourceLocation where = cur().where;
    const double lo = number();
    expect(",");
    const double hi = number();
    expect(")");
    if (!(lo < hi) || (std::isinf(lo) && std::isinf(hi))) {
      throw ParseError(where, "(" + format_number(lo) + ", " + format_number(hi) + ")",
                       {"a band with lo < hi and at least one finite bound"});
    }
    return {lo, hi};
  }

  double number() {
    const Token& t = cur();
    std::string text = t.text;
    if (t.kind == Tok::Ident && t.text == "inf") {
      text = "inf";
    } else if (t.kind != Tok::Number) {
      fail({"number"});
    }
    const char* first = text.data();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto res = std::from_chars(first, text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) fail({"number"});
    ++pos_;
    return v;
  }

  int vehicle() {
    if (cur().kind != Tok::Ident) fail({"vehicle identifier"});
    const Token id = cur();
    ++pos_;
    return resolve_vehicle(id);
  }

  int resolve_vehicle(const Token& id) const {
    if (!b_.vehicle_names.empty()) {
      for (std::size_t i = 0; i < b_.vehicle_names.size(); ++i) {
        if (b_.vehicle_names[i] == id.text) return static_cast<int>(i);
      }
      throw UnknownIdentifierError(id.where, id.text);
    }
    if (id.text.size() >= 2 && id.text[0] == 'p') {
      int n = 0;
      const auto res = std::from_chars(id.text.data() + 1, id.text.data() + id.text.size(), n);
      if (res.ec == std::errc() && res.ptr == id.text.data() + id.text.size() && n >= 1) return n - 1;
    }
    throw UnknownIdentifierError(id.where, id.text);
  }

  std::tuple<int, Vec3, Vec3> segment() {
    if (cur().kind != Tok::Ident) fail({"segment identifier"});
    const Token id = cur();
    ++pos_;
    for (std::size_t i = 0; i < b_.segments.size(); ++i) {
      if (b_.segments[i].name == id.text) return {static_cast<int>(i), b_.segments[i].a, b_.segments[i].b};
    }
    throw UnknownIdentifierError(id.where, id.text);
  }

  int to_samples(double seconds) const { return static_cast<int>(std::floor(seconds / b_.ts + 0.5)); }

 public:
  static std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Bindings& b_;
};

std::string num(double v) { return Parser::format_number(v); }

const char* axis_name(int axis) {
  static const char* names[] = {"x", "y", "z"};
  return names[axis];
}

void print_rec(const Formula& phi, const Bindings& b, std::ostringstream& out);

void print_operand(const Formula& phi, const Bindings& b, std::ostringstream& out) {
  const bool bare = phi.op() == Op::Predicate &&
                    !(std::holds_alternative<AxisBand>(phi.predicate()) && std::get<AxisBand>(phi.predicate()).negated);
  if (!bare) out << '(';
  print_rec(phi, b, out);
  if (!bare) out << ')';
}

void print_predicate(const Predicate& p, const Bindings& b, std::ostringstream& out) {
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, AxisBand>) {
          if (q.negated) out << "not ";
          out << b.vehicle_name(q.vehicle) << '.' << axis_name(q.axis) << " in (" << num(q.lo) << ", " << num(q.hi)
              << ')';
        } else if constexpr (std::is_same_v<T, PairDistance>) {
          out << "dist(" << b.vehicle_name(q.first) << ", " << b.vehicle_name(q.second) << ") >= " << num(q.threshold);
        } else if constexpr (std::is_same_v<T, SegmentDistanceBand>) {
          out << "bladedist(" << b.vehicle_name(q.vehicle) << ", " << b.segment_name(q.segment) << ") in ("
              << num(q.lo) << ", " << num(q.hi) << ')';
        } else {
          out << "speed(" << b.vehicle_name(q.vehicle) << ") in (" << num(q.lo) << ", " << num(q.hi) << ')';
        }
      },
      p);
}

void print_rec(const Formula& phi, const Bindings& b, std::ostringstream& out) {
  switch (phi.op()) {
    case Op::Predicate:
      print_predicate(phi.predicate(), b, out);
      return;
    case Op::Not:
      out << "not ";
      print_operand(phi.child(), b, out);
      return;
    case Op::And:
    case Op::Or: {
      const char* sep = phi.op() == Op::And ? " and " : " or ";
      for (std::size_t i = 0; i < phi.children().size(); ++i) {
        if (i > 0) out << sep;
        print_operand(phi.child(i), b, out);
      }
      return;
    }
    case Op::Implies:
      print_operand(phi.child(0), b, out);
      out << " -> ";
      print_operand(phi.child(1), b, out);
      return;
    case Op::Always:
    case Op::Eventually:
      out << (phi.op() == Op::Always ? "G[" : "F[") << num(phi.window().lo * b.ts) << ", "
          << num(phi.window().hi * b.ts) << "] ";
      out << '(';
      print_rec(phi.child(), b, out);
      out << ')';
      return;
    case Op::Next:
      out << "X ";
      print_operand(phi.child(), b, out);
      return;
  }
}

}  // namespace

ParseError::ParseError(SourceLocation where, std::string found, std::vector<std::string> expected)
    : std::runtime_error("syntax error at line " + std::to_string(where.line) + ", column " +
                         std::to_string(where.column) + ": found " + found + ", expected " +
                         join_expected(expected)),
      where_(where),
      found_(std::move(found)),
      expected_(std::move(expected)) {}

UnknownIdentifierError::UnknownIdentifierError(SourceLocation where, std::string name)
    : std::runtime_error("unknown identifier '" + name + "' at line " + std::to_string(where.line) + ", column " +
                         std::to_string(where.column)),
      where_(where),
      name_(std::move(name)) {}

std::string Bindings::vehicle_name(int id) const {
  if (!vehicle_names.empty()) return vehicle_names.at(static_cast<std::size_t>(id));
  return "p" + std::to_string(id + 1);
}

std::string Bindings::segment_name(int id) const {
  if (static_cast<std::size_t>(id) < segments.size()) return segments[static_cast<std::size_t>(id)].name;
  return "b" + std::to_string(id + 1);
}

Formula parse(std::string_view text, const Bindings& bindings) {
  if (!(bindings.ts > 0.0)) throw std::invalid_argument("bindings sampling period must be positive");
  Parser p(Lexer(text).run(), bindings);
  return p.run();
}

std::string print(const Formula& phi, const Bindings& bindings) {
  std::ostringstream out;
  print_rec(phi, bindings, out);
  return out.str();
}

}  // namespace stlplan::stl
