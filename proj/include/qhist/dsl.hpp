// Copyright 2026 The qhist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/**
 * @file
 * The `.qh` scenario language.
 *
 *     system a: dim 2 labels 0 1;
 *     state psi on (a, b) = (|0,0> + |0,1> + |1,0>) / sqrt(3);
 *     unitary M on (b, coin_b, meter_b) { |0,Zset,rdy> -> |0,Zset,p+>; ... } complete;
 *     family f6: initial init;
 *       interval id; slot t1 { [0]_a = [a: |0>]; [1]_a = [a: |1>]; }
 *       interval M;  slot t3 { Z_b^+ = [coin_b, meter_b: |Zset,p+>]; }
 *     ;
 *     query sr: counterfactual family f6 actual t3=Z_b^- pivot t1 swap t2=X_b;
 *
 * Ket expressions combine basis kets, named states, real literals, `i`,
 * `sqrt(x)` and `tensor(k1, k2, ...)` with `+ - * /`. Basis kets take their
 * layout from context: the `on (...)` list of a state or unitary, or the
 * subsystem list of a projector `[subs: ket]`. Projector expressions are
 * sums, differences and products of `[subs: ket]`, `[state]` and `I`.
 *
 * Documents keep their expression trees so they can be printed back out;
 * printing and re-parsing gives the same values.
 */

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qhist/hilbert.hpp"
#include "qhist/histories.hpp"

namespace qhist::dsl {

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(Position pos, const std::string& message)
      : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
        pos_(pos),
        message_(message) {}

  Position position() const { return pos_; }
  std::size_t line() const { return pos_.line; }
  std::size_t column() const { return pos_.column; }
  const std::string& message() const { return message_; }

 private:
  Position pos_;
  std::string message_;
};

// ---------------------------------------------------------------------------
// Expression trees

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { number, basis, name, call, projector, negate, add, sub, mul, div };
  Kind kind = Kind::number;
  Position pos;
  double number = 0.0;
  std::vector<std::string> labels;  // basis labels, or the subsystems of a projector
  std::string name;                 // name or function
  std::vector<ExprPtr> args;
};

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::add:
    case Expr::Kind::sub:
      return 1;
    case Expr::Kind::mul:
    case Expr::Kind::div:
      return 2;
    case Expr::Kind::negate:
      return 3;
    default:
      return 4;
  }
}

inline std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

inline std::string format_literal(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

inline std::string print_expr(const Expr& e, int min_prec = 0) {
  std::string s;
  switch (e.kind) {
    case Expr::Kind::number:
      s = detail::format_literal(e.number);
      break;
    case Expr::Kind::basis:
      s = "|" + detail::join(e.labels, ",") + ">";
      break;
    case Expr::Kind::name:
      s = e.name;
      break;
    case Expr::Kind::call: {
      std::vector<std::string> args;
      for (const auto& a : e.args) args.push_back(print_expr(*a));
      s = e.name + "(" + detail::join(args, ", ") + ")";
      break;
    }
    case Expr::Kind::projector:
      s = "[" + (e.labels.empty() ? "" : detail::join(e.labels, ", ") + ": ") + print_expr(*e.args[0]) + "]";
      break;
    case Expr::Kind::negate:
      s = "-" + print_expr(*e.args[0], 3);
      break;
    case Expr::Kind::add:
      s = print_expr(*e.args[0], 1) + " + " + print_expr(*e.args[1], 2);
      break;
    case Expr::Kind::sub:
      s = print_expr(*e.args[0], 1) + " - " + print_expr(*e.args[1], 2);
      break;
    case Expr::Kind::mul:
      s = print_expr(*e.args[0], 2) + " * " + print_expr(*e.args[1], 3);
      break;
    case Expr::Kind::div:
      s = print_expr(*e.args[0], 2) + " / " + print_expr(*e.args[1], 3);
      break;
  }
  return detail::precedence(e) < min_prec ? "(" + s + ")" : s;
}

// ---------------------------------------------------------------------------
// Documents

struct SystemDecl {
  std::string name;
  std::vector<std::string> labels;
};

struct StateDecl {
  std::string name;
  std::vector<std::string> on;
  ExprPtr expr;
  Ket value;
};

struct RuleDecl {
  ExprPtr input;
  ExprPtr output;
};

struct UnitaryDecl {
  std::string name;
  std::vector<std::string> on;
  std::vector<RuleDecl> rules;
  Operator value;
};

struct EventDecl {
  std::string label;
  ExprPtr projector;
};

struct SlotDecl {
  std::string label;
  std::vector<std::string> interval;  // unitary names applied in order; empty means id
  std::vector<EventDecl> events;
};

struct FamilyDecl {
  std::string name;
  std::string initial;
  std::vector<SlotDecl> slots;
  std::optional<HistoryFamily> value;
};

struct QueryDecl {
  std::string name;
  std::string family;
  EventAssignment actual;  // an empty slot means the outcome slot
  std::string pivot;
  std::string swap_slot;
  std::string swap_event;
  std::string outcome;  // empty means the last slot
};

struct ScenarioDocument {
  std::vector<SystemDecl> systems;
  std::vector<StateDecl> states;
  std::vector<UnitaryDecl> unitaries;
  std::vector<FamilyDecl> families;
  std::vector<QueryDecl> queries;

  bool empty() const {
    return systems.empty() && states.empty() && unitaries.empty() && families.empty() && queries.empty();
  }

  template <class T>
  static const T* lookup(const std::vector<T>& v, std::string_view name) {
    for (const auto& d : v) {
      if (d.name == name) return &d;
    }
    return nullptr;
  }

  const SystemDecl* find_system(std::string_view n) const { return lookup(systems, n); }
  const StateDecl* find_state(std::string_view n) const { return lookup(states, n); }
  const UnitaryDecl* find_unitary(std::string_view n) const { return lookup(unitaries, n); }
  const FamilyDecl* find_family(std::string_view n) const { return lookup(families, n); }
  const QueryDecl* find_query(std::string_view n) const { return lookup(queries, n); }

  const HistoryFamily& family(std::string_view n) const {
    const auto* f = find_family(n);
    if (!f) throw HistoryError("no family named '" + std::string(n) + "'");
    return *f->value;
  }

  /// Layout of the named subsystems, in the given order.
  SystemLayout layout(const std::vector<std::string>& names) const {
    std::vector<Subsystem> subs;
    for (const auto& n : names) {
      const auto* s = find_system(n);
      if (!s) throw HilbertError("unknown subsystem '" + n + "'");
      subs.push_back(Subsystem{s->name, s->labels});
    }
    return SystemLayout(std::move(subs));
  }
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

struct Token {
  enum class Kind { end, ident, number, basis, punct };
  Kind kind = Kind::end;
  std::string text;
  Position pos;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Position position() const { return pos_at(offset_); }
  std::size_t offset() const { return offset_; }
  void reset(std::size_t offset) { offset_ = offset; }

  Token peek() {
    skip_space();
    return lex(offset_);
  }

  Token next() {
    Token t = peek();
    offset_ = t.end;
    return t;
  }

  /// A run of non-space characters up to one of `;={},#`.
  std::pair<std::string, Position> word() {
    skip_space();
    const Position p = position();
    std::size_t i = offset_;
    while (i < src_.size() && !is_space(src_[i]) && std::string_view(";={},#").find(src_[i]) == std::string_view::npos) ++i;
    std::string w(src_.substr(offset_, i - offset_));
    offset_ = i;
    return {w, p};
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
  static bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  Position pos_at(std::size_t offset) const {
    // Line starts are cached lazily so positions stay cheap on long files.
    while (scanned_ < offset && scanned_ < src_.size()) {
      if (src_[scanned_] == '\n') line_starts_.push_back(scanned_ + 1);
      ++scanned_;
    }
    std::size_t lo = 0;
    std::size_t hi = line_starts_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (line_starts_[mid] <= offset ? lo : hi) = mid;
    }
    return Position{lo + 1, offset - line_starts_[lo] + 1};
  }

  void skip_space() {
    while (offset_ < src_.size()) {
      const char c = src_[offset_];
      if (is_space(c)) {
        ++offset_;
      } else if (c == '#') {
        while (offset_ < src_.size() && src_[offset_] != '\n') ++offset_;
      } else {
        break;
      }
    }
  }

  Token lex(std::size_t i) const {
    Token t;
    t.pos = pos_at(i);
    t.begin = i;
    if (i >= src_.size()) {
      t.end = i;
      return t;
    }
    const char c = src_[i];
    std::size_t j = i;
    if (is_ident_start(c)) {
      while (j < src_.size() && is_ident(src_[j])) ++j;
      t.kind = Token::Kind::ident;
    } else if (is_digit(c) || (c == '.' && i + 1 < src_.size() && is_digit(src_[i + 1]))) {
      while (j < src_.size() && is_digit(src_[j])) ++j;
      if (j < src_.size() && src_[j] == '.') {
        ++j;
        while (j < src_.size() && is_digit(src_[j])) ++j;
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && is_digit(src_[k])) {
          while (k < src_.size() && is_digit(src_[k])) ++k;
          j = k;
        }
      }
      t.kind = Token::Kind::number;
    } else if (c == '|') {
      j = i + 1;
      while (j < src_.size() && src_[j] != '>' && src_[j] != '\n') ++j;
      if (j >= src_.size() || src_[j] != '>') throw ParseError(t.pos, "unterminated basis ket");
      ++j;
      t.kind = Token::Kind::basis;
    } else if (c == '-' && i + 1 < src_.size() && src_[i + 1] == '>') {
      j = i + 2;
      t.kind = Token::Kind::punct;
    } else if (std::string_view(":;,(){}[]=+-*/").find(c) != std::string_view::npos) {
      j = i + 1;
      t.kind = Token::Kind::punct;
    } else {
      throw ParseError(t.pos, std::string("unexpected character '") + c + "'");
    }
    t.text = std::string(src_.substr(i, j - i));
    t.end = j;
    return t;
  }

  std::string_view src_;
  std::size_t offset_ = 0;
  mutable std::vector<std::size_t> line_starts_{0};
  mutable std::size_t scanned_ = 0;
};

inline std::vector<std::string> split_basis(const std::string& token) {
  // token is "|l1,l2,...>"
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 1; i + 1 < token.size(); ++i) {
    const char c = token[i];
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '\t') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

using KetValue = std::variant<Complex, Ket>;

inline bool is_reserved(std::string_view n) {
  return n == "i" || n == "I" || n == "id" || n == "sqrt" || n == "tensor";
}

class Evaluator {
 public:
  explicit Evaluator(const ScenarioDocument& doc) : doc_(doc) {}

  /// `context` gives basis kets their layout; without one they are an error.
  KetValue ket(const Expr& e, const SystemLayout* context) const {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::number:
        return Complex(e.number, 0.0);
      case K::basis: {
        if (!context) throw ParseError(e.pos, "basis ket has no layout here; use a named state");
        if (e.labels.size() != context->size()) {
          throw ParseError(e.pos, "dimension mismatch: basis ket has " + std::to_string(e.labels.size()) +
                                      " labels but the layout has " + std::to_string(context->size()) +
                                      " subsystems");
        }
        try {
          return Ket::basis(*context, e.labels);
        } catch (const HilbertError& err) {
          throw ParseError(e.pos, err.what());
        }
      }
      case K::name: {
        if (e.name == "i") return Complex(0.0, 1.0);
        if (const auto* s = doc_.find_state(e.name)) return s->value;
        throw ParseError(e.pos, "unknown state '" + e.name + "'");
      }
      case K::call: {
        if (e.name == "sqrt") {
          if (e.args.size() != 1) throw ParseError(e.pos, "sqrt takes one argument");
          const Complex x = scalar(*e.args[0], context);
          if (x.imag() != 0.0 || x.real() < 0.0) throw ParseError(e.pos, "sqrt needs a non-negative real argument");
          return Complex(std::sqrt(x.real()), 0.0);
        }
        if (e.name == "tensor") {
          if (e.args.empty()) throw ParseError(e.pos, "tensor needs at least one argument");
          std::optional<Ket> acc;
          for (const auto& a : e.args) {
            Ket k = as_ket(*a, nullptr);
            if (!acc) {
              acc = std::move(k);
              continue;
            }
            try {
              acc = tensor(*acc, k);
            } catch (const HilbertError& err) {
              throw ParseError(a->pos, err.what());
            }
          }
          return *acc;
        }
        throw ParseError(e.pos, "unknown function '" + e.name + "'");
      }
      case K::projector:
        throw ParseError(e.pos, "projector where a ket or number was expected");
      case K::negate: {
        auto v = ket(*e.args[0], context);
        if (auto* c = std::get_if<Complex>(&v)) return -*c;
        return -std::get<Ket>(v);
      }
      case K::add:
      case K::sub: {
        auto l = ket(*e.args[0], context);
        auto r = ket(*e.args[1], context);
        const bool sub = e.kind == K::sub;
        if (l.index() != r.index()) throw ParseError(e.args[1]->pos, "cannot add a number and a ket");
        if (auto* c = std::get_if<Complex>(&l)) return sub ? *c - std::get<Complex>(r) : *c + std::get<Complex>(r);
        const Ket& a = std::get<Ket>(l);
        const Ket& b = std::get<Ket>(r);
        if (!(a.layout() == b.layout())) {
          throw ParseError(e.args[1]->pos, "dimension mismatch: operands live on different layouts");
        }
        return sub ? a - b : a + b;
      }
      case K::mul: {
        auto l = ket(*e.args[0], context);
        auto r = ket(*e.args[1], context);
        if (auto* a = std::get_if<Complex>(&l)) {
          if (auto* b = std::get_if<Complex>(&r)) return *a * *b;
          return std::get<Ket>(r) * *a;
        }
        if (auto* b = std::get_if<Complex>(&r)) return std::get<Ket>(l) * *b;
        throw ParseError(e.args[1]->pos, "cannot multiply two kets; use tensor()");
      }
      case K::div: {
        auto l = ket(*e.args[0], context);
        const Complex d = scalar(*e.args[1], context);
        if (d == Complex(0.0)) throw ParseError(e.args[1]->pos, "division by zero");
        if (auto* a = std::get_if<Complex>(&l)) return *a / d;
        return std::get<Ket>(l) / d;
      }
    }
    throw ParseError(e.pos, "bad expression");
  }

  Complex scalar(const Expr& e, const SystemLayout* context) const {
    auto v = ket(e, context);
    if (auto* c = std::get_if<Complex>(&v)) return *c;
    throw ParseError(e.pos, "expected a number");
  }

  Ket as_ket(const Expr& e, const SystemLayout* context) const {
    auto v = ket(e, context);
    if (auto* k = std::get_if<Ket>(&v)) return *k;
    throw ParseError(e.pos, "expected a ket");
  }

  /// A ket expression that must live on exactly `layout`.
  Ket ket_on(const Expr& e, const SystemLayout& layout) const {
    Ket k = as_ket(e, &layout);
    if (!(k.layout() == layout)) throw ParseError(e.pos, "dimension mismatch: ket does not live on the declared layout");
    return k;
  }

  Operator projector(const Expr& e, const SystemLayout& full) const {
    using K = Expr::Kind;
    switch (e.kind) {
      case K::name:
        if (e.name == "I") return Operator::identity(full);
        throw ParseError(e.pos, "expected a projector, found '" + e.name + "'");
      case K::projector: {
        try {
          Ket k = [&] {
            if (e.labels.empty()) return as_ket(*e.args[0], nullptr);
            const SystemLayout sub = doc_.layout(e.labels);
            return ket_on(*e.args[0], sub);
          }();
          return embed(projector_from_kets({k}), full);
        } catch (const HilbertError& err) {
          throw ParseError(e.pos, err.what());
        }
      }
      case K::add:
        return projector(*e.args[0], full) + projector(*e.args[1], full);
      case K::sub:
        return projector(*e.args[0], full) - projector(*e.args[1], full);
      case K::mul:
        return projector(*e.args[0], full) * projector(*e.args[1], full);
      default:
        throw ParseError(e.pos, "expected a projector expression");
    }
  }

 private:
  const ScenarioDocument& doc_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  ScenarioDocument parse() {
    while (true) {
      const Token t = lex_.peek();
      if (t.kind == Token::Kind::end) break;
      if (t.kind != Token::Kind::ident) throw ParseError(t.pos, "expected a declaration, found '" + t.text + "'");
      if (t.text == "system") {
        system();
      } else if (t.text == "state") {
        state();
      } else if (t.text == "unitary") {
        unitary();
      } else if (t.text == "family") {
        family();
      } else if (t.text == "query") {
        query();
      } else {
        throw ParseError(t.pos, "unknown declaration '" + t.text + "'");
      }
    }
    return std::move(doc_);
  }

 private:
  Token expect(std::string_view punct) {
    Token t = lex_.next();
    if (t.kind != Token::Kind::punct || t.text != punct) {
      throw ParseError(t.pos, "expected '" + std::string(punct) + "', found " + describe(t));
    }
    return t;
  }

  Token keyword(std::string_view kw) {
    Token t = lex_.next();
    if (t.kind != Token::Kind::ident || t.text != kw) {
      throw ParseError(t.pos, "expected '" + std::string(kw) + "', found " + describe(t));
    }
    return t;
  }

  Token ident() {
    Token t = lex_.next();
    if (t.kind != Token::Kind::ident) throw ParseError(t.pos, "expected a name, found " + describe(t));
    return t;
  }

  bool at(std::string_view text) {
    const Token t = lex_.peek();
    return (t.kind == Token::Kind::punct || t.kind == Token::Kind::ident) && t.text == text;
  }

  std::pair<std::string, Position> label(const char* what) {
    auto [w, p] = lex_.word();
    if (w.empty()) throw ParseError(p, std::string("expected ") + what);
    return {w, p};
  }

  static std::string describe(const Token& t) {
    return t.kind == Token::Kind::end ? "end of input" : "'" + t.text + "'";
  }

  Token fresh_name(const char* kind) {
    Token t = ident();
    if (is_reserved(t.text)) throw ParseError(t.pos, "'" + t.text + "' is reserved");
    const bool taken = (std::string_view(kind) == "system" && doc_.find_system(t.text)) ||
                       (std::string_view(kind) == "state" && doc_.find_state(t.text)) ||
                       (std::string_view(kind) == "unitary" && doc_.find_unitary(t.text)) ||
                       (std::string_view(kind) == "family" && doc_.find_family(t.text)) ||
                       (std::string_view(kind) == "query" && doc_.find_query(t.text));
    if (taken) throw ParseError(t.pos, std::string(kind) + " '" + t.text + "' is already declared");
    return t;
  }

  std::vector<std::string> subsystem_list() {
    expect("(");
    std::vector<std::string> out;
    while (true) {
      const Token t = ident();
      if (!doc_.find_system(t.text)) throw ParseError(t.pos, "unknown subsystem '" + t.text + "'");
      for (const auto& o : out) {
        if (o == t.text) throw ParseError(t.pos, "subsystem '" + t.text + "' listed twice");
      }
      out.push_back(t.text);
      if (at(")")) break;
      expect(",");
    }
    expect(")");
    return out;
  }

  void system() {
    keyword("system");
    const Token name = fresh_name("system");
    expect(":");
    keyword("dim");
    const Token n = lex_.next();
    if (n.kind != Token::Kind::number || n.text.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(n.pos, "expected an integer dimension");
    }
    const std::size_t dim = std::stoul(n.text);
    if (dim == 0) throw ParseError(n.pos, "dimension must be positive");
    std::vector<std::string> labels;
    Position labels_pos = n.pos;
    if (at("labels")) {
      labels_pos = keyword("labels").pos;
      while (!at(";")) {
        auto [w, p] = label("a basis label");
        for (const auto& l : labels) {
          if (l == w) throw ParseError(p, "duplicate basis label '" + w + "'");
        }
        labels.push_back(w);
      }
      if (labels.size() != dim) {
        throw ParseError(labels_pos, "dimension mismatch: dim " + std::to_string(dim) + " but " +
                                         std::to_string(labels.size()) + " labels");
      }
    } else {
      for (std::size_t k = 0; k < dim; ++k) labels.push_back(std::to_string(k));
    }
    expect(";");
    doc_.systems.push_back(SystemDecl{name.text, std::move(labels)});
  }

  void state() {
    keyword("state");
    const Token name = fresh_name("state");
    keyword("on");
    auto on = subsystem_list();
    expect("=");
    ExprPtr e = expr();
    expect(";");
    const SystemLayout layout = doc_.layout(on);
    Ket value = Evaluator(doc_).ket_on(*e, layout);
    doc_.states.push_back(StateDecl{name.text, std::move(on), std::move(e), std::move(value)});
  }

  void unitary() {
    const Position start = keyword("unitary").pos;
    const Token name = fresh_name("unitary");
    keyword("on");
    auto on = subsystem_list();
    const SystemLayout layout = doc_.layout(on);
    expect("{");
    std::vector<RuleDecl> rules;
    std::vector<Rule> values;
    const Evaluator ev(doc_);
    while (!at("}")) {
      ExprPtr in = expr();
      expect("->");
      ExprPtr out = expr();
      expect(";");
      values.push_back(Rule{ev.ket_on(*in, layout), ev.ket_on(*out, layout)});
      rules.push_back(RuleDecl{std::move(in), std::move(out)});
    }
    expect("}");
    keyword("complete");
    expect(";");
    std::optional<Operator> u;
    try {
      u = complete_unitary(values, layout);
    } catch (const HilbertError& err) {
      throw ParseError(start, "unitary '" + name.text + "': " + err.what());
    }
    doc_.unitaries.push_back(UnitaryDecl{name.text, std::move(on), std::move(rules), std::move(*u)});
  }

  void family() {
    const Position start = keyword("family").pos;
    const Token name = fresh_name("family");
    expect(":");
    keyword("initial");
    const Token init = ident();
    const StateDecl* initial = doc_.find_state(init.text);
    if (!initial) throw ParseError(init.pos, "unknown state '" + init.text + "'");
    expect(";");
    const SystemLayout& full = initial->value.layout();
    const Evaluator ev(doc_);

    FamilyDecl fam{name.text, init.text, {}, std::nullopt};
    std::vector<Operator> us;
    std::vector<TimeSlot> slots;
    while (!at(";")) {
      SlotDecl slot;
      std::optional<Operator> u;
      if (at("interval")) {
        keyword("interval");
        while (true) {
          const Token t = ident();
          if (t.text != "id") {
            const UnitaryDecl* ud = doc_.find_unitary(t.text);
            if (!ud) throw ParseError(t.pos, "unknown unitary '" + t.text + "'");
            try {
              Operator step = embed(ud->value, full);
              u = u ? step * *u : std::move(step);
            } catch (const HilbertError& err) {
              throw ParseError(t.pos, err.what());
            }
            slot.interval.push_back(t.text);
          }
          if (at(";")) break;
          expect(",");
        }
        expect(";");
      }
      const Position slot_pos = keyword("slot").pos;
      auto [slot_label, label_pos] = label("a slot label");
      for (const auto& s : fam.slots) {
        if (s.label == slot_label) throw ParseError(label_pos, "duplicate slot '" + slot_label + "'");
      }
      slot.label = slot_label;
      expect("{");
      std::vector<Event> events;
      while (!at("}")) {
        auto [ev_label, ev_pos] = label("an event label");
        expect("=");
        ExprPtr p = expr();
        expect(";");
        events.push_back(Event{ev_label, ev.projector(*p, full), false});
        slot.events.push_back(EventDecl{ev_label, std::move(p)});
      }
      expect("}");
      try {
        slots.emplace_back(slot.label, std::move(events));
      } catch (const HistoryError& err) {
        throw ParseError(slot_pos, err.what());
      }
      us.push_back(u ? std::move(*u) : Operator::identity(full));
      fam.slots.push_back(std::move(slot));
    }
    expect(";");
    try {
      fam.value.emplace(initial->value, std::move(us), std::move(slots), init.text);
    } catch (const std::exception& err) {
      throw ParseError(start, "family '" + name.text + "': " + err.what());
    }
    doc_.families.push_back(std::move(fam));
  }

  void query() {
    keyword("query");
    const Token name = fresh_name("query");
    expect(":");
    keyword("counterfactual");
    keyword("family");
    const Token fam_tok = ident();
    const FamilyDecl* fam = doc_.find_family(fam_tok.text);
    if (!fam) throw ParseError(fam_tok.pos, "unknown family '" + fam_tok.text + "'");
    const HistoryFamily& f = *fam->value;
    QueryDecl q;
    q.name = name.text;
    q.family = fam_tok.text;

    auto check_slot = [&](const std::string& s, Position p, bool allow_root) {
      if (allow_root && s == kRootSlot) return;
      if (!f.find_slot(s)) throw ParseError(p, "family '" + q.family + "' has no slot '" + s + "'");
    };
    auto check_event = [&](const std::string& s, const std::string& e, Position p) {
      const std::string slot = s.empty() ? f.slots().back().label() : s;
      if (!f.slots()[f.slot_index(slot)].find(e)) {
        throw ParseError(p, "slot '" + slot + "' has no event '" + e + "'");
      }
    };

    keyword("actual");
    std::vector<Position> actual_pos;
    while (true) {
      auto [w, p] = label("an event");
      if (at("=")) {
        expect("=");
        check_slot(w, p, false);
        auto [e, ep] = label("an event");
        q.actual.emplace_back(w, e);
        actual_pos.push_back(ep);
      } else {
        q.actual.emplace_back("", w);
        actual_pos.push_back(p);
      }
      if (!at(",")) break;
      expect(",");
    }
    keyword("pivot");
    auto [pivot, pp] = label("a slot");
    check_slot(pivot, pp, true);
    q.pivot = pivot;
    keyword("swap");
    auto [ss, sp] = label("a slot");
    check_slot(ss, sp, false);
    expect("=");
    auto [se, sep] = label("an event");
    check_event(ss, se, sep);
    q.swap_slot = ss;
    q.swap_event = se;
    if (at("outcome")) {
      keyword("outcome");
      auto [o, op] = label("a slot");
      check_slot(o, op, false);
      q.outcome = o;
    }
    for (std::size_t k = 0; k < q.actual.size(); ++k) {
      check_event(q.actual[k].first.empty() ? q.outcome : q.actual[k].first, q.actual[k].second, actual_pos[k]);
    }
    expect(";");
    doc_.queries.push_back(std::move(q));
  }

  // expr := term (('+'|'-') term)*
  ExprPtr expr() {
    ExprPtr lhs = term();
    while (at("+") || at("-")) {
      const Token op = lex_.next();
      ExprPtr rhs = term();
      lhs = binary(op.text == "+" ? Expr::Kind::add : Expr::Kind::sub, op.pos, lhs, rhs);
    }
    return lhs;
  }

  // term := unary (('*'|'/') unary)*
  ExprPtr term() {
    ExprPtr lhs = unary();
    while (at("*") || at("/")) {
      const Token op = lex_.next();
      ExprPtr rhs = unary();
      lhs = binary(op.text == "*" ? Expr::Kind::mul : Expr::Kind::div, op.pos, lhs, rhs);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (at("-")) {
      const Token op = lex_.next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::negate;
      e->pos = op.pos;
      e->args.push_back(unary());
      return e;
    }
    return atom();
  }

  ExprPtr atom() {
    const Token t = lex_.next();
    auto e = std::make_shared<Expr>();
    e->pos = t.pos;
    switch (t.kind) {
      case Token::Kind::number:
        e->kind = Expr::Kind::number;
        e->number = std::stod(t.text);
        return e;
      case Token::Kind::basis:
        e->kind = Expr::Kind::basis;
        e->labels = split_basis(t.text);
        for (const auto& l : e->labels) {
          if (l.empty()) throw ParseError(t.pos, "empty label in basis ket");
        }
        return e;
      case Token::Kind::ident:
        if (at("(")) {
          expect("(");
          e->kind = Expr::Kind::call;
          e->name = t.text;
          if (!at(")")) {
            while (true) {
              e->args.push_back(expr());
              if (at(")")) break;
              expect(",");
            }
          }
          expect(")");
          return e;
        }
        e->kind = Expr::Kind::name;
        e->name = t.text;
        return e;
      case Token::Kind::punct:
        if (t.text == "(") {
          ExprPtr inner = expr();
          expect(")");
          return inner;
        }
        if (t.text == "[") {
          e->kind = Expr::Kind::projector;
          // "[a, b: ket]" or "[ket]"
          const std::size_t save = lex_.offset();
          bool has_subs = false;
          if (lex_.peek().kind == Token::Kind::ident) {
            while (true) {
              const Token id = lex_.next();
              if (id.kind != Token::Kind::ident) break;
              const Token sep = lex_.peek();
              if (sep.text == ":") {
                has_subs = true;
                break;
              }
              if (sep.text != ",") break;
              lex_.next();
            }
          }
          lex_.reset(save);
          if (has_subs) {
            while (true) {
              const Token id = ident();
              if (!doc_.find_system(id.text)) throw ParseError(id.pos, "unknown subsystem '" + id.text + "'");
              e->labels.push_back(id.text);
              if (at(":")) break;
              expect(",");
            }
            expect(":");
          }
          e->args.push_back(expr());
          expect("]");
          return e;
        }
        break;
      case Token::Kind::end:
        break;
    }
    throw ParseError(t.pos, "expected an expression, found " + describe(t));
  }

  static ExprPtr binary(Expr::Kind k, Position pos, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->pos = pos;
    e->args = {std::move(a), std::move(b)};
    return e;
  }

  Lexer lex_;
  ScenarioDocument doc_;
};

}  // namespace detail

inline ScenarioDocument parse_scenario(std::string_view text) { return detail::Parser(text).parse(); }

inline ScenarioDocument load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// ---------------------------------------------------------------------------
// Printing and comparison

inline std::string print_scenario(const ScenarioDocument& doc) {
  using detail::join;
  std::string out;
  for (const auto& s : doc.systems) {
    out += "system " + s.name + ": dim " + std::to_string(s.labels.size()) + " labels " + join(s.labels, " ") + ";\n";
  }
  if (!doc.systems.empty()) out += "\n";
  for (const auto& s : doc.states) {
    out += "state " + s.name + " on (" + join(s.on, ", ") + ") = " + print_expr(*s.expr) + ";\n";
  }
  if (!doc.states.empty()) out += "\n";
  for (const auto& u : doc.unitaries) {
    out += "unitary " + u.name + " on (" + join(u.on, ", ") + ") {\n";
    for (const auto& r : u.rules) out += "  " + print_expr(*r.input) + " -> " + print_expr(*r.output) + ";\n";
    out += "} complete;\n\n";
  }
  for (const auto& f : doc.families) {
    out += "family " + f.name + ": initial " + f.initial + ";\n";
    for (const auto& s : f.slots) {
      out += "  interval " + (s.interval.empty() ? std::string("id") : join(s.interval, ", ")) + ";\n";
      out += "  slot " + s.label + " {\n";
      for (const auto& e : s.events) out += "    " + e.label + " = " + print_expr(*e.projector) + ";\n";
      out += "  }\n";
    }
    out += ";\n\n";
  }
  for (const auto& q : doc.queries) {
    std::vector<std::string> actual;
    for (const auto& [s, e] : q.actual) actual.push_back(s.empty() ? e : s + "=" + e);
    out += "query " + q.name + ": counterfactual family " + q.family + " actual " + join(actual, ", ") + " pivot " +
           q.pivot + " swap " + q.swap_slot + "=" + q.swap_event;
    if (!q.outcome.empty()) out += " outcome " + q.outcome;
    out += ";\n";
  }
  return out;
}

namespace detail {

inline bool close(const Matrix& a, const Matrix& b, double tol) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || (a - b).cwiseAbs().maxCoeff() <= tol);
}

}  // namespace detail

/// Same declarations with the same layouts, and values that agree entrywise
/// within `tol`.
inline bool equivalent(const ScenarioDocument& x, const ScenarioDocument& y, double tol = 1e-12) {
  if (x.systems.size() != y.systems.size() || x.states.size() != y.states.size() ||
      x.unitaries.size() != y.unitaries.size() || x.families.size() != y.families.size() ||
      x.queries.size() != y.queries.size()) {
    return false;
  }
  for (std::size_t i = 0; i < x.systems.size(); ++i) {
    if (x.systems[i].name != y.systems[i].name || x.systems[i].labels != y.systems[i].labels) return false;
  }
  for (std::size_t i = 0; i < x.states.size(); ++i) {
    const auto& a = x.states[i];
    const auto& b = y.states[i];
    if (a.name != b.name || !(a.value.layout() == b.value.layout())) return false;
    if (!detail::close(a.value.amplitudes(), b.value.amplitudes(), tol)) return false;
  }
  for (std::size_t i = 0; i < x.unitaries.size(); ++i) {
    const auto& a = x.unitaries[i];
    const auto& b = y.unitaries[i];
    if (a.name != b.name || !(a.value.layout() == b.value.layout())) return false;
    if (!detail::close(a.value.matrix(), b.value.matrix(), tol)) return false;
  }
  for (std::size_t i = 0; i < x.families.size(); ++i) {
    const auto& a = x.families[i];
    const auto& b = y.families[i];
    if (a.name != b.name || a.initial != b.initial || a.slots.size() != b.slots.size()) return false;
    const HistoryFamily& fa = *a.value;
    const HistoryFamily& fb = *b.value;
    if (!(fa.layout() == fb.layout())) return false;
    for (std::size_t s = 0; s < fa.slots().size(); ++s) {
      const auto& sa = fa.slots()[s];
      const auto& sb = fb.slots()[s];
      if (sa.label() != sb.label() || sa.labels() != sb.labels()) return false;
      if (!detail::close(fa.unitaries()[s].matrix(), fb.unitaries()[s].matrix(), tol)) return false;
      for (std::size_t e = 0; e < sa.size(); ++e) {
        if (!detail::close(sa.events()[e].projector.matrix(), sb.events()[e].projector.matrix(), tol)) return false;
      }
    }
  }
  for (std::size_t i = 0; i < x.queries.size(); ++i) {
    const auto& a = x.queries[i];
    const auto& b = y.queries[i];
    if (a.name != b.name || a.family != b.family || a.actual != b.actual || a.pivot != b.pivot ||
        a.swap_slot != b.swap_slot || a.swap_event != b.swap_event || a.outcome != b.outcome) {
      return false;
    }
  }
  return true;
}

}  // namespace qhist::dsl
