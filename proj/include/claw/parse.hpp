#pragma once

// Text grammar for jet expressions:
//   t, x, u, u_<t|x>+ (order-insensitive), rationals p/q, + - * / ^, parentheses,
//   exp(a), sin(a), cos(a) of affine forms in u, pow(a, r), postfix (e)_x / (e)_t
//   for total derivatives, and the internal atoms L{arity|coords} and G{a,b}.

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "claw/calculus.hpp"

namespace claw {

using ParamMap = std::map<std::string, Rational>;

namespace detail {

inline std::string render_coordinate(const JetCoordinate& v) {
  switch (v.kind) {
    case JetCoordinate::Kind::IndepT: return "t";
    case JetCoordinate::Kind::IndepX: return "x";
    case JetCoordinate::Kind::Derivative: break;
  }
  if (v.t_order == 0 && v.x_order == 0) return "u";
  return "u_" + std::string(static_cast<std::size_t>(v.t_order), 't') +
         std::string(static_cast<std::size_t>(v.x_order), 'x');
}

inline std::string render_affine(const Rational& a, const Rational& b) {
  std::string s;
  if (is_zero(a)) return to_string(b);
  if (a == 1)
    s = "u";
  else if (a == -1)
    s = "-u";
  else
    s = to_string(a) + "*u";
  if (sgn(b) > 0) s += " + " + to_string(b);
  if (sgn(b) < 0) s += " - " + to_string(Rational(-b));
  return s;
}

inline std::string with_power(std::string base, int p) {
  if (p == 1) return base;
  return base + "^" + std::to_string(p);
}

inline std::string render_atom(const Atom& a, int p) {
  if (const auto* k = std::get_if<KernelAtom>(&a)) {
    switch (k->family) {
      case KernelAtom::Family::Exp: return with_power("exp(" + render_affine(k->slope, k->offset) + ")", p);
      case KernelAtom::Family::Sin: return with_power("sin(" + render_affine(k->slope, k->offset) + ")", p);
      case KernelAtom::Family::Cos: return with_power("cos(" + render_affine(k->slope, k->offset) + ")", p);
      case KernelAtom::Family::Pow:
        return with_power("pow(" + render_affine(k->slope, k->offset) + ", " + to_string(k->exponent) + ")", p);
    }
  }
  if (const auto* ud = std::get_if<UnknownDerivative>(&a)) {
    std::string s = "L{";
    for (std::size_t i = 0; i < ud->arity.size(); ++i) s += (i ? "," : "") + render_coordinate(ud->arity[i]);
    bool first = true;
    for (std::size_t i = 0; i < ud->arity.size(); ++i)
      for (int j = 0; j < ud->orders[i]; ++j) {
        s += first ? "|" : ",";
        first = false;
        s += render_coordinate(ud->arity[i]);
      }
    return with_power(s + "}", p);
  }
  const auto& g = std::get<EquationMarker>(a);
  return with_power("G{" + std::to_string(g.t_order) + "," + std::to_string(g.x_order) + "}", p);
}

}  // namespace detail

/// Deterministic rendering in the parser grammar.
inline std::string render(const JetExpression& e) {
  if (e.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : e.terms()) {
    Rational mag = abs(c);
    if (first) {
      if (sgn(c) < 0) out += "-";
    } else {
      out += sgn(c) < 0 ? " - " : " + ";
    }
    first = false;
    std::string factors;
    for (const auto& [v, p] : m.coords) {
      if (!factors.empty()) factors += "*";
      factors += detail::with_power(detail::render_coordinate(v), p);
    }
    for (const auto& [a, p] : m.atoms) {
      if (!factors.empty()) factors += "*";
      factors += detail::render_atom(a, p);
    }
    if (factors.empty())
      out += to_string(mag);
    else if (mag == 1)
      out += factors;
    else
      out += to_string(mag) + "*" + factors;
  }
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const JetExpression& e) { return os << render(e); }

namespace detail {

class Parser {
public:
  Parser(std::string_view text, const ParamMap& params) : s_(text), params_(params) {}

  JetExpression parse_all() {
    JetExpression e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t at) const { throw ParseError(what, at); }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char ch) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char ch) {
    if (!accept(ch)) fail(std::string("expected '") + ch + "'");
  }

  JetExpression expr() {
    JetExpression e = term();
    for (;;) {
      if (accept('+'))
        e += term();
      else if (accept('-'))
        e -= term();
      else
        return e;
    }
  }

  JetExpression term() {
    JetExpression e = unary();
    for (;;) {
      if (accept('*')) {
        e *= unary();
      } else {
        skip();
        const std::size_t at = pos_;
        if (!accept('/')) return e;
        e *= invert(unary(), at);
      }
    }
  }

  JetExpression unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  JetExpression power() {
    JetExpression base = postfix();
    skip();
    const std::size_t at = pos_;
    if (!accept('^')) return base;
    const Rational r = exponent();
    return raise(base, r, at);
  }

  Rational exponent() {
    if (accept('(')) {
      Rational r = constant_value(expr(), pos_);
      expect(')');
      return r;
    }
    bool neg = accept('-');
    skip();
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      const std::size_t at = pos_;
      const Rational r = constant_value(primary(), at);
      return neg ? Rational(-r) : r;
    }
    // Unparenthesized exponents are integers, so u^3/2 reads as (u^3)/2.
    Rational r = number();
    return neg ? Rational(-r) : r;
  }

  JetExpression postfix() {
    JetExpression e = primary();
    for (;;) {
      skip();
      if (pos_ + 1 < s_.size() && s_[pos_] == '_' && (s_[pos_ + 1] == 'x' || s_[pos_ + 1] == 't')) {
        ++pos_;
        while (pos_ < s_.size() && (s_[pos_] == 'x' || s_[pos_] == 't')) {
          e = total_derivative(e, s_[pos_] == 't' ? Direction::T : Direction::X);
          ++pos_;
        }
        continue;
      }
      return e;
    }
  }

  Rational number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) fail("expected number");
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
      fail_at("non-rational literal", start);
    Rational r(std::string(s_.substr(start, pos_ - start)));
    return r;
  }

  std::string identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  static std::optional<JetCoordinate> coordinate_name(const std::string& id) {
    if (id == "t") return JetCoordinate::t();
    if (id == "x") return JetCoordinate::x();
    if (id == "u") return JetCoordinate::u();
    if (id.size() < 3 || id.rfind("u_", 0) != 0) return std::nullopt;
    int nt = 0, nx = 0;
    for (std::size_t i = 2; i < id.size(); ++i) {
      if (id[i] == 't')
        ++nt;
      else if (id[i] == 'x')
        ++nx;
      else
        return std::nullopt;
    }
    return JetCoordinate::u(nt, nx);
  }

  JetExpression primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char ch = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(ch))) return JetExpression(number());
    if (ch == '(') {
      ++pos_;
      JetExpression e = expr();
      expect(')');
      return e;
    }
    if (!std::isalpha(static_cast<unsigned char>(ch))) fail(std::string("unexpected character '") + ch + "'");
    const std::size_t start = pos_;
    const std::string id = identifier();
    if (id == "L" && accept('{')) return unknown_atom(start);
    if (id == "G" && accept('{')) return marker_atom();
    if (id == "exp" || id == "sin" || id == "cos" || id == "pow") {
      expect('(');
      const std::size_t arg_at = pos_;
      JetExpression arg = expr();
      if (id == "pow") {
        expect(',');
        const std::size_t r_at = pos_;
        const Rational r = constant_value(expr(), r_at);
        expect(')');
        return raise(arg, r, arg_at);
      }
      expect(')');
      return apply_function(id, arg, arg_at);
    }
    if (auto v = coordinate_name(id)) return JetExpression::coordinate(*v);
    if (auto it = params_.find(id); it != params_.end()) return JetExpression(it->second);
    fail_at("unknown symbol '" + id + "'", start);
  }

  JetExpression unknown_atom(std::size_t start) {
    std::vector<JetCoordinate> arity;
    std::vector<JetCoordinate> diffs;
    bool in_diffs = false;
    for (;;) {
      skip();
      const std::size_t at = pos_;
      const std::string id = identifier();
      auto v = coordinate_name(id);
      if (!v) fail_at("bad coordinate in unknown atom", at);
      (in_diffs ? diffs : arity).push_back(*v);
      if (accept(',')) continue;
      if (!in_diffs && accept('|')) {
        in_diffs = true;
        continue;
      }
      expect('}');
      break;
    }
    UnknownDerivative ud = UnknownDerivative::function_of(arity);
    if (ud.arity.size() != arity.size()) fail_at("repeated coordinate in unknown atom", start);
    for (const auto& d : diffs) {
      auto next = ud.differentiated(d);
      if (!next) fail_at("unknown atom differentiated by a coordinate outside its arity", start);
      ud = *next;
    }
    return JetExpression::atom(ud);
  }

  JetExpression marker_atom() {
    const Rational a = number();
    expect(',');
    const Rational b = number();
    expect('}');
    return JetExpression::atom(EquationMarker{static_cast<int>(a.get_num().get_si()), static_cast<int>(b.get_num().get_si())});
  }

  Rational constant_value(const JetExpression& e, std::size_t at) const {
    auto c = e.constant_value();
    if (!c) fail_at("expected a rational constant", at);
    return *c;
  }

  // Returns (slope, offset) when e == slope*u + offset.
  static std::optional<std::pair<Rational, Rational>> affine_in_u(const JetExpression& e) {
    Rational a = 0, b = 0;
    for (const auto& [m, c] : e.terms()) {
      if (m.empty()) {
        b = c;
      } else if (m.atoms.empty() && m.coords.size() == 1 && m.coords[0].first == JetCoordinate::u() &&
                 m.coords[0].second == 1) {
        a = c;
      } else {
        return std::nullopt;
      }
    }
    return std::pair(a, b);
  }

  JetExpression apply_function(const std::string& id, const JetExpression& arg, std::size_t at) const {
    auto aff = affine_in_u(arg);
    if (!aff) fail_at(id + " argument must be affine in u", at);
    const auto& [a, b] = *aff;
    if (id == "exp") {
      if (is_zero(a) && is_zero(b)) return JetExpression(1);
      return JetExpression::atom(KernelAtom::exp(a, b));
    }
    if (id == "sin") return JetExpression::atom(KernelAtom::sin(a, b));
    return JetExpression::atom(KernelAtom::cos(a, b));
  }

  // Multiplicative inverse for expressions that have one inside the kernel.
  JetExpression invert(const JetExpression& d, std::size_t at) const {
    if (auto c = d.constant_value()) {
      if (is_zero(*c)) fail_at("division by zero", at);
      return JetExpression(1 / *c);
    }
    if (d.size() == 1) {
      const auto& [m, c] = *d.terms().begin();
      Monomial inv;
      for (const auto& [v, p] : m.coords) {
        if (!(v == JetCoordinate::u())) fail_at("division by a jet coordinate other than u", at);
        inv.coords.emplace_back(v, -p);
      }
      for (const auto& [a, p] : m.atoms) {
        const auto* k = std::get_if<KernelAtom>(&a);
        if (k == nullptr || k->family == KernelAtom::Family::Sin || k->family == KernelAtom::Family::Cos)
          fail_at("division by a non-invertible factor", at);
        if (k->family == KernelAtom::Family::Exp)
          inv.atoms.emplace_back(KernelAtom::exp(-k->slope * p, -k->offset * p), 1);
        else
          inv.atoms.emplace_back(KernelAtom{KernelAtom::Family::Pow, 1, k->offset, -k->exponent * p}, 1);
      }
      return JetExpression::from_raw(inv, 1 / c);
    }
    if (auto aff = affine_in_u(d); aff && !is_zero(aff->first)) {
      const auto& [a, b] = *aff;
      return JetExpression::atom(KernelAtom::pow(-b / a, -1)) * (1 / a);
    }
    fail_at("division by a non-invertible expression", at);
  }

  JetExpression raise(const JetExpression& base, const Rational& r, std::size_t at) const {
    if (is_integer(r)) {
      const long k = r.get_num().get_si();
      if (k >= 0) return base.pow(static_cast<unsigned>(k));
      return invert(base, at).pow(static_cast<unsigned>(-k));
    }
    if (auto c = base.constant_value()) {
      if (auto v = exact_rational_pow(*c, r)) return JetExpression(*v);
      fail_at("irrational constant power", at);
    }
    if (auto aff = affine_in_u(base); aff && !is_zero(aff->first)) {
      const auto& [a, b] = *aff;
      auto scale = exact_rational_pow(a, r);
      if (!scale) fail_at("irrational coefficient in fractional power", at);
      return JetExpression::atom(KernelAtom::pow(-b / a, r)) * *scale;
    }
    if (base.size() == 1) {
      const auto& [m, c] = *base.terms().begin();
      if (m.coords.empty() && m.atoms.size() == 1 && m.atoms[0].second == 1) {
        if (const auto* k = std::get_if<KernelAtom>(&m.atoms[0].first)) {
          auto scale = exact_rational_pow(c, r);
          if (!scale) fail_at("irrational coefficient in fractional power", at);
          if (k->family == KernelAtom::Family::Exp)
            return JetExpression::atom(KernelAtom::exp(k->slope * r, k->offset * r)) * *scale;
          if (k->family == KernelAtom::Family::Pow)
            return JetExpression::atom(KernelAtom{KernelAtom::Family::Pow, 1, k->offset, k->exponent * r}) * *scale;
        }
      }
    }
    fail_at("fractional power of an unsupported base", at);
  }

  std::string_view s_;
  const ParamMap& params_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline JetExpression parse_expression(std::string_view text, const ParamMap& params = {}) {
  return detail::Parser(text, params).parse_all();
}

/// Parses "name=value" with value a rational constant expression.
inline std::pair<std::string, Rational> parse_param(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ParseError("expected name=value", 0);
  std::string name(text.substr(0, eq));
  auto value = parse_expression(text.substr(eq + 1)).constant_value();
  if (!value) throw ParseError("parameter value must be a rational constant", eq + 1);
  return {std::move(name), *value};
}

}  // namespace claw
