#pragma once

// Exact expressions over jet coordinates (t, x, u and its partial derivatives)
// with rational coefficients and kernel atoms exp/sin/cos/pow of affine forms in u.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <variant>
#include <vector>

#include "claw/error.hpp"
#include "claw/rational.hpp"

namespace claw {

struct JetCoordinate {
  enum class Kind : std::uint8_t { IndepT = 0, IndepX = 1, Derivative = 2 };

  Kind kind = Kind::Derivative;
  int t_order = 0;
  int x_order = 0;

  static constexpr JetCoordinate t() { return {Kind::IndepT, 0, 0}; }
  static constexpr JetCoordinate x() { return {Kind::IndepX, 0, 0}; }
  static constexpr JetCoordinate u(int t_order = 0, int x_order = 0) {
    return {Kind::Derivative, t_order, x_order};
  }

  constexpr bool is_derivative() const { return kind == Kind::Derivative; }
  constexpr int total_order() const { return is_derivative() ? t_order + x_order : 0; }

  /// D_t / D_x applied to a dependent coordinate.
  constexpr JetCoordinate raised(bool in_t) const {
    return in_t ? u(t_order + 1, x_order) : u(t_order, x_order + 1);
  }

  friend constexpr bool operator==(const JetCoordinate&, const JetCoordinate&) = default;

  // Canonical order: total order, then t_order, then kind.
  friend constexpr std::strong_ordering operator<=>(const JetCoordinate& a, const JetCoordinate& b) {
    if (auto c = a.total_order() <=> b.total_order(); c != 0) return c;
    if (auto c = a.t_order <=> b.t_order; c != 0) return c;
    return a.kind <=> b.kind;
  }
};

/// Order used by integration-by-parts descent: total order, then x_order.
inline bool descent_less(const JetCoordinate& a, const JetCoordinate& b) {
  if (a.total_order() != b.total_order()) return a.total_order() < b.total_order();
  if (a.x_order != b.x_order) return a.x_order < b.x_order;
  return a < b;
}

/// exp/sin/cos of (slope*u + offset), or pow(u + offset, exponent).
struct KernelAtom {
  enum class Family : std::uint8_t { Exp = 0, Sin = 1, Cos = 2, Pow = 3 };

  Family family = Family::Exp;
  Rational slope = 1;
  Rational offset = 0;
  Rational exponent = 0;

  static KernelAtom exp(Rational slope, Rational offset = 0) {
    return {Family::Exp, std::move(slope), std::move(offset), 0};
  }
  static KernelAtom sin(Rational slope, Rational offset = 0) {
    return {Family::Sin, std::move(slope), std::move(offset), 0};
  }
  static KernelAtom cos(Rational slope, Rational offset = 0) {
    return {Family::Cos, std::move(slope), std::move(offset), 0};
  }
  /// (u - center)^exponent
  static KernelAtom pow(const Rational& center, Rational exponent) {
    return {Family::Pow, 1, -center, std::move(exponent)};
  }

  Rational center() const { return -offset; }

  friend bool operator==(const KernelAtom& a, const KernelAtom& b) {
    return a.family == b.family && a.slope == b.slope && a.offset == b.offset &&
           a.exponent == b.exponent;
  }
  friend bool operator<(const KernelAtom& a, const KernelAtom& b) {
    if (a.family != b.family) return a.family < b.family;
    if (a.slope != b.slope) return a.slope < b.slope;
    if (a.offset != b.offset) return a.offset < b.offset;
    return a.exponent < b.exponent;
  }
};

/// Partial derivative of an unknown multiplier with declared dependence `arity`;
/// orders[k] counts derivatives with respect to arity[k].
struct UnknownDerivative {
  std::vector<JetCoordinate> arity;
  std::vector<int> orders;

  static UnknownDerivative function_of(std::vector<JetCoordinate> arity) {
    std::sort(arity.begin(), arity.end());
    arity.erase(std::unique(arity.begin(), arity.end()), arity.end());
    std::vector<int> orders(arity.size(), 0);
    return {std::move(arity), std::move(orders)};
  }

  std::optional<UnknownDerivative> differentiated(const JetCoordinate& v) const {
    auto it = std::find(arity.begin(), arity.end(), v);
    if (it == arity.end()) return std::nullopt;
    UnknownDerivative d = *this;
    ++d.orders[static_cast<std::size_t>(it - arity.begin())];
    return d;
  }

  friend bool operator==(const UnknownDerivative&, const UnknownDerivative&) = default;
  friend bool operator<(const UnknownDerivative& a, const UnknownDerivative& b) {
    if (a.arity != b.arity) return a.arity < b.arity;
    return a.orders < b.orders;
  }
};

/// Placeholder for D_t^t_order D_x^x_order G, used when splitting off the solution space.
struct EquationMarker {
  int t_order = 0;
  int x_order = 0;

  friend bool operator==(const EquationMarker&, const EquationMarker&) = default;
  friend bool operator<(const EquationMarker& a, const EquationMarker& b) {
    return std::pair(a.t_order, a.x_order) < std::pair(b.t_order, b.x_order);
  }
};

using Atom = std::variant<KernelAtom, UnknownDerivative, EquationMarker>;

struct Monomial {
  std::vector<std::pair<JetCoordinate, int>> coords;
  std::vector<std::pair<Atom, int>> atoms;

  bool empty() const { return coords.empty() && atoms.empty(); }

  int power_of(const JetCoordinate& v) const {
    for (const auto& [c, p] : coords)
      if (c == v) return p;
    return 0;
  }

  friend bool operator==(const Monomial&, const Monomial&) = default;
  friend bool operator<(const Monomial& a, const Monomial& b) {
    if (a.coords != b.coords) return a.coords < b.coords;
    return a.atoms < b.atoms;
  }
};

class JetExpression;

namespace detail {

using TermMap = std::map<Monomial, Rational>;

inline void add_canonical(TermMap& out, Monomial m, const Rational& c) {
  if (is_zero(c)) return;
  auto [it, inserted] = out.try_emplace(std::move(m), c);
  if (!inserted) {
    it->second += c;
    if (is_zero(it->second)) out.erase(it);
  }
}

// Applies every rewrite rule to a raw product of factors and accumulates the
// resulting canonical terms. Raw factors may be unsorted and repeated.
inline void canonicalize_into(TermMap& out, std::vector<std::pair<JetCoordinate, int>> coords,
                              std::vector<std::pair<Atom, int>> atoms, Rational coef) {
  if (is_zero(coef)) return;

  std::sort(coords.begin(), coords.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<JetCoordinate, int>> merged;
  merged.reserve(coords.size());
  for (auto& [c, p] : coords) {
    if (p == 0) continue;
    if (!merged.empty() && merged.back().first == c)
      merged.back().second += p;
    else
      merged.emplace_back(c, p);
  }
  std::erase_if(merged, [](const auto& e) { return e.second == 0; });
  coords = std::move(merged);

  Rational exp_slope = 0, exp_offset = 0;
  bool has_exp = false;
  std::map<Rational, Rational> pow_groups;  // offset -> total exponent

  for (auto it = coords.begin(); it != coords.end();) {
    if (it->second > 0) {
      ++it;
    } else if (it->first == JetCoordinate::u()) {
      pow_groups[Rational(0)] += it->second;
      it = coords.erase(it);
    } else {
      throw DomainError("negative power of a jet coordinate other than u");
    }
  }
  std::map<KernelAtom, int> trig;
  std::map<Atom, int> others;

  for (auto& [atom, p] : atoms) {
    if (p == 0) continue;
    if (const auto* k = std::get_if<KernelAtom>(&atom)) {
      switch (k->family) {
        case KernelAtom::Family::Exp:
          has_exp = true;
          exp_slope += p * k->slope;
          exp_offset += p * k->offset;
          break;
        case KernelAtom::Family::Pow:
          pow_groups[k->offset] += p * k->exponent;
          break;
        case KernelAtom::Family::Sin:
        case KernelAtom::Family::Cos: {
          KernelAtom a = *k;
          if (sgn(a.slope) < 0 || (sgn(a.slope) == 0 && sgn(a.offset) < 0)) {
            a.slope = -a.slope;
            a.offset = -a.offset;
            if (a.family == KernelAtom::Family::Sin && (p % 2 != 0)) coef = -coef;
          }
          if (sgn(a.slope) == 0 && sgn(a.offset) == 0) {
            if (a.family == KernelAtom::Family::Sin) return;  // sin(0) = 0
            break;                                             // cos(0) = 1
          }
          a.exponent = 0;
          trig[a] += p;
          break;
        }
      }
    } else {
      others[atom] += p;
    }
  }

  // A pow group that collapsed to a nonnegative integer power expands binomially.
  for (auto it = pow_groups.begin(); it != pow_groups.end(); ++it) {
    const Rational& r = it->second;
    if (is_zero(r)) continue;
    if (is_integer(r) && sgn(r) > 0) {
      const unsigned long m = r.get_num().get_ui();
      const Rational offset = it->first;
      std::vector<std::pair<Atom, int>> rest_atoms;
      for (auto jt = pow_groups.begin(); jt != pow_groups.end(); ++jt)
        if (jt != it && !is_zero(jt->second))
          rest_atoms.emplace_back(KernelAtom{KernelAtom::Family::Pow, 1, jt->first, jt->second}, 1);
      if (has_exp) rest_atoms.emplace_back(KernelAtom::exp(exp_slope, exp_offset), 1);
      for (const auto& [a, q] : trig) rest_atoms.emplace_back(a, q);
      for (const auto& [a, q] : others) rest_atoms.emplace_back(a, q);
      // (u + offset)^m = sum_j C(m,j) offset^(m-j) u^j
      for (unsigned long j = 0; j <= m; ++j) {
        Rational c = coef * Rational(binomial(m, j)) * rational_pow(offset, static_cast<long>(m - j));
        if (is_zero(c)) continue;
        auto cs = coords;
        if (j > 0) cs.emplace_back(JetCoordinate::u(), static_cast<int>(j));
        canonicalize_into(out, std::move(cs), rest_atoms, std::move(c));
      }
      return;
    }
  }
  std::erase_if(pow_groups, [](const auto& e) { return is_zero(e.second); });

  // Absorb u^k into the first pow group so that u and (u + b)^r never share a term.
  if (!pow_groups.empty()) {
    auto u_it = std::find_if(coords.begin(), coords.end(),
                             [](const auto& e) { return e.first == JetCoordinate::u(); });
    if (u_it != coords.end()) {
      const unsigned long k = static_cast<unsigned long>(u_it->second);
      auto rest_coords = coords;
      rest_coords.erase(rest_coords.begin() + (u_it - coords.begin()));
      const Rational offset = pow_groups.begin()->first;
      const Rational r = pow_groups.begin()->second;
      std::vector<std::pair<Atom, int>> rest_atoms;
      for (auto jt = std::next(pow_groups.begin()); jt != pow_groups.end(); ++jt)
        rest_atoms.emplace_back(KernelAtom{KernelAtom::Family::Pow, 1, jt->first, jt->second}, 1);
      if (has_exp) rest_atoms.emplace_back(KernelAtom::exp(exp_slope, exp_offset), 1);
      for (const auto& [a, q] : trig) rest_atoms.emplace_back(a, q);
      for (const auto& [a, q] : others) rest_atoms.emplace_back(a, q);
      // u^k = ((u + b) - b)^k
      for (unsigned long j = 0; j <= k; ++j) {
        Rational c = coef * Rational(binomial(k, j)) * rational_pow(-offset, static_cast<long>(k - j));
        if (is_zero(c)) continue;
        auto as = rest_atoms;
        as.emplace_back(KernelAtom{KernelAtom::Family::Pow, 1, offset, r + static_cast<long>(j)}, 1);
        canonicalize_into(out, rest_coords, std::move(as), std::move(c));
      }
      return;
    }
  }

  // sin^2 = 1 - cos^2 (same argument).
  for (const auto& [a, p] : trig) {
    if (a.family == KernelAtom::Family::Sin && p >= 2) {
      KernelAtom cos_atom = a;
      cos_atom.family = KernelAtom::Family::Cos;
      std::vector<std::pair<Atom, int>> base;
      for (auto& pg : pow_groups)
        base.emplace_back(KernelAtom{KernelAtom::Family::Pow, 1, pg.first, pg.second}, 1);
      if (has_exp) base.emplace_back(KernelAtom::exp(exp_slope, exp_offset), 1);
      for (const auto& [b, q] : trig)
        if (!(b == a)) base.emplace_back(b, q);
      for (const auto& [b, q] : others) base.emplace_back(b, q);
      if (p > 2) base.emplace_back(a, p - 2);
      canonicalize_into(out, coords, base, coef);
      base.emplace_back(cos_atom, 2);
      canonicalize_into(out, coords, std::move(base), -coef);
      return;
    }
  }

  Monomial m;
  m.coords = std::move(coords);
  if (has_exp && !(is_zero(exp_slope) && is_zero(exp_offset)))
    m.atoms.emplace_back(KernelAtom::exp(exp_slope, exp_offset), 1);
  for (auto& [offset, r] : pow_groups)
    m.atoms.emplace_back(KernelAtom{KernelAtom::Family::Pow, 1, offset, r}, 1);
  for (auto& [a, p] : trig) m.atoms.emplace_back(a, p);
  for (auto& [a, p] : others) m.atoms.emplace_back(a, p);
  std::sort(m.atoms.begin(), m.atoms.end());
  add_canonical(out, std::move(m), coef);
}

inline void canonicalize_into(TermMap& out, const Monomial& raw, const Rational& coef) {
  canonicalize_into(out, raw.coords, raw.atoms, coef);
}

inline void multiply_into(TermMap& out, const Monomial& a, const Rational& ca, const Monomial& b,
                          const Rational& cb) {
  auto coords = a.coords;
  coords.insert(coords.end(), b.coords.begin(), b.coords.end());
  auto atoms = a.atoms;
  atoms.insert(atoms.end(), b.atoms.begin(), b.atoms.end());
  canonicalize_into(out, std::move(coords), std::move(atoms), ca * cb);
}

}  // namespace detail

/// Immutable normalized expression: a finite sum of rational multiples of
/// canonical monomials. Structural equality is semantic equality within the kernel.
class JetExpression {
public:
  using TermMap = detail::TermMap;

  JetExpression() = default;
  JetExpression(const Rational& c) {  // NOLINT(google-explicit-constructor)
    if (!claw::is_zero(c)) terms_.emplace(Monomial{}, c);
  }
  JetExpression(long c) : JetExpression(Rational(c)) {}  // NOLINT(google-explicit-constructor)

  static JetExpression coordinate(const JetCoordinate& v, int power = 1) {
    if (power == 0) return JetExpression(1);
    Monomial m;
    m.coords.emplace_back(v, power);
    return from_raw(m, 1);
  }
  static JetExpression t() { return coordinate(JetCoordinate::t()); }
  static JetExpression x() { return coordinate(JetCoordinate::x()); }
  static JetExpression u(int t_order = 0, int x_order = 0) {
    return coordinate(JetCoordinate::u(t_order, x_order));
  }

  static JetExpression atom(const Atom& a, int power = 1) {
    Monomial m;
    m.atoms.emplace_back(a, power);
    return from_raw(m, 1);
  }

  static JetExpression from_raw(const Monomial& raw, const Rational& coef) {
    JetExpression e;
    detail::canonicalize_into(e.terms_, raw, coef);
    return e;
  }

  /// Builds from a map whose keys are already canonical (merging is still applied).
  static JetExpression from_canonical(TermMap terms) {
    JetExpression e;
    std::erase_if(terms, [](const auto& kv) { return claw::is_zero(kv.second); });
    e.terms_ = std::move(terms);
    return e;
  }

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  std::optional<Rational> constant_value() const {
    if (terms_.empty()) return Rational(0);
    if (terms_.size() == 1 && terms_.begin()->first.empty()) return terms_.begin()->second;
    return std::nullopt;
  }
  bool is_constant() const { return constant_value().has_value(); }

  /// Coordinates appearing explicitly in monomials.
  std::set<JetCoordinate> coordinates() const {
    std::set<JetCoordinate> out;
    for (const auto& [m, c] : terms_)
      for (const auto& [v, p] : m.coords) out.insert(v);
    return out;
  }

  /// Coordinates the expression depends on, including u behind kernel atoms and
  /// the declared dependence of unknown multipliers.
  std::set<JetCoordinate> dependencies() const {
    std::set<JetCoordinate> out = coordinates();
    for (const auto& [m, c] : terms_)
      for (const auto& [a, p] : m.atoms) {
        if (std::holds_alternative<KernelAtom>(a)) out.insert(JetCoordinate::u());
        if (const auto* ud = std::get_if<UnknownDerivative>(&a))
          out.insert(ud->arity.begin(), ud->arity.end());
      }
    return out;
  }

  bool has_kernel_atoms() const { return has_atom_kind<KernelAtom>(); }
  bool has_unknowns() const { return has_atom_kind<UnknownDerivative>(); }
  bool has_markers() const { return has_atom_kind<EquationMarker>(); }

  /// Highest derivative coordinate present, as (t_order, x_order); (0,0) if none.
  std::pair<int, int> maximal_order() const {
    std::optional<JetCoordinate> best;
    for (const auto& v : dependencies())
      if (v.is_derivative() && (!best || *best < v)) best = v;
    if (!best) return {0, 0};
    return {best->t_order, best->x_order};
  }

  JetExpression operator-() const {
    JetExpression r = *this;
    for (auto& [m, c] : r.terms_) c = -c;
    return r;
  }

  JetExpression& operator+=(const JetExpression& o) {
    for (const auto& [m, c] : o.terms_) detail::add_canonical(terms_, m, c);
    return *this;
  }
  JetExpression& operator-=(const JetExpression& o) {
    for (const auto& [m, c] : o.terms_) detail::add_canonical(terms_, m, -c);
    return *this;
  }
  JetExpression& operator*=(const Rational& s) {
    if (claw::is_zero(s)) {
      terms_.clear();
    } else {
      for (auto& [m, c] : terms_) c *= s;
    }
    return *this;
  }

  friend JetExpression operator+(JetExpression a, const JetExpression& b) { return a += b; }
  friend JetExpression operator-(JetExpression a, const JetExpression& b) { return a -= b; }
  friend JetExpression operator*(JetExpression a, const Rational& s) { return a *= s; }
  friend JetExpression operator*(const Rational& s, JetExpression a) { return a *= s; }

  friend JetExpression operator*(const JetExpression& a, const JetExpression& b) {
    JetExpression r;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) detail::multiply_into(r.terms_, ma, ca, mb, cb);
    return r;
  }
  JetExpression& operator*=(const JetExpression& o) { return *this = *this * o; }

  JetExpression pow(unsigned k) const {
    JetExpression result(1), base = *this;
    while (k != 0) {
      if (k & 1u) result *= base;
      k >>= 1;
      if (k != 0) base = base * base;
    }
    return result;
  }

  friend bool operator==(const JetExpression& a, const JetExpression& b) {
    return a.terms_ == b.terms_;
  }

  /// Terms whose monomial satisfies the predicate.
  template <class Pred>
  JetExpression filter(Pred&& keep) const {
    JetExpression r;
    for (const auto& [m, c] : terms_)
      if (keep(m)) r.terms_.emplace(m, c);
    return r;
  }

private:
  template <class T>
  bool has_atom_kind() const {
    for (const auto& [m, c] : terms_)
      for (const auto& [a, p] : m.atoms)
        if (std::holds_alternative<T>(a)) return true;
    return false;
  }

  TermMap terms_;
};

/// Re-applies every rewrite rule. Expressions are kept normalized by construction,
/// so this is the identity on any JetExpression; it is exposed for raw term input.
inline JetExpression normalize(const JetExpression& e) {
  JetExpression::TermMap out;
  for (const auto& [m, c] : e.terms()) detail::canonicalize_into(out, m, c);
  return JetExpression::from_canonical(std::move(out));
}

inline JetExpression normalize_raw(const std::vector<std::pair<Monomial, Rational>>& raw_terms) {
  JetExpression::TermMap out;
  for (const auto& [m, c] : raw_terms) detail::canonicalize_into(out, m, c);
  return JetExpression::from_canonical(std::move(out));
}

inline JetExpression operator+(const JetExpression& a, long b) { return a + JetExpression(b); }
inline JetExpression operator*(long s, const JetExpression& a) { return Rational(s) * a; }

/// Derivative of a kernel atom with respect to u.
inline JetExpression kernel_derivative(const KernelAtom& a) {
  switch (a.family) {
    case KernelAtom::Family::Exp:
      return a.slope * JetExpression::atom(a);
    case KernelAtom::Family::Sin: {
      KernelAtom c = a;
      c.family = KernelAtom::Family::Cos;
      return a.slope * JetExpression::atom(c);
    }
    case KernelAtom::Family::Cos: {
      KernelAtom s = a;
      s.family = KernelAtom::Family::Sin;
      return -a.slope * JetExpression::atom(s);
    }
    case KernelAtom::Family::Pow: {
      KernelAtom p = a;
      p.exponent -= 1;
      return a.exponent * JetExpression::atom(p);
    }
  }
  throw InternalError("unknown kernel family");
}

/// Replaces every occurrence of `target` by `replacement`.
inline JetExpression substitute(const JetExpression& e, const JetCoordinate& target,
                                const JetExpression& replacement) {
  for (const auto& v : replacement.dependencies()) {
    const bool self = target.is_derivative()
                          ? (v.is_derivative() && v.t_order >= target.t_order &&
                             v.x_order >= target.x_order)
                          : v == target;
    if (self)
      throw DomainError("self-referential substitution: replacement depends on the target or one of its derivatives");
  }
  if (target == JetCoordinate::u() && e.has_kernel_atoms())
    throw UnsupportedError("cannot substitute for u inside kernel atoms");

  std::map<int, JetExpression> powers;
  JetExpression::TermMap out;
  JetExpression result;
  for (const auto& [m, c] : e.terms()) {
    const int k = m.power_of(target);
    if (k == 0) {
      detail::add_canonical(out, m, c);
      continue;
    }
    auto it = powers.find(k);
    if (it == powers.end()) it = powers.emplace(k, replacement.pow(static_cast<unsigned>(k))).first;
    Monomial rest = m;
    std::erase_if(rest.coords, [&](const auto& f) { return f.first == target; });
    for (const auto& [mr, cr] : it->second.terms()) detail::multiply_into(out, rest, c, mr, cr);
  }
  return JetExpression::from_canonical(std::move(out));
}

/// Floating-point value of a kernel atom at u.
inline double evaluate_kernel(const KernelAtom& a, double u) {
  const double arg = to_double(a.slope) * u + to_double(a.offset);
  switch (a.family) {
    case KernelAtom::Family::Exp: return std::exp(arg);
    case KernelAtom::Family::Sin: return std::sin(arg);
    case KernelAtom::Family::Cos: return std::cos(arg);
    case KernelAtom::Family::Pow: return std::pow(arg, to_double(a.exponent));
  }
  return 0.0;
}

/// Floating-point evaluation; `value` supplies every coordinate that occurs.
inline double evaluate(const JetExpression& e, const std::function<double(const JetCoordinate&)>& value) {
  double sum = 0.0;
  std::optional<double> u_value;
  for (const auto& [m, c] : e.terms()) {
    double term = to_double(c);
    for (const auto& [v, p] : m.coords) term *= std::pow(value(v), p);
    for (const auto& [a, p] : m.atoms) {
      const auto* k = std::get_if<KernelAtom>(&a);
      if (k == nullptr) throw DomainError("cannot evaluate unknown or marker atoms numerically");
      if (!u_value) u_value = value(JetCoordinate::u());
      term *= std::pow(evaluate_kernel(*k, *u_value), p);
    }
    sum += term;
  }
  return sum;
}

}  // namespace claw
