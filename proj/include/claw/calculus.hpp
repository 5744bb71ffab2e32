#pragma once

// Formal differential operators on jet expressions.

#include <map>
#include <optional>
#include <utility>

#include "claw/jet.hpp"

namespace claw {

enum class Direction { T, X };

namespace detail {

// Applies a derivation given its action on coordinates and on single atoms.
template <class CoordRule, class AtomRule>
JetExpression apply_derivation(const JetExpression& e, CoordRule&& on_coord, AtomRule&& on_atom) {
  TermMap out;
  std::map<JetCoordinate, JetExpression> coord_cache;
  for (const auto& [m, c] : e.terms()) {
    for (std::size_t i = 0; i < m.coords.size(); ++i) {
      const auto& [v, p] = m.coords[i];
      auto it = coord_cache.find(v);
      if (it == coord_cache.end()) it = coord_cache.emplace(v, on_coord(v)).first;
      if (it->second.is_zero()) continue;
      Monomial rest = m;
      rest.coords[i].second -= 1;
      const Rational cp = c * p;
      for (const auto& [md, cd] : it->second.terms()) multiply_into(out, rest, cp, md, cd);
    }
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
      const auto& [a, p] = m.atoms[i];
      const JetExpression d = on_atom(a);
      if (d.is_zero()) continue;
      Monomial rest = m;
      rest.atoms[i].second -= 1;
      const Rational cp = c * p;
      for (const auto& [md, cd] : d.terms()) multiply_into(out, rest, cp, md, cd);
    }
  }
  return JetExpression::from_canonical(std::move(out));
}

inline JetExpression coordinate_total_derivative(const JetCoordinate& v, Direction dir) {
  switch (v.kind) {
    case JetCoordinate::Kind::IndepT: return JetExpression(dir == Direction::T ? 1 : 0);
    case JetCoordinate::Kind::IndepX: return JetExpression(dir == Direction::X ? 1 : 0);
    case JetCoordinate::Kind::Derivative: return JetExpression::coordinate(v.raised(dir == Direction::T));
  }
  return {};
}

}  // namespace detail

/// Partial derivative with respect to one jet coordinate, treating all others as
/// independent. Markers are constants.
inline JetExpression partial_derivative(const JetExpression& e, const JetCoordinate& v) {
  return detail::apply_derivation(
      e, [&](const JetCoordinate& w) { return JetExpression(w == v ? 1 : 0); },
      [&](const Atom& a) -> JetExpression {
        if (const auto* k = std::get_if<KernelAtom>(&a))
          return v == JetCoordinate::u() ? kernel_derivative(*k) : JetExpression();
        if (const auto* ud = std::get_if<UnknownDerivative>(&a)) {
          if (auto d = ud->differentiated(v)) return JetExpression::atom(*d);
          return {};
        }
        return {};
      });
}

/// Formal total derivative D_t or D_x.
inline JetExpression total_derivative(const JetExpression& e, Direction dir) {
  const JetExpression u_dir = detail::coordinate_total_derivative(JetCoordinate::u(), dir);
  return detail::apply_derivation(
      e, [&](const JetCoordinate& w) { return detail::coordinate_total_derivative(w, dir); },
      [&](const Atom& a) -> JetExpression {
        if (const auto* k = std::get_if<KernelAtom>(&a)) return kernel_derivative(*k) * u_dir;
        if (const auto* ud = std::get_if<UnknownDerivative>(&a)) {
          JetExpression r;
          for (const auto& w : ud->arity) {
            const JetExpression dw = detail::coordinate_total_derivative(w, dir);
            if (dw.is_zero()) continue;
            r += JetExpression::atom(*ud->differentiated(w)) * dw;
          }
          return r;
        }
        const auto& g = std::get<EquationMarker>(a);
        return JetExpression::atom(dir == Direction::T ? EquationMarker{g.t_order + 1, g.x_order}
                                                       : EquationMarker{g.t_order, g.x_order + 1});
      });
}

inline JetExpression total_derivative(const JetExpression& e, Direction dir, int times) {
  JetExpression r = e;
  for (int i = 0; i < times && !r.is_zero(); ++i) r = total_derivative(r, dir);
  return r;
}

/// (-D_t)^a (-D_x)^b e
inline JetExpression signed_total_derivative(const JetExpression& e, int t_order, int x_order) {
  JetExpression r = total_derivative(total_derivative(e, Direction::T, t_order), Direction::X, x_order);
  if ((t_order + x_order) % 2 != 0) r = -r;
  return r;
}

/// Variational derivative E_u.
inline JetExpression euler_operator(const JetExpression& e) {
  JetExpression r;
  for (const auto& v : e.dependencies()) {
    if (!v.is_derivative()) continue;
    const JetExpression d = partial_derivative(e, v);
    if (!d.is_zero()) r += signed_total_derivative(d, v.t_order, v.x_order);
  }
  return r;
}

enum class EulerBase { UFullX, UT, UX };

/// Euler operators truncated to a family of coordinates:
/// UFullX = sum_j (-D_x)^j d/du_{x^j}, UT = d/du_t, UX = sum_{j>=1} (-D_x)^{j-1} d/du_{x^j}.
inline JetExpression restricted_euler(const JetExpression& e, EulerBase base) {
  if (base == EulerBase::UT) return partial_derivative(e, JetCoordinate::u(1, 0));
  const int shift = base == EulerBase::UX ? 1 : 0;
  JetExpression r;
  for (const auto& v : e.dependencies()) {
    if (!v.is_derivative() || v.t_order != 0 || v.x_order < shift) continue;
    const JetExpression d = partial_derivative(e, v);
    if (!d.is_zero()) r += signed_total_derivative(d, 0, v.x_order - shift);
  }
  return r;
}

namespace detail {

inline bool is_constant_atom(const Atom& a) {
  const auto* k = std::get_if<KernelAtom>(&a);
  return k != nullptr && k->family != KernelAtom::Family::Pow && is_zero(k->slope);
}

// Antiderivative in u of u^k * K(u) where K is a product of kernel atoms that all
// depend on u. Returns nullopt for products outside the supported families.
inline std::optional<JetExpression> integrate_kernel_in_u(int k, const std::vector<std::pair<Atom, int>>& atoms);

inline std::optional<JetExpression> integrate_in_u(const JetExpression& e) {
  JetExpression r;
  for (const auto& [m, c] : e.terms()) {
    Monomial rest;
    int k = 0;
    std::vector<std::pair<Atom, int>> kernel;
    for (const auto& [v, p] : m.coords) {
      if (v == JetCoordinate::u())
        k = p;
      else
        rest.coords.emplace_back(v, p);
    }
    for (const auto& [a, p] : m.atoms) {
      if (std::holds_alternative<KernelAtom>(a) && !is_constant_atom(a))
        kernel.emplace_back(a, p);
      else if (std::holds_alternative<UnknownDerivative>(a))
        return std::nullopt;
      else
        rest.atoms.emplace_back(a, p);
    }
    auto f = integrate_kernel_in_u(k, kernel);
    if (!f) return std::nullopt;
    r += JetExpression::from_raw(rest, c) * *f;
  }
  return r;
}

inline std::optional<JetExpression> integrate_kernel_in_u(int k, const std::vector<std::pair<Atom, int>>& atoms) {
  const JetExpression u = JetExpression::u();
  if (atoms.empty()) return JetExpression::coordinate(JetCoordinate::u(), k + 1) * make_rational(1, k + 1);

  if (atoms.size() == 1) {
    const auto& ka = std::get<KernelAtom>(atoms[0].first);
    const int p = atoms[0].second;
    switch (ka.family) {
      case KernelAtom::Family::Pow: {
        // u^k never coexists with a pow atom in canonical form.
        if (k != 0) return std::nullopt;
        const Rational r = ka.exponent * p + 1;
        if (is_zero(r)) return std::nullopt;
        KernelAtom up = ka;
        up.exponent = ka.exponent * p + 1;
        return JetExpression::atom(up) * (1 / r);
      }
      case KernelAtom::Family::Exp: {
        // integral u^k e = u^k e / a - k/a integral u^(k-1) e
        const JetExpression ex = JetExpression::atom(ka, p);
        const Rational a = ka.slope * p;
        JetExpression r = JetExpression::coordinate(JetCoordinate::u(), k) * ex * (1 / a);
        if (k > 0) {
          auto lower = integrate_kernel_in_u(k - 1, atoms);
          if (!lower) return std::nullopt;
          r -= *lower * (Rational(k) / a);
        }
        return r;
      }
      case KernelAtom::Family::Sin:
      case KernelAtom::Family::Cos:
        break;
    }
  }

  // Products sin^s cos^n of a single argument, s in {0,1}.
  std::optional<KernelAtom> base;
  int s = 0, n = 0;
  for (const auto& [a, p] : atoms) {
    const auto& ka = std::get<KernelAtom>(a);
    if (ka.family != KernelAtom::Family::Sin && ka.family != KernelAtom::Family::Cos) return std::nullopt;
    KernelAtom arg = ka;
    arg.family = KernelAtom::Family::Sin;
    if (base && !(*base == arg)) return std::nullopt;
    base = arg;
    (ka.family == KernelAtom::Family::Sin ? s : n) += p;
  }
  if (s > 1) return std::nullopt;
  KernelAtom cos_atom = *base;
  cos_atom.family = KernelAtom::Family::Cos;
  const Rational a = base->slope;

  // F = integral of sin^s cos^n du
  JetExpression F;
  if (s == 1) {
    F = JetExpression::atom(cos_atom, n + 1) * (-1 / (a * (n + 1)));
  } else {
    // integral cos^n = cos^(n-1) sin / (n a) + (n-1)/n integral cos^(n-2)
    JetExpression acc;
    Rational scale = 1;
    int m = n;
    while (m >= 2) {
      acc += JetExpression::atom(cos_atom, m - 1) * JetExpression::atom(*base) * (scale / (a * m));
      scale *= make_rational(m - 1, m);
      m -= 2;
    }
    if (m == 1)
      acc += JetExpression::atom(*base) * (scale / a);
    else
      acc += u * scale;
    F = acc;
  }
  if (k == 0) return F;
  // integral u^k f = u^k F - k integral u^(k-1) F
  auto rest = integrate_in_u(JetExpression::coordinate(JetCoordinate::u(), k - 1) * F);
  if (!rest) return std::nullopt;
  return JetExpression::coordinate(JetCoordinate::u(), k) * F - *rest * Rational(k);
}

}  // namespace detail

/// Antiderivative of e with respect to coordinate w, holding all other coordinates fixed.
/// Throws UnsupportedError when the antiderivative leaves the kernel (logarithms,
/// mixed kernel families).
inline JetExpression integrate_coordinate(const JetExpression& e, const JetCoordinate& w) {
  if (w == JetCoordinate::u()) {
    if (auto r = detail::integrate_in_u(e)) return *r;
    throw UnsupportedError("antiderivative in u lies outside the kernel");
  }
  for (const auto& [m, c] : e.terms())
    for (const auto& [a, p] : m.atoms)
      if (const auto* ud = std::get_if<UnknownDerivative>(&a))
        if (std::find(ud->arity.begin(), ud->arity.end(), w) != ud->arity.end())
          throw UnsupportedError("cannot integrate an unknown function");
  JetExpression r;
  for (const auto& [m, c] : e.terms()) {
    const int k = m.power_of(w);
    Monomial raw = m;
    raw.coords.emplace_back(w, 1);
    r += JetExpression::from_raw(raw, c / (k + 1));
  }
  return r;
}

namespace detail {

inline std::optional<JetCoordinate> highest_x_coordinate(const JetExpression& e, int& max_x) {
  std::optional<JetCoordinate> best;
  max_x = -1;
  for (const auto& v : e.dependencies()) {
    if (!v.is_derivative()) continue;
    if (v.x_order > max_x || (v.x_order == max_x && best && best->t_order < v.t_order)) {
      max_x = v.x_order;
      best = v;
    }
  }
  return best;
}

// Terms linear in `v`, divided by v.
inline JetExpression linear_coefficient(const JetExpression& e, const JetCoordinate& v) {
  JetExpression::TermMap out;
  for (const auto& [m, c] : e.terms()) {
    if (m.power_of(v) != 1) continue;
    Monomial rest = m;
    std::erase_if(rest.coords, [&](const auto& f) { return f.first == v; });
    add_canonical(out, std::move(rest), c);
  }
  return JetExpression::from_canonical(std::move(out));
}

}  // namespace detail

/// Returns theta with D_x theta == e. Throws NotExactError if e is not a total
/// x-derivative.
inline JetExpression invert_total_x_derivative(const JetExpression& e) {
  if (e.has_unknowns() || e.has_markers()) throw DomainError("cannot invert expressions with unknown or marker atoms");
  JetExpression rest = e, theta;
  for (int guard = 0; guard < 4096; ++guard) {
    if (rest.is_zero()) return theta;
    int K = -1;
    auto v = detail::highest_x_coordinate(rest, K);
    if (!v || K == 0) {
      if (v) throw NotExactError("not a total x-derivative: residual depends on " + std::string(v->t_order ? "u_t-tower" : "u"));
      const JetExpression p = integrate_coordinate(rest, JetCoordinate::x());
      return theta + p;
    }
    // rest must be affine in the x-order-K coordinates jointly.
    for (const auto& [m, c] : rest.terms()) {
      int deg = 0;
      for (const auto& [w, p] : m.coords)
        if (w.is_derivative() && w.x_order == K) deg += p;
      if (deg > 1) throw NotExactError("not a total x-derivative: nonlinear in highest x-derivative");
    }
    const JetCoordinate w = JetCoordinate::u(v->t_order, K - 1);
    const JetExpression coef = detail::linear_coefficient(rest, *v);
    JetExpression p;
    try {
      p = integrate_coordinate(coef, w);
    } catch (const UnsupportedError& err) {
      throw NotExactError(std::string("cannot integrate coefficient: ") + err.what());
    }
    theta += p;
    rest -= total_derivative(p, Direction::X);
    int K2 = -1;
    detail::highest_x_coordinate(rest, K2);
    if (K2 > K) throw NotExactError("not a total x-derivative: descent diverged");
  }
  throw NotExactError("not a total x-derivative: descent did not terminate");
}

/// True iff e is a total x-derivative within the kernel.
inline bool is_total_x_derivative(const JetExpression& e) {
  try {
    (void)invert_total_x_derivative(e);
    return true;
  } catch (const NotExactError&) {
    return false;
  }
}

struct IbpPolicy {
  // When false, integration steps whose antiderivative depends on u are skipped.
  // Needed in the pure-x chart, where D_t u has no local pure-x expression.
  bool allow_u_dependent_theta = true;
};

struct IbpResult {
  JetExpression core;
  JetExpression theta;
};

/// Splits e into core + D_x theta, removing every term that is linear in its
/// highest coordinate whenever the integration step is admissible.
inline IbpResult ibp_normal_form(const JetExpression& e, IbpPolicy policy = {}) {
  IbpResult out{e, {}};
  if (e.has_unknowns() || e.has_markers()) return out;
  for (int guard = 0; guard < 4096; ++guard) {
    // Candidate coordinates, highest first in descent order.
    std::vector<JetCoordinate> coords;
    for (const auto& v : out.core.dependencies())
      if (v.is_derivative() && v.x_order >= 1) coords.push_back(v);
    std::sort(coords.begin(), coords.end(), [](const auto& a, const auto& b) { return descent_less(b, a); });

    bool progressed = false;
    for (const auto& v : coords) {
      // Terms linear in v with v as their highest coordinate.
      JetExpression::TermMap picked;
      for (const auto& [m, c] : out.core.terms()) {
        if (m.power_of(v) != 1) continue;
        bool highest = true;
        for (const auto& [w, p] : m.coords)
          if (w.is_derivative() && !(w == v) && descent_less(v, w)) highest = false;
        if (!highest) continue;
        Monomial rest = m;
        std::erase_if(rest.coords, [&](const auto& f) { return f.first == v; });
        detail::add_canonical(picked, std::move(rest), c);
      }
      if (picked.empty()) continue;
      const JetExpression coef = JetExpression::from_canonical(std::move(picked));
      const JetCoordinate w = JetCoordinate::u(v.t_order, v.x_order - 1);
      bool blocked = false;
      for (const auto& y : coef.dependencies())
        if (y.is_derivative() && !(y == w) && descent_less(v, y.raised(false))) blocked = true;
      if (blocked) continue;
      JetExpression p;
      try {
        p = integrate_coordinate(coef, w);
      } catch (const UnsupportedError&) {
        continue;
      }
      if (!policy.allow_u_dependent_theta && p.dependencies().contains(JetCoordinate::u())) continue;
      out.core -= total_derivative(p, Direction::X);
      out.theta += p;
      progressed = true;
      break;
    }
    if (!progressed) return out;
  }
  throw InternalError("integration by parts did not terminate");
}

}  // namespace claw
