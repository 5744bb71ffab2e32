#pragma once

// Scalar PDEs in solved form, their solution-space charts, and the
// linearization / adjoint-linearization operators.

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "claw/calculus.hpp"
#include "claw/parse.hpp"

namespace claw {

enum class Shape { UT, UTT, UTX };

inline const char* shape_name(Shape s) {
  switch (s) {
    case Shape::UT: return "u_t";
    case Shape::UTT: return "u_tt";
    case Shape::UTX: return "u_tx";
  }
  return "?";
}

struct PdeSpec {
  JetCoordinate leading;
  JetExpression rhs;
  std::string name;
  ParamMap params;

  Shape shape() const {
    if (leading == JetCoordinate::u(1, 0)) return Shape::UT;
    if (leading == JetCoordinate::u(2, 0)) return Shape::UTT;
    return Shape::UTX;
  }

  /// G = leading - rhs
  JetExpression G() const { return JetExpression::coordinate(leading) - rhs; }

  /// The original equation text, reconstructed as "leading = rhs".
  std::string text() const { return render(JetExpression::coordinate(leading)) + " = " + render(rhs); }
};

/// Whether v is a coordinate of the solution space (not the leading derivative or
/// one of its differential consequences).
inline bool is_solution_coordinate(Shape shape, const JetCoordinate& v) {
  if (!v.is_derivative()) return true;
  switch (shape) {
    case Shape::UT: return v.t_order == 0;
    case Shape::UTT: return v.t_order <= 1;
    case Shape::UTX: return v.t_order == 0 || v.x_order == 0;
  }
  return false;
}

inline bool in_solution_space(Shape shape, const JetExpression& e) {
  for (const auto& v : e.dependencies())
    if (!is_solution_coordinate(shape, v)) return false;
  return true;
}

inline PdeSpec make_pde(JetCoordinate leading, JetExpression rhs, std::string name = {}, ParamMap params = {}) {
  PdeSpec pde{leading, std::move(rhs), std::move(name), std::move(params)};
  if (!(leading == JetCoordinate::u(1, 0) || leading == JetCoordinate::u(2, 0) || leading == JetCoordinate::u(1, 1)))
    throw DomainError("leading derivative must be one of u_t, u_tt, u_tx");
  if (pde.rhs.has_unknowns() || pde.rhs.has_markers()) throw DomainError("right-hand side contains internal atoms");
  if (!in_solution_space(pde.shape(), pde.rhs))
    throw DomainError("right-hand side violates the leading-derivative exclusion rule for " +
                      std::string(shape_name(pde.shape())));
  return pde;
}

/// Parses "<lhs> = <rhs>" (or "<expr> = 0") and solves for the leading derivative.
inline PdeSpec parse_pde(std::string_view text, const ParamMap& params = {}, std::string name = {}) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ParseError("expected '='", text.size());
  if (text.find('=', eq + 1) != std::string_view::npos) throw ParseError("more than one '='", text.find('=', eq + 1));
  const JetExpression lhs = parse_expression(text.substr(0, eq), params);
  JetExpression rhs;
  try {
    rhs = parse_expression(text.substr(eq + 1), params);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()).substr(0, std::string(e.what()).rfind(" at position")),
                     e.position() + eq + 1);
  }
  const JetExpression G = lhs - rhs;
  const auto coords = G.dependencies();
  std::optional<JetCoordinate> leading;
  for (const auto& cand : {JetCoordinate::u(2, 0), JetCoordinate::u(1, 1), JetCoordinate::u(1, 0)})
    if (coords.contains(cand)) {
      leading = cand;
      break;
    }
  if (!leading) throw DomainError("no admissible leading derivative (need u_t, u_tt or u_tx)");
  const JetExpression coef = partial_derivative(G, *leading);
  const auto a = coef.constant_value();
  if (!a || is_zero(*a)) throw DomainError("leading derivative " + render(JetExpression::coordinate(*leading)) +
                                           " must appear linearly with a constant coefficient");
  const JetExpression F = (JetExpression::coordinate(*leading) * *a - G) * (1 / *a);
  ParamMap kept = params;
  return make_pde(*leading, F, name.empty() ? std::string(text) : std::move(name), std::move(kept));
}

/// Solution-space chart: rewrites off-solution coordinates through the PDE and its
/// differential consequences. With markers enabled, D^a G is carried as the atom
/// G{a} so that v = reduce(D^a F) + G{a} holds identically off the solution space.
class SolutionChart {
public:
  SolutionChart(const PdeSpec& pde, bool with_markers = false) : pde_(pde), markers_(with_markers) {}

  const PdeSpec& pde() const { return pde_; }

  /// Value of an off-solution coordinate in solution-space coordinates.
  JetExpression value(const JetCoordinate& v) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = values_.find(v); it != values_.end()) return it->second;
    }
    const int at = v.t_order - pde_.leading.t_order;
    const int ax = v.x_order - pde_.leading.x_order;
    if (at < 0 || ax < 0) throw InternalError("coordinate is not a consequence of the leading derivative");
    JetExpression r = reduce(derived_rhs(at, ax));
    if (markers_) r += JetExpression::atom(EquationMarker{at, ax});
    std::lock_guard lock(mutex_);
    values_.emplace(v, r);
    return r;
  }

  /// Substitutes every off-solution coordinate.
  JetExpression reduce(const JetExpression& e) {
    const Shape shape = pde_.shape();
    JetExpression r = e;
    for (;;) {
      std::optional<JetCoordinate> off;
      for (const auto& v : r.coordinates())
        if (!is_solution_coordinate(shape, v)) off = v;  // highest last
      if (!off) break;
      r = substitute(r, *off, value(*off));
    }
    for (const auto& v : r.dependencies())
      if (!is_solution_coordinate(shape, v))
        throw DomainError("unknown atom depends on an off-solution coordinate");
    return r;
  }

  /// The solution-restricted total derivative.
  JetExpression total_t(const JetExpression& e) {
    if (!in_solution_space(pde_.shape(), e))
      throw DomainError("expression is not in solution-space coordinates: " + render(e));
    return reduce(total_derivative(e, Direction::T));
  }

private:
  // D_t^a D_x^b F, memoized.
  JetExpression derived_rhs(int a, int b) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = derived_.find({a, b}); it != derived_.end()) return it->second;
    }
    JetExpression r;
    if (a == 0 && b == 0)
      r = pde_.rhs;
    else if (b > 0)
      r = total_derivative(derived_rhs(a, b - 1), Direction::X);
    else
      r = total_derivative(derived_rhs(a - 1, b), Direction::T);
    std::lock_guard lock(mutex_);
    derived_.emplace(std::pair(a, b), r);
    return r;
  }

  PdeSpec pde_;
  bool markers_;
  std::mutex mutex_;
  std::map<JetCoordinate, JetExpression> values_;
  std::map<std::pair<int, int>, JetExpression> derived_;
};

/// The solution-restricted total time derivative of e.
inline JetExpression solution_total_derivative(const PdeSpec& pde, const JetExpression& e) {
  SolutionChart chart(pde);
  return chart.total_t(e);
}

/// Fréchet derivative of G applied to eta.
inline JetExpression linearization(const PdeSpec& pde, const JetExpression& eta) {
  const JetExpression G = pde.G();
  JetExpression r;
  for (const auto& v : G.dependencies()) {
    if (!v.is_derivative()) continue;
    const JetExpression dG = partial_derivative(G, v);
    if (dG.is_zero()) continue;
    r += dG * total_derivative(total_derivative(eta, Direction::T, v.t_order), Direction::X, v.x_order);
  }
  return r;
}

/// Formal adjoint of the linearization applied to omega.
inline JetExpression adjoint_linearization(const PdeSpec& pde, const JetExpression& omega) {
  const JetExpression G = pde.G();
  JetExpression r;
  for (const auto& v : G.dependencies()) {
    if (!v.is_derivative()) continue;
    const JetExpression dG = partial_derivative(G, v);
    if (dG.is_zero()) continue;
    r += signed_total_derivative(dG * omega, v.t_order, v.x_order);
  }
  return r;
}

}  // namespace claw
