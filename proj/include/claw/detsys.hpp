#pragma once

// Multiplier determining condition E_u(Lambda*G) = 0 and its split off the solution space.

#include <string>
#include <vector>

#include "claw/pde.hpp"

namespace claw {

struct DeterminingSystem {
  PdeSpec pde;
  std::vector<JetCoordinate> arity;
  // equations[0] is the (adjoint-)symmetry equation on the solution space; the
  // rest are the extra equations, one per monomial in D^a G.
  std::vector<JetExpression> equations;
  // Marker monomial each equation was collected from ("1" for the first).
  std::vector<std::string> origins;
};

/// Default dependence of a multiplier of order p for the given shape.
inline std::vector<JetCoordinate> default_arity(Shape shape, int p) {
  std::vector<JetCoordinate> a;
  if (shape != Shape::UTX) a.push_back(JetCoordinate::t());
  a.push_back(JetCoordinate::x());
  for (int k = 0; k <= p; ++k) {
    a.push_back(JetCoordinate::u(0, k));
    if (shape == Shape::UTT && k >= 1) a.push_back(JetCoordinate::u(1, k - 1));
  }
  std::sort(a.begin(), a.end());
  return a;
}

inline void check_admissible(const PdeSpec& pde, const JetExpression& lambda) {
  if (lambda.has_markers()) throw DomainError("multiplier contains equation markers");
  for (const auto& v : lambda.dependencies())
    if (!is_solution_coordinate(pde.shape(), v) || v == pde.leading)
      throw DomainError("multiplier depends on " + render(JetExpression::coordinate(v)) +
                        ", which is not a solution-space coordinate");
}

/// E_u(G * lambda), expanded off the solution space.
inline JetExpression determining_expression(const PdeSpec& pde, const JetExpression& lambda) {
  check_admissible(pde, lambda);
  return euler_operator(pde.G() * lambda);
}

namespace detail {

// Splits an expression by its marker monomial.
inline std::map<std::vector<std::pair<Atom, int>>, JetExpression> collect_by_markers(const JetExpression& e) {
  std::map<std::vector<std::pair<Atom, int>>, JetExpression::TermMap> groups;
  for (const auto& [m, c] : e.terms()) {
    std::vector<std::pair<Atom, int>> key;
    Monomial rest;
    rest.coords = m.coords;
    for (const auto& [a, p] : m.atoms) {
      if (std::holds_alternative<EquationMarker>(a))
        key.emplace_back(a, p);
      else
        rest.atoms.emplace_back(a, p);
    }
    add_canonical(groups[key], std::move(rest), c);
  }
  std::map<std::vector<std::pair<Atom, int>>, JetExpression> out;
  for (auto& [k, terms] : groups) out.emplace(k, JetExpression::from_canonical(std::move(terms)));
  return out;
}

}  // namespace detail

inline DeterminingSystem split_determining_system(const PdeSpec& pde, std::vector<JetCoordinate> arity) {
  const UnknownDerivative L = UnknownDerivative::function_of(std::move(arity));
  for (const auto& v : L.arity)
    if (!is_solution_coordinate(pde.shape(), v))
      throw DomainError("arity contains the off-solution coordinate " + render(JetExpression::coordinate(v)));
  const JetExpression lambda = JetExpression::atom(L);
  const JetExpression E = euler_operator(pde.G() * lambda);
  SolutionChart chart(pde, true);
  const JetExpression split = chart.reduce(E);

  DeterminingSystem sys{pde, L.arity, {}, {}};
  auto groups = detail::collect_by_markers(split);
  // The marker-free part is the restriction to solutions; it always comes first.
  auto free_it = groups.find({});
  sys.equations.push_back(free_it == groups.end() ? JetExpression() : free_it->second);
  sys.origins.emplace_back("1");
  for (auto& [key, eq] : groups) {
    if (key.empty() || eq.is_zero()) continue;
    std::string origin;
    for (const auto& [a, p] : key) origin += (origin.empty() ? "" : "*") + detail::render_atom(a, p);
    sys.equations.push_back(eq);
    sys.origins.push_back(origin);
  }
  return sys;
}

}  // namespace claw
