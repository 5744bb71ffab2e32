#pragma once

// Conserved densities from multipliers by homotopy integration, flux
// reconstruction, trivial-density normalization and symbolic verification.

#include <string>
#include <vector>

#include "claw/detsys.hpp"

namespace claw {

struct ConservationLaw {
  PdeSpec pde;
  JetExpression multiplier;
  JetExpression density_t;
  JetExpression density_x;
  JetExpression utilde;
  bool verified = false;
};

namespace detail {

// Polynomial in the homotopy parameter; entry k is the coefficient of lambda^k.
using LambdaPoly = std::vector<JetExpression>;

inline LambdaPoly poly_mul(const LambdaPoly& a, const LambdaPoly& b) {
  if (a.empty() || b.empty()) return {};
  LambdaPoly r(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero()) continue;
    for (std::size_t j = 0; j < b.size(); ++j)
      if (!b[j].is_zero()) r[i + j] += a[i] * b[j];
  }
  return r;
}

// (a + lambda*b)^p
inline LambdaPoly affine_power(const JetExpression& a, const JetExpression& b, int p) {
  LambdaPoly r(static_cast<std::size_t>(p) + 1);
  for (int k = 0; k <= p; ++k)
    r[static_cast<std::size_t>(k)] =
        a.pow(static_cast<unsigned>(p - k)) * b.pow(static_cast<unsigned>(k)) * Rational(binomial(static_cast<unsigned long>(p), static_cast<unsigned long>(k)));
  return r;
}

// Substitutes v -> a_v + lambda*b_v for each mapped coordinate. Kernel atoms may
// not depend on a mapped coordinate.
inline LambdaPoly scale(const JetExpression& e, const std::map<JetCoordinate, std::pair<JetExpression, JetExpression>>& map) {
  LambdaPoly out;
  for (const auto& [m, c] : e.terms()) {
    Monomial fixed;
    fixed.atoms = m.atoms;
    for (const auto& [a, p] : m.atoms) {
      if (std::holds_alternative<UnknownDerivative>(a) || std::holds_alternative<EquationMarker>(a))
        throw DomainError("homotopy integrand contains internal atoms");
      const auto& k = std::get<KernelAtom>(a);
      const bool depends = k.family == KernelAtom::Family::Pow || !is_zero(k.slope);
      if (depends && map.contains(JetCoordinate::u()))
        throw UnsupportedError("non-polynomial lambda-dependence: kernel atom " + render_atom(a, 1) +
                               " under the homotopy scaling");
    }
    LambdaPoly term{JetExpression::from_raw(fixed, c)};
    for (const auto& [v, p] : m.coords) {
      auto it = map.find(v);
      if (it == map.end()) {
        term = poly_mul(term, {JetExpression::coordinate(v, p)});
      } else {
        term = poly_mul(term, affine_power(it->second.first, it->second.second, p));
      }
    }
    if (out.size() < term.size()) out.resize(term.size());
    for (std::size_t k = 0; k < term.size(); ++k) out[k] += term[k];
  }
  return out;
}

inline JetExpression integrate_unit_interval(const LambdaPoly& p) {
  JetExpression r;
  for (std::size_t k = 0; k < p.size(); ++k) r += p[k] * make_rational(1, static_cast<long>(k) + 1);
  return r;
}

// D_t^i D_x^j of a reference function of (t, x).
inline JetExpression reference_jet(const JetExpression& ut, const JetCoordinate& v) {
  return total_derivative(total_derivative(ut, Direction::T, v.t_order), Direction::X, v.x_order);
}

inline void check_reference(const JetExpression& ut, bool allow_t) {
  for (const auto& v : ut.dependencies()) {
    if (v == JetCoordinate::x() || (allow_t && v == JetCoordinate::t())) continue;
    throw DomainError("reference function must depend only on " + std::string(allow_t ? "t and x" : "x") +
                      ", got " + render(ut));
  }
}

// Value of a kernel atom at the constant u = c.
inline JetExpression kernel_at(const KernelAtom& k, const Rational& c) {
  const Rational arg = k.slope * c + k.offset;
  switch (k.family) {
    case KernelAtom::Family::Exp: return is_zero(arg) ? JetExpression(1) : JetExpression::atom(KernelAtom::exp(0, arg));
    case KernelAtom::Family::Sin: return JetExpression::atom(KernelAtom::sin(0, arg));
    case KernelAtom::Family::Cos: return JetExpression::atom(KernelAtom::cos(0, arg));
    case KernelAtom::Family::Pow: {
      if (is_zero(arg)) {
        if (sgn(k.exponent) < 0)
          throw SingularError("kernel atom " + render_atom(k, 1) + " is singular at u = " + to_string(c));
        return is_zero(k.exponent) ? JetExpression(1) : JetExpression(0);
      }
      auto v = exact_rational_pow(arg, k.exponent);
      if (!v) throw UnsupportedError("irrational value of " + render_atom(k, 1) + " at u = " + to_string(c));
      return JetExpression(*v);
    }
  }
  return {};
}

}  // namespace detail

/// e evaluated on the reference function: every derivative coordinate is replaced by
/// the matching derivative of ut (which depends on t, x only).
inline JetExpression at_reference(const JetExpression& e, const JetExpression& ut) {
  JetExpression r;
  const auto c = ut.constant_value();
  std::map<JetCoordinate, JetExpression> jets;
  for (const auto& [m, coef] : e.terms()) {
    JetExpression term(coef);
    for (const auto& [v, p] : m.coords) {
      if (!v.is_derivative()) {
        term *= JetExpression::coordinate(v, p);
        continue;
      }
      auto it = jets.find(v);
      if (it == jets.end()) it = jets.emplace(v, detail::reference_jet(ut, v)).first;
      term *= it->second.pow(static_cast<unsigned>(p));
    }
    for (const auto& [a, p] : m.atoms) {
      const auto* k = std::get_if<KernelAtom>(&a);
      if (k == nullptr) throw DomainError("cannot evaluate internal atoms on the reference function");
      if (k->family != KernelAtom::Family::Pow && is_zero(k->slope)) {
        term *= JetExpression::atom(a, p);
        continue;
      }
      if (!c) throw UnsupportedError("kernel atoms can only be evaluated on a constant reference function");
      term *= detail::kernel_at(*k, *c).pow(static_cast<unsigned>(p));
    }
    r += term;
  }
  return r;
}

namespace detail {

// Scaling map u_v -> ut_v + lambda (u_v - ut_v) for the given coordinates.
inline std::map<JetCoordinate, std::pair<JetExpression, JetExpression>> homotopy_map(const std::set<JetCoordinate>& coords,
                                                                                   const JetExpression& ut) {
  std::map<JetCoordinate, std::pair<JetExpression, JetExpression>> map;
  for (const auto& v : coords) {
    if (!v.is_derivative()) continue;
    const JetExpression base = reference_jet(ut, v);
    map.emplace(v, std::pair(base, JetExpression::coordinate(v) - base));
  }
  return map;
}

inline std::set<JetCoordinate> with_u(std::set<JetCoordinate> s) {
  s.insert(JetCoordinate::u());
  return s;
}

// A(u) when F = A(u) u_xx + A'(u)/2 u_x^2, i.e. F = c (c u_x)_x with A = c^2.
inline std::optional<JetExpression> wave_speed_squared(const PdeSpec& pde) {
  const JetExpression A = partial_derivative(pde.rhs, JetCoordinate::u(0, 2));
  for (const auto& v : A.dependencies())
    if (!(v == JetCoordinate::u())) return std::nullopt;
  const JetExpression expected = A * JetExpression::u(0, 2) +
                                 partial_derivative(A, JetCoordinate::u()) * JetExpression::u(0, 1).pow(2) * make_rational(1, 2);
  if (!(expected == pde.rhs)) return std::nullopt;
  return A;
}

// Lambda affine in (u, u_t, u_x) with coefficients in (t, x), and Lambda_{x u_t} = 0.
inline bool reduced_wave_formula_applies(const JetExpression& lambda) {
  for (const auto& [m, c] : lambda.terms()) {
    if (!m.atoms.empty()) return false;
    int deg = 0;
    for (const auto& [v, p] : m.coords) {
      if (!v.is_derivative()) continue;
      if (!(v == JetCoordinate::u() || v == JetCoordinate::u(1, 0) || v == JetCoordinate::u(0, 1))) return false;
      deg += p;
    }
    if (deg > 1) return false;
  }
  const JetExpression mixed = partial_derivative(partial_derivative(lambda, JetCoordinate::u(1, 0)), JetCoordinate::x());
  return mixed.is_zero();
}

}  // namespace detail

/// Phi^t from a multiplier by integration along u_lambda = ut + lambda (u - ut).
inline JetExpression homotopy_density(const PdeSpec& pde, const JetExpression& lambda,
                                      const JetExpression& utilde = JetExpression()) {
  check_admissible(pde, lambda);
  const JetExpression u = JetExpression::u();
  switch (pde.shape()) {
    case Shape::UT: {
      detail::check_reference(utilde, false);
      const auto map = detail::homotopy_map(detail::with_u(lambda.dependencies()), utilde);
      return (u - utilde) * detail::integrate_unit_interval(detail::scale(lambda, map));
    }
    case Shape::UTX: {
      detail::check_reference(utilde, false);
      const auto map = detail::homotopy_map(detail::with_u(lambda.dependencies()), utilde);
      const JetExpression ux = JetExpression::u(0, 1) - total_derivative(utilde, Direction::X);
      return ux * detail::integrate_unit_interval(detail::scale(lambda, map));
    }
    case Shape::UTT: break;
  }

  detail::check_reference(utilde, true);
  const JetExpression ut = JetExpression::u(1, 0);
  const auto c = utilde.constant_value();
  const auto A = detail::wave_speed_squared(pde);
  if (c && A && detail::reduced_wave_formula_applies(lambda)) {
    // Two-point form, valid up to a trivial density for this class of multipliers.
    auto d = [&](const JetExpression& e, const JetCoordinate& v) { return partial_derivative(e, v); };
    const JetExpression L_ref = at_reference(lambda, utilde);
    const JetExpression Lux_ref = at_reference(d(lambda, JetCoordinate::u(0, 1)), utilde);
    const JetExpression Lt = d(lambda, JetCoordinate::t());
    const JetExpression Lu_ref = at_reference(d(lambda, JetCoordinate::u()), utilde);
    const JetExpression Lut_ref = at_reference(d(lambda, JetCoordinate::u(1, 0)), utilde);
    const Rational half = make_rational(1, 2);
    return half * ut * (lambda + L_ref + total_derivative((u - utilde) * Lux_ref, Direction::X)) +
           half * (utilde - u) * (Lt + at_reference(Lt, utilde) + ut * Lu_ref) +
           half * JetExpression::u(0, 1).pow(2) * *A * Lut_ref;
  }

  // General form: integral of (u_t - ut_t) Lambda[u_lambda] + (ut - u) D_t Lambda[u_lambda],
  // plus t * integral K(lambda t, lambda x).
  SolutionChart chart(pde);
  const JetExpression DtL = chart.total_t(lambda);
  const auto map = detail::homotopy_map(detail::with_u(DtL.dependencies()), utilde);
  const auto map_l = detail::homotopy_map(detail::with_u(lambda.dependencies()), utilde);
  JetExpression phi = (ut - total_derivative(utilde, Direction::T)) * detail::integrate_unit_interval(detail::scale(lambda, map_l)) +
                      (utilde - u) * detail::integrate_unit_interval(detail::scale(DtL, map));
  const JetExpression K =
      (total_derivative(utilde, Direction::T, 2) - at_reference(pde.rhs, utilde)) * at_reference(lambda, utilde);
  if (!K.is_zero()) {
    std::map<JetCoordinate, std::pair<JetExpression, JetExpression>> tx;
    tx.emplace(JetCoordinate::t(), std::pair(JetExpression(), JetExpression::t()));
    tx.emplace(JetCoordinate::x(), std::pair(JetExpression(), JetExpression::x()));
    phi += JetExpression::t() * detail::integrate_unit_interval(detail::scale(K, tx));
  }
  return phi;
}

inline EulerBase euler_base(Shape s) {
  switch (s) {
    case Shape::UT: return EulerBase::UFullX;
    case Shape::UTT: return EulerBase::UT;
    case Shape::UTX: return EulerBase::UX;
  }
  return EulerBase::UFullX;
}

inline IbpPolicy ibp_policy(Shape s) { return IbpPolicy{s != Shape::UTX}; }

/// Lambda recovered from Phi^t by the shape's restricted Euler operator.
inline JetExpression multiplier_from_density(const PdeSpec& pde, const JetExpression& density_t) {
  if (!in_solution_space(pde.shape(), density_t)) throw DomainError("density is not in solution-space coordinates");
  return restricted_euler(density_t, euler_base(pde.shape()));
}

/// Phi^x with D_t Phi^t + D_x Phi^x = 0 on solutions. Throws NotExactError when
/// -D_t Phi^t is not a total x-derivative.
inline JetExpression flux_density(const PdeSpec& pde, const JetExpression& density_t) {
  SolutionChart chart(pde);
  return invert_total_x_derivative(-chart.total_t(density_t));
}

/// The multiplier characterizing the law: D_t Phi^t + D_x Phi^x = sum Q_a D^a G
/// off the solution space, and the characteristic is sum (-D)^a Q_a on solutions.
inline JetExpression characteristic(const PdeSpec& pde, const JetExpression& density_t, const JetExpression& density_x) {
  SolutionChart marked(pde, true);
  const JetExpression div = marked.reduce(total_derivative(density_t, Direction::T) + total_derivative(density_x, Direction::X));
  JetExpression raw;
  for (const auto& [key, coef] : detail::collect_by_markers(div)) {
    if (key.size() != 1 || key[0].second != 1) continue;
    const auto& g = std::get<EquationMarker>(key[0].first);
    raw += signed_total_derivative(coef, g.t_order, g.x_order);
  }
  SolutionChart chart(pde);
  return chart.reduce(raw);
}

inline JetExpression conservation_residual(const PdeSpec& pde, const JetExpression& density_t, const JetExpression& density_x) {
  SolutionChart chart(pde);
  return chart.reduce(total_derivative(density_t, Direction::T) + total_derivative(density_x, Direction::X));
}

/// Replaces Phi^t by its integration-by-parts core and recomputes Phi^x.
inline ConservationLaw normalize_density(ConservationLaw cl) {
  cl.density_t = ibp_normal_form(cl.density_t, ibp_policy(cl.pde.shape())).core;
  cl.density_x = flux_density(cl.pde, cl.density_t);
  return cl;
}

struct Verification {
  bool conserved = false;
  bool multiplier = false;
  bool relation = false;
  JetExpression residual;  // D_t Phi^t + D_x Phi^x on solutions
  bool ok() const { return conserved && multiplier && relation; }
};

inline Verification verify_details(const ConservationLaw& cl) {
  Verification v;
  const Shape shape = cl.pde.shape();
  if (!in_solution_space(shape, cl.density_t) || !in_solution_space(shape, cl.density_x)) return v;
  v.residual = conservation_residual(cl.pde, cl.density_t, cl.density_x);
  v.conserved = v.residual.is_zero();
  try {
    v.multiplier = determining_expression(cl.pde, cl.multiplier).is_zero();
  } catch (const DomainError&) {
    v.multiplier = false;
  }
  if (v.conserved && v.multiplier) {
    v.relation = (multiplier_from_density(cl.pde, cl.density_t) - cl.multiplier).is_zero() ||
                 (characteristic(cl.pde, cl.density_t, cl.density_x) - cl.multiplier).is_zero();
  }
  return v;
}

inline bool verify(const ConservationLaw& cl) { return verify_details(cl).ok(); }

/// Full construction: homotopy density, normal form, flux, verification. Failures
/// of the flux inversion yield an unverified law with an empty flux.
inline ConservationLaw make_conservation_law(const PdeSpec& pde, const JetExpression& lambda,
                                             const JetExpression& utilde = JetExpression()) {
  ConservationLaw cl{pde, lambda, {}, {}, utilde, false};
  cl.density_t = ibp_normal_form(homotopy_density(pde, lambda, utilde), ibp_policy(pde.shape())).core;
  try {
    cl.density_x = flux_density(pde, cl.density_t);
  } catch (const NotExactError&) {
    return cl;
  }
  cl.verified = verify(cl);
  return cl;
}

}  // namespace claw
