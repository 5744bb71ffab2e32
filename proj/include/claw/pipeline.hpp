#pragma once

// End-to-end derivation: determining system, ansatz nullspace, densities and
// verification for every multiplier found.

#include <chrono>
#include <future>
#include <string>
#include <vector>

#include "claw/conslaw.hpp"
#include "claw/linsolve.hpp"

namespace claw {

struct LawRecord {
  ConservationLaw law;
  bool determining_zero = false;
  std::string error;  // set when no density could be built
};

struct DeriveResult {
  PdeSpec pde;
  AnsatzSpace ansatz;
  std::size_t equations = 0;
  std::size_t rows = 0;
  std::vector<LawRecord> laws;
  double seconds = 0;

  std::vector<JetExpression> multipliers() const {
    std::vector<JetExpression> out;
    for (const auto& r : laws) out.push_back(r.law.multiplier);
    return out;
  }
  bool all_verified() const {
    for (const auto& r : laws)
      if (!r.law.verified || !r.determining_zero) return false;
    return true;
  }
};

/// Density and verification for one multiplier; failures are recorded, not thrown.
inline LawRecord build_law(const PdeSpec& pde, const JetExpression& lambda, const JetExpression& utilde = {}) {
  LawRecord rec;
  rec.law.pde = pde;
  rec.law.multiplier = lambda;
  rec.law.utilde = utilde;
  try {
    rec.determining_zero = determining_expression(pde, lambda).is_zero();
    rec.law = make_conservation_law(pde, lambda, utilde);
  } catch (const Error& e) {
    rec.error = e.what();
    rec.law.verified = false;
  }
  return rec;
}

inline DeriveResult derive(const PdeSpec& pde, const AnsatzBounds& bounds, const JetExpression& utilde = {}) {
  const auto start = std::chrono::steady_clock::now();
  DeriveResult res;
  res.pde = pde;
  res.ansatz = generate_ansatz_basis(pde, bounds);
  const DeterminingSystem sys = split_determining_system(pde, res.ansatz.arity);
  res.equations = sys.equations.size();
  const RationalLinearSystem lin = assemble(sys, res.ansatz);
  res.rows = lin.rows.size();
  for (const auto& v : nullspace(lin)) res.laws.push_back(build_law(pde, instantiate(res.ansatz, v), utilde));
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

namespace detail {

inline SparseRow coefficient_row(const JetExpression& e, std::map<Monomial, std::size_t>& index) {
  SparseRow row;
  for (const auto& [m, c] : e.terms()) row[index.try_emplace(m, index.size()).first->second] = c;
  return row;
}

}  // namespace detail

/// Dimension of the rational span of the expressions.
inline std::size_t span_rank(const std::vector<JetExpression>& exprs) {
  std::map<Monomial, std::size_t> index;
  EchelonForm ef;
  for (const auto& e : exprs) ef.add(detail::coefficient_row(e, index));
  return ef.rank();
}

inline bool in_span(const std::vector<JetExpression>& basis, const JetExpression& target) {
  std::vector<JetExpression> all = basis;
  all.push_back(target);
  return span_rank(all) == span_rank(basis);
}

inline bool same_span(const std::vector<JetExpression>& a, const std::vector<JetExpression>& b) {
  std::vector<JetExpression> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t r = span_rank(all);
  return r == span_rank(a) && r == span_rank(b);
}

struct ScanPoint {
  std::string name;
  long value = 0;
  DeriveResult result;
};

/// Re-runs the whole pipeline for each parameter value; points run concurrently and
/// come back in parameter order. `deg_u` may depend on the scanned parameter.
inline std::vector<ScanPoint> scan(const std::string& pde_text, ParamMap params, const std::string& name, long from, long to,
                                   const AnsatzBounds& bounds, const std::string& deg_u_expr = {},
                                   const JetExpression& utilde = {}) {
  if (from > to) throw DomainError("empty scan range");
  std::vector<std::future<ScanPoint>> jobs;
  for (long v = from; v <= to; ++v) {
    ParamMap pm = params;
    pm[name] = Rational(v);
    jobs.push_back(std::async(std::launch::async, [=] {
      AnsatzBounds b = bounds;
      if (!deg_u_expr.empty()) {
        const JetExpression d = parse_expression(deg_u_expr, pm);
        const auto c = d.constant_value();
        if (!c || !is_integer(*c) || sgn(*c) < 0) throw DomainError("u-degree must evaluate to a nonnegative integer");
        b.deg_u = static_cast<int>(*to_long(*c));
      }
      return ScanPoint{name, v, derive(parse_pde(pde_text, pm), b, utilde)};
    }));
  }
  std::vector<ScanPoint> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace claw
