#pragma once

// Finite multiplier ansatz, assembly of the linear system for its coefficients,
// and exact nullspace computation.

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>
#include <vector>

#include "claw/detsys.hpp"

namespace claw {

struct AnsatzBounds {
  int order = 1;     // highest x-derivative order p
  int deg_tx = 1;    // total degree in t, x
  int deg_u = 1;     // total degree in u and its derivatives
  std::vector<JetExpression> atoms;  // extra factors, each multiplying every monomial
};

struct AnsatzSpace {
  std::vector<JetExpression> basis;
  AnsatzBounds bounds;
  std::vector<JetCoordinate> arity;
  std::size_t enumerated = 0;  // candidates before removing duplicates and dependent ones
};

// ---------------------------------------------------------------------------
// Sparse exact linear algebra.

using SparseRow = std::map<std::size_t, Rational>;

/// Row-echelon accumulator over the integers (fraction-free, gcd-normalized).
class EchelonForm {
public:
  using IntRow = std::map<std::size_t, Integer>;

  /// Adds a row; returns false if it was dependent on the rows already present.
  bool add(const SparseRow& row) {
    IntRow r = to_integer(row);
    for (;;) {
      if (r.empty()) return false;
      const std::size_t lead = r.begin()->first;
      auto it = pivots_.find(lead);
      if (it == pivots_.end()) break;
      eliminate(r, it->second, lead);
    }
    const std::size_t lead = r.begin()->first;
    pivots_.emplace(lead, std::move(r));
    return true;
  }

  std::size_t rank() const { return pivots_.size(); }

  /// Basis of {c : row . c = 0 for every row} in `columns` unknowns. Each vector
  /// has entry 1 at its free column and zero at every other free column.
  std::vector<SparseRow> nullspace(std::size_t columns) {
    reduce_fully();
    std::vector<SparseRow> out;
    for (std::size_t f = 0; f < columns; ++f) {
      if (pivots_.contains(f)) continue;
      SparseRow v;
      v[f] = 1;
      for (const auto& [p, row] : pivots_) {
        auto it = row.find(f);
        if (it == row.end()) continue;
        Rational val(-it->second, row.at(p));
        val.canonicalize();
        v[p] = val;
      }
      out.push_back(std::move(v));
    }
    return out;
  }

private:
  static IntRow to_integer(const SparseRow& row) {
    Integer l = 1;
    for (const auto& [k, v] : row)
      if (sgn(v) != 0) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den().get_mpz_t());
    IntRow r;
    for (const auto& [k, v] : row)
      if (sgn(v) != 0) r.emplace(k, Integer(v.get_num() * (l / v.get_den())));
    normalize(r);
    return r;
  }

  static void normalize(IntRow& r) {
    Integer g = 0;
    for (const auto& [k, v] : r) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), v.get_mpz_t());
    if (g == 0 || g == 1) return;
    for (auto& [k, v] : r) mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), g.get_mpz_t());
  }

  // r <- p[col]*r - r[col]*p, which clears column col.
  static void eliminate(IntRow& r, const IntRow& p, std::size_t col) {
    const Integer a = p.at(col);
    const Integer b = r.at(col);
    Integer g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    const Integer sa = a / g, sb = b / g;
    for (auto& [k, v] : r) v *= sa;
    for (const auto& [k, v] : p) {
      auto [it, inserted] = r.try_emplace(k, 0);
      it->second -= sb * v;
    }
    std::erase_if(r, [](const auto& kv) { return sgn(kv.second) == 0; });
    normalize(r);
  }

  void reduce_fully() {
    for (auto it = pivots_.rbegin(); it != pivots_.rend(); ++it) {
      const std::size_t col = it->first;
      for (auto& [p, row] : pivots_) {
        if (p == col || !row.contains(col)) continue;
        eliminate(row, it->second, col);
      }
    }
  }

  std::map<std::size_t, IntRow> pivots_;
};

struct RationalLinearSystem {
  std::size_t columns = 0;
  // Row key: (equation index, monomial signature of the collected coefficient).
  std::map<std::pair<std::size_t, Monomial>, SparseRow> rows;
};

/// Exact nullspace; vectors ordered by their free column.
inline std::vector<SparseRow> nullspace(const RationalLinearSystem& sys) {
  EchelonForm ef;
  for (const auto& [key, row] : sys.rows) ef.add(row);
  return ef.nullspace(sys.columns);
}

// ---------------------------------------------------------------------------
// Ansatz generation.

namespace detail {

// All exponent vectors of length n with total degree <= d.
inline void enumerate_degrees(std::size_t n, int d, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (cur.size() == n) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k <= d; ++k) {
    cur.push_back(k);
    enumerate_degrees(n, d - k, cur, out);
    cur.pop_back();
  }
}

inline int jet_order_of(const JetExpression& e) {
  int best = 0;
  for (const auto& v : e.dependencies())
    if (v.is_derivative()) best = std::max(best, v.total_order());
  return best;
}

}  // namespace detail

inline AnsatzSpace generate_ansatz_basis(const PdeSpec& pde, const AnsatzBounds& bounds) {
  if (bounds.order < 0 || bounds.deg_tx < 0 || bounds.deg_u < 0) throw DomainError("ansatz bounds must be nonnegative");
  AnsatzSpace space;
  space.bounds = bounds;
  space.arity = default_arity(pde.shape(), bounds.order);
  for (const auto& a : bounds.atoms) {
    if (a.has_unknowns() || a.has_markers()) throw DomainError("ansatz atom contains internal atoms");
    for (const auto& v : a.dependencies())
      if (std::find(space.arity.begin(), space.arity.end(), v) == space.arity.end())
        throw DomainError("ansatz atom depends on a coordinate outside the multiplier arity");
  }

  std::vector<JetCoordinate> indep, jet;
  for (const auto& v : space.arity) (v.is_derivative() ? jet : indep).push_back(v);

  std::vector<std::vector<int>> tx_degs, jet_degs;
  std::vector<int> cur;
  detail::enumerate_degrees(indep.size(), bounds.deg_tx, cur, tx_degs);
  detail::enumerate_degrees(jet.size(), bounds.deg_u, cur, jet_degs);

  struct Candidate {
    std::tuple<int, int, int, int, std::size_t> key;
    JetExpression e;
  };
  std::vector<Candidate> cands;
  std::vector<JetExpression> factors{JetExpression(1)};
  factors.insert(factors.end(), bounds.atoms.begin(), bounds.atoms.end());
  for (std::size_t f = 0; f < factors.size(); ++f)
    for (const auto& td : tx_degs)
      for (const auto& jd : jet_degs) {
        Monomial m;
        int tx = 0, ud = 0;
        for (std::size_t i = 0; i < indep.size(); ++i) {
          if (td[i]) m.coords.emplace_back(indep[i], td[i]);
          tx += td[i];
        }
        for (std::size_t i = 0; i < jet.size(); ++i) {
          if (jd[i]) m.coords.emplace_back(jet[i], jd[i]);
          ud += jd[i];
        }
        JetExpression e = JetExpression::from_raw(m, 1) * factors[f];
        if (e.is_zero()) continue;
        const int order = detail::jet_order_of(e);
        cands.push_back({{tx, order, ud, static_cast<int>(f), cands.size()}, std::move(e)});
      }
  space.enumerated = cands.size();
  // Simple candidates first, so that elimination leaves the complex ones free.
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.key < b.key; });

  std::map<Monomial, std::size_t> monomial_index;
  EchelonForm independence;
  for (auto& c : cands) {
    SparseRow row;
    for (const auto& [m, coef] : c.e.terms()) {
      auto [it, inserted] = monomial_index.try_emplace(m, monomial_index.size());
      row[it->second] = coef;
    }
    if (independence.add(row)) space.basis.push_back(std::move(c.e));
  }
  if (space.basis.empty()) throw DomainError("empty ansatz basis");
  return space;
}

/// Number of candidates the bounds enumerate: C(n_tx + d_tx, d_tx) * C(n_jet + d_u, d_u) * (1 + #atoms).
inline std::size_t ansatz_enumeration_count(const PdeSpec& pde, const AnsatzBounds& b) {
  const auto arity = default_arity(pde.shape(), b.order);
  const auto n_jet = static_cast<unsigned long>(std::count_if(arity.begin(), arity.end(), [](const auto& v) { return v.is_derivative(); }));
  const auto n_tx = arity.size() - n_jet;
  const Integer c = binomial(n_tx + static_cast<unsigned long>(b.deg_tx), static_cast<unsigned long>(b.deg_tx)) *
                    binomial(n_jet + static_cast<unsigned long>(b.deg_u), static_cast<unsigned long>(b.deg_u)) *
                    static_cast<unsigned long>(1 + b.atoms.size());
  return c.get_ui();
}

namespace detail {

// Partial derivative of e by the multi-index `orders` over `arity`.
inline JetExpression multi_partial(const JetExpression& e, const std::vector<JetCoordinate>& arity,
                                   const std::vector<int>& orders) {
  JetExpression r = e;
  for (std::size_t i = 0; i < arity.size() && !r.is_zero(); ++i)
    for (int k = 0; k < orders[i] && !r.is_zero(); ++k) r = partial_derivative(r, arity[i]);
  return r;
}

}  // namespace detail

/// Substitutes Lambda = sum c_i basis_i into every equation and collects one row
/// per (equation, monomial).
inline RationalLinearSystem assemble(const DeterminingSystem& system, const AnsatzSpace& ansatz) {
  if (system.arity != ansatz.arity) throw DomainError("ansatz arity does not match the determining system");
  RationalLinearSystem out;
  out.columns = ansatz.basis.size();
  std::map<std::vector<int>, std::vector<JetExpression>> derivs;
  auto derivatives_for = [&](const std::vector<int>& orders) -> const std::vector<JetExpression>& {
    auto it = derivs.find(orders);
    if (it != derivs.end()) return it->second;
    std::vector<JetExpression> d;
    d.reserve(ansatz.basis.size());
    for (const auto& b : ansatz.basis) d.push_back(detail::multi_partial(b, ansatz.arity, orders));
    return derivs.emplace(orders, std::move(d)).first->second;
  };

  for (std::size_t eq = 0; eq < system.equations.size(); ++eq) {
    // Coefficients grouped by unknown-derivative atom, then one product per basis element.
    std::map<std::vector<int>, JetExpression::TermMap> by_unknown;
    for (const auto& [m, c] : system.equations[eq].terms()) {
      const UnknownDerivative* ud = nullptr;
      Monomial rest;
      rest.coords = m.coords;
      for (const auto& [a, p] : m.atoms) {
        if (const auto* u = std::get_if<UnknownDerivative>(&a)) {
          if (ud != nullptr || p != 1) throw InternalError("determining equation is nonlinear in the multiplier");
          ud = u;
        } else {
          rest.atoms.emplace_back(a, p);
        }
      }
      if (ud == nullptr) throw InternalError("determining equation term without the multiplier");
      detail::add_canonical(by_unknown[ud->orders], std::move(rest), c);
    }
    for (auto& [orders, terms] : by_unknown) {
      const JetExpression coef = JetExpression::from_canonical(std::move(terms));
      const auto& d = derivatives_for(orders);
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i].is_zero()) continue;
        const JetExpression prod = coef * d[i];
        for (const auto& [m, c] : prod.terms()) {
          auto& row = out.rows[{eq, m}];
          auto [it, inserted] = row.try_emplace(i, c);
          if (!inserted) {
            it->second += c;
            if (sgn(it->second) == 0) row.erase(it);
          }
        }
      }
    }
  }
  std::erase_if(out.rows, [](const auto& kv) { return kv.second.empty(); });
  return out;
}

/// Multiplier for a nullspace vector.
inline JetExpression instantiate(const AnsatzSpace& ansatz, const SparseRow& v) {
  JetExpression r;
  for (const auto& [i, c] : v) r += ansatz.basis.at(i) * c;
  return r;
}

}  // namespace claw
