#include <gtest/gtest.h>

#include "claw/parse.hpp"

using namespace claw;

namespace {

JetExpression P(const char* s) { return parse_expression(s); }

}  // namespace

TEST(Jet, CoordinateOrderIsCanonical) {
  EXPECT_LT(JetCoordinate::t(), JetCoordinate::x());
  EXPECT_LT(JetCoordinate::x(), JetCoordinate::u());
  EXPECT_LT(JetCoordinate::u(), JetCoordinate::u(0, 1));
  EXPECT_LT(JetCoordinate::u(0, 1), JetCoordinate::u(1, 0));
  EXPECT_LT(JetCoordinate::u(1, 0), JetCoordinate::u(0, 2));
  EXPECT_LT(JetCoordinate::u(0, 2), JetCoordinate::u(1, 1));
  EXPECT_EQ(JetCoordinate::u(1, 2).total_order(), 3);
}

TEST(Jet, MergingAndCancellation) {
  const JetExpression u = JetExpression::u(), ux = JetExpression::u(0, 1);
  EXPECT_EQ(u * ux + ux * u, 2 * (u * ux));
  EXPECT_EQ((u * ux + ux * u).size(), 1u);
  EXPECT_TRUE((3 * u - 3 * u).is_zero());
}

TEST(Jet, RawNormalizationMergesRepeatedFactors) {
  Monomial a;
  a.coords = {{JetCoordinate::u(0, 1), 1}, {JetCoordinate::u(), 1}};
  Monomial b;
  b.coords = {{JetCoordinate::u(), 1}, {JetCoordinate::u(0, 1), 1}};
  const JetExpression e = normalize_raw({{a, 1}, {b, 1}});
  EXPECT_EQ(e, P("2*u*u_x"));
  EXPECT_EQ(normalize(e), e);
}

TEST(Jet, SinSquaredRewrite) {
  EXPECT_EQ(P("sin(u)^2 + cos(u)^2"), JetExpression(1));
  EXPECT_EQ(P("sin(u)^3"), P("sin(u) - sin(u)*cos(u)^2"));
  for (const auto& [m, c] : P("sin(2*u)^5*cos(2*u)").terms())
    for (const auto& [a, p] : m.atoms) {
      if (std::get<KernelAtom>(a).family == KernelAtom::Family::Sin) {
        EXPECT_LE(p, 1);
      }
    }
}

TEST(Jet, TrigArgumentSign) {
  EXPECT_EQ(P("sin(-u)"), P("-sin(u)"));
  EXPECT_EQ(P("cos(-u)"), P("cos(u)"));
  EXPECT_TRUE(P("sin(0*u)").is_zero());
  EXPECT_EQ(P("cos(0)"), JetExpression(1));
}

TEST(Jet, ExpAtomsMerge) {
  EXPECT_EQ(P("exp(u)*exp(-u)"), JetExpression(1));
  EXPECT_EQ(P("exp(u)*exp(u + 1)"), P("exp(2*u + 1)"));
  EXPECT_EQ(P("exp(u)^3").size(), 1u);
}

TEST(Jet, PowAtomsCollapseToPolynomials) {
  EXPECT_EQ(P("pow(u - 1, 1/2)^2"), P("u - 1"));
  EXPECT_EQ(P("pow(u, -2)*u^2"), JetExpression(1));
  EXPECT_EQ(P("pow(u, -2)*u^3"), P("u"));
  EXPECT_EQ(P("u*pow(u + 1, -1)"), P("1 - pow(u + 1, -1)"));
  EXPECT_EQ(P("pow(u, 1/2)*pow(u, 1/2)"), P("u"));
}

TEST(Jet, SubstituteExamples) {
  const JetCoordinate ut = JetCoordinate::u(1, 0);
  EXPECT_EQ(substitute(P("u_t*u"), ut, P("-u*u_x - u_xxx")), P("-u^2*u_x - u*u_xxx"));
  EXPECT_EQ(substitute(P("u_x^2"), ut, P("u^5")), P("u_x^2"));
  EXPECT_EQ(substitute(P("u_t^2"), ut, P("2*u")), P("4*u^2"));
}

TEST(Jet, SubstituteRejectsSelfReference) {
  const JetCoordinate ut = JetCoordinate::u(1, 0);
  EXPECT_THROW(substitute(P("u_t"), ut, P("u_t + u")), DomainError);
  EXPECT_THROW(substitute(P("u_t"), ut, P("u_tx")), DomainError);
  EXPECT_NO_THROW(substitute(P("u_t"), ut, P("u_xx")));
}

TEST(Jet, MaximalOrder) {
  EXPECT_EQ(P("3").maximal_order(), std::make_pair(0, 0));
  EXPECT_EQ(P("u*u_xx + u_t").maximal_order(), std::make_pair(0, 2));
  EXPECT_EQ(P("u_tx + u_xx").maximal_order(), std::make_pair(1, 1));
  EXPECT_EQ(P("t*x").maximal_order(), std::make_pair(0, 0));
}

TEST(Jet, EvaluateMatchesHandComputation) {
  const JetExpression e = P("u^2*u_x + exp(u)*t - 1/2*sin(2*u)");
  auto value = [](const JetCoordinate& v) {
    if (v == JetCoordinate::t()) return 0.5;
    if (v == JetCoordinate::u()) return 0.3;
    if (v == JetCoordinate::u(0, 1)) return -1.25;
    return 0.0;
  };
  const double expected = 0.09 * -1.25 + std::exp(0.3) * 0.5 - 0.5 * std::sin(0.6);
  EXPECT_NEAR(evaluate(e, value), expected, 1e-14);
}

TEST(Jet, NegativeDerivativePowerRejected) {
  Monomial m;
  m.coords = {{JetCoordinate::u(0, 1), -1}};
  EXPECT_THROW(JetExpression::from_raw(m, 1), DomainError);
}
