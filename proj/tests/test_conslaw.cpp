#include <gtest/gtest.h>

#include "claw/conslaw.hpp"

using namespace claw;

namespace {

JetExpression P(const char* s, const ParamMap& pm = {}) { return parse_expression(s, pm); }

// Equal modulo trivial densities: the restricted Euler operator annihilates the difference.
bool equivalent(const PdeSpec& pde, const JetExpression& a, const JetExpression& b) {
  return multiplier_from_density(pde, a - b).is_zero();
}

}  // namespace

TEST(Conslaw, KdvDensities) {
  const PdeSpec kdv = parse_pde("u_t + u*u_x + u_xxx = 0");
  EXPECT_EQ(homotopy_density(kdv, P("1")), P("u"));
  EXPECT_EQ(homotopy_density(kdv, P("u")), P("1/2*u^2"));
  const auto cl = make_conservation_law(kdv, P("u_xx + 1/2*u^2"));
  EXPECT_EQ(cl.density_t, P("1/6*u^3 - 1/2*u_x^2"));
  EXPECT_TRUE(cl.verified);
  const auto g = make_conservation_law(kdv, P("t*u - x"));
  EXPECT_EQ(g.density_t, P("1/2*t*u^2 - x*u"));
  EXPECT_TRUE(g.verified);
}

TEST(Conslaw, GeneralizedKdvDensities) {
  for (int n = 1; n <= 4; ++n) {
    const ParamMap pm{{"n", Rational(n)}};
    const PdeSpec p = parse_pde("u_t + u^n*u_x + u_xxx = 0", pm);
    const auto cl = make_conservation_law(p, P("u_xx + u^(n+1)/(n+1)", pm));
    EXPECT_TRUE(cl.verified) << n;
    EXPECT_TRUE(equivalent(p, cl.density_t, P("-1/2*u_x^2 + u^(n+2)/((n+1)*(n+2))", pm))) << n;
  }
  const ParamMap pm{{"n", Rational(2)}};
  const PdeSpec p2 = parse_pde("u_t + u^n*u_x + u_xxx = 0", pm);
  EXPECT_TRUE(make_conservation_law(p2, P("t*(u_xx + u^3/3) - x*u/3")).verified);
  const PdeSpec p3 = parse_pde("u_t + u^3*u_x + u_xxx = 0");
  EXPECT_FALSE(make_conservation_law(p3, P("t*(u_xx + u^3/3) - x*u/3")).verified);
}

TEST(Conslaw, WaveDensities) {
  const PdeSpec w = parse_pde("u_tt = pow(u, -4)*u_xx - 2*pow(u, -5)*u_x^2");
  const auto energy = make_conservation_law(w, P("u_t"));
  EXPECT_EQ(energy.density_t, P("1/2*u_t^2 + 1/2*pow(u, -4)*u_x^2"));
  EXPECT_EQ(energy.density_x, P("-pow(u, -4)*u_x*u_t"));
  EXPECT_TRUE(energy.verified);
  const auto tc = make_conservation_law(w, P("t^2*u_t - t*u"));
  EXPECT_TRUE(tc.verified);
  EXPECT_TRUE(equivalent(w, tc.density_t, P("1/2*t^2*u_t^2 - t*u*u_t + 1/2*u^2 + 1/2*t^2*u_x^2*pow(u, -4)")));
  const auto xc = make_conservation_law(w, P("x^2*u_x + x*u"));
  EXPECT_TRUE(xc.verified);
  EXPECT_TRUE(equivalent(w, xc.density_t, P("x^2*u_x*u_t + x*u*u_t")));
  const auto boost = make_conservation_law(w, P("t*u_t - x*u_x - u"));
  EXPECT_TRUE(boost.verified);
  EXPECT_TRUE(equivalent(w, boost.density_t, P("1/2*t*u_t^2 - (x*u_x + u)*u_t + 1/2*t*u_x^2*pow(u, -4)")));
}

TEST(Conslaw, KleinGordonDensities) {
  const PdeSpec sg = parse_pde("u_tx = sin(u)");
  const auto a = make_conservation_law(sg, P("u_xxx + 1/2*u_x^3"));
  EXPECT_EQ(a.density_t, P("-1/2*u_xx^2 + 1/8*u_x^4"));
  EXPECT_EQ(a.density_x, P("1/2*u_x^2*cos(u)"));
  EXPECT_TRUE(a.verified);
  const auto b = make_conservation_law(sg, P("-u_x"));
  EXPECT_EQ(b.density_t, P("-1/2*u_x^2"));
  EXPECT_EQ(b.density_x, P("-cos(u)"));

  const PdeSpec sh = parse_pde("u_tx = exp(u) + exp(-u)");
  EXPECT_EQ(make_conservation_law(sh, P("u_xxx - 1/2*u_x^3")).density_t, P("-1/2*u_xx^2 - 1/8*u_x^4"));

  const PdeSpec li = parse_pde("u_tx = exp(u)");
  const auto f = make_conservation_law(li, P("1 + x*u_x"));
  EXPECT_TRUE(f.verified);
  EXPECT_EQ(f.density_x, P("-x*exp(u)"));
}

TEST(Conslaw, RoundTripMultiplier) {
  struct Case {
    const char* pde;
    const char* lambda;
  };
  for (const Case& c : {Case{"u_t + u*u_x + u_xxx = 0", "u_xx + 1/2*u^2"}, Case{"u_t + u*u_x + u_xxx = 0", "t*u - x"},
                        Case{"u_tt = pow(u, -4)*u_xx - 2*pow(u, -5)*u_x^2", "u_t"},
                        Case{"u_tt = pow(u, -4)*u_xx - 2*pow(u, -5)*u_x^2", "x^2*u_x + x*u"},
                        Case{"u_tx = sin(u)", "u_xxx + 1/2*u_x^3"}, Case{"u_tx = exp(u)", "1 + x*u_x"}}) {
    const PdeSpec p = parse_pde(c.pde);
    const JetExpression lam = P(c.lambda);
    EXPECT_EQ(multiplier_from_density(p, homotopy_density(p, lam)), lam) << c.pde << " | " << c.lambda;
  }
}

TEST(Conslaw, NonzeroReference) {
  const PdeSpec kdv = parse_pde("u_t + u*u_x + u_xxx = 0");
  const auto cl = make_conservation_law(kdv, P("u"), P("1"));
  EXPECT_TRUE(cl.verified);
  EXPECT_TRUE(equivalent(kdv, cl.density_t, P("1/2*u^2")));
  EXPECT_THROW(homotopy_density(kdv, P("u"), P("u_x")), DomainError);
}

TEST(Conslaw, VerifyRejectsWrongPairs) {
  const PdeSpec kdv = parse_pde("u_t + u*u_x + u_xxx = 0");
  ConservationLaw bad{kdv, P("u"), P("1/2*u^2"), P("u^3/3"), {}, false};
  const auto v = verify_details(bad);
  EXPECT_FALSE(v.conserved);
  EXPECT_FALSE(v.residual.is_zero());
  ConservationLaw mism{kdv, P("1"), P("1/2*u^2"), P("1/3*u^3 + u*u_xx - 1/2*u_x^2"), {}, false};
  const auto m = verify_details(mism);
  EXPECT_TRUE(m.conserved);
  EXPECT_FALSE(m.relation);
}

TEST(Conslaw, PolesAreReported) {
  EXPECT_THROW(at_reference(P("pow(u - 1, -1)*u_x + u"), P("1")), SingularError);
  EXPECT_EQ(at_reference(P("pow(u - 1, -1)"), P("3")), P("1/2"));
}
