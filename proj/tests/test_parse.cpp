#include <gtest/gtest.h>

#include "claw/parse.hpp"

using namespace claw;

TEST(Parse, GrammarExample) {
  const JetExpression e = parse_expression("u_t + u^2*u_x + u_xxx");
  ASSERT_EQ(e.size(), 3u);
  for (const auto& [m, c] : e.terms()) EXPECT_EQ(c, 1);
}

TEST(Parse, ZeroIsEmpty) {
  EXPECT_TRUE(parse_expression("0").is_zero());
  EXPECT_TRUE(parse_expression("u - u").terms().empty());
}

TEST(Parse, DerivativeNamesAreOrderInsensitive) {
  EXPECT_EQ(parse_expression("u_tx"), parse_expression("u_xt"));
  EXPECT_EQ(parse_expression("u_xtx"), JetExpression::u(1, 2));
}

TEST(Parse, RationalsAndPrecedence) {
  EXPECT_EQ(parse_expression("3/2*u"), make_rational(3, 2) * JetExpression::u());
  EXPECT_EQ(parse_expression("-u^2"), -JetExpression::u().pow(2));
  EXPECT_EQ(parse_expression("(u + 1)^2"), parse_expression("u^2 + 2*u + 1"));
  EXPECT_EQ(parse_expression("u/2"), make_rational(1, 2) * JetExpression::u());
  EXPECT_EQ(parse_expression("2^-1"), JetExpression(make_rational(1, 2)));
}

TEST(Parse, FunctionsAndPowers) {
  EXPECT_EQ(parse_expression("pow(u - 1, -1/2)"),
            JetExpression::atom(KernelAtom::pow(1, make_rational(-1, 2))));
  EXPECT_EQ(parse_expression("(u - 1)^(-1/2)"), parse_expression("pow(u - 1, -1/2)"));
  EXPECT_EQ(parse_expression("1/u^2"), parse_expression("pow(u, -2)"));
  EXPECT_EQ(parse_expression("1/exp(u)"), parse_expression("exp(-u)"));
  EXPECT_EQ(parse_expression("exp(u)^(1/2)"), parse_expression("exp(1/2*u)"));
  EXPECT_EQ(parse_expression("(4*u)^(1/2)"), parse_expression("2*pow(u, 1/2)"));
  EXPECT_EQ(parse_expression("1/(2*u + 2)"), parse_expression("1/2*pow(u + 1, -1)"));
}

TEST(Parse, PostfixTotalDerivative) {
  EXPECT_EQ(parse_expression("(u*u_x)_x"), parse_expression("u_x^2 + u*u_xx"));
  EXPECT_EQ(parse_expression("(sin(u))_t"), parse_expression("cos(u)*u_t"));
}

TEST(Parse, Parameters) {
  ParamMap params{{"n", 2}, {"u_0", make_rational(1, 3)}};
  EXPECT_EQ(parse_expression("u^n*u_x", params), parse_expression("u^2*u_x"));
  EXPECT_EQ(parse_expression("pow(u - u_0, -2)", params), parse_expression("pow(u - 1/3, -2)"));
  auto [name, value] = parse_param("c0=3/4");
  EXPECT_EQ(name, "c0");
  EXPECT_EQ(value, make_rational(3, 4));
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse_expression("u +"), ParseError);
  EXPECT_THROW(parse_expression("foo*u"), ParseError);
  EXPECT_THROW(parse_expression("1.5*u"), ParseError);
  EXPECT_THROW(parse_expression("1e3"), ParseError);
  EXPECT_THROW(parse_expression("sin(u_x)"), ParseError);
  EXPECT_THROW(parse_expression("u/u_x"), ParseError);
  EXPECT_THROW(parse_expression("u_x^(1/2)"), ParseError);
  EXPECT_THROW(parse_expression("(u"), ParseError);
  try {
    parse_expression("u + 1.5");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  try {
    parse_expression("u * bogus");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
    EXPECT_NE(std::string(e.what()).find("unknown symbol"), std::string::npos);
  }
}

TEST(Parse, RenderRoundTrip) {
  for (const char* text : {"0", "1", "-3/2*u^2*u_x + t*x", "exp(2*u + 1)*u_t - sin(u)^2",
                           "pow(u + 1, -1/2) + cos(3/2*u - 1)", "exp(1)*u_xxx", "L{t,x,u,u_x|u_x,u_x}*G{1,0}^2",
                           "u_tx*u_tt - 7", "-u"}) {
    const JetExpression e = parse_expression(text);
    EXPECT_EQ(parse_expression(render(e)), e) << text << " -> " << render(e);
  }
}

TEST(Parse, RenderIsReadable) {
  EXPECT_EQ(render(parse_expression("u_x*u*u*3/2")), "3/2*u^2*u_x");
  EXPECT_EQ(render(parse_expression("pow(u - 1, -1/2)")), "pow(u - 1, -1/2)");
  EXPECT_EQ(render(parse_expression("-u_xx")), "-u_xx");
}
