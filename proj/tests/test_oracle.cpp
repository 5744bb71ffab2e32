#include <gtest/gtest.h>

#include <fstream>
#include <json.hpp>

#include "claw/numcheck.hpp"

using namespace claw;
using nlohmann::json;

namespace {

json load(const std::string& name) {
  std::ifstream in(std::string(CLAW_ORACLE_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing oracle file " + name);
  return json::parse(in);
}

JetExpression P(const std::string& s) { return parse_expression(s); }

}  // namespace

TEST(Oracle, EulerExpansions) {
  const json data = load("euler_oracle.json");
  ASSERT_GE(data["euler"].size(), 9u);
  for (const auto& [name, c] : data["euler"].items()) {
    const PdeSpec pde = parse_pde(c["G"].get<std::string>() + " = 0");
    const JetExpression lam = P(c["lambda"]);
    EXPECT_EQ(euler_operator(pde.G() * lam), P(c["E"])) << name;
    EXPECT_EQ(determining_expression(pde, lam).is_zero(), c["E"] == "0") << name;
  }
}

TEST(Oracle, ConservedCurrents) {
  const json data = load("euler_oracle.json");
  const std::map<std::string, std::string> multipliers = {
      {"kdv_mass", "1"},         {"kdv_momentum", "u"},          {"kdv_energy", "u_xx + 1/2*u^2"},
      {"kdv_galilean", "t*u - x"}, {"sg_first_order", "-u_x"}, {"sg_second_order", "u_xxx + 1/2*u_x^3"}};
  ASSERT_EQ(data["currents"].size(), multipliers.size());
  for (const auto& [name, c] : data["currents"].items()) {
    ASSERT_EQ(c["on_shell_residual"], "0") << name;
    const PdeSpec pde = parse_pde(c["leading"].get<std::string>() + " = " + c["rhs"].get<std::string>());
    const JetExpression density = P(c["density"]), flux = P(c["flux"]);
    EXPECT_TRUE(conservation_residual(pde, density, flux).is_zero()) << name;
    const auto cl = make_conservation_law(pde, P(multipliers.at(name)));
    EXPECT_TRUE(cl.verified) << name;
    EXPECT_EQ(cl.density_t, density) << name;
    EXPECT_EQ(cl.density_x, flux) << name;
  }
}

TEST(Oracle, KdvDriftAgainstSpectralReference) {
  const json ref = load("refinement_oracle.json");
  const PdeSpec kdv = parse_pde(ref["pde"].get<std::string>());
  GridConfig cfg;
  cfg.L = ref["L"];
  cfg.T = ref["T"];
  cfg.N = ref["N"];
  const InitialData id = make_initial(ref["initial"], cfg);
  const Trajectory tr = integrate_pde(kdv, id.u, cfg);
  const auto& d = ref["drift"];
  // The spectral reference conserves the laws to roundoff, so the finite-difference
  // drift is pure discretization error; the probe drift is a property of the solution.
  EXPECT_LE(d["mass"].get<double>(), 1e-12);
  EXPECT_LE(d["momentum"].get<double>(), 1e-12);
  EXPECT_LE(d["energy"].get<double>(), 1e-12);
  EXPECT_LE(conserved_drift(make_conservation_law(kdv, P("1")), tr), 1e-10);
  EXPECT_LE(conserved_drift(make_conservation_law(kdv, P("u")), tr), 1e-6);
  EXPECT_LE(conserved_drift(make_conservation_law(kdv, P("u_xx + 1/2*u^2")), tr), 1e-6);
  EXPECT_NEAR(density_drift(kdv, P("u^3"), tr), d["probe_u3"].get<double>(), 1e-4);
}
