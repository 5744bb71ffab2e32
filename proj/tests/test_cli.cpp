#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sys/wait.h>

using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
};

Result claw(const std::string& args) {
  const std::string cmd = std::string(CLAW_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST(Cli, DeriveKdvJson) {
  const auto r = claw("derive --pde 'u_t + u*u_x + u_xxx = 0' --order 2 --deg-tx 1 --deg-u 2 --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["dimensions"], 4);
  EXPECT_EQ(j["ansatz"]["basis_size"], 30);
  std::vector<std::string> lambdas;
  for (const auto& l : j["laws"]) {
    EXPECT_TRUE(l["verified"].get<bool>());
    lambdas.push_back(l["lambda"]);
  }
  EXPECT_NE(std::find(lambdas.begin(), lambdas.end(), "t*u - x"), lambdas.end());
  // Deterministic output.
  EXPECT_EQ(claw("derive --pde 'u_t + u*u_x + u_xxx = 0' --order 2 --deg-tx 1 --deg-u 2 --format json").out, r.out);
}

TEST(Cli, RenderedOutputsParseBack) {
  const auto r = claw("derive --pde 'u_tx = exp(u)' --order 3 --deg-tx 1 --deg-u 3 --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  for (const auto& l : json::parse(r.out)["laws"]) {
    const auto v = claw("verify --pde 'u_tx = exp(u)' --lambda '" + l["lambda"].get<std::string>() + "' --density '" +
                        l["phi_t"].get<std::string>() + "' --flux '" + l["phi_x"].get<std::string>() + "'");
    EXPECT_EQ(v.code, 0) << v.out;
  }
}

TEST(Cli, ScanKdv) {
  const auto r = claw("scan --pde 'u_t + u^n*u_x + u_xxx = 0' --scan n=1..4 --order 2 --deg-tx 1 --deg-u 'n+1' --format json");
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["dimensions"], json({{"1", 4}, {"2", 4}, {"3", 3}, {"4", 3}}));
  EXPECT_EQ(j["points"].size(), 4u);
  EXPECT_EQ(j["points"][0]["value"], 1);
}

TEST(Cli, VerifyExitCodes) {
  EXPECT_EQ(claw("verify --pde 'u_tx = exp(u)' --lambda '1 + x*u_x'").code, 0);
  const auto bad = claw("verify --pde 'u_t + u*u_x + u_xxx = 0' --lambda u_x");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
  EXPECT_NE(bad.out.find("E_u(G*lambda)"), std::string::npos);
  const auto mixed = claw("verify --pde 'u_t + u*u_x + u_xxx = 0' --lambda 1 --lambda u_x");
  EXPECT_EQ(mixed.code, 1);
  const auto wrong = claw("verify --pde 'u_t + u*u_x + u_xxx = 0' --lambda u --density 'u^3' --flux 0");
  EXPECT_EQ(wrong.code, 1);
  EXPECT_NE(wrong.out.find("residual"), std::string::npos);
}

TEST(Cli, DensityText) {
  const auto r = claw("density --pde 'u_tx = sin(u)' --lambda 'u_xxx + u_x^3/2'");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("phi_t = 1/8*u_x^4 - 1/2*u_xx^2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("phi_x = 1/2*u_x^2*cos(u)"), std::string::npos) << r.out;
}

TEST(Cli, InputErrors) {
  auto r = claw("derive --pde 'u_t + u_x = 1.5'");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("position 12"), std::string::npos) << r.out;
  EXPECT_EQ(claw("derive --pde 'u_xx = u'").code, 2);
  EXPECT_EQ(claw("derive --pde 'u_t = u_xx' --format yaml").code, 2);
  EXPECT_EQ(claw("scan --pde 'u_t = u_xx' --scan n=3..1").code, 2);
  EXPECT_EQ(claw("density --pde 'u_t = u_xx' --lambda u_t").code, 2);
  EXPECT_EQ(claw("frobnicate").code, 2);
}

TEST(Cli, PdeFromFileAndOutFile) {
  const std::string pde = testing::TempDir() + "/claw_pde.txt", out = testing::TempDir() + "/claw_out.json";
  std::ofstream(pde) << "# wave equation\nu_tt = (u^2*u_x)_x - u*u_x^2\n";
  ASSERT_EQ(claw("derive --pde " + pde + " --order 1 --deg-tx 2 --deg-u 1 --format json --out " + out).code, 0);
  std::ifstream in(out);
  EXPECT_EQ(json::parse(in)["dimensions"], 3);
}

TEST(Cli, Numcheck) {
  const std::string prefix = testing::TempDir() + "/claw_num";
  const auto r = claw("numcheck --pde 'u_t + u*u_x + u_xxx = 0' --lambda 1 --lambda u --probe 'u^3' --points 128 --points 256 "
                      "--horizon 0.5 --tol 1e-5 --format json --csv " + prefix);
  ASSERT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["laws"].size(), 2u);
  const auto& d = j["laws"][1]["drift"];
  EXPECT_GT(d[0].get<double>() / d[1].get<double>(), 10.0);
  std::ifstream csv(prefix + "_N256_2.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,Q,drift");
  EXPECT_EQ(claw("numcheck --pde 'u_t + u*u_x + u_xxx = 0' --lambda u --points 128 --horizon 0.5 --tol 1e-12").code, 1);
}
