#include <gtest/gtest.h>

#include <cmath>

#include "claw/numcheck.hpp"

using namespace claw;

namespace {

JetExpression P(const char* s) { return parse_expression(s); }

const char* kKdv = "u_t + u*u_x + u_xxx = 0";

Trajectory run(const PdeSpec& pde, const char* init, double L, int N, double T, InitialData* out = nullptr, double dt = 0) {
  GridConfig cfg;
  cfg.L = L;
  cfg.N = N;
  cfg.T = T;
  cfg.dt = dt;
  InitialData id = make_initial(init, cfg);
  Trajectory tr = integrate_pde(pde, id.u, cfg, id.v);
  if (out) *out = id;
  return tr;
}

}  // namespace

TEST(Numcheck, StencilsAreFourthOrder) {
  for (int k = 1; k <= 4; ++k) {
    double prev = 0;
    for (int n : {64, 128}) {
      const double L = 2 * std::numbers::pi, dx = L / n;
      Field u(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = std::sin(i * dx);
      const Field d = detail::fd_derivative(u, k, dx);
      double err = 0;
      for (int i = 0; i < n; ++i) {
        const double exact = std::sin(i * dx + k * std::numbers::pi / 2);
        err = std::max(err, std::abs(d[static_cast<std::size_t>(i)] - exact));
      }
      if (prev > 0) {
        EXPECT_NEAR(prev / err, 16.0, 2.0) << "k=" << k;
      }
      prev = err;
    }
  }
}

TEST(Numcheck, SpectralAntiderivative) {
  const int n = 64;
  const double L = 10;
  detail::Spectral sp(n, L);
  Field u(n), expect(n);
  for (int i = 0; i < n; ++i) {
    const double x = -L / 2 + i * L / n, k = 2 * std::numbers::pi / L;
    u[static_cast<std::size_t>(i)] = std::cos(3 * k * x);
    expect[static_cast<std::size_t>(i)] = std::sin(3 * k * x) / (3 * k);
  }
  const Field a = sp.antiderivative(u);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(a[static_cast<std::size_t>(i)], expect[static_cast<std::size_t>(i)], 1e-12);
}

TEST(Numcheck, KdvMassIsExactAndMomentumConvergesAtFourthOrder) {
  const PdeSpec kdv = parse_pde(kKdv);
  const auto mass = make_conservation_law(kdv, P("1"));
  const auto momentum = make_conservation_law(kdv, P("u"));
  std::vector<double> drifts;
  for (int n : {128, 256}) {
    const Trajectory tr = run(kdv, "gaussian:a=1,w=2", 40, n, 0.5);
    EXPECT_LE(conserved_drift(mass, tr), 1e-10);
    drifts.push_back(conserved_drift(momentum, tr));
  }
  EXPECT_GT(drifts[0] / drifts[1], 10.0);
  EXPECT_LT(drifts[1], 5e-6);
  const Trajectory tr = run(kdv, "gaussian:a=1,w=2", 40, 128, 0.5);
  EXPECT_GT(density_drift(kdv, P("u^3"), tr), 1e-2);
}

TEST(Numcheck, SolitonTravelsAtItsSpeed) {
  const PdeSpec kdv = parse_pde(kKdv);
  const Trajectory tr = run(kdv, "soliton:c=1,x0=0", 40, 256, 1.0);
  const Field& u = tr.snapshots.back().u;
  const auto peak = std::max_element(u.begin(), u.end()) - u.begin();
  EXPECT_NEAR(tr.x[static_cast<std::size_t>(peak)], 1.0, 0.2);
  EXPECT_NEAR(u[static_cast<std::size_t>(peak)], 3.0, 1e-2);
}

TEST(Numcheck, WaveEnergyConverges) {
  const PdeSpec w = parse_pde("u_tt = pow(u, -4)*u_xx - 2*pow(u, -5)*u_x^2");
  const auto energy = make_conservation_law(w, P("u_t"));
  std::vector<double> drifts;
  for (int n : {256, 512}) {
    InitialData id;
    const Trajectory tr = run(w, "bump:base=1,a=0.5,w=1", 40, n, 1.0, &id);
    drifts.push_back(conserved_drift(energy, tr, id.background));
  }
  EXPECT_GT(drifts[0] / drifts[1], 8.0);
}

TEST(Numcheck, SineGordonChart) {
  const PdeSpec sg = parse_pde("u_tx = sin(u)");
  const auto law = make_conservation_law(sg, P("u_xxx + 1/2*u_x^3"));
  std::vector<double> drifts;
  for (int n : {64, 128}) {
    const Trajectory tr = run(sg, "odd:a=1,b=0.3", 20, n, 1.0, nullptr, 3.2 / n);
    drifts.push_back(conserved_drift(law, tr));
  }
  EXPECT_GT(drifts[0] / drifts[1], 10.0);
  EXPECT_LT(drifts[1], 1e-6);
}

TEST(Numcheck, ZeroDataStaysZero) {
  for (const char* pde : {"u_tx = sin(u)", "u_t + u*u_x + u_xxx = 0", "u_tt = u_xx + u^3"}) {
    const Trajectory tr = run(parse_pde(pde), "zero", 20, 64, 0.5);
    for (const auto& s : tr.snapshots)
      for (double v : s.u) EXPECT_EQ(v, 0.0) << pde;
  }
}

TEST(Numcheck, Errors) {
  const PdeSpec blow = parse_pde("u_t = u^2");
  GridConfig cfg;
  cfg.N = 64;
  cfg.T = 2;
  EXPECT_THROW(integrate_pde(blow, Field(64, 1.0), cfg), NumericError);
  cfg.N = 32;
  EXPECT_THROW(integrate_pde(blow, Field(32, 1.0), cfg), NumericError);

  const PdeSpec kdv = parse_pde(kKdv);
  const Trajectory tr = run(kdv, "gaussian", 40, 64, 0.1);
  ConservationLaw unverified{kdv, P("u_x"), P("u"), P("0"), {}, false};
  EXPECT_THROW(conserved_drift(unverified, tr), DomainError);
  const Trajectory zero = run(kdv, "zero", 40, 64, 0.1);
  EXPECT_THROW(density_drift(kdv, P("pow(u, -1)"), zero), SingularError);
  EXPECT_THROW(make_initial("nonsense", GridConfig{}), DomainError);
}
