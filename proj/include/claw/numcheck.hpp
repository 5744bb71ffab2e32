#pragma once

// Numerical integration of the three PDE shapes on a periodic grid and drift of
// conserved quantities along the computed trajectories.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "claw/conslaw.hpp"

namespace claw {

using Field = std::vector<double>;

struct GridConfig {
  double L = 40.0;
  int N = 256;
  double dt = 0.0;  // 0 selects safety * stability bound (capped at dx)
  double T = 1.0;
  int records = 20;  // snapshots after t = 0
  double safety = 0.5;
};

struct Snapshot {
  double t = 0.0;
  Field u;
  Field v;  // u_t for the u_tt shape, empty otherwise
};

struct Trajectory {
  GridConfig cfg;
  double dt = 0.0;
  int steps = 0;
  std::vector<Snapshot> snapshots;
  Field x;
};

namespace detail {

// Fourth-order central difference stencils for d^k/dx^k, k = 1..4 (offsets -3..3).
inline const std::array<std::array<double, 7>, 5>& fd_stencils() {
  static const std::array<std::array<double, 7>, 5> s = {{
      {0, 0, 0, 1, 0, 0, 0},
      {0, 1.0 / 12, -8.0 / 12, 0, 8.0 / 12, -1.0 / 12, 0},
      {0, -1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12, 0},
      {1.0 / 8, -1.0, 13.0 / 8, 0, -13.0 / 8, 1.0, -1.0 / 8},
      {-1.0 / 6, 2.0, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2.0, -1.0 / 6},
  }};
  return s;
}

// Largest |symbol| of the k-th stencil, times dx^k.
inline double fd_symbol_max(int k) {
  const auto& s = fd_stencils()[static_cast<std::size_t>(k)];
  double best = 0;
  for (int i = 0; i <= 2000; ++i) {
    const double th = std::numbers::pi * i / 2000;
    std::complex<double> z = 0;
    for (int j = -3; j <= 3; ++j) z += s[static_cast<std::size_t>(j + 3)] * std::polar(1.0, j * th);
    best = std::max(best, std::abs(z));
  }
  return best;
}

inline Field fd_derivative(const Field& u, int k, double dx) {
  const auto n = static_cast<long>(u.size());
  Field d(u.size());
  if (k == 0) return u;
  const auto& s = fd_stencils()[static_cast<std::size_t>(k)];
  const double scale = 1.0 / std::pow(dx, k);
  for (long i = 0; i < n; ++i) {
    double acc = 0;
    for (long j = -3; j <= 3; ++j) {
      const double w = s[static_cast<std::size_t>(j + 3)];
      if (w != 0) acc += w * u[static_cast<std::size_t>(((i + j) % n + n) % n)];
    }
    d[static_cast<std::size_t>(i)] = acc * scale;
  }
  return d;
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Spectral operator on real periodic data: multiplies mode k by symbol(k).
class Spectral {
public:
  Spectral(int n, double L) : n_(n), L_(L), buf_(static_cast<std::size_t>(n)), modes_(static_cast<std::size_t>(n / 2 + 1)) {
    std::lock_guard lock(fftw_planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(n, buf_.data(), reinterpret_cast<fftw_complex*>(modes_.data()), FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(modes_.data()), buf_.data(), FFTW_ESTIMATE);
  }
  ~Spectral() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  Field apply(const Field& u, const std::function<std::complex<double>(double)>& symbol) {
    std::copy(u.begin(), u.end(), buf_.begin());
    fftw_execute(fwd_);
    for (int m = 0; m <= n_ / 2; ++m) {
      const double k = 2 * std::numbers::pi * m / L_;
      std::complex<double> s = symbol(k);
      if (m == n_ / 2 && n_ % 2 == 0) s = std::complex<double>(s.real(), 0);  // Nyquist mode stays real
      modes_[static_cast<std::size_t>(m)] *= s / static_cast<double>(n_);
    }
    fftw_execute(bwd_);
    return buf_;
  }

  Field derivative(const Field& u, int order) {
    if (order == 0) return u;
    return apply(u, [order](double k) { return std::pow(std::complex<double>(0, k), order); });
  }

  /// Zero-mean antiderivative.
  Field antiderivative(const Field& u) {
    return apply(u, [](double k) { return k == 0 ? std::complex<double>(0) : 1.0 / std::complex<double>(0, k); });
  }

private:
  int n_;
  double L_;
  std::vector<double> buf_;
  std::vector<std::complex<double>> modes_;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

// Expression compiled for pointwise evaluation over grid arrays.
class CompiledExpression {
public:
  explicit CompiledExpression(const JetExpression& e) {
    for (const auto& [m, c] : e.terms()) {
      Term term;
      term.coef = to_double(c);
      for (const auto& [v, p] : m.coords) term.coords.emplace_back(slot(v), p);
      for (const auto& [a, p] : m.atoms) {
        const auto* k = std::get_if<KernelAtom>(&a);
        if (k == nullptr) throw DomainError("cannot evaluate internal atoms numerically");
        term.atoms.emplace_back(*k, p);
      }
      terms_.push_back(std::move(term));
    }
  }

  const std::vector<JetCoordinate>& coordinates() const { return coords_; }

  /// values[i] holds the grid values of coordinates()[i]; u is needed for kernel atoms.
  Field evaluate(const std::vector<const Field*>& values, const Field& u) const {
    const std::size_t n = u.size();
    Field out(n, 0.0);
    Field term(n);
    for (const auto& t : terms_) {
      std::fill(term.begin(), term.end(), t.coef);
      for (const auto& [s, p] : t.coords) {
        const Field& f = *values[s];
        for (std::size_t i = 0; i < n; ++i) term[i] *= ipow(f[i], p);
      }
      for (const auto& [k, p] : t.atoms)
        for (std::size_t i = 0; i < n; ++i) {
          const double a = evaluate_kernel(k, u[i]);
          if (!std::isfinite(a))
            throw SingularError("kernel atom " + render_atom(k, 1) + " is singular at u = " + std::to_string(u[i]));
          term[i] *= ipow(a, p);
        }
      for (std::size_t i = 0; i < n; ++i) out[i] += term[i];
    }
    return out;
  }

private:
  struct Term {
    double coef = 0;
    std::vector<std::pair<std::size_t, int>> coords;
    std::vector<std::pair<KernelAtom, int>> atoms;
  };

  static double ipow(double b, int p) {
    double r = 1;
    for (int i = 0; i < p; ++i) r *= b;
    return r;
  }

  std::size_t slot(const JetCoordinate& v) {
    auto it = std::find(coords_.begin(), coords_.end(), v);
    if (it != coords_.end()) return static_cast<std::size_t>(it - coords_.begin());
    coords_.push_back(v);
    return coords_.size() - 1;
  }

  std::vector<JetCoordinate> coords_;
  std::vector<Term> terms_;
};

inline int expression_order(const JetExpression& e) {
  int k = 0;
  for (const auto& v : e.dependencies())
    if (v.is_derivative()) k = std::max(k, v.x_order);
  return k;
}

}  // namespace detail

/// Evaluates jet expressions on grid fields. Derivatives use fourth-order central
/// differences, or spectral differentiation when `spectral` is set.
class GridEvaluator {
public:
  GridEvaluator(const PdeSpec& pde, const GridConfig& cfg, bool spectral)
      : shape_(pde.shape()), rhs_(pde.rhs), cfg_(cfg), dx_(cfg.L / cfg.N), spectral_(spectral), x_(static_cast<std::size_t>(cfg.N)) {
    for (int i = 0; i < cfg.N; ++i) x_[static_cast<std::size_t>(i)] = -cfg.L / 2 + i * dx_;
    if (spectral || shape_ == Shape::UTX) fft_ = std::make_unique<detail::Spectral>(cfg.N, cfg.L);
  }

  const Field& x() const { return x_; }
  double dx() const { return dx_; }

  Field derivative(const Field& f, int k) const {
    if (k > 4 && !spectral_) throw NumericError("finite differences support derivatives up to order 4");
    return spectral_ ? fft_->derivative(f, k) : detail::fd_derivative(f, k, dx_);
  }

  /// u_t on the pure-x chart: zero-mean antiderivative of the right-hand side.
  Field chart_time_derivative(const Field& u) const {
    detail::CompiledExpression g(rhs_);
    return fft_->antiderivative(evaluate_compiled(g, u, {}, 0.0));
  }

  Field evaluate(const JetExpression& e, const Field& u, const Field& v, double t) const {
    detail::CompiledExpression ce(e);
    return evaluate_compiled(ce, u, v, t);
  }

  Field evaluate_compiled(const detail::CompiledExpression& ce, const Field& u, const Field& v, double t) const {
    std::vector<Field> storage;
    storage.reserve(ce.coordinates().size());
    std::vector<const Field*> values;
    Field ut;
    for (const auto& c : ce.coordinates()) {
      if (c == JetCoordinate::x()) {
        values.push_back(&x_);
        continue;
      }
      if (c == JetCoordinate::t()) {
        storage.emplace_back(u.size(), t);
      } else if (c.t_order == 0) {
        storage.push_back(derivative(u, c.x_order));
      } else if (shape_ == Shape::UTT && c.t_order == 1) {
        storage.push_back(derivative(v, c.x_order));
      } else if (shape_ == Shape::UTX && c.x_order == 0) {
        if (c.t_order != 1) throw NumericError("only first time derivatives are available on the pure-x chart");
        if (ut.empty()) ut = chart_time_derivative(u);
        storage.push_back(ut);
      } else {
        throw NumericError("coordinate " + render(JetExpression::coordinate(c)) + " is not available on a time slice");
      }
      values.push_back(&storage.back());
    }
    return ce.evaluate(values, u);
  }

private:
  Shape shape_;
  JetExpression rhs_;
  GridConfig cfg_;
  double dx_;
  bool spectral_;
  Field x_;
  std::unique_ptr<detail::Spectral> fft_;
};

/// Time step bound for classical RK4 on the semi-discrete system at state (u, v).
inline double stability_bound(const PdeSpec& pde, const GridEvaluator& ev, const Field& u, const Field& v, bool spectral) {
  const double dx = ev.dx();
  auto rho = [&](int k) {
    if (k == 0) return 1.0;
    if (spectral) return std::pow(std::numbers::pi / dx, k);
    return detail::fd_symbol_max(k) / std::pow(dx, k);
  };
  const double rk4_imag = 2.8;
  if (pde.shape() == Shape::UTX) {
    const JetExpression dg = partial_derivative(pde.rhs, JetCoordinate::u());
    const Field vals = ev.evaluate(dg, u, v, 0.0);
    double lip = 0;
    for (double d : vals) lip = std::max(lip, std::abs(d));
    const double L = dx * static_cast<double>(u.size());
    return lip == 0 ? dx : rk4_imag / (lip * L / (2 * std::numbers::pi));
  }
  double a = 0, b = 0;  // sum over u-coordinates, and over u_t-coordinates
  for (const auto& c : pde.rhs.dependencies()) {
    if (!c.is_derivative()) continue;
    const Field vals = ev.evaluate(partial_derivative(pde.rhs, c), u, v, 0.0);
    double m = 0;
    for (double d : vals) m = std::max(m, std::abs(d));
    (c.t_order == 0 ? a : b) += m * rho(c.x_order);
  }
  if (pde.shape() == Shape::UT) return a == 0 ? dx : rk4_imag / a;
  const double omega = std::sqrt(a) + b;
  return omega == 0 ? dx : rk4_imag / omega;
}

/// Integrates the PDE with classical RK4 from (u0, v0); v0 is the initial u_t for
/// the u_tt shape and ignored otherwise.
inline Trajectory integrate_pde(const PdeSpec& pde, const Field& u0, const GridConfig& cfg, const Field& v0 = {}) {
  if (cfg.N < 64) throw NumericError("grid needs at least 64 points");
  if (static_cast<int>(u0.size()) != cfg.N) throw NumericError("initial data size does not match the grid");
  if (cfg.T <= 0 || cfg.records < 1) throw NumericError("horizon and record count must be positive");
  const Shape shape = pde.shape();
  const bool spectral = shape == Shape::UTX;
  GridEvaluator ev(pde, cfg, spectral);
  Field v = v0;
  if (shape == Shape::UTT && v.empty()) v.assign(u0.size(), 0.0);
  if (shape == Shape::UTT && v.size() != u0.size()) throw NumericError("initial u_t size does not match the grid");

  // Conservative form D_x(theta) when the right-hand side is an exact x-derivative.
  std::optional<detail::CompiledExpression> flux, rhs;
  if (shape == Shape::UT) {
    try {
      flux.emplace(invert_total_x_derivative(pde.rhs));
    } catch (const Error&) {
    }
  }
  if (!flux) rhs.emplace(pde.rhs);

  auto f = [&](const Field& u, const Field& w, double t, Field& du, Field& dw) {
    switch (shape) {
      case Shape::UT:
        du = flux ? ev.derivative(ev.evaluate_compiled(*flux, u, w, t), 1) : ev.evaluate_compiled(*rhs, u, w, t);
        break;
      case Shape::UTT:
        du = w;
        dw = ev.evaluate_compiled(*rhs, u, w, t);
        break;
      case Shape::UTX:
        du = ev.chart_time_derivative(u);
        break;
    }
  };

  Trajectory traj;
  traj.cfg = cfg;
  traj.x = ev.x();
  double dt = cfg.dt;
  if (dt <= 0) dt = cfg.safety * std::min(stability_bound(pde, ev, u0, v, spectral), ev.dx());
  const int per_record = std::max(1, static_cast<int>(std::ceil(cfg.T / cfg.records / dt)));
  traj.steps = per_record * cfg.records;
  traj.dt = cfg.T / traj.steps;
  dt = traj.dt;

  double scale = 1.0;
  for (double a : u0) scale = std::max(scale, std::abs(a));
  Field u = u0;
  traj.snapshots.push_back({0.0, u, v});
  const std::size_t n = u.size();
  Field k1u, k2u, k3u, k4u, k1v, k2v, k3v, k4v, tu(n), tv(shape == Shape::UTT ? n : 0);
  for (int step = 1; step <= traj.steps; ++step) {
    const double t = (step - 1) * dt;
    auto stage = [&](const Field& du, const Field& dv, double h) {
      for (std::size_t i = 0; i < n; ++i) tu[i] = u[i] + h * du[i];
      for (std::size_t i = 0; i < tv.size(); ++i) tv[i] = v[i] + h * dv[i];
    };
    f(u, v, t, k1u, k1v);
    stage(k1u, k1v, dt / 2);
    f(tu, tv, t + dt / 2, k2u, k2v);
    stage(k2u, k2v, dt / 2);
    f(tu, tv, t + dt / 2, k3u, k3v);
    stage(k3u, k3v, dt);
    f(tu, tv, t + dt, k4u, k4v);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += dt / 6 * (k1u[i] + 2 * k2u[i] + 2 * k3u[i] + k4u[i]);
      if (!std::isfinite(u[i]) || std::abs(u[i]) > 1e6 * scale) {
        std::ostringstream msg;
        msg << "blow-up at t=" << step * dt << ", x=" << traj.x[i] << " (|u|=" << std::abs(u[i]) << ", dt=" << dt << ")";
        throw NumericError(msg.str());
      }
    }
    for (std::size_t i = 0; i < tv.size(); ++i) v[i] += dt / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
    if (step % per_record == 0) traj.snapshots.push_back({step * dt, u, v});
  }
  return traj;
}

/// Q(t) = dx * sum (density[u] - density[background]) on each snapshot.
inline std::vector<double> conserved_quantity(const PdeSpec& pde, const JetExpression& density, const Trajectory& traj,
                                              std::optional<double> background = std::nullopt) {
  const bool spectral = pde.shape() == Shape::UTX;
  GridEvaluator ev(pde, traj.cfg, spectral);
  const detail::CompiledExpression ce(density);
  if (detail::expression_order(density) > 4 && !spectral) throw NumericError("density order exceeds the stencil set");
  std::vector<double> q;
  for (const auto& s : traj.snapshots) {
    Field vals = ev.evaluate_compiled(ce, s.u, s.v, s.t);
    if (background) {
      const Field ub(s.u.size(), *background);
      const Field vb(s.v.size(), 0.0);
      const Field base = ev.evaluate_compiled(ce, ub, vb, s.t);
      for (std::size_t i = 0; i < vals.size(); ++i) vals[i] -= base[i];
    }
    double sum = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!std::isfinite(vals[i]))
        throw SingularError("density is singular at x=" + std::to_string(traj.x[i]) + ", t=" + std::to_string(s.t));
      sum += vals[i];
    }
    q.push_back(sum * ev.dx());
  }
  return q;
}

inline double drift_of(const std::vector<double>& q) {
  double worst = 0;
  for (double v : q) worst = std::max(worst, std::abs(v - q.front()));
  return worst / std::max(1.0, std::abs(q.front()));
}

/// Relative drift of any density (used for negative controls).
inline double density_drift(const PdeSpec& pde, const JetExpression& density, const Trajectory& traj,
                            std::optional<double> background = std::nullopt) {
  return drift_of(conserved_quantity(pde, density, traj, background));
}

inline double conserved_drift(const ConservationLaw& cl, const Trajectory& traj, std::optional<double> background = std::nullopt) {
  if (!cl.verified) throw DomainError("drift is only defined for verified conservation laws");
  return density_drift(cl.pde, cl.density_t, traj, background);
}

// ---------------------------------------------------------------------------
// Initial profiles.

struct InitialData {
  Field u;
  Field v;
  std::optional<double> background;
};

/// Named profiles on the grid [-L/2, L/2):
///   soliton:c,x0          3c sech^2(sqrt(c)/2 (x - x0))      (KdV, n = 1)
///   gaussian:a,w,x0       a exp(-((x - x0)/w)^2)
///   bump:base,a,w         base + a exp(-(x/w)^2), zero velocity
///   odd:a,b               a sin(kx) + b cos(3kx), k = 2 pi / L (odd modes only)
///   zero
inline InitialData make_initial(const std::string& spec, const GridConfig& cfg) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  std::map<std::string, double> p;
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw DomainError("initial profile parameters are name=value pairs");
      p[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
  }
  auto get = [&](const char* k, double d) {
    auto it = p.find(k);
    return it == p.end() ? d : it->second;
  };
  InitialData data;
  const double dx = cfg.L / cfg.N;
  data.u.resize(static_cast<std::size_t>(cfg.N));
  for (int i = 0; i < cfg.N; ++i) {
    const double x = -cfg.L / 2 + i * dx;
    double val = 0;
    if (kind == "soliton") {
      const double c = get("c", 1), x0 = get("x0", 0);
      const double s = 1 / std::cosh(std::sqrt(c) / 2 * (x - x0));
      val = 3 * c * s * s;
    } else if (kind == "gaussian") {
      const double w = get("w", 2), x0 = get("x0", 0);
      val = get("a", 1) * std::exp(-((x - x0) / w) * ((x - x0) / w));
    } else if (kind == "bump") {
      const double w = get("w", 1);
      val = get("base", 1) + get("a", 0.5) * std::exp(-(x / w) * (x / w));
      data.background = get("base", 1);
    } else if (kind == "odd") {
      const double k = 2 * std::numbers::pi / cfg.L;
      val = get("a", 1) * std::sin(k * x) + get("b", 0.3) * std::cos(3 * k * x);
    } else if (kind != "zero") {
      throw DomainError("unknown initial profile '" + kind + "'");
    }
    data.u[static_cast<std::size_t>(i)] = val;
  }
  return data;
}

}  // namespace claw
