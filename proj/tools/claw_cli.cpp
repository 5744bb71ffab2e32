// claw: derive, verify and numerically check conservation laws of evolution,
// wave and Klein-Gordon type equations.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "claw/numcheck.hpp"
#include "claw/pipeline.hpp"

using namespace claw;
using nlohmann::json;

namespace {

struct Options {
  std::string pde;
  std::vector<std::string> params;
  int order = 1;
  int deg_tx = 1;
  std::string deg_u = "1";
  std::string atoms;
  std::string utilde = "0";
  std::string scan;
  std::string format = "text";
  std::string out;
  std::vector<std::string> lambdas;
  std::string density, flux;
  // numcheck
  std::vector<std::string> probes;
  std::string init = "gaussian";
  double L = 40, T = 1, dt = 0, tol = 1e-6;
  std::vector<int> N{256};
  std::string csv;
};

std::string read_pde(const std::string& arg) {
  if (std::filesystem::is_regular_file(arg)) {
    std::ifstream in(arg);
    std::string line;
    while (std::getline(in, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos && line[line.find_first_not_of(" \t")] != '#') return line;
    throw DomainError("no equation found in " + arg);
  }
  return arg;
}

ParamMap read_params(const std::vector<std::string>& items) {
  ParamMap pm;
  for (const auto& s : items) pm.insert_or_assign(parse_param(s).first, parse_param(s).second);
  return pm;
}

// Splits on commas outside parentheses and braces.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '{') ++depth;
    if (c == ')' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (cur.find_first_not_of(' ') != std::string::npos) out.push_back(cur);
  return out;
}

int eval_int(const std::string& text, const ParamMap& pm, const char* what) {
  const auto c = parse_expression(text, pm).constant_value();
  if (!c || !is_integer(*c) || sgn(*c) < 0) throw DomainError(std::string(what) + " must be a nonnegative integer");
  return static_cast<int>(*to_long(*c));
}

AnsatzBounds read_bounds(const Options& o, const ParamMap& pm) {
  AnsatzBounds b;
  b.order = o.order;
  b.deg_tx = o.deg_tx;
  b.deg_u = eval_int(o.deg_u, pm, "--deg-u");
  for (const auto& a : split_list(o.atoms)) b.atoms.push_back(parse_expression(a, pm));
  return b;
}

json params_json(const ParamMap& pm) {
  json j = json::object();
  for (const auto& [k, v] : pm) j[k] = to_string(v);
  return j;
}

json ansatz_json(const AnsatzSpace& s) {
  json atoms = json::array(), arity = json::array();
  for (const auto& a : s.bounds.atoms) atoms.push_back(render(a));
  for (const auto& v : s.arity) arity.push_back(render(JetExpression::coordinate(v)));
  return {{"order", s.bounds.order}, {"deg_tx", s.bounds.deg_tx}, {"deg_u", s.bounds.deg_u}, {"atoms", atoms},
          {"arity", arity},          {"basis_size", s.basis.size()}, {"enumerated", s.enumerated}};
}

json law_json(const LawRecord& r) {
  json j = {{"pde", r.law.pde.text()},
            {"lambda", render(r.law.multiplier)},
            {"phi_t", render(r.law.density_t)},
            {"phi_x", render(r.law.density_x)},
            {"utilde", render(r.law.utilde)},
            {"determining_zero", r.determining_zero},
            {"verified", r.law.verified && r.determining_zero}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

void text_law(std::ostream& os, const LawRecord& r, std::size_t i) {
  os << "  [" << i << "] lambda = " << render(r.law.multiplier) << "\n"
     << "      phi_t  = " << render(r.law.density_t) << "\n"
     << "      phi_x  = " << render(r.law.density_x) << "\n"
     << "      " << (r.law.verified && r.determining_zero ? "verified" : "NOT verified");
  if (!r.error.empty()) os << " (" << r.error << ")";
  os << "\n";
}

struct Output {
  json doc;
  std::ostringstream text;
  bool ok = true;
};

void emit(const Options& o, const Output& out) {
  std::ostringstream buf;
  if (o.format == "json")
    buf << out.doc.dump(2) << "\n";
  else
    buf << out.text.str();
  if (o.out.empty()) {
    std::cout << buf.str();
  } else {
    std::ofstream f(o.out);
    if (!f) throw DomainError("cannot write " + o.out);
    f << buf.str();
  }
}

Output run_derive(const Options& o) {
  const ParamMap pm = read_params(o.params);
  const PdeSpec pde = parse_pde(read_pde(o.pde), pm);
  const DeriveResult r = derive(pde, read_bounds(o, pm), parse_expression(o.utilde, pm));
  Output out;
  json laws = json::array();
  for (const auto& l : r.laws) laws.push_back(law_json(l));
  out.doc = {{"command", "derive"}, {"pde", pde.text()},    {"params", params_json(pm)}, {"ansatz", ansatz_json(r.ansatz)},
             {"laws", laws},        {"dimensions", r.laws.size()}, {"equations", r.equations}, {"rows", r.rows}};
  out.text << "pde: " << pde.text() << " (" << shape_name(pde.shape()) << ")\n"
           << "ansatz: " << r.ansatz.basis.size() << " basis functions, " << r.equations << " determining equations, "
           << r.rows << " linear conditions\n"
           << "multipliers: " << r.laws.size() << "\n";
  for (std::size_t i = 0; i < r.laws.size(); ++i) text_law(out.text, r.laws[i], i);
  out.ok = r.all_verified();
  return out;
}

Output run_verify(const Options& o) {
  const ParamMap pm = read_params(o.params);
  const PdeSpec pde = parse_pde(read_pde(o.pde), pm);
  if (o.lambdas.empty()) throw DomainError("verify needs at least one --lambda");
  if ((!o.density.empty() || !o.flux.empty()) && o.lambdas.size() != 1)
    throw DomainError("--density/--flux apply to a single --lambda");
  Output out;
  json laws = json::array();
  out.text << "pde: " << pde.text() << "\n";
  for (const auto& text : o.lambdas) {
    const JetExpression lam = parse_expression(text, pm);
    LawRecord rec;
    if (o.density.empty()) {
      rec = build_law(pde, lam, parse_expression(o.utilde, pm));
    } else {
      rec.law = ConservationLaw{pde, lam, parse_expression(o.density, pm),
                                o.flux.empty() ? JetExpression() : parse_expression(o.flux, pm), {}, false};
      if (o.flux.empty()) rec.law.density_x = flux_density(pde, rec.law.density_t);
      check_admissible(pde, lam);
      rec.determining_zero = determining_expression(pde, lam).is_zero();
      rec.law.verified = verify(rec.law);
    }
    const Verification v = verify_details(rec.law);
    json j = law_json(rec);
    j["checks"] = {{"conserved", v.conserved}, {"multiplier", v.multiplier}, {"relation", v.relation}};
    if (!v.conserved) j["residual"] = render(v.residual);
    if (!rec.determining_zero) j["determining_expression"] = render(determining_expression(pde, lam));
    laws.push_back(j);
    const bool ok = rec.law.verified && rec.determining_zero;
    out.ok &= ok;
    out.text << (ok ? "PASS " : "FAIL ") << render(lam) << "\n";
    if (!ok) {
      if (!rec.error.empty()) out.text << "  error: " << rec.error << "\n";
      if (!rec.determining_zero) out.text << "  E_u(G*lambda) = " << render(determining_expression(pde, lam)) << "\n";
      if (!v.conserved) out.text << "  residual: " << render(v.residual) << "\n";
      else if (!v.relation) out.text << "  density does not correspond to the multiplier\n";
    }
  }
  out.doc = {{"command", "verify"}, {"pde", pde.text()}, {"params", params_json(pm)}, {"laws", laws}, {"all_verified", out.ok}};
  return out;
}

Output run_density(const Options& o) {
  const ParamMap pm = read_params(o.params);
  const PdeSpec pde = parse_pde(read_pde(o.pde), pm);
  if (o.lambdas.size() != 1) throw DomainError("density needs exactly one --lambda");
  const JetExpression lam = parse_expression(o.lambdas.front(), pm);
  check_admissible(pde, lam);
  const LawRecord rec = build_law(pde, lam, parse_expression(o.utilde, pm));
  if (!rec.error.empty()) throw DomainError(rec.error);
  Output out;
  out.doc = {{"command", "density"}, {"pde", pde.text()}, {"params", params_json(pm)}, {"laws", json::array({law_json(rec)})}};
  out.text << "phi_t = " << render(rec.law.density_t) << "\nphi_x = " << render(rec.law.density_x) << "\n"
           << (rec.law.verified && rec.determining_zero ? "verified" : "NOT verified") << "\n";
  out.ok = rec.law.verified && rec.determining_zero;
  return out;
}

Output run_scan(const Options& o) {
  const ParamMap pm = read_params(o.params);
  const auto eq = o.scan.find('=');
  const auto dots = o.scan.find("..");
  if (eq == std::string::npos || dots == std::string::npos || dots < eq) throw DomainError("--scan expects name=a..b");
  const std::string name = o.scan.substr(0, eq);
  long from = 0, to = 0;
  try {
    from = std::stol(o.scan.substr(eq + 1, dots - eq - 1));
    to = std::stol(o.scan.substr(dots + 2));
  } catch (const std::exception&) {
    throw DomainError("--scan bounds must be integers");
  }
  AnsatzBounds b;
  b.order = o.order;
  b.deg_tx = o.deg_tx;
  ParamMap probe = pm;
  probe[name] = Rational(from);
  for (const auto& a : split_list(o.atoms)) b.atoms.push_back(parse_expression(a, probe));
  const auto points = scan(read_pde(o.pde), pm, name, from, to, b, o.deg_u, parse_expression(o.utilde, pm));

  Output out;
  json laws = json::array(), dims = json::object(), per = json::array();
  out.text << "scan " << name << " = " << from << ".." << to << " on " << read_pde(o.pde) << "\n";
  for (const auto& p : points) {
    const std::string key = std::to_string(p.value);
    dims[key] = p.result.laws.size();
    json mult = json::array();
    for (const auto& l : p.result.laws) {
      json j = law_json(l);
      j["param"] = {{name, p.value}};
      laws.push_back(j);
      mult.push_back(render(l.law.multiplier));
    }
    per.push_back({{"value", p.value}, {"ansatz", ansatz_json(p.result.ansatz)}, {"multipliers", mult}});
    out.text << "  " << name << "=" << p.value << ": dimension " << p.result.laws.size() << "\n";
    for (const auto& l : p.result.laws)
      out.text << "      " << render(l.law.multiplier) << (l.law.verified && l.determining_zero ? "" : "   [NOT verified]") << "\n";
    out.ok &= p.result.all_verified();
  }
  out.doc = {{"command", "scan"}, {"pde", read_pde(o.pde)}, {"params", params_json(pm)}, {"scan", name},
             {"points", per},     {"laws", laws},           {"dimensions", dims}};
  return out;
}

Output run_numcheck(const Options& o) {
  const ParamMap pm = read_params(o.params);
  const PdeSpec pde = parse_pde(read_pde(o.pde), pm);
  if (o.lambdas.empty() && o.probes.empty()) throw DomainError("numcheck needs --lambda or --probe");
  std::vector<LawRecord> laws;
  for (const auto& l : o.lambdas) laws.push_back(build_law(pde, parse_expression(l, pm), parse_expression(o.utilde, pm)));
  std::vector<JetExpression> probes;
  for (const auto& p : o.probes) probes.push_back(parse_expression(p, pm));

  Output out;
  json runs = json::array();
  std::vector<std::vector<double>> drift_table(laws.size() + probes.size());
  out.text << "pde: " << pde.text() << "  init: " << o.init << "  L=" << o.L << " T=" << o.T << "\n";
  for (std::size_t level = 0; level < o.N.size(); ++level) {
    GridConfig cfg;
    cfg.L = o.L;
    cfg.N = o.N[level];
    cfg.T = o.T;
    cfg.dt = o.dt > 0 ? o.dt * o.N.front() / o.N[level] : 0;
    const InitialData id = make_initial(o.init, cfg);
    const Trajectory tr = integrate_pde(pde, id.u, cfg, id.v);
    json run = {{"N", cfg.N}, {"dt", tr.dt}, {"steps", tr.steps}, {"laws", json::array()}};
    out.text << "N=" << cfg.N << " dt=" << tr.dt << "\n";
    auto record = [&](std::size_t k, const std::string& label, const JetExpression& density, bool conserved) {
      const auto q = conserved_quantity(pde, density, tr, id.background);
      const double d = drift_of(q);
      drift_table[k].push_back(d);
      run["laws"].push_back({{"id", k}, {"label", label}, {"phi_t", render(density)}, {"conserved", conserved}, {"drift", d}});
      out.text << "  " << (conserved ? "law   " : "probe ") << std::left << std::setw(40) << label << " drift " << std::scientific
               << std::setprecision(3) << d << std::defaultfloat << "\n";
      if (!o.csv.empty()) {
        const std::string base = o.csv + "_N" + std::to_string(cfg.N) + "_" + std::to_string(k);
        std::ofstream f(base + ".csv");
        f << "t,Q,drift\n" << std::setprecision(17);
        for (std::size_t i = 0; i < q.size(); ++i)
          f << tr.snapshots[i].t << "," << q[i] << "," << std::abs(q[i] - q.front()) / std::max(1.0, std::abs(q.front())) << "\n";
        std::ofstream meta(base + ".json");
        meta << json{{"pde", pde.text()}, {"law", k}, {"label", label}, {"phi_t", render(density)},
                     {"cfg", {{"L", cfg.L}, {"N", cfg.N}, {"dt", tr.dt}, {"T", cfg.T}, {"boundary", "periodic"}}},
                     {"init", o.init}}
                    .dump(2)
             << "\n";
      }
    };
    for (std::size_t k = 0; k < laws.size(); ++k) {
      if (!laws[k].law.verified) continue;
      record(k, render(laws[k].law.multiplier), laws[k].law.density_t, true);
    }
    for (std::size_t k = 0; k < probes.size(); ++k) record(laws.size() + k, render(probes[k]), probes[k], false);
    runs.push_back(run);
  }
  json law_docs = json::array();
  for (std::size_t k = 0; k < laws.size(); ++k) {
    json j = law_json(laws[k]);
    j["drift"] = drift_table[k];
    if (!laws[k].law.verified || !laws[k].determining_zero || drift_table[k].empty() || drift_table[k].back() > o.tol) out.ok = false;
    law_docs.push_back(j);
  }
  out.doc = {{"command", "numcheck"}, {"pde", pde.text()}, {"params", params_json(pm)}, {"init", o.init},
             {"laws", law_docs},      {"runs", runs},        {"tolerance", o.tol}};
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservation laws from multipliers"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool ansatz) {
    sub->add_option("--pde", o.pde, "equation text or file holding it")->required();
    sub->add_option("--param", o.params, "parameter k=v (repeatable)");
    sub->add_option("--utilde", o.utilde, "homotopy reference function");
    sub->add_option("--format", o.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    sub->add_option("--out", o.out, "write the report to this file");
    if (ansatz) {
      sub->add_option("--order", o.order, "highest x-derivative order p");
      sub->add_option("--deg-tx", o.deg_tx, "total degree in t, x");
      sub->add_option("--deg-u", o.deg_u, "total degree in u-jet variables (may use parameters)");
      sub->add_option("--atoms", o.atoms, "comma-separated extra ansatz factors");
    }
  };
  auto* derive_cmd = app.add_subcommand("derive", "find multipliers and their conservation laws");
  common(derive_cmd, true);
  auto* verify_cmd = app.add_subcommand("verify", "verify multipliers (and optionally a given density/flux)");
  common(verify_cmd, false);
  verify_cmd->add_option("--lambda", o.lambdas, "multiplier (repeatable)");
  verify_cmd->add_option("--density", o.density, "conserved density to check instead of the constructed one");
  verify_cmd->add_option("--flux", o.flux, "flux to check with --density");
  auto* density_cmd = app.add_subcommand("density", "conserved density and flux for a multiplier");
  common(density_cmd, false);
  density_cmd->add_option("--lambda", o.lambdas, "multiplier")->required();
  auto* scan_cmd = app.add_subcommand("scan", "rerun derive over a parameter range");
  common(scan_cmd, true);
  scan_cmd->add_option("--scan", o.scan, "range name=a..b")->required();
  auto* num_cmd = app.add_subcommand("numcheck", "drift of conserved quantities along numerical solutions");
  common(num_cmd, false);
  num_cmd->add_option("--lambda", o.lambdas, "multiplier whose law is checked (repeatable)");
  num_cmd->add_option("--probe", o.probes, "density expected not to be conserved (repeatable)");
  num_cmd->add_option("--init", o.init, "initial profile, e.g. soliton:c=1,x0=0");
  num_cmd->add_option("--length", o.L, "periodic domain length");
  num_cmd->add_option("--points", o.N, "grid sizes, one run each (repeatable)");
  num_cmd->add_option("--horizon", o.T, "final time");
  num_cmd->add_option("--dt", o.dt, "time step at the first grid size (scaled with dx)");
  num_cmd->add_option("--tol", o.tol, "largest acceptable drift at the last grid size");
  num_cmd->add_option("--csv", o.csv, "prefix for per-law CSV and metadata files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Output out;
    if (derive_cmd->parsed()) out = run_derive(o);
    else if (verify_cmd->parsed()) out = run_verify(o);
    else if (density_cmd->parsed()) out = run_density(o);
    else if (scan_cmd->parsed()) out = run_scan(o);
    else out = run_numcheck(o);
    emit(o, out);
    return out.ok ? 0 : 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 2;
}
