#include "dpp/cases.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "dpp/drivers.hpp"
#include "dpp/io.hpp"
#include "dpp/radial_oracle.hpp"
#include "dpp/verify.hpp"

namespace dpp {

// ---------------------------------------------------------------- Config --

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t cpos = std::min(line.find('#'), line.find(';'));
    if (cpos != std::string::npos) line = line.substr(0, cpos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections[section][key] = value;
  }
  return cfg;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in);
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto s = sections.find(section);
  if (s == sections.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string Config::require(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw ConfigError("missing config key [" + section + "] " + key);
  return sections.at(section).at(key);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections.at(section).at(key);
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key [" + section + "] " + key + ": '" + v + "' is not a number");
  }
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = sections.at(section).at(key);
  try {
    size_t pos = 0;
    int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config key [" + section + "] " + key + ": '" + v +
                      "' is not an integer");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = sections.at(section).at(key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key [" + section + "] " + key + ": '" + v + "' is not a boolean");
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections[section][key] = value;
}

void Config::merge(const Config& overrides) {
  for (const auto& [sec, kv] : overrides.sections)
    for (const auto& [k, v] : kv) sections[sec][k] = v;
}

std::string Config::dump() const {
  std::ostringstream out;
  for (const auto& [sec, kv] : sections) {
    if (kv.empty()) continue;
    out << '[' << sec << "]\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  }
  return out.str();
}

// -------------------------------------------------------------- Registry --

std::vector<std::string> list_cases() {
  return {"patch1d",  "patch3d",  "conv1d",      "conv2d",   "candle",
          "sphere_oracle", "pipebend", "transient2d", "fingering"};
}

Config case_defaults(const std::string& name) {
  Config c;
  c.set("case", "name", name);
  c.set("output", "dir", "out_" + name);
  c.set("fem", "order", "1");
  c.set("fem", "formulation", "stabilized");
  c.set("fem", "nitsche_eta", "10");

  if (name == "patch1d" || name == "conv1d") {
    c.set("mesh", "kind", "interval");
    c.set("mesh", "length", "1.0");
    c.set("mesh", "cells", "10");
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "1.0");
    c.set("material", "k2", "0.01");
    c.set("bc", "p1_left", "10.0");
    c.set("bc", "p1_right", "1.0");
    c.set("bc", "p2_left", "10.0");
    c.set("bc", "p2_right", "1.0");
  } else if (name == "patch3d") {
    c.set("mesh", "kind", "box");
    c.set("mesh", "lx", "1.0");
    c.set("mesh", "ly", "1.0");
    c.set("mesh", "lz", "1.0");
    c.set("mesh", "nx", "4");
    c.set("mesh", "ny", "4");
    c.set("mesh", "nz", "4");
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "1.0");
    c.set("material", "k2", "0.01");
    c.set("bc", "p1_left", "10.0");
    c.set("bc", "p1_right", "1.0");
    c.set("bc", "p2_left", "10.0");
    c.set("bc", "p2_right", "1.0");
  } else if (name == "conv2d") {
    c.set("mesh", "kind", "box");
    c.set("mesh", "lx", "1.0");
    c.set("mesh", "ly", "1.0");
    c.set("mesh", "nx", "8");
    c.set("mesh", "ny", "8");
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "1.0");
    c.set("material", "k2", "0.1");
  } else if (name == "candle") {
    c.set("mesh", "kind", "annulus");
    c.set("mesh", "r_inner", "0.3");
    c.set("mesh", "r_outer", "1.0");
    c.set("mesh", "n_radial", "32");
    c.set("mesh", "n_angular", "64");
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "1.0");
    c.set("material", "k2", "0.01");
    c.set("bc", "p1_inner", "1.0");
    c.set("bc", "p1_outer", "0.0");
    c.set("oracle", "n_cells", "4096");
  } else if (name == "sphere_oracle") {
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "1.0");
    c.set("material", "k2", "0.01");
    c.set("bc", "p1_inner", "1.0");
    c.set("bc", "p1_outer", "0.0");
    c.set("oracle", "r_inner", "0.3");
    c.set("oracle", "r_outer", "1.0");
    c.set("oracle", "n_cells", "4096");
  } else if (name == "pipebend") {
    c.set("mesh", "kind", "box");
    c.set("mesh", "lx", "1.0");
    c.set("mesh", "ly", "1.0");
    c.set("mesh", "nx", "32");
    c.set("mesh", "ny", "32");
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "1.0");
    c.set("material", "k2", "0.01");
    // Portion bounds are multiples of 1/16 so the inflow/outflow segments
    // coincide with facet unions on every mesh of the 16/32/64 ladder; the
    // refinement studies then solve nested discretizations of one problem.
    c.set("bc", "portion_lo", "0.5625");
    c.set("bc", "portion_hi", "0.8125");
  } else if (name == "transient2d") {
    c.set("mesh", "kind", "box");
    c.set("mesh", "lx", "10.0");
    c.set("mesh", "ly", "1.0");
    c.set("mesh", "nx", "100");
    c.set("mesh", "ny", "10");
    c.set("mesh", "hole_size", "0.4");
    c.set("mesh", "hole1_x", "3.0");
    c.set("mesh", "hole2_x", "6.6");
    c.set("mesh", "hole_y", "0.3");
    c.set("material", "mu", "1.0");
    c.set("material", "beta", "1.0");
    c.set("material", "k1", "10000");
    c.set("material", "k2", "1.0");
    c.set("bc", "p1_right", "10.0");
    c.set("bc", "p2_right", "10.0");
    c.set("bc", "p1_left_amplitude", "10.0");
    // bulk densities are not part of the published data-set; chosen so both
    // networks settle inside the simulated window (see report)
    c.set("transient", "rho1", "1e-12");
    c.set("transient", "rho2", "1e-12");
    c.set("transient", "dt", "5e-11");
    c.set("transient", "T", "6e-8");
  } else if (name == "fingering") {
    c.set("mesh", "kind", "box");
    c.set("mesh", "lx", "1.0");
    c.set("mesh", "ly", "0.4");
    c.set("mesh", "nx", "128");
    c.set("mesh", "ny", "64");
    c.set("material", "beta", "1.0");
    c.set("material", "k1x", "1.0");
    c.set("material", "k1y", "0.5");
    c.set("material", "k2x", "0.05");
    c.set("material", "k2y", "0.01");
    c.set("transport", "mu0", "0.001");
    c.set("transport", "Rc", "3.0");
    c.set("transport", "D", "2e-6");
    c.set("transport", "shock_capture", "0.5");
    c.set("transport", "init_layer_cells", "2");
    c.set("transport", "c_inj", "1.0");
    c.set("transport", "p_atm", "1.0");
    c.set("transport", "u_inj", "0.004");
    c.set("transport", "dt", "0.5");
    c.set("transport", "T", "150");
    c.set("transport", "perturbation", "0.05");
    c.set("transport", "seed", "42");
    c.set("transport", "advecting", "sum");
  } else {
    std::string names;
    for (const auto& n : list_cases()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown case '" + name + "'; available cases: " + names);
  }
  return c;
}

Config resolve_config(const Config& user) {
  std::string name = user.get("case", "name", user.get("", "case", ""));
  if (name.empty()) throw ConfigError("config does not name a case ([case] name = ...)");
  Config cfg = case_defaults(name);
  cfg.merge(user);
  return cfg;
}

// ---------------------------------------------------------------- helpers --

namespace {

namespace fs = std::filesystem;

struct Report {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> lines;
  void add(const std::string& k, double v) { metrics.emplace_back(k, v); }
  void note(const std::string& s) { lines.push_back(s); }
};

void write_report(const fs::path& dir, const Config& cfg, const Report& rep) {
  {
    std::ofstream csv(dir / "report.csv", std::ios::binary);
    csv << "metric,value\n";
    for (const auto& [k, v] : rep.metrics) csv << k << ',' << format_full(v) << '\n';
  }
  {
    std::ofstream txt(dir / "report.txt", std::ios::binary);
    for (const auto& s : rep.lines) txt << s << '\n';
    txt << '\n';
    for (const auto& [k, v] : rep.metrics) txt << k << " = " << format_full(v) << '\n';
    txt << "\nresolved configuration:\n" << cfg.dump();
  }
}

Mesh mesh_from_config(const Config& cfg) {
  const std::string kind = cfg.get("mesh", "kind", "");
  if (cfg.has("mesh", "file")) {
    std::ifstream in(cfg.get("mesh", "file", ""));
    if (!in) throw ConfigError("cannot open mesh file '" + cfg.get("mesh", "file", "") + "'");
    return read_mesh(in);
  }
  if (kind == "interval")
    return generate_interval(cfg.get_double("mesh", "length", 1.0),
                             cfg.get_int("mesh", "cells", 10));
  if (kind == "box") {
    std::vector<double> lengths{cfg.get_double("mesh", "lx", 1.0),
                                cfg.get_double("mesh", "ly", 1.0)};
    std::vector<int> cells{cfg.get_int("mesh", "nx", 10), cfg.get_int("mesh", "ny", 10)};
    if (cfg.has("mesh", "nz")) {
      lengths.push_back(cfg.get_double("mesh", "lz", 1.0));
      cells.push_back(cfg.get_int("mesh", "nz", 10));
    }
    std::vector<BoxHole> holes;
    if (cfg.has("mesh", "hole_size")) {
      const double s = cfg.get_double("mesh", "hole_size", 0.4);
      const double y0 = cfg.get_double("mesh", "hole_y", 0.3);
      for (const char* key : {"hole1_x", "hole2_x"}) {
        if (!cfg.has("mesh", key)) continue;
        const double x0 = cfg.get_double("mesh", key, 0.0);
        BoxHole h;
        h.lo = {x0, y0, 0.0};
        h.hi = {x0 + s, y0 + s, 0.0};
        holes.push_back(h);
      }
    }
    return generate_box(lengths, cells, holes);
  }
  if (kind == "annulus")
    return generate_annulus(
        cfg.get_double("mesh", "r_inner", 0.3), cfg.get_double("mesh", "r_outer", 1.0),
        cfg.get_int("mesh", "n_radial", 32), cfg.get_int("mesh", "n_angular", 64));
  throw ConfigError("unknown or missing mesh kind '" + kind + "'");
}

SteadyOptions steady_options(const Config& cfg) {
  SteadyOptions opt;
  const std::string f = cfg.get("fem", "formulation", "stabilized");
  if (f == "stabilized")
    opt.formulation = Formulation::Stabilized;
  else if (f == "galerkin")
    opt.formulation = Formulation::Galerkin;
  else
    throw ConfigError("unknown formulation '" + f + "'");
  opt.nitsche_eta = cfg.get_double("fem", "nitsche_eta", 10.0);
  opt.per_facet_h = cfg.get_bool("fem", "per_facet_h", false);
  opt.quadrature_degree = cfg.get_int("fem", "quadrature_degree", -1);
  return opt;
}

MaterialData material_from_config(const Config& cfg) {
  return MaterialData::isotropic(
      cfg.get_double("material", "mu", 1.0), cfg.get_double("material", "beta", 1.0),
      cfg.get_double("material", "k1", 1.0), cfg.get_double("material", "k2", 0.01));
}

/// Exact solution of the one-network-pair problem with linear pressure
/// plus one exponential inter-network mode (used by patch/convergence
/// cases; the patch data has zero mode amplitude).
struct Exact1D {
  double mu, beta, k1, k2, pL, pR, L;
  bool with_mode = false;

  double eta() const { return std::sqrt(beta * (k1 + k2) / (k1 * k2)); }
  double mode(double x) const { return with_mode ? std::exp(eta() * (x - L)) : 0.0; }
  double p1(double x) const {
    return pL + (pR - pL) * x / L - (mu / (beta * k1)) * mode(x);
  }
  double p2(double x) const {
    return pL + (pR - pL) * x / L + (mu / (beta * k2)) * mode(x);
  }
  double u1(double x) const {
    return k1 * (pL - pR) / (mu * L) + (eta() / beta) * mode(x);
  }
  double u2(double x) const {
    return k2 * (pL - pR) / (mu * L) - (eta() / beta) * mode(x);
  }
  double dp1(double x) const { return (pR - pL) / L - (mu * eta() / (beta * k1)) * mode(x); }
  double dp2(double x) const { return (pR - pL) / L + (mu * eta() / (beta * k2)) * mode(x); }

  ExactFields fields() const {
    ExactFields f;
    f.u1 = [*this](const Eigen::Vector3d& x) { return Eigen::Vector3d(u1(x[0]), 0, 0); };
    f.u2 = [*this](const Eigen::Vector3d& x) { return Eigen::Vector3d(u2(x[0]), 0, 0); };
    f.p1 = [*this](const Eigen::Vector3d& x) { return p1(x[0]); };
    f.p2 = [*this](const Eigen::Vector3d& x) { return p2(x[0]); };
    f.grad_p1 = [*this](const Eigen::Vector3d& x) { return Eigen::Vector3d(dp1(x[0]), 0, 0); };
    f.grad_p2 = [*this](const Eigen::Vector3d& x) { return Eigen::Vector3d(dp2(x[0]), 0, 0); };
    return f;
  }
};

Exact1D exact1d_from_config(const Config& cfg, bool with_mode) {
  Exact1D ex;
  ex.mu = cfg.get_double("material", "mu", 1.0);
  ex.beta = cfg.get_double("material", "beta", 1.0);
  ex.k1 = cfg.get_double("material", "k1", 1.0);
  ex.k2 = cfg.get_double("material", "k2", 0.01);
  ex.pL = cfg.get_double("bc", "p1_left", 10.0);
  ex.pR = cfg.get_double("bc", "p1_right", 1.0);
  ex.L = cfg.get_double("mesh", "length", cfg.get_double("mesh", "lx", 1.0));
  ex.with_mode = with_mode;
  return ex;
}

double max_nodal_deviation(const FieldSolution& sol, const ExactFields& exact) {
  const DofMap& dm = *sol.dofmap;
  double dev = 0;
  for (int n = 0; n < dm.n_scalar; ++n) {
    const Eigen::Vector3d& x = dm.node_coords[n];
    if (exact.u1) {
      Eigen::Vector3d u = exact.u1(x);
      for (int c = 0; c < dm.dim; ++c)
        dev = std::max(dev, std::abs(sol.coeffs[dm.u_dof(1, n, c)] - u[c]));
    }
    if (exact.u2) {
      Eigen::Vector3d u = exact.u2(x);
      for (int c = 0; c < dm.dim; ++c)
        dev = std::max(dev, std::abs(sol.coeffs[dm.u_dof(2, n, c)] - u[c]));
    }
    if (exact.p1) dev = std::max(dev, std::abs(sol.coeffs[dm.p_dof(1, n)] - exact.p1(x)));
    if (exact.p2) dev = std::max(dev, std::abs(sol.coeffs[dm.p_dof(2, n)] - exact.p2(x)));
  }
  return dev;
}

// ----------------------------------------------------------- patch cases --

void run_patch(const Config& cfg, const fs::path& dir, Report& rep) {
  Mesh mesh = mesh_from_config(cfg);
  MaterialData mat = material_from_config(cfg);
  BoundarySpec spec;
  for (int net : {1, 2}) {
    const std::string pfx = "p" + std::to_string(net) + "_";
    spec.set_pressure(net, "left", cfg.get_double("bc", pfx + "left", 10.0));
    spec.set_pressure(net, "right", cfg.get_double("bc", pfx + "right", 1.0));
  }
  if (mesh.dim == 3) {
    for (const char* tag : {"bottom", "top", "back", "front"}) {
      spec.set_normal_velocity(1, tag, 0.0);
      spec.set_normal_velocity(2, tag, 0.0);
    }
  }
  SolveReport srep;
  FieldSolution sol =
      solve_steady(mesh, cfg.get_int("fem", "order", 1), mat, spec, steady_options(cfg), &srep);

  Exact1D ex = exact1d_from_config(cfg, false);
  ExactFields exact = ex.fields();
  if (mesh.dim == 3) {
    // zero transverse components are already part of the 1D profile
  }
  const double dev = max_nodal_deviation(sol, exact);
  const double tol = cfg.get_double("report", "patch_tolerance", mesh.dim == 3 ? 1e-9 : 1e-10);
  rep.add("max_nodal_deviation", dev);
  rep.add("patch_tolerance", tol);
  rep.add("u1_exact", ex.u1(0));
  rep.add("u2_exact", ex.u2(0));
  rep.add("solver_residual", srep.residual_norm);
  rep.note(dev < tol ? "PATCH TEST: PASS" : "PATCH TEST: FAIL");
  if (dev >= tol)
    rep.note("recorded oscillation amplitude: " + format_full(dev));
  write_vtk_file((dir / ("fields_" + cfg.get("case", "name", "") + ".vtk")).string(), mesh,
                 solution_point_data(sol));
}

// ----------------------------------------------------- convergence cases --

struct ConvProblem {
  Mesh mesh;
  MaterialData material;
  BoundarySpec spec;
  ExactFields exact;
};

ConvProblem conv_problem(const Config& cfg) {
  ConvProblem pr;
  pr.mesh = mesh_from_config(cfg);
  const std::string name = cfg.get("case", "name", "");
  if (name == "conv1d" || name == "patch1d") {
    pr.material = material_from_config(cfg);
    Exact1D ex = exact1d_from_config(cfg, true);
    pr.exact = ex.fields();
    for (int net : {1, 2}) {
      auto p = net == 1 ? pr.exact.p1 : pr.exact.p2;
      pr.spec.set_pressure(net, "left", [p](const Eigen::Vector3d& x, double) { return p(x); });
      pr.spec.set_pressure(net, "right", [p](const Eigen::Vector3d& x, double) { return p(x); });
    }
  } else if (name == "conv2d") {
    AnalyticalSolution2D ref;
    ref.mu = cfg.get_double("material", "mu", 1.0);
    ref.beta = cfg.get_double("material", "beta", 1.0);
    ref.k1 = cfg.get_double("material", "k1", 1.0);
    ref.k2 = cfg.get_double("material", "k2", 0.1);
    pr.material = ref.material();
    pr.exact = ref.fields();
    pr.spec = ref.boundary_spec();
  } else {
    throw ConfigError("case '" + name + "' does not define a convergence study");
  }
  return pr;
}

void run_conv(const Config& cfg, const fs::path& dir, Report& rep) {
  ConvProblem pr = conv_problem(cfg);
  FieldSolution sol = solve_steady(pr.mesh, cfg.get_int("fem", "order", 1), pr.material,
                                   pr.spec, steady_options(cfg));
  ErrorNorms err = error_norms(sol, pr.exact);
  rep.add("l2_u1", err.l2_u1);
  rep.add("l2_u2", err.l2_u2);
  rep.add("l2_p1", err.l2_p1);
  rep.add("l2_p2", err.l2_p2);
  rep.add("h1_p1", err.h1_p1);
  rep.add("h1_p2", err.h1_p2);
  rep.add("h_max", mesh_stats(pr.mesh).h_max);
  rep.add("dofs", static_cast<double>(sol.dofmap->n_dofs()));
  write_vtk_file((dir / ("fields_" + cfg.get("case", "name", "") + ".vtk")).string(), pr.mesh,
                 solution_point_data(sol));
}

// --------------------------------------------------------- radial cases --

RadialProblem radial_from_config(const Config& cfg, RadialGeometry geom) {
  RadialProblem pb;
  pb.geometry = geom;
  pb.r_inner = cfg.get_double("oracle", "r_inner", cfg.get_double("mesh", "r_inner", 0.3));
  pb.r_outer = cfg.get_double("oracle", "r_outer", cfg.get_double("mesh", "r_outer", 1.0));
  pb.mu = cfg.get_double("material", "mu", 1.0);
  pb.beta = cfg.get_double("material", "beta", 1.0);
  pb.k1 = cfg.get_double("material", "k1", 1.0);
  pb.k2 = cfg.get_double("material", "k2", 0.01);
  pb.p1_inner = cfg.get_double("bc", "p1_inner", 1.0);
  pb.p1_outer = cfg.get_double("bc", "p1_outer", 0.0);
  return pb;
}

void write_oracle_csv(const fs::path& path, const RadialSolution& oracle) {
  std::vector<std::vector<double>> rows;
  for (size_t j = 0; j < oracle.r.size(); ++j)
    rows.push_back({oracle.r[j], oracle.u1[j], oracle.u2[j], oracle.p1[j], oracle.p2[j]});
  write_csv_file(path.string(), {"r", "u1", "u2", "p1", "p2"}, rows);
}

void run_candle(const Config& cfg, const fs::path& dir, Report& rep) {
  Mesh mesh = mesh_from_config(cfg);
  RadialProblem pb = radial_from_config(cfg, RadialGeometry::Polar);
  RadialSolution oracle = solve_radial(pb, cfg.get_int("oracle", "n_cells", 4096));
  write_oracle_csv(dir / "oracle.csv", oracle);

  MaterialData mat = material_from_config(cfg);
  BoundarySpec spec;
  spec.set_pressure(1, "inner", pb.p1_inner);
  spec.set_pressure(1, "outer", pb.p1_outer);
  // curved boundary: micro normal flux enforced weakly
  spec.set_normal_velocity(2, "inner", 0.0, /*weak=*/true);
  spec.set_normal_velocity(2, "outer", 0.0, /*weak=*/true);
  FieldSolution sol =
      solve_steady(mesh, cfg.get_int("fem", "order", 1), mat, spec, steady_options(cfg));

  RadialComparison cmp = compare_fem_to_oracle(sol, pb, oracle);
  rep.add("oracle_observed_order", oracle.observed_order);
  rep.add("oracle_error_estimate", oracle.error_estimate);
  rep.add("rel_l2_p1", cmp.rel_l2_p1);
  rep.add("rel_l2_u1", cmp.rel_l2_u1);
  rep.add("max_u2_normal_boundary", cmp.max_u2_normal_boundary);
  rep.add("max_u2_magnitude", cmp.max_u2_magnitude);
  rep.add("boundary_flux_ratio",
          cmp.max_u2_normal_boundary / std::max(cmp.max_u2_magnitude, 1e-300));
  write_vtk_file((dir / "fields_candle.vtk").string(), mesh, solution_point_data(sol));
}

void run_sphere_oracle(const Config& cfg, const fs::path& dir, Report& rep) {
  RadialProblem pb = radial_from_config(cfg, RadialGeometry::Spherical);
  RadialSolution oracle = solve_radial(pb, cfg.get_int("oracle", "n_cells", 4096));
  write_oracle_csv(dir / "oracle.csv", oracle);
  rep.add("oracle_observed_order", oracle.observed_order);
  rep.add("oracle_error_estimate", oracle.error_estimate);
  rep.add("p1_mid", oracle.interpolate(oracle.p1, 0.5 * (pb.r_inner + pb.r_outer)));
  rep.add("u1_mid", oracle.interpolate(oracle.u1, 0.5 * (pb.r_inner + pb.r_outer)));
  rep.note("spherical reference profile written to oracle.csv");
}

// ------------------------------------------------------------- pipe bend --

struct PipeBendData {
  MaterialData material;
  BoundarySpec spec;
};

PipeBendData pipebend_dataset(const Config& cfg, int which) {
  const double lo = cfg.get_double("bc", "portion_lo", 0.5625);
  const double hi = cfg.get_double("bc", "portion_hi", 0.8125);
  PipeBendData d;
  d.material = material_from_config(cfg);
  if (which == 1) {
    d.material.gamma_b = [](const Eigen::Vector3d&) { return Eigen::Vector3d(1.0, 1.0, 0.0); };
  }
  BoundaryValue in_v, out_v;
  if (which == 1) {
    in_v = [lo, hi](const Eigen::Vector3d& x, double) {
      return 100.0 * (x[1] - lo) * (hi - x[1]);
    };
    out_v = [lo, hi](const Eigen::Vector3d& x, double) {
      return -100.0 * (x[0] - lo) * (hi - x[0]);
    };
  } else {
    in_v = [](const Eigen::Vector3d&, double) { return 1.0; };
    out_v = [](const Eigen::Vector3d&, double) { return -1.0; };
  }
  for (const std::string tag : {"left", "right", "top", "bottom", "inflow", "outflow"}) {
    BoundaryValue v1 = [](const Eigen::Vector3d&, double) { return 0.0; };
    if (tag == "inflow") v1 = in_v;
    if (tag == "outflow") v1 = out_v;
    d.spec.set_normal_velocity(1, tag, v1, /*weak=*/true);
    d.spec.set_normal_velocity(2, tag, 0.0, /*weak=*/true);
  }
  return d;
}

Mesh pipebend_mesh(const Config& cfg) {
  Mesh mesh = mesh_from_config(cfg);
  const double lo = cfg.get_double("bc", "portion_lo", 0.5625);
  const double hi = cfg.get_double("bc", "portion_hi", 0.8125);
  for (auto& f : mesh.boundary_facets) {
    double mx = 0, my = 0;
    for (int v : f.nodes) {
      mx += mesh.nodes[v][0];
      my += mesh.nodes[v][1];
    }
    mx /= f.nodes.size();
    my /= f.nodes.size();
    if (f.tag == "left" && my > lo && my < hi) f.tag = "inflow";
    if (f.tag == "bottom" && mx > lo && mx < hi) f.tag = "outflow";
  }
  return mesh;
}

void run_pipebend(const Config& cfg, const fs::path& dir, Report& rep) {
  Mesh mesh = pipebend_mesh(cfg);
  const int order = cfg.get_int("fem", "order", 1);
  PipeBendData d1 = pipebend_dataset(cfg, 1);
  PipeBendData d2 = pipebend_dataset(cfg, 2);
  SteadyOptions opt = steady_options(cfg);
  FieldSolution s1 = solve_steady(mesh, order, d1.material, d1.spec, opt);
  FieldSolution s2 = solve_steady(mesh, order, d2.material, d2.spec, opt);

  double lhs = 0, rhs = 0;
  const double eps =
      reciprocal_error(s1, s2, d1.material, d2.material, d1.spec, d2.spec, &lhs, &rhs);
  rep.add("dissipation_case1", dissipation(s1, d1.material));
  rep.add("dissipation_case2", dissipation(s2, d2.material));
  rep.add("kinematic_residual_case1", kinematic_admissibility_residual(s1));
  rep.add("kinematic_residual_case2", kinematic_admissibility_residual(s2));
  rep.add("reciprocal_lhs", lhs);
  rep.add("reciprocal_rhs", rhs);
  rep.add("reciprocal_error", eps);
  write_vtk_file((dir / "fields_pipebend_case1.vtk").string(), mesh, solution_point_data(s1));
  write_vtk_file((dir / "fields_pipebend_case2.vtk").string(), mesh, solution_point_data(s2));
}

// -------------------------------------------------------------- transient --

void run_transient2d(const Config& cfg, const fs::path& dir, Report& rep) {
  Mesh mesh = mesh_from_config(cfg);
  MaterialData mat = material_from_config(cfg);
  const double amp = cfg.get_double("bc", "p1_left_amplitude", 10.0);
  BoundarySpec spec;
  spec.set_pressure(1, "left", [amp](const Eigen::Vector3d& x, double t) {
    return amp * std::sin(0.4 * (x[1] + 2.0 * t));
  });
  spec.set_normal_velocity(2, "left", 0.0);
  spec.set_pressure(1, "right", cfg.get_double("bc", "p1_right", 10.0));
  spec.set_pressure(2, "right", cfg.get_double("bc", "p2_right", 10.0));
  std::vector<std::string> flux_tags = {"top", "bottom"};
  for (const auto& t : mesh.tags())
    if (t.rfind("hole_", 0) == 0) flux_tags.push_back(t);
  for (const auto& t : flux_tags) {
    spec.set_normal_velocity(1, t, 0.0);
    spec.set_normal_velocity(2, t, 0.0);
  }

  TransientData tr;
  tr.rho1 = cfg.get_double("transient", "rho1", 1e-12);
  tr.rho2 = cfg.get_double("transient", "rho2", 1e-12);
  tr.phi1 = cfg.get_double("transient", "phi1", 0.5);
  tr.phi2 = cfg.get_double("transient", "phi2", 0.5);
  tr.dt = cfg.get_double("transient", "dt", 5e-11);
  const double T = cfg.get_double("transient", "T", 6e-8);
  // run past the window of interest: the reference "steady state" for the
  // settle criterion is this scheme's own long-time limit (a separately
  // assembled steady solve carries different stabilization weights and
  // would bias the 1% threshold)
  tr.T = cfg.get_double("transient", "settle_factor", 3.0) * T;

  const int order = cfg.get_int("fem", "order", 1);
  TimeSeries series = solve_transient(mesh, order, mat, tr, spec);

  const DofMap& dm = *series.dofmap;
  const Eigen::VectorXd& steady = series.snapshots.back();
  auto u_dev = [&](const Eigen::VectorXd& snap, int net) {
    double scale = 0, dev = 0;
    for (int n = 0; n < dm.n_scalar; ++n)
      for (int c = 0; c < dm.dim; ++c) {
        const int k = dm.u_dof(net, n, c);
        scale = std::max(scale, std::abs(steady[k]));
        dev = std::max(dev, std::abs(snap[k] - steady[k]));
      }
    return dev / std::max(scale, 1e-300);
  };
  auto settle_time = [&](int net) {
    double t_star = series.times.back();
    for (int s = series.n_steps() - 1; s >= 0; --s) {
      if (u_dev(series.snapshots[s], net) < 0.01)
        t_star = series.times[s];
      else
        break;
    }
    return t_star;
  };
  const double t1 = settle_time(1), t2 = settle_time(2);
  int iT = 0;
  for (int s = 0; s < series.n_steps(); ++s)
    if (std::abs(series.times[s] - T) < std::abs(series.times[iT] - T)) iT = s;
  rep.add("settle_time_u1", t1);
  rep.add("settle_time_u2", t2);
  rep.add("window_T", T);
  rep.add("deviation_u1_at_T", u_dev(series.snapshots[iT], 1));
  rep.add("deviation_u2_at_T", u_dev(series.snapshots[iT], 2));
  rep.add("n_steps", static_cast<double>(series.n_steps() - 1));
  rep.note(t2 < t1 && t1 <= T ? "MICRO NETWORK SETTLES FIRST: PASS"
                              : "MICRO NETWORK SETTLES FIRST: FAIL");

  write_vtk_file((dir / "fields_transient2d.vtk").string(), mesh,
                 solution_point_data(series.solution_at(series.n_steps() - 1)));
  // a small time history of the velocity deviation for plotting
  std::vector<std::vector<double>> rows;
  for (int s = 0; s < series.n_steps(); ++s)
    rows.push_back({series.times[s], u_dev(series.snapshots[s], 1),
                    u_dev(series.snapshots[s], 2)});
  write_csv_file((dir / "settle_history.csv").string(), {"t", "dev_u1", "dev_u2"}, rows);
}

// -------------------------------------------------------------- fingering --

void run_fingering(const Config& cfg, const fs::path& dir, Report& rep) {
  Mesh mesh = mesh_from_config(cfg);

  MaterialData mat;
  mat.mu = cfg.get_double("transport", "mu0", 0.001);
  mat.beta = cfg.get_double("material", "beta", 1.0);
  const double k1x = cfg.get_double("material", "k1x", 1.0);
  const double k1y = cfg.get_double("material", "k1y", 0.5);
  const double k2x = cfg.get_double("material", "k2x", 0.05);
  const double k2y = cfg.get_double("material", "k2y", 0.01);
  mat.K1 = [k1x, k1y](const Eigen::Vector3d&) {
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    K(0, 0) = k1x;
    K(1, 1) = k1y;
    return K;
  };
  mat.K2 = [k2x, k2y](const Eigen::Vector3d&) {
    Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
    K(0, 0) = k2x;
    K(1, 1) = k2y;
    return K;
  };

  const double u_inj = cfg.get_double("transport", "u_inj", 0.004);
  const double p_atm = cfg.get_double("transport", "p_atm", 1.0);
  BoundarySpec spec;
  spec.set_normal_velocity(1, "left", -u_inj);  // inflow: u1.x = +u_inj
  spec.set_normal_velocity(2, "left", 0.0);
  spec.set_pressure(1, "right", p_atm);
  spec.set_pressure(2, "right", p_atm);
  for (const char* t : {"top", "bottom"}) {
    spec.set_normal_velocity(1, t, 0.0);
    spec.set_normal_velocity(2, t, 0.0);
  }

  TransportData tp;
  tp.mu0 = cfg.get_double("transport", "mu0", 0.001);
  tp.Rc = cfg.get_double("transport", "Rc", 3.0);
  tp.D = cfg.get_double("transport", "D", 2e-6) * Eigen::Matrix3d::Identity();
  tp.shock_capture = cfg.get_double("transport", "shock_capture", 0.5);
  tp.perturbation = cfg.get_double("transport", "perturbation", 0.05);
  tp.seed = static_cast<unsigned long>(cfg.get_int("transport", "seed", 42));
  const double c_inj = cfg.get_double("transport", "c_inj", 1.0);
  tp.dirichlet["left"] = [c_inj](const Eigen::Vector3d&, double) { return c_inj; };
  tp.outflow.insert("right");
  // initial profile compatible with the inlet value: a thin exponential
  // layer instead of a jump, so the first step sees a resolved front
  const double layer = cfg.get_double("transport", "init_layer_cells", 2.0);
  const double dx = cfg.get_double("mesh", "lx", 1.0) / cfg.get_int("mesh", "nx", 128);
  tp.c0 = [c_inj, layer, dx](const Eigen::Vector3d& x) {
    return c_inj * std::exp(-x[0] / (layer * dx));
  };

  CoupledOptions copt;
  copt.nitsche_eta = cfg.get_double("fem", "nitsche_eta", 10.0);
  const std::string adv = cfg.get("transport", "advecting", "sum");
  if (adv == "sum")
    copt.advecting = AdvectingVelocity::Sum;
  else if (adv == "macro")
    copt.advecting = AdvectingVelocity::MacroOnly;
  else
    throw ConfigError("transport.advecting must be 'sum' or 'macro'");

  const double dt = cfg.get_double("transport", "dt", 0.5);
  const double T = cfg.get_double("transport", "T", 150.0);
  CoupledSeries series = solve_coupled(mesh, cfg.get_int("fem", "order", 1), mat, tp, dt, T,
                                       spec, copt);

  auto variance_at = [&](double t) {
    double best = 1e300, var = 0;
    for (const auto& m : series.metrics)
      if (std::abs(m.time - t) < best) {
        best = std::abs(m.time - t);
        var = m.mid_variance;
      }
    return var;
  };
  double cmin = 1e300, cmax = -1e300;
  for (const auto& m : series.metrics) {
    cmin = std::min(cmin, m.c_min);
    cmax = std::max(cmax, m.c_max);
  }
  const double v25 = variance_at(25.0), v150 = variance_at(150.0);
  rep.add("c_min", cmin);
  rep.add("c_max", cmax);
  rep.add("mid_variance_t25", v25);
  rep.add("mid_variance_t150", v150);
  rep.add("variance_growth", v150 / std::max(v25, 1e-300));
  rep.add("seed", static_cast<double>(tp.seed));
  rep.note(cmin >= -0.1 && cmax <= 1.1 ? "CONCENTRATION BOUNDS: PASS"
                                       : "CONCENTRATION BOUNDS: FAIL");

  // per-step metric history
  std::vector<std::vector<double>> rows;
  for (const auto& m : series.metrics)
    rows.push_back({m.time, m.c_min, m.c_max, m.mid_variance});
  write_csv_file((dir / "fingering_metrics.csv").string(),
                 {"t", "c_min", "c_max", "mid_variance"}, rows);

  // final state: flow fields plus concentration
  FieldSolution flow;
  flow.mesh = &mesh;
  flow.dofmap = series.dofmap;
  flow.coeffs = series.flow_snapshots.back();
  flow.time = series.flow_times.back();
  auto fields = solution_point_data(flow);
  fields.push_back(scalar_point_data(mesh, *series.dofmap, series.concentration.back(), "c"));
  write_vtk_file((dir / "fields_fingering.vtk").string(), mesh, fields);
}

}  // namespace

// ------------------------------------------------------------ public API --

void run_case(const Config& user, std::ostream& log) {
  Config cfg = resolve_config(user);
  const std::string name = cfg.get("case", "name", "");
  fs::path dir = cfg.get("output", "dir", "out_" + name);
  fs::create_directories(dir);
  log << "case: " << name << "\nresolved configuration:\n" << cfg.dump();

  Report rep;
  try {
    if (name == "patch1d" || name == "patch3d")
      run_patch(cfg, dir, rep);
    else if (name == "conv1d" || name == "conv2d")
      run_conv(cfg, dir, rep);
    else if (name == "candle")
      run_candle(cfg, dir, rep);
    else if (name == "sphere_oracle")
      run_sphere_oracle(cfg, dir, rep);
    else if (name == "pipebend")
      run_pipebend(cfg, dir, rep);
    else if (name == "transient2d")
      run_transient2d(cfg, dir, rep);
    else if (name == "fingering")
      run_fingering(cfg, dir, rep);
    else
      throw ConfigError("unknown case '" + name + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    write_report(dir, cfg, rep);
    throw SolverError(e.what());
  }
  write_report(dir, cfg, rep);
  for (const auto& s : rep.lines) log << s << '\n';
  for (const auto& [k, v] : rep.metrics) log << k << " = " << format_full(v) << '\n';
}

int run_convergence(const Config& user, const std::vector<int>& ladder, bool p_ladder,
                    std::ostream& log) {
  if (ladder.size() < 3) throw ConfigError("convergence ladder needs at least 3 rungs");
  Config cfg = resolve_config(user);
  const std::string name = cfg.get("case", "name", "");
  if (name != "conv1d" && name != "conv2d" && name != "patch1d")
    throw ConfigError("case '" + name + "' does not define a convergence study");
  fs::path dir = cfg.get("output", "dir", "out_" + name);
  fs::create_directories(dir);
  log << "case: " << name << (p_ladder ? " (p-ladder)" : " (h-ladder)") << "\n";

  struct Row {
    double x = 0, dofs = 0;
    ErrorNorms e;
    bool ok = false;
  };
  std::vector<Row> rows;
  int failures = 0;
  for (int rung : ladder) {
    Config rcfg = cfg;
    if (p_ladder) {
      rcfg.set("fem", "order", std::to_string(rung));
    } else {
      rcfg.set("mesh", "cells", std::to_string(rung));
      rcfg.set("mesh", "nx", std::to_string(rung));
      rcfg.set("mesh", "ny", std::to_string(rung));
    }
    Row row;
    try {
      ConvProblem pr = conv_problem(rcfg);
      FieldSolution sol = solve_steady(pr.mesh, rcfg.get_int("fem", "order", 1), pr.material,
                                       pr.spec, steady_options(rcfg));
      row.e = error_norms(sol, pr.exact);
      row.x = p_ladder ? rung : mesh_stats(pr.mesh).h_max;
      row.dofs = sol.dofmap->n_dofs();
      row.ok = true;
    } catch (const std::exception& e) {
      log << "rung " << rung << " FAILED: " << e.what() << '\n';
      ++failures;
      row.x = rung;
    }
    rows.push_back(row);
    if (row.ok)
      log << "rung " << rung << ": l2_p1 = " << format_full(row.e.l2_p1) << '\n';
  }

  std::ofstream out(dir / "convergence.csv", std::ios::binary);
  out << (p_ladder ? "p" : "h") << ",dofs,l2_u1,l2_u2,l2_p1,l2_p2,h1_p1,h1_p2\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    const ErrorNorms& e = r.e;
    std::vector<double> vals = r.ok
        ? std::vector<double>{r.x, r.dofs, e.l2_u1, e.l2_u2, e.l2_p1, e.l2_p2, e.h1_p1, e.h1_p2}
        : std::vector<double>{r.x, nan, nan, nan, nan, nan, nan, nan};
    for (size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_full(vals[i]);
    out << '\n';
  }
  // closing slope row (least-squares fit per error column)
  std::vector<double> xs;
  std::vector<std::vector<double>> cols(6);
  for (const auto& r : rows)
    if (r.ok) {
      xs.push_back(r.x);
      const std::vector<double> e{r.e.l2_u1, r.e.l2_u2, r.e.l2_p1,
                                  r.e.l2_p2, r.e.h1_p1, r.e.h1_p2};
      for (int c = 0; c < 6; ++c) cols[c].push_back(e[c]);
    }
  out << "slope,";
  if (xs.size() >= 3) {
    for (int c = 0; c < 6; ++c) {
      double s;
      if (p_ladder) {
        std::vector<int> ps(xs.begin(), xs.end());
        s = fit_semilog(ps, cols[c]).slope;
      } else {
        s = fit_loglog(xs, cols[c]).slope;
      }
      out << ',' << format_full(s);
    }
  } else {
    for (int c = 0; c < 6; ++c) out << ',' << "nan";
  }
  out << '\n';
  return failures;
}

void emit_mesh(const Config& user, std::ostream& log) {
  Config cfg = resolve_config(user);
  const std::string name = cfg.get("case", "name", "");
  if (name == "sphere_oracle")
    throw ConfigError("case 'sphere_oracle' is mesh-free (one-dimensional reference solve)");
  Mesh mesh = name == "pipebend" ? pipebend_mesh(cfg) : mesh_from_config(cfg);
  fs::path dir = cfg.get("output", "dir", "out_" + name);
  fs::create_directories(dir);
  std::ofstream out(dir / "mesh.txt", std::ios::binary);
  write_mesh(mesh, out);
  MeshStats st = mesh_stats(mesh);
  log << "mesh written: " << (dir / "mesh.txt").string() << " (" << st.n_nodes << " nodes, "
      << st.n_elements << " elements, h_max = " << format_full(st.h_max) << ")\n";
}

}  // namespace dpp
