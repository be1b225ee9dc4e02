#include "dpp/drivers.hpp"

#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace dpp {

namespace {

std::vector<Eigen::Vector3d> sample_points(const Mesh& mesh) {
  std::vector<Eigen::Vector3d> pts;
  const int stride = std::max(1, mesh.n_elements() / 8);
  for (int e = 0; e < mesh.n_elements(); e += stride) {
    auto g = map_element(mesh, e, {Eigen::Vector3d::Zero()});
    pts.push_back(g.x[0]);
  }
  return pts;
}

Eigen::VectorXd strip_multiplier(const AssembledSystem& sys, const Eigen::VectorXd& x) {
  if (sys.constraint) return x.head(x.size() - 1);
  return x;
}

}  // namespace

FieldSolution solve_steady(const Mesh& mesh, int order, const MaterialData& material,
                           const BoundarySpec& spec, const SteadyOptions& options,
                           SolveReport* report) {
  spec.validate(mesh);
  material.validate(mesh.dim, sample_points(mesh));
  auto dofmap = std::make_shared<DofMap>(build_dofmap(mesh, order));

  AssemblyOptions aopt;
  aopt.quadrature_degree = options.quadrature_degree;
  aopt.time = options.time;
  aopt.mu_at_qp = options.mu_at_qp;

  AssembledSystem sys = options.formulation == Formulation::Galerkin
                            ? assemble_galerkin(mesh, *dofmap, material, spec, aopt)
                            : assemble_stabilized(mesh, *dofmap, material, spec, aopt);
  if (!spec.weak_velocity_tags.empty()) {
    const double h = mesh_stats(mesh).h_max;
    assemble_nitsche_boundary(sys, mesh, *dofmap, material, spec, options.nitsche_eta, h,
                              options.per_facet_h, aopt);
  }
  if (needs_datum_constraint(spec)) add_datum_constraint(sys, mesh, *dofmap);
  sys.dirichlet_rows = strong_velocity_constraints(mesh, *dofmap, spec, options.time);

  Eigen::VectorXd x = solve_direct(sys, report);
  FieldSolution sol;
  sol.mesh = &mesh;
  sol.dofmap = dofmap;
  sol.coeffs = strip_multiplier(sys, x);
  sol.time = options.time;
  return sol;
}

FieldSolution TimeSeries::solution_at(int step) const {
  FieldSolution s;
  s.mesh = mesh;
  s.dofmap = dofmap;
  s.coeffs = snapshots.at(step);
  s.time = times.at(step);
  return s;
}

TimeSeries solve_transient(const Mesh& mesh, int order, const MaterialData& material,
                           const TransientData& transient, const BoundarySpec& spec,
                           const TransientOptions& options) {
  transient.validate();
  spec.validate(mesh);
  material.validate(mesh.dim, sample_points(mesh));
  auto dofmap = std::make_shared<DofMap>(build_dofmap(mesh, order));
  const int dim = mesh.dim;
  const int n_scalar = dofmap->n_scalar;
  const int n = dofmap->n_dofs();
  const bool datum = needs_datum_constraint(spec);
  const double h = mesh_stats(mesh).h_max;

  AssemblyOptions aopt;
  aopt.quadrature_degree = options.quadrature_degree;

  // initial state: interpolated velocities, zero pressures
  Eigen::VectorXd state = Eigen::VectorXd::Zero(n);
  for (int node = 0; node < n_scalar; ++node) {
    Eigen::Vector3d v1 =
        transient.u01 ? transient.u01(dofmap->node_coords[node]) : Eigen::Vector3d::Zero();
    Eigen::Vector3d v2 =
        transient.u02 ? transient.u02(dofmap->node_coords[node]) : Eigen::Vector3d::Zero();
    for (int c = 0; c < dim; ++c) {
      state[dofmap->u_dof(1, node, c)] = v1[c];
      state[dofmap->u_dof(2, node, c)] = v2[c];
    }
  }

  // dirichlet structure is time-invariant (only values may change)
  auto cons0 = strong_velocity_constraints(mesh, *dofmap, spec, 0.0);

  struct Factored {
    SparseMat A0;  // post-Nitsche/datum, pre-Dirichlet (for RHS lifting)
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  };
  std::map<double, std::unique_ptr<Factored>> cache;
  Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(n_scalar * dim);

  auto factored_for = [&](double dt) -> Factored& {
    auto it = cache.find(dt);
    if (it != cache.end()) return *it->second;
    auto f = std::make_unique<Factored>();
    AssembledSystem sys = assemble_transient_step(mesh, *dofmap, material, transient, spec,
                                                  zero_u, zero_u, dt, aopt);
    if (!spec.weak_velocity_tags.empty())
      assemble_nitsche_boundary(sys, mesh, *dofmap, material, spec, options.nitsche_eta, h,
                                options.per_facet_h, aopt);
    if (datum) add_datum_constraint(sys, mesh, *dofmap);
    f->A0 = sys.matrix;
    std::vector<std::pair<int, double>> zero_vals;
    zero_vals.reserve(cons0.size());
    for (auto [row, v] : cons0) zero_vals.emplace_back(row, 0.0);
    sys.rhs = Eigen::VectorXd::Zero(sys.n());
    apply_dirichlet(sys, zero_vals);
    Eigen::SparseMatrix<double> A = sys.matrix;
    f->lu.analyzePattern(A);
    f->lu.factorize(A);
    if (f->lu.info() != Eigen::Success)
      throw std::runtime_error("solve_transient: factorization failed");
    auto& ref = *f;
    cache.emplace(dt, std::move(f));
    return ref;
  };

  TimeSeries series;
  series.mesh = &mesh;
  series.dofmap = dofmap;
  series.times.push_back(0.0);
  series.snapshots.push_back(state);

  double t = 0.0;
  int step = 0;
  while (t < transient.T - 1e-15 * std::max(1.0, transient.T)) {
    const double dt = std::min(transient.dt, transient.T - t);
    const double t_next = (transient.T - t <= transient.dt * (1 + 1e-12)) ? transient.T : t + dt;
    ++step;
    Factored& fac = factored_for(dt);

    Eigen::VectorXd prev_u1(n_scalar * dim), prev_u2(n_scalar * dim);
    for (int node = 0; node < n_scalar; ++node)
      for (int c = 0; c < dim; ++c) {
        prev_u1[node * dim + c] = state[dofmap->u_dof(1, node, c)];
        prev_u2[node * dim + c] = state[dofmap->u_dof(2, node, c)];
      }

    AssemblyOptions stepopt = aopt;
    stepopt.time = t_next;
    Eigen::VectorXd rhs = assemble_transient_rhs(mesh, *dofmap, material, transient, spec,
                                                 prev_u1, prev_u2, dt, stepopt);
    if (!spec.weak_velocity_tags.empty()) {
      AssembledSystem dummy;
      dummy.matrix.resize(n, n);
      dummy.rhs = Eigen::VectorXd::Zero(n);
      assemble_nitsche_boundary(dummy, mesh, *dofmap, material, spec, options.nitsche_eta, h,
                                options.per_facet_h, stepopt);
      rhs += dummy.rhs;
    }
    if (datum) {
      Eigen::VectorXd padded(n + 1);
      padded.head(n) = rhs;
      padded[n] = 0.0;
      rhs = std::move(padded);
    }

    auto cons = strong_velocity_constraints(mesh, *dofmap, spec, t_next);
    std::unordered_map<int, double> cmap;
    for (auto [row, v] : cons) cmap[row] = v;
    for (int i = 0; i < fac.A0.rows(); ++i) {
      if (cmap.count(i)) continue;
      for (SparseMat::InnerIterator it(fac.A0, i); it; ++it) {
        auto cj = cmap.find(static_cast<int>(it.col()));
        if (cj != cmap.end()) rhs[i] -= it.value() * cj->second;
      }
    }
    for (auto& [row, v] : cmap) rhs[row] = v;

    Eigen::VectorXd x = fac.lu.solve(rhs);
    if (!x.allFinite())
      throw std::runtime_error("solve_transient: solver failure at step " +
                               std::to_string(step) + ", t = " + std::to_string(t_next));
    state = x.head(n);
    t = t_next;
    series.times.push_back(t);
    series.snapshots.push_back(state);
  }
  return series;
}

CoupledSeries solve_coupled(const Mesh& mesh, int order, const MaterialData& material,
                            const TransportData& transport, double dt_max, double T,
                            const BoundarySpec& spec_flow, const CoupledOptions& options) {
  spec_flow.validate(mesh);
  if (!(dt_max > 0) || !(T >= dt_max)) throw std::invalid_argument("solve_coupled: bad dt/T");
  auto dofmap = std::make_shared<DofMap>(build_dofmap(mesh, order));
  const int dim = mesh.dim;
  const int n_scalar = dofmap->n_scalar;
  const bool datum = needs_datum_constraint(spec_flow);
  const double h = mesh_stats(mesh).h_max;
  const int qdeg = options.quadrature_degree > 0 ? options.quadrature_degree : 2 * order + 1;

  // shared quadrature/basis tabulation for c-at-qp and u-at-qp transfer
  ReferenceBasis basis = ReferenceBasis::create(mesh.elements[0].kind, order);
  QuadratureRule rule = gauss_rule(mesh.elements[0].kind, qdeg);
  Eigen::MatrixXd bvals;
  std::vector<Eigen::MatrixXd> bgrads;
  tabulate(basis, rule.points, bvals, bgrads);

  // seeded initial concentration
  Eigen::VectorXd c(n_scalar);
  {
    std::mt19937_64 rng(transport.seed);
    std::uniform_real_distribution<double> dist(-transport.perturbation, transport.perturbation);
    for (int node = 0; node < n_scalar; ++node) {
      double base = transport.c0 ? transport.c0(dofmap->node_coords[node]) : 0.0;
      c[node] = base + (transport.perturbation > 0 ? dist(rng) : 0.0);
    }
  }

  // probe column for the transverse-variance metric
  std::vector<int> probe_nodes;
  {
    double xmin = 1e300, xmax = -1e300;
    for (const auto& nd : mesh.nodes) {
      xmin = std::min(xmin, nd[0]);
      xmax = std::max(xmax, nd[0]);
    }
    const double target = xmin + options.probe_x_fraction * (xmax - xmin);
    double best = 1e300;
    for (int node = 0; node < n_scalar; ++node)
      best = std::min(best, std::abs(dofmap->node_coords[node][0] - target));
    for (int node = 0; node < n_scalar; ++node)
      if (std::abs(dofmap->node_coords[node][0] - target) < best + 1e-12)
        probe_nodes.push_back(node);
  }

  CoupledSeries series;
  series.mesh = &mesh;
  series.dofmap = dofmap;

  auto record_metrics = [&](double t) {
    CoupledStepMetrics m;
    m.time = t;
    m.c_min = c.minCoeff();
    m.c_max = c.maxCoeff();
    double mean = 0;
    for (int node : probe_nodes) mean += c[node];
    mean /= probe_nodes.size();
    double var = 0;
    for (int node : probe_nodes) var += (c[node] - mean) * (c[node] - mean);
    m.mid_variance = var / probe_nodes.size();
    series.metrics.push_back(m);
  };
  series.times.push_back(0.0);
  series.concentration.push_back(c);
  record_metrics(0.0);

  const bool constant_mu = transport.Rc == 0.0;
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> flow_lu;
  bool flow_pattern_ready = false;
  bool flow_factored = false;
  Eigen::VectorXd flow_coeffs;

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> transport_lu;
  bool transport_pattern_ready = false;

  MaterialData flow_material = material;  // mu field overridden per qp

  auto solve_flow = [&](double t) {
    AssemblyOptions aopt;
    aopt.quadrature_degree = qdeg;
    aopt.time = t;
    if (!constant_mu) {
      aopt.mu_at_qp = [&](int e, int q) {
        const auto& en = dofmap->element_nodes[e];
        double cq = 0;
        for (int a = 0; a < basis.size; ++a) cq += bvals(q, a) * c[en[a]];
        // the mixture law is defined for mass fractions; clamp so numerical
        // over/undershoots cannot feed back into the viscosity
        cq = std::clamp(cq, 0.0, 1.0);
        return viscosity_of_concentration(cq, transport.mu0, transport.Rc);
      };
    } else {
      const double mu = viscosity_of_concentration(1.0, transport.mu0, transport.Rc);
      aopt.mu_at_qp = [mu](int, int) { return mu; };
    }
    if (constant_mu && flow_factored) {
      // matrix unchanged; only (possibly) the RHS would change, and our flow
      // BCs/body forces are time-independent here, so reuse the solution
      return;
    }
    AssembledSystem sys = assemble_stabilized(mesh, *dofmap, flow_material, spec_flow, aopt);
    if (!spec_flow.weak_velocity_tags.empty())
      assemble_nitsche_boundary(sys, mesh, *dofmap, flow_material, spec_flow,
                                options.nitsche_eta, h, false, aopt);
    if (datum) add_datum_constraint(sys, mesh, *dofmap);
    sys.dirichlet_rows = strong_velocity_constraints(mesh, *dofmap, spec_flow, t);
    auto pending = sys.dirichlet_rows;
    apply_dirichlet(sys, pending);
    Eigen::SparseMatrix<double> A = sys.matrix;
    if (!flow_pattern_ready) {
      flow_lu.analyzePattern(A);
      flow_pattern_ready = true;
    }

    flow_lu.factorize(A);
    if (flow_lu.info() != Eigen::Success)
      throw std::runtime_error("solve_coupled: flow factorization failed at t = " +
                               std::to_string(t));
    Eigen::VectorXd x = flow_lu.solve(sys.rhs);
    if (!x.allFinite()) throw std::runtime_error("solve_coupled: flow solve failed");
    flow_coeffs = sys.constraint ? x.head(x.size() - 1) : x;
    flow_factored = true;
  };

  auto velocity_at = [&](int e, int q) {
    const auto& en = dofmap->element_nodes[e];
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    for (int a = 0; a < basis.size; ++a)
      for (int cmp = 0; cmp < dim; ++cmp) {
        u[cmp] += bvals(q, a) * flow_coeffs[dofmap->u_dof(1, en[a], cmp)];
        if (options.advecting == AdvectingVelocity::Sum)
          u[cmp] += bvals(q, a) * flow_coeffs[dofmap->u_dof(2, en[a], cmp)];
      }
    return u;
  };

  double t = 0.0;
  int step = 0;
  while (t < T - 1e-12 * std::max(1.0, T)) {
    const double dt = std::min(dt_max, T - t);
    const double t_next = (T - t <= dt_max * (1 + 1e-12)) ? T : t + dt;
    ++step;
    solve_flow(t_next);

    AssemblyOptions topt;
    topt.quadrature_degree = qdeg;
    topt.time = t_next;
    AssembledSystem tsys =
        assemble_transport_step(mesh, *dofmap, velocity_at, transport, dt, c, topt);
    auto pending = tsys.dirichlet_rows;
    apply_dirichlet(tsys, pending);
    Eigen::SparseMatrix<double> A = tsys.matrix;
    if (!transport_pattern_ready) {
      transport_lu.analyzePattern(A);
      transport_pattern_ready = true;
    }
    transport_lu.factorize(A);
    if (transport_lu.info() != Eigen::Success)
      throw std::runtime_error("solve_coupled: transport factorization failed at step " +
                               std::to_string(step));
    Eigen::VectorXd cn = transport_lu.solve(tsys.rhs);
    if (!cn.allFinite()) throw std::runtime_error("solve_coupled: transport solve failed");
    c = cn;
    t = t_next;
    series.times.push_back(t);
    series.concentration.push_back(c);
    record_metrics(t);
    const bool last = !(t < T - 1e-12 * std::max(1.0, T));
    if (step % options.flow_snapshot_every == 0 || last) {
      series.flow_times.push_back(t);
      series.flow_snapshots.push_back(flow_coeffs);
    }
  }
  return series;
}

}  // namespace dpp
