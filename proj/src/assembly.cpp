#include "dpp/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace dpp {

namespace {

int default_quad_degree(const DofMap& dofmap, const AssemblyOptions& options) {
  return options.quadrature_degree > 0 ? options.quadrature_degree : 2 * dofmap.order + 1;
}

CellKind mesh_kind(const Mesh& mesh) {
  if (mesh.elements.empty()) throw std::invalid_argument("assembly: empty mesh");
  return mesh.elements[0].kind;
}

struct BasisCache {
  ReferenceBasis basis;
  QuadratureRule rule;
  Eigen::MatrixXd values;                // nq x nb
  std::vector<Eigen::MatrixXd> ref_grads;  // per qp: nb x dim
};

BasisCache make_cache(const Mesh& mesh, const DofMap& dofmap, int degree) {
  BasisCache c{ReferenceBasis::create(mesh_kind(mesh), dofmap.order),
               gauss_rule(mesh_kind(mesh), degree),
               {},
               {}};
  tabulate(c.basis, c.rule.points, c.values, c.ref_grads);
  return c;
}

// Core element-loop for the four-field flow forms. The drag tensor per
// network is A_i = rho_i/dt I + mu K_i^{-1}; rho_i/dt = 0 gives the steady
// forms. prev_u supplies u_i^(n) at quadrature points for the transient RHS.
void assemble_flow_core(const Mesh& mesh, const DofMap& dofmap, const MaterialData& material,
                        const BoundarySpec& spec, const AssemblyOptions& options,
                        bool stabilized, double r1_dt, double r2_dt,
                        const std::function<Eigen::Vector3d(int, int, int)>* prev_u,
                        bool matrix_wanted, std::vector<Eigen::Triplet<double>>* trips,
                        Eigen::VectorXd& rhs) {
  const int dim = mesh.dim;
  const int degree = default_quad_degree(dofmap, options);
  BasisCache cache = make_cache(mesh, dofmap, degree);
  const int nb = cache.basis.size;
  const int nq = cache.rule.n();
  const int nloc = nb * (2 * dim + 2);
  const int ou[2] = {0, dim * nb};
  const int op[2] = {2 * dim * nb, 2 * dim * nb + nb};

  Eigen::MatrixXd Ke(nloc, nloc);
  Eigen::VectorXd Fe(nloc);
  std::vector<Eigen::MatrixXd> gphi;

  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto geom = map_element(mesh, e, cache.rule.points);
    map_gradients(geom, cache.ref_grads, gphi);
    Ke.setZero();
    Fe.setZero();

    for (int q = 0; q < nq; ++q) {
      const double wq = cache.rule.weights[q] * geom.det[q];
      const Eigen::Vector3d& x = geom.x[q];
      const double mu = options.mu_at_qp ? options.mu_at_qp(e, q) : material.mu;
      Eigen::Matrix3d K[2] = {material.K1(x), material.K2(x)};
      const double r_dt[2] = {r1_dt, r2_dt};
      const Eigen::Vector3d gb = material.gamma_b ? material.gamma_b(x) : Eigen::Vector3d::Zero();
      const double bm = material.beta / mu;
      const auto& phi = cache.values;
      const auto& G = gphi[q];

      for (int net = 0; net < 2; ++net) {
        Eigen::MatrixXd A = mu * K[net].topLeftCorner(dim, dim).inverse();
        for (int d = 0; d < dim; ++d) A(d, d) += r_dt[net];
        Eigen::MatrixXd Ainv = A.inverse();

        Eigen::Vector3d b = gb;
        if (prev_u) b.head(dim) += r_dt[net] * (*prev_u)(net, e, q).head(dim);

        const double mass_fac = stabilized ? 0.5 : 1.0;
        if (matrix_wanted) {
          for (int a = 0; a < nb; ++a) {
            for (int bfn = 0; bfn < nb; ++bfn) {
              const double pp = phi(q, a) * phi(q, bfn) * wq;
              // velocity mass (w_i; A_i u_i), scaled by 1/2 when stabilized
              for (int c = 0; c < dim; ++c)
                for (int d = 0; d < dim; ++d)
                  Ke(ou[net] + a * dim + c, ou[net] + bfn * dim + d) += mass_fac * A(c, d) * pp;
              for (int c = 0; c < dim; ++c) {
                // -(div w_i; p_i) and +(q_i; div u_i)
                Ke(ou[net] + a * dim + c, op[net] + bfn) -= G(a, c) * phi(q, bfn) * wq;
                Ke(op[net] + a, ou[net] + bfn * dim + c) += phi(q, a) * G(bfn, c) * wq;
                if (stabilized) {
                  // -1/2 (w_i; grad p_i) and +1/2 (grad q_i; u_i)
                  Ke(ou[net] + a * dim + c, op[net] + bfn) -= 0.5 * phi(q, a) * G(bfn, c) * wq;
                  Ke(op[net] + a, ou[net] + bfn * dim + c) += 0.5 * G(a, c) * phi(q, bfn) * wq;
                }
              }
              if (stabilized) {
                // +1/2 (grad q_i; A_i^{-1} grad p_i)
                double gg = 0.0;
                for (int c = 0; c < dim; ++c)
                  for (int d = 0; d < dim; ++d) gg += G(a, c) * Ainv(c, d) * G(bfn, d);
                Ke(op[net] + a, op[net] + bfn) += 0.5 * gg * wq;
              }
            }
          }
        }
        // RHS: (w_i; b_i) [times 1/2 when stabilized] and +1/2 (grad q_i; A_i^{-1} b_i)
        for (int a = 0; a < nb; ++a) {
          for (int c = 0; c < dim; ++c)
            Fe(ou[net] + a * dim + c) += mass_fac * phi(q, a) * b[c] * wq;
          if (stabilized) {
            double gb_dot = 0.0;
            for (int c = 0; c < dim; ++c)
              for (int d = 0; d < dim; ++d) gb_dot += G(a, c) * Ainv(c, d) * b[d];
            Fe(op[net] + a) += 0.5 * gb_dot * wq;
          }
        }
      }
      // inter-network coupling (q_1 - q_2; beta/mu (p_1 - p_2))
      if (matrix_wanted) {
        for (int a = 0; a < nb; ++a)
          for (int bfn = 0; bfn < nb; ++bfn) {
            const double m = bm * phi(q, a) * phi(q, bfn) * wq;
            Ke(op[0] + a, op[0] + bfn) += m;
            Ke(op[0] + a, op[1] + bfn) -= m;
            Ke(op[1] + a, op[0] + bfn) -= m;
            Ke(op[1] + a, op[1] + bfn) += m;
          }
      }
    }

    // scatter
    const auto& en = dofmap.element_nodes[e];
    auto gdof = [&](int loc) {
      if (loc < 2 * dim * nb) {
        int net = loc >= dim * nb ? 2 : 1;
        int rem = loc - (net - 1) * dim * nb;
        return dofmap.u_dof(net, en[rem / dim], rem % dim);
      }
      int rem = loc - 2 * dim * nb;
      int net = rem >= nb ? 2 : 1;
      return dofmap.p_dof(net, en[rem % nb]);
    };
    for (int i = 0; i < nloc; ++i) {
      const int gi = gdof(i);
      rhs[gi] += Fe(i);
      if (matrix_wanted)
        for (int j = 0; j < nloc; ++j)
          if (Ke(i, j) != 0.0) trips->emplace_back(gi, gdof(j), Ke(i, j));
    }
  }

  // weakly enforced pressure data: -<w_i . n; p0_i> on Gamma^p_i
  for (int net = 0; net < 2; ++net) {
    for (const auto& [tag, p0] : spec.pressure[net]) {
      for (int fi : mesh.facets_with_tag(tag)) {
        const Facet& facet = mesh.boundary_facets[fi];
        FacetQuadrature fq = facet_quadrature(mesh, facet, degree);
        Eigen::MatrixXd fvals;
        std::vector<Eigen::MatrixXd> fgrads;
        tabulate(cache.basis, fq.ref_points, fvals, fgrads);
        const auto& en = dofmap.element_nodes[facet.owner];
        for (int q = 0; q < fq.weights.size(); ++q) {
          const double val = p0(fq.x[q], options.time);
          for (int a = 0; a < nb; ++a)
            for (int c = 0; c < dim; ++c)
              rhs[dofmap.u_dof(net + 1, en[a], c)] -=
                  fvals(q, a) * fq.normals[q][c] * val * fq.weights[q];
        }
      }
    }
  }
}

AssembledSystem assemble_flow_system(const Mesh& mesh, const DofMap& dofmap,
                                     const MaterialData& material, const BoundarySpec& spec,
                                     const AssemblyOptions& options, bool stabilized,
                                     double r1_dt, double r2_dt,
                                     const std::function<Eigen::Vector3d(int, int, int)>* prev_u) {
  AssembledSystem sys;
  sys.dofmap = &dofmap;
  const int n = dofmap.n_dofs();
  sys.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  assemble_flow_core(mesh, dofmap, material, spec, options, stabilized, r1_dt, r2_dt, prev_u,
                     true, &trips, sys.rhs);
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());
  return sys;
}

}  // namespace

AssembledSystem assemble_galerkin(const Mesh& mesh, const DofMap& dofmap,
                                  const MaterialData& material, const BoundarySpec& spec,
                                  const AssemblyOptions& options) {
  return assemble_flow_system(mesh, dofmap, material, spec, options, false, 0, 0, nullptr);
}

AssembledSystem assemble_stabilized(const Mesh& mesh, const DofMap& dofmap,
                                    const MaterialData& material, const BoundarySpec& spec,
                                    const AssemblyOptions& options) {
  return assemble_flow_system(mesh, dofmap, material, spec, options, true, 0, 0, nullptr);
}

void assemble_nitsche_boundary(AssembledSystem& system, const Mesh& mesh, const DofMap& dofmap,
                               const MaterialData& material, const BoundarySpec& spec,
                               double eta, double h, bool per_facet_h,
                               const AssemblyOptions& options) {
  (void)material;
  const int dim = mesh.dim;
  const int degree = default_quad_degree(dofmap, options);
  ReferenceBasis basis = ReferenceBasis::create(mesh_kind(mesh), dofmap.order);
  const int nb = basis.size;
  std::vector<Eigen::Triplet<double>> trips;

  for (int net = 0; net < 2; ++net) {
    for (const auto& [tag, un] : spec.normal_velocity[net]) {
      if (!spec.weak_velocity_tags.count(tag)) continue;
      for (int fi : mesh.facets_with_tag(tag)) {
        const Facet& facet = mesh.boundary_facets[fi];
        FacetQuadrature fq = facet_quadrature(mesh, facet, degree);
        double hf = h;
        if (per_facet_h) {
          hf = 0.0;
          for (size_t a = 0; a < facet.nodes.size(); ++a)
            for (size_t b = a + 1; b < facet.nodes.size(); ++b) {
              double d2 = 0;
              for (int d = 0; d < dim; ++d) {
                double dx = mesh.nodes[facet.nodes[a]][d] - mesh.nodes[facet.nodes[b]][d];
                d2 += dx * dx;
              }
              hf = std::max(hf, std::sqrt(d2));
            }
          if (hf == 0.0) hf = h;  // 1D point facet
        }
        const double pen = eta / hf;
        Eigen::MatrixXd fvals;
        std::vector<Eigen::MatrixXd> fgrads;
        tabulate(basis, fq.ref_points, fvals, fgrads);
        const auto& en = dofmap.element_nodes[facet.owner];
        for (int q = 0; q < fq.weights.size(); ++q) {
          const double ws = fq.weights[q];
          const Eigen::Vector3d& n = fq.normals[q];
          const double unval = un(fq.x[q], options.time);
          for (int a = 0; a < nb; ++a) {
            const int pa = dofmap.p_dof(net + 1, en[a]);
            // (q_i; u_ni) and (eta/h)(w_i.n; u_ni)
            system.rhs[pa] += fvals(q, a) * unval * ws;
            for (int c = 0; c < dim; ++c)
              system.rhs[dofmap.u_dof(net + 1, en[a], c)] +=
                  pen * fvals(q, a) * n[c] * unval * ws;
            for (int b = 0; b < nb; ++b) {
              const double pp = fvals(q, a) * fvals(q, b) * ws;
              // (w_i.n; p_i) and (q_i; u_i.n)
              for (int c = 0; c < dim; ++c) {
                trips.emplace_back(dofmap.u_dof(net + 1, en[a], c),
                                   dofmap.p_dof(net + 1, en[b]), n[c] * pp);
                trips.emplace_back(pa, dofmap.u_dof(net + 1, en[b], c), n[c] * pp);
                // penalty (eta/h)(w_i.n; u_i.n)
                for (int d = 0; d < dim; ++d)
                  trips.emplace_back(dofmap.u_dof(net + 1, en[a], c),
                                     dofmap.u_dof(net + 1, en[b], d), pen * n[c] * n[d] * pp);
              }
            }
          }
        }
      }
    }
  }
  SparseMat add(system.matrix.rows(), system.matrix.cols());
  add.setFromTriplets(trips.begin(), trips.end());
  system.matrix += add;
}

AssembledSystem assemble_transient_step(const Mesh& mesh, const DofMap& dofmap,
                                        const MaterialData& material,
                                        const TransientData& transient, const BoundarySpec& spec,
                                        const Eigen::VectorXd& prev_u1,
                                        const Eigen::VectorXd& prev_u2, double dt,
                                        const AssemblyOptions& options) {
  if (!(dt > 0)) throw std::invalid_argument("assemble_transient_step: dt must be > 0");
  const int dim = mesh.dim;
  const int degree = default_quad_degree(dofmap, options);
  BasisCache cache = make_cache(mesh, dofmap, degree);
  auto prev = [&](int net, int e, int q) {
    const auto& en = dofmap.element_nodes[e];
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    const Eigen::VectorXd& coeff = net == 0 ? prev_u1 : prev_u2;
    for (int a = 0; a < cache.basis.size; ++a)
      for (int c = 0; c < dim; ++c) u[c] += cache.values(q, a) * coeff[en[a] * dim + c];
    return u;
  };
  std::function<Eigen::Vector3d(int, int, int)> prev_fn = prev;
  return assemble_flow_system(mesh, dofmap, material, spec, options, true,
                              transient.rho1 / dt, transient.rho2 / dt, &prev_fn);
}

Eigen::VectorXd assemble_transient_rhs(const Mesh& mesh, const DofMap& dofmap,
                                       const MaterialData& material,
                                       const TransientData& transient, const BoundarySpec& spec,
                                       const Eigen::VectorXd& prev_u1,
                                       const Eigen::VectorXd& prev_u2, double dt,
                                       const AssemblyOptions& options) {
  if (!(dt > 0)) throw std::invalid_argument("assemble_transient_rhs: dt must be > 0");
  const int dim = mesh.dim;
  const int degree = default_quad_degree(dofmap, options);
  BasisCache cache = make_cache(mesh, dofmap, degree);
  auto prev = [&](int net, int e, int q) {
    const auto& en = dofmap.element_nodes[e];
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    const Eigen::VectorXd& coeff = net == 0 ? prev_u1 : prev_u2;
    for (int a = 0; a < cache.basis.size; ++a)
      for (int c = 0; c < dim; ++c) u[c] += cache.values(q, a) * coeff[en[a] * dim + c];
    return u;
  };
  std::function<Eigen::Vector3d(int, int, int)> prev_fn = prev;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dofmap.n_dofs());
  assemble_flow_core(mesh, dofmap, material, spec, options, true, transient.rho1 / dt,
                     transient.rho2 / dt, &prev_fn, false, nullptr, rhs);
  return rhs;
}

std::vector<std::pair<int, double>> strong_velocity_constraints(const Mesh& mesh,
                                                                const DofMap& dofmap,
                                                                const BoundarySpec& spec,
                                                                double time) {
  const int dim = mesh.dim;
  std::vector<std::pair<int, double>> out;
  for (int net = 0; net < 2; ++net) {
    for (const auto& [tag, un] : spec.normal_velocity[net]) {
      if (spec.weak_velocity_tags.count(tag)) continue;
      for (int fi : mesh.facets_with_tag(tag)) {
        const Facet& facet = mesh.boundary_facets[fi];
        FacetQuadrature fq = facet_quadrature(mesh, facet, 2);
        int axis = -1;
        double sign = 0;
        for (int q = 0; q < fq.weights.size(); ++q) {
          int k = 0;
          for (int d = 1; d < dim; ++d)
            if (std::abs(fq.normals[q][d]) > std::abs(fq.normals[q][k])) k = d;
          double s = fq.normals[q][k] > 0 ? 1.0 : -1.0;
          if (std::abs(std::abs(fq.normals[q][k]) - 1.0) > 1e-10)
            throw std::invalid_argument(
                "strong velocity BC on non-axis-aligned facet (tag '" + tag +
                "'); enforce it weakly via Nitsche instead");
          if (axis == -1) {
            axis = k;
            sign = s;
          } else if (axis != k || sign != s) {
            throw std::invalid_argument("strong velocity BC: inconsistent facet normal");
          }
        }
        for (int node : facet_scalar_nodes(mesh, dofmap, facet)) {
          const double v = un(dofmap.node_coords[node], time);
          out.emplace_back(dofmap.u_dof(net + 1, node, axis), v * sign);
        }
      }
    }
  }
  return out;
}

void add_datum_constraint(AssembledSystem& system, const Mesh& mesh, const DofMap& dofmap) {
  const int n = system.n();
  const int degree = 2 * dofmap.order + 1;
  BasisCache cache = make_cache(mesh, dofmap, degree);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dofmap.n_scalar);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto geom = map_element(mesh, e, cache.rule.points);
    const auto& en = dofmap.element_nodes[e];
    for (int q = 0; q < cache.rule.n(); ++q)
      for (int a = 0; a < cache.basis.size; ++a)
        w[en[a]] += cache.values(q, a) * cache.rule.weights[q] * geom.det[q];
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(system.matrix.nonZeros() + 2 * dofmap.n_scalar);
  for (int i = 0; i < n; ++i)
    for (SparseMat::InnerIterator it(system.matrix, i); it; ++it)
      trips.emplace_back(i, static_cast<int>(it.col()), it.value());
  for (int node = 0; node < dofmap.n_scalar; ++node) {
    const int pd = dofmap.p_dof(1, node);
    trips.emplace_back(n, pd, w[node]);
    trips.emplace_back(pd, n, w[node]);
  }
  SparseMat bigger(n + 1, n + 1);
  bigger.setFromTriplets(trips.begin(), trips.end());
  system.matrix = std::move(bigger);
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = system.rhs;
  rhs[n] = 0.0;
  system.rhs = std::move(rhs);
  system.constraint = DatumConstraint{n};
}

SparseMat stab_norm_weights(const Mesh& mesh, const DofMap& dofmap, const MaterialData& material,
                            int quadrature_degree) {
  const int dim = mesh.dim;
  const int degree = quadrature_degree > 0 ? quadrature_degree : 2 * dofmap.order + 1;
  BasisCache cache = make_cache(mesh, dofmap, degree);
  const int nb = cache.basis.size;
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<Eigen::MatrixXd> gphi;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto geom = map_element(mesh, e, cache.rule.points);
    map_gradients(geom, cache.ref_grads, gphi);
    const auto& en = dofmap.element_nodes[e];
    for (int q = 0; q < cache.rule.n(); ++q) {
      const double wq = cache.rule.weights[q] * geom.det[q];
      const Eigen::Vector3d& x = geom.x[q];
      const double mu = material.mu;
      Eigen::Matrix3d K[2] = {material.K1(x), material.K2(x)};
      const double bm = material.beta / mu;
      const auto& phi = cache.values;
      const auto& G = gphi[q];
      for (int net = 0; net < 2; ++net) {
        Eigen::MatrixXd A = mu * K[net].topLeftCorner(dim, dim).inverse();
        Eigen::MatrixXd Ainv = K[net].topLeftCorner(dim, dim) / mu;
        for (int a = 0; a < nb; ++a)
          for (int b = 0; b < nb; ++b) {
            const double pp = phi(q, a) * phi(q, b) * wq;
            for (int c = 0; c < dim; ++c)
              for (int d = 0; d < dim; ++d)
                trips.emplace_back(dofmap.u_dof(net + 1, en[a], c),
                                   dofmap.u_dof(net + 1, en[b], d), 0.5 * A(c, d) * pp);
            double gg = 0.0;
            for (int c = 0; c < dim; ++c)
              for (int d = 0; d < dim; ++d) gg += G(a, c) * Ainv(c, d) * G(b, d);
            trips.emplace_back(dofmap.p_dof(net + 1, en[a]), dofmap.p_dof(net + 1, en[b]),
                               0.5 * gg * wq);
          }
      }
      for (int a = 0; a < nb; ++a)
        for (int b = 0; b < nb; ++b) {
          const double m = bm * phi(q, a) * phi(q, b) * wq;
          trips.emplace_back(dofmap.p_dof(1, en[a]), dofmap.p_dof(1, en[b]), m);
          trips.emplace_back(dofmap.p_dof(1, en[a]), dofmap.p_dof(2, en[b]), -m);
          trips.emplace_back(dofmap.p_dof(2, en[a]), dofmap.p_dof(1, en[b]), -m);
          trips.emplace_back(dofmap.p_dof(2, en[a]), dofmap.p_dof(2, en[b]), m);
        }
    }
  }
  SparseMat S(dofmap.n_dofs(), dofmap.n_dofs());
  S.setFromTriplets(trips.begin(), trips.end());
  return S;
}

AssembledSystem assemble_transport_step(
    const Mesh& mesh, const DofMap& dofmap,
    const std::function<Eigen::Vector3d(int elem, int qp)>& velocity,
    const TransportData& transport, double dt, const Eigen::VectorXd& prev_c,
    const AssemblyOptions& options) {
  if (!(dt > 0)) throw std::invalid_argument("assemble_transport_step: dt must be > 0");
  const int dim = mesh.dim;
  const int degree = default_quad_degree(dofmap, options);
  BasisCache cache = make_cache(mesh, dofmap, degree);
  const int nb = cache.basis.size;
  const int n = dofmap.n_scalar;

  AssembledSystem sys;
  sys.dofmap = &dofmap;
  sys.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<Eigen::MatrixXd> gphi;
  const Eigen::MatrixXd Dmat = transport.D.topLeftCorner(dim, dim);
  const double Dnorm = Dmat.norm();

  Eigen::MatrixXd Ke(nb, nb);
  Eigen::VectorXd Fe(nb);

  for (int e = 0; e < mesh.n_elements(); ++e) {
    auto geom = map_element(mesh, e, cache.rule.points);
    map_gradients(geom, cache.ref_grads, gphi);
    const auto& en = dofmap.element_nodes[e];
    Ke.setZero();
    Fe.setZero();

    // element size and mean speed for the SUPG parameter
    double he = 0.0;
    {
      const auto& el = mesh.elements[e];
      for (size_t a = 0; a < el.nodes.size(); ++a)
        for (size_t b = a + 1; b < el.nodes.size(); ++b) {
          double d2 = 0;
          for (int d = 0; d < dim; ++d) {
            double dx = mesh.nodes[el.nodes[a]][d] - mesh.nodes[el.nodes[b]][d];
            d2 += dx * dx;
          }
          he = std::max(he, std::sqrt(d2));
        }
    }
    double speed = 0.0;
    for (int q = 0; q < cache.rule.n(); ++q) speed += velocity(e, q).head(dim).norm();
    speed /= cache.rule.n();
    double tau = 0.0;
    if (speed > 1e-14) {
      const double pe = Dnorm > 0 ? speed * he / (2.0 * Dnorm) : std::numeric_limits<double>::infinity();
      tau = he / (2.0 * speed) * std::min(1.0, pe / 3.0);
    }

    for (int q = 0; q < cache.rule.n(); ++q) {
      const double wq = cache.rule.weights[q] * geom.det[q];
      const Eigen::VectorXd u = velocity(e, q).head(dim);
      const auto& G = gphi[q];
      const auto& phi = cache.values;
      double cn = 0.0;
      for (int a = 0; a < nb; ++a) cn += phi(q, a) * prev_c[en[a]];
      const double fval = transport.f ? transport.f(geom.x[q]) : 0.0;

      // lagged shock-capturing diffusion: proportional to the advective
      // residual of the previous state, so it acts only across sharp fronts
      // and vanishes with mesh refinement
      double nu_sc = 0.0;
      if (transport.shock_capture > 0.0) {
        Eigen::VectorXd grad_cn = Eigen::VectorXd::Zero(dim);
        for (int a = 0; a < nb; ++a) grad_cn += G.row(a).transpose() * prev_c[en[a]];
        const double gnorm = grad_cn.norm();
        if (gnorm > 1e-12)
          nu_sc = 0.5 * transport.shock_capture * he * std::abs(u.dot(grad_cn)) / gnorm;
      }

      for (int a = 0; a < nb; ++a) {
        const double ua_grad = u.dot(G.row(a).transpose());  // u . grad psi_a
        const double wfun = phi(q, a) + tau * ua_grad;       // SUPG-weighted test
        for (int b = 0; b < nb; ++b) {
          const double ub_grad = u.dot(G.row(b).transpose());
          // mass/dt + advection (conservative form integrated by parts for
          // the Galerkin part, advective form for the SUPG part)
          double k = wfun * phi(q, b) / dt;
          k -= ua_grad * phi(q, b);                              // -(grad psi_a . u) c
          k += (G.row(a) * Dmat * G.row(b).transpose()).value();  // diffusion
          k += nu_sc * G.row(a).dot(G.row(b));                    // shock capturing
          k += tau * ua_grad * ub_grad;                          // SUPG advection
          Ke(a, b) += k * wq;
        }
        Fe(a) += wfun * (cn / dt + fval) * wq;
      }
    }
    for (int a = 0; a < nb; ++a) {
      sys.rhs[en[a]] += Fe(a);
      for (int b = 0; b < nb; ++b)
        if (Ke(a, b) != 0.0) trips.emplace_back(en[a], en[b], Ke(a, b));
    }
  }

  // boundary terms
  ReferenceBasis basis = cache.basis;
  for (const auto& [tag, qp] : transport.flux) {
    for (int fi : mesh.facets_with_tag(tag)) {
      const Facet& facet = mesh.boundary_facets[fi];
      FacetQuadrature fq = facet_quadrature(mesh, facet, degree);
      Eigen::MatrixXd fvals;
      std::vector<Eigen::MatrixXd> fgrads;
      tabulate(basis, fq.ref_points, fvals, fgrads);
      const auto& en = dofmap.element_nodes[facet.owner];
      for (int q = 0; q < fq.weights.size(); ++q) {
        const double val = qp(fq.x[q], options.time);
        for (int a = 0; a < nb; ++a) sys.rhs[en[a]] -= fvals(q, a) * val * fq.weights[q];
      }
    }
  }
  // outflow: total flux approximated by the advective part, (psi; (u.n) c)
  for (const auto& tag : transport.outflow) {
    for (int fi : mesh.facets_with_tag(tag)) {
      const Facet& facet = mesh.boundary_facets[fi];
      FacetQuadrature fq = facet_quadrature(mesh, facet, degree);
      Eigen::MatrixXd fvals;
      std::vector<Eigen::MatrixXd> fgrads;
      tabulate(basis, fq.ref_points, fvals, fgrads);
      const auto& en = dofmap.element_nodes[facet.owner];
      // velocity at facet points: use the facet's owner-element velocity via
      // the supplied callback is volume-qp indexed, so re-evaluate from the
      // nearest volume point is not available here; instead accept a small
      // inconsistency and use the mean element velocity.
      Eigen::Vector3d umean = Eigen::Vector3d::Zero();
      for (int q = 0; q < cache.rule.n(); ++q) umean += velocity(facet.owner, q);
      umean /= cache.rule.n();
      for (int q = 0; q < fq.weights.size(); ++q) {
        const double un = umean.head(dim).dot(fq.normals[q].head(dim));
        for (int a = 0; a < nb; ++a)
          for (int b = 0; b < nb; ++b)
            trips.emplace_back(en[a], en[b], fvals(q, a) * fvals(q, b) * un * fq.weights[q]);
      }
    }
  }

  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trips.begin(), trips.end());

  // inlet Dirichlet rows
  for (const auto& [tag, cfun] : transport.dirichlet) {
    for (int fi : mesh.facets_with_tag(tag)) {
      const Facet& facet = mesh.boundary_facets[fi];
      for (int node : facet_scalar_nodes(mesh, dofmap, facet))
        sys.dirichlet_rows.emplace_back(node, cfun(dofmap.node_coords[node], options.time));
    }
  }
  return sys;
}

}  // namespace dpp
