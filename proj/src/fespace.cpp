#include "dpp/fespace.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace dpp {

namespace {

// phi_i and phi_i' of the 1D Lagrange basis at equispaced nodes; direct
// product formulas, exact at nodes (no barycentric singularities).
void eval_lagrange_1d(const Eigen::VectorXd& nodes, double x, Eigen::VectorXd& val,
                      Eigen::VectorXd& der) {
  const int n = static_cast<int>(nodes.size());
  val.resize(n);
  der.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != i) v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
    val[i] = v;
    double d = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      double term = 1.0 / (nodes[i] - nodes[k]);
      for (int j = 0; j < n; ++j)
        if (j != i && j != k) term *= (x - nodes[j]) / (nodes[i] - nodes[j]);
      d += term;
    }
    der[i] = d;
  }
}

Eigen::VectorXd equispaced_nodes(int order) {
  Eigen::VectorXd x(order + 1);
  for (int i = 0; i <= order; ++i) x[i] = -1.0 + 2.0 * i / order;
  return x;
}

}  // namespace

ReferenceBasis ReferenceBasis::create(CellKind kind, int order) {
  if (order < 1) throw std::invalid_argument("ReferenceBasis: order must be >= 1");
  const int dim = cell_dim(kind);
  const int max_order = dim == 1 ? 14 : 7;
  if (order > max_order)
    throw std::invalid_argument("ReferenceBasis: order beyond supported maximum");
  ReferenceBasis b;
  b.kind = kind;
  b.order = order;
  b.dim = dim;
  const int n1 = order + 1;
  b.size = 1;
  for (int d = 0; d < dim; ++d) b.size *= n1;
  Eigen::VectorXd x1 = equispaced_nodes(order);
  b.nodes.resize(b.size);
  for (int idx = 0; idx < b.size; ++idx) {
    int rem = idx;
    Eigen::Vector3d p(0, 0, 0);
    for (int d = 0; d < dim; ++d) {
      p[d] = x1[rem % n1];
      rem /= n1;
    }
    b.nodes[idx] = p;
  }
  return b;
}

void tabulate(const ReferenceBasis& basis, const std::vector<Eigen::Vector3d>& points,
              Eigen::MatrixXd& values, std::vector<Eigen::MatrixXd>& grads) {
  const int np = static_cast<int>(points.size());
  const int nb = basis.size;
  const int dim = basis.dim;
  const int n1 = basis.order + 1;
  values.resize(np, nb);
  grads.assign(np, Eigen::MatrixXd(nb, dim));
  Eigen::VectorXd x1 = equispaced_nodes(basis.order);
  std::vector<Eigen::VectorXd> v(dim), g(dim);
  for (int q = 0; q < np; ++q) {
    for (int d = 0; d < dim; ++d) eval_lagrange_1d(x1, points[q][d], v[d], g[d]);
    for (int i = 0; i < nb; ++i) {
      int rem = i;
      int ax[3] = {0, 0, 0};
      for (int d = 0; d < dim; ++d) {
        ax[d] = rem % n1;
        rem /= n1;
      }
      double val = 1.0;
      for (int d = 0; d < dim; ++d) val *= v[d][ax[d]];
      values(q, i) = val;
      for (int d = 0; d < dim; ++d) {
        double gr = g[d][ax[d]];
        for (int e = 0; e < dim; ++e)
          if (e != d) gr *= v[e][ax[e]];
        grads[q](i, d) = gr;
      }
    }
  }
}

void gauss_legendre_1d(int n, Eigen::VectorXd& points, Eigen::VectorXd& weights) {
  points.resize(n);
  weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, Newton on P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p0 = 0.0;  // placeholder, handled by loop below
      double pnm1 = 1.0, pn = x;
      if (n == 1) {
        pnm1 = 1.0;
        pn = x;
      } else {
        pnm1 = 1.0;
        pn = x;
        for (int k = 2; k <= n; ++k) {
          double pnext = ((2 * k - 1) * x * pn - (k - 1) * pnm1) / k;
          pnm1 = pn;
          pn = pnext;
        }
      }
      (void)p0;
      (void)p1;
      pp = n * (x * pn - pnm1) / (x * x - 1.0);
      double dx = pn / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // one final recompute of pp at converged x
    {
      double pnm1 = 1.0, pn = x;
      for (int k = 2; k <= n; ++k) {
        double pnext = ((2 * k - 1) * x * pn - (k - 1) * pnm1) / k;
        pnm1 = pn;
        pn = pnext;
      }
      pp = n * (x * pn - pnm1) / (x * x - 1.0);
    }
    points[n - 1 - i] = x;
    weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

QuadratureRule gauss_rule(CellKind kind, int degree) {
  if (degree < 1) throw std::invalid_argument("gauss_rule: degree must be >= 1");
  const int dim = cell_dim(kind);
  const int max_degree = dim == 1 ? 2 * 14 + 1 : 2 * 7 + 1;
  if (degree > max_degree)
    throw std::invalid_argument("gauss_rule: unsupported degree for this element kind");
  const int n1 = (degree + 2) / 2;  // smallest n with 2n-1 >= degree
  Eigen::VectorXd x1, w1;
  gauss_legendre_1d(n1, x1, w1);
  QuadratureRule rule;
  int total = 1;
  for (int d = 0; d < dim; ++d) total *= n1;
  rule.points.resize(total);
  rule.weights.resize(total);
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    Eigen::Vector3d p(0, 0, 0);
    double w = 1.0;
    for (int d = 0; d < dim; ++d) {
      p[d] = x1[rem % n1];
      w *= w1[rem % n1];
      rem /= n1;
    }
    rule.points[idx] = p;
    rule.weights[idx] = w;
  }
  return rule;
}

namespace {

// Multilinear geometry: vertex shape functions + jacobian at a reference point.
void geometry_map(const Mesh& mesh, const Element& el, const Eigen::Vector3d& xi,
                  Eigen::Vector3d& x, Eigen::Matrix3d& J) {
  const int dim = mesh.dim;
  const int nv = cell_num_vertices(el.kind);
  x.setZero();
  J.setIdentity();
  Eigen::Matrix3d Jd = Eigen::Matrix3d::Zero();
  for (int v = 0; v < nv; ++v) {
    int c[3] = {v & 1, (v >> 1) & 1, (v >> 2) & 1};
    double N = 1.0;
    double factor[3];
    for (int d = 0; d < dim; ++d) {
      factor[d] = 0.5 * (1.0 + (c[d] ? xi[d] : -xi[d]));
      N *= factor[d];
    }
    const auto& node = mesh.nodes[el.nodes[v]];
    for (int d = 0; d < dim; ++d) x[d] += N * node[d];
    for (int dd = 0; dd < dim; ++dd) {
      double dN = 1.0;
      for (int d = 0; d < dim; ++d)
        dN *= (d == dd) ? (c[d] ? 0.5 : -0.5) : factor[d];
      for (int d = 0; d < dim; ++d) Jd(d, dd) += dN * node[d];
    }
  }
  J = Eigen::Matrix3d::Identity();
  J.topLeftCorner(dim, dim) = Jd.topLeftCorner(dim, dim);
}

double det_dim(const Eigen::Matrix3d& J, int dim) {
  if (dim == 1) return J(0, 0);
  if (dim == 2) return J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
  return J.topLeftCorner(3, 3).determinant();
}

}  // namespace

ElementGeometry map_element(const Mesh& mesh, int elem,
                            const std::vector<Eigen::Vector3d>& ref_points) {
  const auto& el = mesh.elements[elem];
  const int dim = mesh.dim;
  ElementGeometry g;
  const int np = static_cast<int>(ref_points.size());
  g.jacobian.resize(np);
  g.jacobian_inv.resize(np);
  g.det.resize(np);
  g.x.resize(np);
  for (int q = 0; q < np; ++q) {
    geometry_map(mesh, el, ref_points[q], g.x[q], g.jacobian[q]);
    double det = det_dim(g.jacobian[q], dim);
    if (!(det > 0))
      throw std::runtime_error("degenerate element " + std::to_string(elem) +
                               ": non-positive Jacobian determinant");
    g.det[q] = det;
    Eigen::Matrix3d inv = Eigen::Matrix3d::Identity();
    inv.topLeftCorner(dim, dim) =
        g.jacobian[q].topLeftCorner(dim, dim).inverse().eval();
    g.jacobian_inv[q] = inv;
  }
  return g;
}

void map_gradients(const ElementGeometry& geom, const std::vector<Eigen::MatrixXd>& ref_grads,
                   std::vector<Eigen::MatrixXd>& phys_grads) {
  const int np = static_cast<int>(ref_grads.size());
  phys_grads.resize(np);
  for (int q = 0; q < np; ++q) {
    const int dim = static_cast<int>(ref_grads[q].cols());
    // grad_phys = J^{-T} grad_ref  (rows: basis functions)
    phys_grads[q] =
        ref_grads[q] * geom.jacobian_inv[q].topLeftCorner(dim, dim);
  }
}

namespace {

struct EntityKeyLess {
  bool operator()(const std::array<long, 6>& a, const std::array<long, 6>& b) const {
    return a < b;
  }
};

}  // namespace

DofMap build_dofmap(const Mesh& mesh, int order) {
  validate_mesh(mesh);
  const int dim = mesh.dim;
  const int max_order = dim == 1 ? 14 : 7;
  if (order < 1 || order > max_order) throw std::invalid_argument("build_dofmap: bad order");
  DofMap dm;
  dm.dim = dim;
  dm.order = order;
  const int p = order;
  const int n1 = p + 1;

  std::map<std::array<long, 6>, int, EntityKeyLess> shared;  // entity key -> first node id
  auto claim = [&](std::array<long, 6> key) -> std::pair<int, bool> {
    auto it = shared.find(key);
    if (it != shared.end()) return {it->second, false};
    int id = dm.n_scalar++;
    shared.emplace(key, id);
    return {id, true};
  };

  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    int nb = 1;
    for (int d = 0; d < dim; ++d) nb *= n1;
    std::vector<int> enodes(nb);
    for (int idx = 0; idx < nb; ++idx) {
      int rem = idx;
      int a[3] = {0, 0, 0};
      for (int d = 0; d < dim; ++d) {
        a[d] = rem % n1;
        rem /= n1;
      }
      int interior_axes[3], n_int = 0;
      for (int d = 0; d < dim; ++d)
        if (a[d] > 0 && a[d] < p) interior_axes[n_int++] = d;

      int gid;
      bool fresh;
      if (n_int == dim && dim > 0 && !(dim == 1 && n_int == 0)) {
        // cell-interior node: unique to this element
        gid = dm.n_scalar++;
        fresh = true;
      } else if (n_int == 0) {
        // vertex
        int vi = 0;
        for (int d = 0; d < dim; ++d)
          if (a[d] == p) vi |= 1 << d;
        long gvert = el.nodes[vi];
        auto [id, f] = claim({0, gvert, -1, -1, -1, -1});
        gid = id;
        fresh = f;
      } else if (n_int == 1) {
        // edge node
        int ax = interior_axes[0];
        int base = 0;
        for (int d = 0; d < dim; ++d)
          if (d != ax && a[d] == p) base |= 1 << d;
        long g0 = el.nodes[base];
        long g1 = el.nodes[base | (1 << ax)];
        long idx_on_edge = (g0 < g1) ? a[ax] : p - a[ax];
        auto [id, f] = claim({1, std::min(g0, g1), std::max(g0, g1), idx_on_edge, -1, -1});
        gid = id;
        fresh = f;
      } else {
        // quad-face node (3D only): canonicalize orientation via global ids
        int ax1 = interior_axes[0], ax2 = interior_axes[1];
        int fixed = 3 - ax1 - ax2;
        int base = (a[fixed] == p) ? (1 << fixed) : 0;
        auto corner = [&](int u, int v) {
          return static_cast<long>(el.nodes[base | (u ? 1 << ax1 : 0) | (v ? 1 << ax2 : 0)]);
        };
        long c[2][2] = {{corner(0, 0), corner(1, 0)}, {corner(0, 1), corner(1, 1)}};
        // find corner with smallest global id
        int mu = 0, mv = 0;
        for (int v = 0; v < 2; ++v)
          for (int u = 0; u < 2; ++u)
            if (c[v][u] < c[mv][mu]) {
              mu = u;
              mv = v;
            }
        long nA = c[mv][1 - mu];  // neighbor along ax1
        long nB = c[1 - mv][mu];  // neighbor along ax2
        long s = mu ? p - a[ax1] : a[ax1];
        long t = mv ? p - a[ax2] : a[ax2];
        if (nB < nA) std::swap(s, t);
        long cmin = c[mv][mu];
        long csec = std::min(nA, nB);
        long cdia = c[1 - mv][1 - mu];
        auto [id, f] = claim({2, cmin, csec, cdia, s, t});
        gid = id;
        fresh = f;
      }
      enodes[idx] = gid;
      if (fresh || gid == dm.n_scalar - 1) {
        // compute physical coordinates for newly created nodes
        if (static_cast<int>(dm.node_coords.size()) < dm.n_scalar) {
          Eigen::Vector3d xi(0, 0, 0);
          for (int d = 0; d < dim; ++d) xi[d] = -1.0 + 2.0 * a[d] / p;
          Eigen::Vector3d x;
          Eigen::Matrix3d J;
          geometry_map(mesh, el, xi, x, J);
          dm.node_coords.push_back(x);
        }
      }
    }
    dm.element_nodes.push_back(std::move(enodes));
  }
  return dm;
}

namespace {

// Identify the owner element's local face (axis, side) matching a facet.
std::pair<int, int> find_local_face(const Mesh& mesh, const Facet& facet) {
  const auto& el = mesh.elements[facet.owner];
  const int dim = mesh.dim;
  std::set<int> fs(facet.nodes.begin(), facet.nodes.end());
  for (int axis = 0; axis < dim; ++axis)
    for (int side = 0; side < 2; ++side) {
      std::set<int> face;
      const int nv = cell_num_vertices(el.kind);
      for (int v = 0; v < nv; ++v) {
        int coord = (v >> axis) & 1;
        if (coord == side) face.insert(el.nodes[v]);
      }
      if (face == fs) return {axis, side};
    }
  throw std::runtime_error("facet does not match any face of its owner element");
}

}  // namespace

FacetQuadrature facet_quadrature(const Mesh& mesh, const Facet& facet, int degree) {
  const int dim = mesh.dim;
  auto [axis, side] = find_local_face(mesh, facet);
  FacetQuadrature fq;
  if (dim == 1) {
    Eigen::Vector3d xi(0, 0, 0);
    xi[0] = side ? 1.0 : -1.0;
    fq.ref_points = {xi};
    fq.weights.resize(1);
    fq.weights[0] = 1.0;
    Eigen::Vector3d n(0, 0, 0);
    n[0] = side ? 1.0 : -1.0;
    fq.normals = {n};
    auto g = map_element(mesh, facet.owner, fq.ref_points);
    fq.x = g.x;
    return fq;
  }
  // free axes of the face
  int free_axes[2], nfree = 0;
  for (int d = 0; d < dim; ++d)
    if (d != axis) free_axes[nfree++] = d;
  const int n1 = (degree + 2) / 2;
  Eigen::VectorXd x1, w1;
  gauss_legendre_1d(n1, x1, w1);
  const int nq = (dim == 2) ? n1 : n1 * n1;
  fq.ref_points.resize(nq);
  fq.weights.resize(nq);
  fq.normals.resize(nq);
  for (int q = 0; q < nq; ++q) {
    Eigen::Vector3d xi(0, 0, 0);
    xi[axis] = side ? 1.0 : -1.0;
    double wq;
    if (dim == 2) {
      xi[free_axes[0]] = x1[q];
      wq = w1[q];
    } else {
      xi[free_axes[0]] = x1[q % n1];
      xi[free_axes[1]] = x1[q / n1];
      wq = w1[q % n1] * w1[q / n1];
    }
    fq.ref_points[q] = xi;
    fq.weights[q] = wq;
  }
  auto g = map_element(mesh, facet.owner, fq.ref_points);
  fq.x = g.x;
  for (int q = 0; q < nq; ++q) {
    // surface element: ds = det(J) |J^{-T} e_axis| d(face coords);
    // outward normal is +-J^{-T} e_axis normalized.
    Eigen::VectorXd v = g.jacobian_inv[q].topLeftCorner(dim, dim).transpose().col(axis);
    double nv = v.norm();
    Eigen::Vector3d n(0, 0, 0);
    double sign = side ? 1.0 : -1.0;
    for (int d = 0; d < dim; ++d) n[d] = sign * v[d] / nv;
    fq.normals[q] = n;
    fq.weights[q] *= g.det[q] * nv;
  }
  return fq;
}

std::vector<int> facet_scalar_nodes(const Mesh& mesh, const DofMap& dofmap, const Facet& facet) {
  auto [axis, side] = find_local_face(mesh, facet);
  const int p = dofmap.order;
  const int n1 = p + 1;
  const int dim = mesh.dim;
  std::vector<int> out;
  const auto& enodes = dofmap.element_nodes[facet.owner];
  for (int idx = 0; idx < static_cast<int>(enodes.size()); ++idx) {
    int rem = idx;
    int a[3] = {0, 0, 0};
    for (int d = 0; d < dim; ++d) {
      a[d] = rem % n1;
      rem /= n1;
    }
    if (a[axis] == (side ? p : 0)) out.push_back(enodes[idx]);
  }
  return out;
}

}  // namespace dpp
