#include "dpp/solution.hpp"

#include <cmath>

namespace dpp {

Eigen::VectorXd FieldSolution::u_block(int network) const {
  const int sz = dofmap->n_scalar * dofmap->dim;
  return coeffs.segment((network - 1) * sz, sz);
}

Eigen::VectorXd FieldSolution::p_block(int network) const {
  return coeffs.segment(2 * dofmap->dim * dofmap->n_scalar + (network - 1) * dofmap->n_scalar,
                        dofmap->n_scalar);
}

std::vector<FieldValues> FieldSolution::eval_on_element(
    int elem, const std::vector<Eigen::Vector3d>& ref_points) const {
  const int dim = dofmap->dim;
  ReferenceBasis basis = ReferenceBasis::create(mesh->elements[elem].kind, dofmap->order);
  Eigen::MatrixXd vals;
  std::vector<Eigen::MatrixXd> ref_grads;
  tabulate(basis, ref_points, vals, ref_grads);
  auto geom = map_element(*mesh, elem, ref_points);
  std::vector<Eigen::MatrixXd> G;
  map_gradients(geom, ref_grads, G);

  const auto& en = dofmap->element_nodes[elem];
  std::vector<FieldValues> out(ref_points.size());
  for (size_t q = 0; q < ref_points.size(); ++q) {
    FieldValues& f = out[q];
    for (int a = 0; a < basis.size; ++a) {
      const double v = vals(q, a);
      const int node = en[a];
      for (int c = 0; c < dim; ++c) {
        f.u1[c] += v * coeffs[dofmap->u_dof(1, node, c)];
        f.u2[c] += v * coeffs[dofmap->u_dof(2, node, c)];
        f.div_u1 += G[q](a, c) * coeffs[dofmap->u_dof(1, node, c)];
        f.div_u2 += G[q](a, c) * coeffs[dofmap->u_dof(2, node, c)];
        f.grad_p1[c] += G[q](a, c) * coeffs[dofmap->p_dof(1, node)];
        f.grad_p2[c] += G[q](a, c) * coeffs[dofmap->p_dof(2, node)];
      }
      f.p1 += v * coeffs[dofmap->p_dof(1, node)];
      f.p2 += v * coeffs[dofmap->p_dof(2, node)];
    }
  }
  return out;
}

std::optional<std::pair<int, Eigen::Vector3d>> locate_point(const Mesh& mesh,
                                                            const Eigen::Vector3d& x,
                                                            double tol) {
  const int dim = mesh.dim;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    // bounding-box prefilter with generous margin
    bool inside_box = true;
    for (int d = 0; d < dim && inside_box; ++d) {
      double lo = 1e300, hi = -1e300, span;
      for (int v : el.nodes) {
        lo = std::min(lo, mesh.nodes[v][d]);
        hi = std::max(hi, mesh.nodes[v][d]);
      }
      span = hi - lo;
      if (x[d] < lo - 0.25 * span - tol || x[d] > hi + 0.25 * span + tol) inside_box = false;
    }
    if (!inside_box) continue;
    // Newton on the multilinear map
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    bool converged = false;
    for (int it = 0; it < 30; ++it) {
      auto g = map_element(mesh, e, {xi});
      Eigen::VectorXd r = (x - g.x[0]).head(dim);
      if (r.norm() < 1e-13) {
        converged = true;
        break;
      }
      Eigen::VectorXd dxi = g.jacobian_inv[0].topLeftCorner(dim, dim) * r;
      xi.head(dim) += dxi;
      // keep the iterate in a sane neighborhood
      for (int d = 0; d < dim; ++d) xi[d] = std::clamp(xi[d], -2.0, 2.0);
      if (dxi.norm() < 1e-14) {
        converged = true;
        break;
      }
    }
    if (!converged) continue;
    bool inside = true;
    for (int d = 0; d < dim; ++d)
      if (std::abs(xi[d]) > 1.0 + 1e-9) inside = false;
    if (inside) {
      for (int d = 0; d < dim; ++d) xi[d] = std::clamp(xi[d], -1.0, 1.0);
      return std::make_pair(e, xi);
    }
  }
  return std::nullopt;
}

std::optional<FieldValues> FieldSolution::eval_at(const Eigen::Vector3d& x) const {
  auto loc = locate_point(*mesh, x);
  if (!loc) return std::nullopt;
  return eval_on_element(loc->first, {loc->second})[0];
}

}  // namespace dpp
