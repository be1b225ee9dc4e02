#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dpp/mesh.hpp"

namespace dpp {

/// Equispaced Lagrange basis on the reference element [-1,1]^d.
struct ReferenceBasis {
  CellKind kind = CellKind::Segment;
  int order = 1;
  int dim = 1;
  int size = 2;                          // number of basis functions
  std::vector<Eigen::Vector3d> nodes;    // reference node layout, tensor-lex order

  static ReferenceBasis create(CellKind kind, int order);
};

/// values(q, i) = phi_i(point_q); grads[q](i, d) = d phi_i / d xi_d at point_q.
void tabulate(const ReferenceBasis& basis, const std::vector<Eigen::Vector3d>& points,
              Eigen::MatrixXd& values, std::vector<Eigen::MatrixXd>& grads);

struct QuadratureRule {
  std::vector<Eigen::Vector3d> points;
  Eigen::VectorXd weights;
  int n() const { return static_cast<int>(points.size()); }
};

/// Tensor Gauss-Legendre rule exact to the requested polynomial degree.
QuadratureRule gauss_rule(CellKind kind, int degree);

/// Gauss-Legendre rule on [-1,1] (exposed for facet rules and the radial oracle).
void gauss_legendre_1d(int n, Eigen::VectorXd& points, Eigen::VectorXd& weights);

/// Equal-order scalar node set shared by all four fields, plus the
/// field-block layout: [u1 (dim comps/node) | u2 | p1 | p2].
struct DofMap {
  int dim = 0;
  int order = 1;
  int n_scalar = 0;
  std::vector<std::vector<int>> element_nodes;  // scalar node ids, basis ordering
  std::vector<Eigen::Vector3d> node_coords;

  int n_dofs() const { return n_scalar * (2 * dim + 2); }
  int u_dof(int network, int node, int comp) const {
    return (network - 1) * dim * n_scalar + node * dim + comp;
  }
  int p_dof(int network, int node) const {
    return 2 * dim * n_scalar + (network - 1) * n_scalar + node;
  }
};

DofMap build_dofmap(const Mesh& mesh, int order);

/// Geometry of one element evaluated at a set of reference points
/// (multilinear vertex mapping; fields may be higher order — subparametric).
struct ElementGeometry {
  std::vector<Eigen::Matrix3d> jacobian;      // top-left dim x dim block valid
  std::vector<Eigen::Matrix3d> jacobian_inv;  // inverse of that block
  Eigen::VectorXd det;                        // det J > 0 enforced
  std::vector<Eigen::Vector3d> x;             // physical coordinates
};

ElementGeometry map_element(const Mesh& mesh, int elem,
                            const std::vector<Eigen::Vector3d>& ref_points);

/// Physical gradients: grad_phys = J^{-T} grad_ref per point.
/// Throws on non-positive Jacobian determinant.
void map_gradients(const ElementGeometry& geom, const std::vector<Eigen::MatrixXd>& ref_grads,
                   std::vector<Eigen::MatrixXd>& phys_grads);

/// Quadrature data for a boundary facet, expressed in the owner element's
/// reference coordinates with surface weights and outward unit normals.
struct FacetQuadrature {
  std::vector<Eigen::Vector3d> ref_points;  // in owner reference element
  Eigen::VectorXd weights;                  // include surface Jacobian (ds)
  std::vector<Eigen::Vector3d> normals;     // outward unit normals
  std::vector<Eigen::Vector3d> x;           // physical points
};

FacetQuadrature facet_quadrature(const Mesh& mesh, const Facet& facet, int degree);

/// Scalar nodes of the dofmap lying on a given facet (for strong BCs).
std::vector<int> facet_scalar_nodes(const Mesh& mesh, const DofMap& dofmap, const Facet& facet);

}  // namespace dpp
