#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "dpp/fespace.hpp"
#include "dpp/mesh.hpp"

namespace dpp {

/// Field values of the four-field solution at one point.
struct FieldValues {
  Eigen::Vector3d u1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d u2 = Eigen::Vector3d::Zero();
  double p1 = 0.0, p2 = 0.0;
  Eigen::Vector3d grad_p1 = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad_p2 = Eigen::Vector3d::Zero();
  double div_u1 = 0.0, div_u2 = 0.0;
};

/// Coefficient vector partitioned as (u1, u2, p1, p2) on an equal-order space.
struct FieldSolution {
  const Mesh* mesh = nullptr;
  std::shared_ptr<const DofMap> dofmap;
  Eigen::VectorXd coeffs;  // size dofmap->n_dofs(); datum multiplier stripped
  double time = 0.0;

  Eigen::VectorXd u_block(int network) const;  // size n_scalar * dim
  Eigen::VectorXd p_block(int network) const;  // size n_scalar

  /// Field values at reference points of one element.
  std::vector<FieldValues> eval_on_element(int elem,
                                           const std::vector<Eigen::Vector3d>& ref_points) const;

  /// Point evaluation anywhere inside the mesh (Newton inverse map with a
  /// bounding-box prefilter); nullopt if x lies outside every element.
  std::optional<FieldValues> eval_at(const Eigen::Vector3d& x) const;
};

/// Locate the element containing x; returns (element, reference coords).
std::optional<std::pair<int, Eigen::Vector3d>> locate_point(const Mesh& mesh,
                                                            const Eigen::Vector3d& x,
                                                            double tol = 1e-10);

}  // namespace dpp
