#pragma once

#include <functional>

#include "dpp/fespace.hpp"
#include "dpp/linsolve.hpp"
#include "dpp/problem.hpp"

namespace dpp {

enum class Formulation { Galerkin, Stabilized };

struct AssemblyOptions {
  int quadrature_degree = -1;  // -1: use 2p+1
  double time = 0.0;           // evaluation time for boundary data / body force
  // Per-element, per-quadrature-point viscosity override used by the coupled
  // driver (concentration-dependent mu). Quadrature point indexing follows
  // gauss_rule(kind, quadrature_degree).
  std::function<double(int elem, int qp)> mu_at_qp;
};

/// Classical mixed (Galerkin) four-field form. Pressure BCs enter weakly
/// through the RHS; velocity BCs are NOT applied here (see
/// strong_velocity_constraints / assemble_nitsche_boundary).
AssembledSystem assemble_galerkin(const Mesh& mesh, const DofMap& dofmap,
                                  const MaterialData& material, const BoundarySpec& spec,
                                  const AssemblyOptions& options = {});

/// Galerkin plus the adjoint-type stabilization terms (factor 1/2).
AssembledSystem assemble_stabilized(const Mesh& mesh, const DofMap& dofmap,
                                    const MaterialData& material, const BoundarySpec& spec,
                                    const AssemblyOptions& options = {});

/// Adds the Nitsche terms for every velocity tag in spec.weak_velocity_tags.
/// h is the penalty mesh size (global max edge length by default; pass
/// per_facet_h to use each facet's own diameter instead).
void assemble_nitsche_boundary(AssembledSystem& system, const Mesh& mesh, const DofMap& dofmap,
                               const MaterialData& material, const BoundarySpec& spec,
                               double eta, double h, bool per_facet_h = false,
                               const AssemblyOptions& options = {});

/// One backward-Euler step: drag mu K_i^-1 -> (rho_i/dt) I + mu K_i^-1
/// everywhere (including inside the stabilization) and per-network body
/// force gamma*b + (rho_i/dt) u_i^(n).
AssembledSystem assemble_transient_step(const Mesh& mesh, const DofMap& dofmap,
                                        const MaterialData& material,
                                        const TransientData& transient, const BoundarySpec& spec,
                                        const Eigen::VectorXd& prev_u1,
                                        const Eigen::VectorXd& prev_u2, double dt,
                                        const AssemblyOptions& options = {});

/// RHS of the transient step only (the matrix is time-independent).
Eigen::VectorXd assemble_transient_rhs(const Mesh& mesh, const DofMap& dofmap,
                                       const MaterialData& material,
                                       const TransientData& transient, const BoundarySpec& spec,
                                       const Eigen::VectorXd& prev_u1,
                                       const Eigen::VectorXd& prev_u2, double dt,
                                       const AssemblyOptions& options = {});

/// Strong velocity constraints for all non-weak velocity tags. Refuses
/// facets whose normal is not axis-aligned (use Nitsche there).
std::vector<std::pair<int, double>> strong_velocity_constraints(const Mesh& mesh,
                                                                const DofMap& dofmap,
                                                                const BoundarySpec& spec,
                                                                double time = 0.0);

/// Appends one dense row/column tying the mean of p1 to zero.
void add_datum_constraint(AssembledSystem& system, const Mesh& mesh, const DofMap& dofmap);

/// Quadratic form of the stability norm: x^T S x = ||x||_stab^2.
SparseMat stab_norm_weights(const Mesh& mesh, const DofMap& dofmap, const MaterialData& material,
                            int quadrature_degree = -1);

/// Backward-Euler SUPG transport step on the scalar node set of `dofmap`.
/// `velocity(elem, qp)` supplies the advecting velocity at the quadrature
/// points of gauss_rule(kind, quadrature_degree).
AssembledSystem assemble_transport_step(
    const Mesh& mesh, const DofMap& dofmap,
    const std::function<Eigen::Vector3d(int elem, int qp)>& velocity,
    const TransportData& transport, double dt, const Eigen::VectorXd& prev_c,
    const AssemblyOptions& options = {});

}  // namespace dpp
