#pragma once

#include <optional>
#include <vector>

#include "dpp/assembly.hpp"
#include "dpp/problem.hpp"
#include "dpp/solution.hpp"

namespace dpp {

/// Closed-form reference fields for error measurement. Unset members simply
/// skip the corresponding norm (reported as NaN).
struct ExactFields {
  VectorField u1, u2;
  ScalarField p1, p2;
  VectorField grad_p1, grad_p2;
};

struct ErrorNorms {
  double l2_u1 = 0, l2_u2 = 0;
  double l2_p1 = 0, l2_p2 = 0;
  double h1_p1 = 0, h1_p2 = 0;  // seminorm of the pressure error
};

/// L2 / H1 errors against a reference solution. quadrature_degree < 0 picks
/// min(2p+3, rule maximum).
ErrorNorms error_norms(const FieldSolution& sol, const ExactFields& exact,
                       int quadrature_degree = -1);

/// ||W||_stab = sqrt(B_stab(W, W)); evaluated through the quadratic form of
/// the stability norm.
double stability_norm(const FieldSolution& sol, const MaterialData& material,
                      int quadrature_degree = -1);

/// Mechanical dissipation
///   Phi = sum_i [ int mu u_i.K_i^-1 u_i + 1/2 int (mu/beta)(div u_i)^2 ].
/// With beta == 0 the second term is defined only for divergence-free
/// fields; a nonzero divergence then raises std::invalid_argument.
double dissipation(const FieldSolution& sol, const MaterialData& material,
                   int quadrature_degree = -1);

/// || div u1 + div u2 ||_L2 over the domain.
double kinematic_admissibility_residual(const FieldSolution& sol, int quadrature_degree = -1);

/// Relative defect of the reciprocal relation between two solutions of the
/// same boundary partition under different data (body force / boundary
/// values). Returns |LHS - RHS| / |LHS| (absolute difference when
/// |LHS| < 1e-12). Optionally reports the two functionals.
double reciprocal_error(const FieldSolution& prime, const FieldSolution& star,
                        const MaterialData& material_prime, const MaterialData& material_star,
                        const BoundarySpec& spec_prime, const BoundarySpec& spec_star,
                        double* lhs_out = nullptr, double* rhs_out = nullptr);

struct SlopeFit {
  double slope = 0.0;   // least-squares slope
  bool plateau = false; // smallest error below 1e-13 (round-off floor)
};

/// Least-squares slope of log(error) against log(h); needs >= 3 points.
SlopeFit fit_loglog(const std::vector<double>& h, const std::vector<double>& errors);

/// Least-squares slope of log10(error) against the polynomial order p
/// (exponential convergence shows up as a straight line here).
SlopeFit fit_semilog(const std::vector<int>& orders, const std::vector<double>& errors);

/// Smooth 2D reference solution on the unit square (two networks coupled
/// through inter-network mass transfer; divergence-free macroscopic sum).
struct AnalyticalSolution2D {
  double k1 = 1.0, k2 = 0.1, mu = 1.0, beta = 1.0;

  double eta() const;
  ExactFields fields() const;
  /// Boundary spec with the exact pressures prescribed on all four sides.
  BoundarySpec boundary_spec() const;
  MaterialData material() const;
};

}  // namespace dpp
