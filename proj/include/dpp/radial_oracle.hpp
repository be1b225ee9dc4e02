#pragma once

#include <vector>

#include "dpp/solution.hpp"

namespace dpp {

enum class RadialGeometry { Polar, Spherical };

/// Radially symmetric two-network flow between two concentric boundaries:
/// macro pressure prescribed at both radii, zero micro normal flux at both.
struct RadialProblem {
  RadialGeometry geometry = RadialGeometry::Polar;
  double r_inner = 0.3, r_outer = 1.0;
  double mu = 1.0, beta = 1.0;
  double k1 = 1.0, k2 = 0.01;
  double p1_inner = 1.0, p1_outer = 0.0;
};

/// Grid profile produced by the one-dimensional reference solver.
struct RadialSolution {
  std::vector<double> r;
  std::vector<double> p1, p2;
  std::vector<double> u1, u2;  // radial velocity components
  // observed self-convergence order between three nested grids
  double observed_order = 0.0;
  // Richardson estimate of the remaining discretization error (max norm, p1)
  double error_estimate = 0.0;

  double interpolate(const std::vector<double>& field, double radius) const;
};

/// Second-order finite-difference solve of the radial two-pressure ODE
/// system; solves on three nested grids to verify its own convergence.
/// Throws std::runtime_error if the observed order falls below 1.5.
RadialSolution solve_radial(const RadialProblem& problem, int n_cells = 4096);

struct RadialComparison {
  double rel_l2_p1 = 0.0;  // relative L2 mismatch along sampled rays
  double rel_l2_u1 = 0.0;  // radial macro velocity mismatch
  double max_u2_normal_boundary = 0.0;  // max |u2.n| over both boundaries
  double max_u2_magnitude = 0.0;        // max |u2| over the sample set
};

/// Samples the finite-element solution along several rays and compares
/// against the radial reference profile.
RadialComparison compare_fem_to_oracle(const FieldSolution& sol, const RadialProblem& problem,
                                       const RadialSolution& oracle, int n_rays = 8,
                                       int n_samples_per_ray = 40);

}  // namespace dpp
