#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "dpp/assembly.hpp"
#include "dpp/problem.hpp"
#include "dpp/solution.hpp"

namespace dpp {

struct SteadyOptions {
  Formulation formulation = Formulation::Stabilized;
  double nitsche_eta = 10.0;
  bool per_facet_h = false;
  int quadrature_degree = -1;
  double time = 0.0;
  std::function<double(int elem, int qp)> mu_at_qp;
};

FieldSolution solve_steady(const Mesh& mesh, int order, const MaterialData& material,
                           const BoundarySpec& spec, const SteadyOptions& options = {},
                           SolveReport* report = nullptr);

struct TimeSeries {
  std::vector<double> times;                // strictly increasing; back() == T
  std::vector<Eigen::VectorXd> snapshots;   // full coefficient vectors
  const Mesh* mesh = nullptr;
  std::shared_ptr<const DofMap> dofmap;

  FieldSolution solution_at(int step) const;
  int n_steps() const { return static_cast<int>(times.size()); }
};

struct TransientOptions {
  double nitsche_eta = 10.0;
  bool per_facet_h = false;
  int quadrature_degree = -1;
};

/// Backward-Euler loop (dt = min(dt_max, T - t) each step); the constrained
/// matrix is factored once and reused across all steps.
TimeSeries solve_transient(const Mesh& mesh, int order, const MaterialData& material,
                           const TransientData& transient, const BoundarySpec& spec,
                           const TransientOptions& options = {});

enum class AdvectingVelocity { Sum, MacroOnly };

struct CoupledOptions {
  double nitsche_eta = 10.0;
  int quadrature_degree = -1;
  AdvectingVelocity advecting = AdvectingVelocity::Sum;
  int flow_snapshot_every = 10;  // store every k-th flow snapshot (+ final)
  // transverse-variance probe location (fraction of domain extent in x)
  double probe_x_fraction = 0.5;
};

struct CoupledStepMetrics {
  double time = 0.0;
  double c_min = 0.0, c_max = 0.0;
  double mid_variance = 0.0;  // transverse concentration variance at the probe
};

struct CoupledSeries {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> concentration;  // per step, scalar nodes
  std::vector<double> flow_times;
  std::vector<Eigen::VectorXd> flow_snapshots;  // full four-field vectors
  std::vector<CoupledStepMetrics> metrics;
  const Mesh* mesh = nullptr;
  std::shared_ptr<const DofMap> dofmap;
};

/// Quasi-static flow + backward-Euler transport, two-way coupled through
/// the concentration-dependent viscosity mu(c) = mu0 exp[Rc (1-c)].
CoupledSeries solve_coupled(const Mesh& mesh, int order, const MaterialData& material,
                            const TransportData& transport, double dt_max, double T,
                            const BoundarySpec& spec_flow, const CoupledOptions& options = {});

}  // namespace dpp
