#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpp/fespace.hpp"

namespace dpp {

// Row-compressed storage so the CSR arrays (outer offsets / inner indices /
// values) are directly addressable.
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct DatumConstraint {
  // The last row/col is a scalar Lagrange multiplier enforcing
  // integral of p1 over the domain = 0.
  int multiplier_index = -1;
};

struct AssembledSystem {
  SparseMat matrix;
  Eigen::VectorXd rhs;
  const DofMap* dofmap = nullptr;
  std::optional<DatumConstraint> constraint;
  std::vector<std::pair<int, double>> dirichlet_rows;  // pending strong BCs

  int n() const { return static_cast<int>(matrix.rows()); }
};

struct SolveReport {
  double residual_norm = 0.0;  // ||Ax-b|| / ||b|| (absolute if b = 0)
  std::string method;
  int n = 0;
  long nnz = 0;
  bool accuracy_warning = false;  // residual_norm >= 1e-9
};

/// Symmetric elimination of the listed rows: zero row and column, unit
/// diagonal, lift the constrained values into the RHS.
void apply_dirichlet(AssembledSystem& system, const std::vector<std::pair<int, double>>& rows);

/// Applies system.dirichlet_rows first if still pending.
Eigen::VectorXd solve_direct(AssembledSystem& system, SolveReport* report = nullptr);

}  // namespace dpp
