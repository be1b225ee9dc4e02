#include "dpp/linsolve.hpp"

#include <Eigen/UmfPackSupport>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace dpp {

void apply_dirichlet(AssembledSystem& system, const std::vector<std::pair<int, double>>& rows) {
  if (rows.empty()) return;
  const int n = system.n();
  std::unordered_map<int, double> constrained;
  constrained.reserve(rows.size());
  for (auto [row, value] : rows) {
    if (row < 0 || row >= n) throw std::invalid_argument("apply_dirichlet: row out of range");
    auto [it, fresh] = constrained.emplace(row, value);
    if (!fresh && std::abs(it->second - value) >
                      1e-12 * std::max({1.0, std::abs(value), std::abs(it->second)}))
      throw std::invalid_argument("apply_dirichlet: conflicting values for dof " +
                                  std::to_string(row));
  }

  SparseMat out(n, n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(system.matrix.nonZeros() + constrained.size());
  for (int i = 0; i < n; ++i) {
    bool row_fixed = constrained.count(i) > 0;
    for (SparseMat::InnerIterator it(system.matrix, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      auto cj = constrained.find(j);
      if (row_fixed) continue;  // row replaced by identity below
      if (cj != constrained.end()) {
        system.rhs[i] -= it.value() * cj->second;  // lift
        continue;
      }
      trips.emplace_back(i, j, it.value());
    }
  }
  for (auto& [row, value] : constrained) {
    trips.emplace_back(row, row, 1.0);
    system.rhs[row] = value;
  }
  out.setFromTriplets(trips.begin(), trips.end());
  system.matrix = std::move(out);
  system.dirichlet_rows.clear();
}

Eigen::VectorXd solve_direct(AssembledSystem& system, SolveReport* report) {
  if (!system.dirichlet_rows.empty()) {
    auto pending = system.dirichlet_rows;
    apply_dirichlet(system, pending);
  }
  const int n = system.n();
  if (n != system.rhs.size()) throw std::invalid_argument("solve_direct: size mismatch");

  // Name structurally empty rows before factorization for a clear error.
  for (int i = 0; i < n; ++i) {
    bool any = false;
    for (SparseMat::InnerIterator it(system.matrix, i); it; ++it)
      if (it.value() != 0.0) {
        any = true;
        break;
      }
    if (!any)
      throw std::runtime_error("singular matrix: structurally empty row at dof " +
                               std::to_string(i));
  }

  Eigen::SparseMatrix<double> A = system.matrix;  // column-major for UMFPACK
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("singular matrix: LU factorization failed");
  Eigen::VectorXd x = lu.solve(system.rhs);
  double bnorm = system.rhs.norm();
  double rnorm = (system.matrix * x - system.rhs).norm();
  double rel = bnorm > 0 ? rnorm / bnorm : rnorm;
  if (report) {
    report->residual_norm = rel;
    report->method = "umfpack-lu";
    report->n = n;
    report->nnz = system.matrix.nonZeros();
    report->accuracy_warning = !(rel < 1e-9);
  }
  if (!std::isfinite(rel))
    throw std::runtime_error("singular matrix: solve produced non-finite values");
  return x;
}

}  // namespace dpp
