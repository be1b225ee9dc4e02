#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpp/solution.hpp"

namespace dpp {

/// Nodal field for VTK output: one row per mesh node; 1 or 3 components.
struct VtkField {
  std::string name;
  int components = 1;
  Eigen::MatrixXd values;  // n_nodes x components
};

/// Legacy ASCII VTK unstructured grid (lines / quads / hexahedra).
void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title = "output");
void write_vtk_file(const std::string& path, const Mesh& mesh,
                    const std::vector<VtkField>& fields, const std::string& title = "output");

/// u1, u2 (vectors) and p1, p2 (scalars) sampled at the mesh vertices.
std::vector<VtkField> solution_point_data(const FieldSolution& sol);

/// A scalar coefficient vector (e.g. concentration) sampled at mesh vertices.
VtkField scalar_point_data(const Mesh& mesh, const DofMap& dofmap, const Eigen::VectorXd& coeffs,
                           const std::string& name);

/// %.17g rendering used by every text format (deterministic round-trip).
std::string format_full(double v);

/// Minimal CSV: header row, then %.17g values, LF line endings.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows);

}  // namespace dpp
