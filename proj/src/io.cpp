#include "dpp/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace dpp {

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

int vtk_cell_type(CellKind kind) {
  switch (kind) {
    case CellKind::Segment: return 3;
    case CellKind::Quad: return 9;
    case CellKind::Hex: return 12;
  }
  return 0;
}

// tensor-lexicographic corner order -> VTK corner order
std::vector<int> vtk_corner_order(CellKind kind) {
  switch (kind) {
    case CellKind::Segment: return {0, 1};
    case CellKind::Quad: return {0, 1, 3, 2};
    case CellKind::Hex: return {0, 1, 3, 2, 4, 5, 7, 6};
  }
  return {};
}

/// scalar-node id of each mesh vertex (corners of the basis node layout)
std::vector<int> vertex_to_scalar_node(const Mesh& mesh, const DofMap& dofmap) {
  const int p = dofmap.order;
  const int dim = dofmap.dim;
  const int stride = p + 1;
  std::vector<int> map(mesh.n_nodes(), -1);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& el = mesh.elements[e];
    const int ncorner = static_cast<int>(el.nodes.size());
    for (int c = 0; c < ncorner; ++c) {
      const int i = (c >> 0) & 1, j = (c >> 1) & 1, k = (c >> 2) & 1;
      int idx = i * p;
      if (dim >= 2) idx += j * p * stride;
      if (dim >= 3) idx += k * p * stride * stride;
      map[el.nodes[c]] = dofmap.element_nodes[e][idx];
    }
  }
  return map;
}

}  // namespace

void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<VtkField>& fields,
               const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& n : mesh.nodes)
    out << format_full(n[0]) << ' ' << format_full(n[1]) << ' ' << format_full(n[2]) << '\n';

  int total = 0;
  for (const auto& el : mesh.elements) total += 1 + static_cast<int>(el.nodes.size());
  out << "CELLS " << mesh.n_elements() << ' ' << total << '\n';
  for (const auto& el : mesh.elements) {
    auto order = vtk_corner_order(el.kind);
    out << el.nodes.size();
    for (int c : order) out << ' ' << el.nodes[c];
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.n_elements() << '\n';
  for (const auto& el : mesh.elements) out << vtk_cell_type(el.kind) << '\n';

  if (fields.empty()) return;
  out << "POINT_DATA " << mesh.n_nodes() << '\n';
  for (const auto& f : fields) {
    if (f.values.rows() != mesh.n_nodes())
      throw std::invalid_argument("write_vtk: field '" + f.name + "' has wrong length");
    if (f.components == 1) {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (int i = 0; i < f.values.rows(); ++i) out << format_full(f.values(i, 0)) << '\n';
    } else if (f.components == 3) {
      out << "VECTORS " << f.name << " double\n";
      for (int i = 0; i < f.values.rows(); ++i)
        out << format_full(f.values(i, 0)) << ' ' << format_full(f.values(i, 1)) << ' '
            << format_full(f.values(i, 2)) << '\n';
    } else {
      throw std::invalid_argument("write_vtk: fields must have 1 or 3 components");
    }
  }
}

void write_vtk_file(const std::string& path, const Mesh& mesh,
                    const std::vector<VtkField>& fields, const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_vtk(out, mesh, fields, title);
}

std::vector<VtkField> solution_point_data(const FieldSolution& sol) {
  const Mesh& mesh = *sol.mesh;
  const DofMap& dm = *sol.dofmap;
  auto v2n = vertex_to_scalar_node(mesh, dm);
  const int dim = dm.dim;

  VtkField u1{"u1", 3, Eigen::MatrixXd::Zero(mesh.n_nodes(), 3)};
  VtkField u2{"u2", 3, Eigen::MatrixXd::Zero(mesh.n_nodes(), 3)};
  VtkField p1{"p1", 1, Eigen::MatrixXd::Zero(mesh.n_nodes(), 1)};
  VtkField p2{"p2", 1, Eigen::MatrixXd::Zero(mesh.n_nodes(), 1)};
  for (int v = 0; v < mesh.n_nodes(); ++v) {
    const int node = v2n[v];
    if (node < 0) continue;
    for (int c = 0; c < dim; ++c) {
      u1.values(v, c) = sol.coeffs[dm.u_dof(1, node, c)];
      u2.values(v, c) = sol.coeffs[dm.u_dof(2, node, c)];
    }
    p1.values(v, 0) = sol.coeffs[dm.p_dof(1, node)];
    p2.values(v, 0) = sol.coeffs[dm.p_dof(2, node)];
  }
  return {u1, u2, p1, p2};
}

VtkField scalar_point_data(const Mesh& mesh, const DofMap& dofmap, const Eigen::VectorXd& coeffs,
                           const std::string& name) {
  auto v2n = vertex_to_scalar_node(mesh, dofmap);
  VtkField f{name, 1, Eigen::MatrixXd::Zero(mesh.n_nodes(), 1)};
  for (int v = 0; v < mesh.n_nodes(); ++v)
    if (v2n[v] >= 0) f.values(v, 0) = coeffs[v2n[v]];
  return f;
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("write_csv: row width does not match header");
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_full(row[i]);
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, header, rows);
}

}  // namespace dpp
