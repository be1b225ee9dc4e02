#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dpp {

enum class CellKind { Segment, Quad, Hex };

int cell_dim(CellKind kind);
int cell_num_vertices(CellKind kind);
const char* cell_name(CellKind kind);
std::optional<CellKind> cell_from_name(const std::string& name);

/// Boundary facet: a vertex (1D), an edge (2D) or a quadrilateral face (3D).
struct Facet {
  std::vector<int> nodes;
  int owner = -1;
  std::string tag;
};

struct Element {
  CellKind kind = CellKind::Segment;
  // Vertex indices in tensor-lexicographic order:
  // segment (v0,v1); quad (v00,v10,v01,v11); hex idx = i + 2j + 4k.
  std::vector<int> nodes;
};

struct Mesh {
  int dim = 0;
  std::vector<std::array<double, 3>> nodes;
  std::vector<Element> elements;
  std::vector<Facet> boundary_facets;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }

  /// Facet indices carrying a given tag.
  std::vector<int> facets_with_tag(const std::string& tag) const;
  std::vector<std::string> tags() const;
};

struct MeshStats {
  double h_max = 0.0;
  double h_min = 0.0;
  int n_elements = 0;
  int n_nodes = 0;
};

MeshStats mesh_stats(const Mesh& mesh);

/// Axis-aligned rectangular void used by generate_box.
struct BoxHole {
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{0, 0, 0};
};

Mesh generate_interval(double length, int n_cells);

/// Structured quad (2D) / hex (3D) mesh with optional rectangular holes.
/// Hole boundaries are snapped to grid lines; the snapped extents are
/// written back into `holes` if a non-null pointer is passed.
Mesh generate_box(const std::vector<double>& lengths, const std::vector<int>& cells,
                  std::vector<BoxHole> holes = {},
                  std::vector<BoxHole>* snapped = nullptr);

Mesh generate_annulus(double r_inner, double r_outer, int n_radial, int n_angular);

Mesh read_mesh(std::istream& in);
Mesh read_mesh_string(const std::string& text);
void write_mesh(const Mesh& mesh, std::ostream& out);
std::string write_mesh_string(const Mesh& mesh);

/// Throws std::runtime_error if a structural invariant is violated.
void validate_mesh(const Mesh& mesh);

}  // namespace dpp
