#include "dpp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dpp {

int cell_dim(CellKind kind) {
  switch (kind) {
    case CellKind::Segment: return 1;
    case CellKind::Quad: return 2;
    case CellKind::Hex: return 3;
  }
  return 0;
}

int cell_num_vertices(CellKind kind) {
  switch (kind) {
    case CellKind::Segment: return 2;
    case CellKind::Quad: return 4;
    case CellKind::Hex: return 8;
  }
  return 0;
}

const char* cell_name(CellKind kind) {
  switch (kind) {
    case CellKind::Segment: return "segment";
    case CellKind::Quad: return "quad";
    case CellKind::Hex: return "hex";
  }
  return "?";
}

std::optional<CellKind> cell_from_name(const std::string& name) {
  if (name == "segment") return CellKind::Segment;
  if (name == "quad") return CellKind::Quad;
  if (name == "hex") return CellKind::Hex;
  return std::nullopt;
}

std::vector<int> Mesh::facets_with_tag(const std::string& tag) const {
  std::vector<int> out;
  for (int f = 0; f < static_cast<int>(boundary_facets.size()); ++f)
    if (boundary_facets[f].tag == tag) out.push_back(f);
  return out;
}

std::vector<std::string> Mesh::tags() const {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& f : boundary_facets)
    if (seen.insert(f.tag).second) out.push_back(f.tag);
  return out;
}

namespace {

double dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0;
  for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

// Edges of each cell kind in tensor-lexicographic vertex numbering.
std::vector<std::pair<int, int>> cell_edges(CellKind kind) {
  switch (kind) {
    case CellKind::Segment: return {{0, 1}};
    case CellKind::Quad: return {{0, 1}, {2, 3}, {0, 2}, {1, 3}};
    case CellKind::Hex:
      return {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3}, {4, 6}, {5, 7},
              {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  }
  return {};
}

}  // namespace

MeshStats mesh_stats(const Mesh& mesh) {
  MeshStats s;
  s.n_elements = mesh.n_elements();
  s.n_nodes = mesh.n_nodes();
  s.h_min = std::numeric_limits<double>::max();
  s.h_max = 0.0;
  for (const auto& el : mesh.elements) {
    for (auto [a, b] : cell_edges(el.kind)) {
      double len = dist(mesh.nodes[el.nodes[a]], mesh.nodes[el.nodes[b]]);
      s.h_max = std::max(s.h_max, len);
      s.h_min = std::min(s.h_min, len);
    }
  }
  if (mesh.elements.empty()) s.h_min = 0.0;
  return s;
}

Mesh generate_interval(double length, int n_cells) {
  if (!(length > 0) || n_cells < 1)
    throw std::invalid_argument("generate_interval: need length > 0 and n_cells >= 1");
  Mesh m;
  m.dim = 1;
  m.nodes.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) m.nodes[i] = {length * i / n_cells, 0, 0};
  for (int e = 0; e < n_cells; ++e)
    m.elements.push_back({CellKind::Segment, {e, e + 1}});
  m.boundary_facets.push_back({{0}, 0, "left"});
  m.boundary_facets.push_back({{n_cells}, n_cells - 1, "right"});
  return m;
}

Mesh generate_box(const std::vector<double>& lengths, const std::vector<int>& cells,
                  std::vector<BoxHole> holes, std::vector<BoxHole>* snapped) {
  const int dim = static_cast<int>(lengths.size());
  if (dim < 2 || dim > 3 || cells.size() != lengths.size())
    throw std::invalid_argument("generate_box: lengths/cells must both have size 2 or 3");
  for (int d = 0; d < dim; ++d)
    if (!(lengths[d] > 0) || cells[d] < 1)
      throw std::invalid_argument("generate_box: need positive lengths and cell counts >= 1");

  std::array<int, 3> n{cells[0], cells[1], dim == 3 ? cells[2] : 1};
  std::array<double, 3> L{lengths[0], lengths[1], dim == 3 ? lengths[2] : 0.0};
  std::array<double, 3> h{L[0] / n[0], L[1] / n[1], dim == 3 ? L[2] / n[2] : 0.0};

  // Snap hole extents to grid lines, as cell-index ranges [lo, hi).
  struct CellRange { std::array<int, 3> lo, hi; };
  std::vector<CellRange> ranges;
  for (auto& hole : holes) {
    CellRange r{{0, 0, 0}, {0, 0, dim == 3 ? 0 : 1}};
    for (int d = 0; d < dim; ++d) {
      int lo = static_cast<int>(std::lround(hole.lo[d] / h[d]));
      int hi = static_cast<int>(std::lround(hole.hi[d] / h[d]));
      if (lo < 0 || hi > n[d] || lo >= hi)
        throw std::invalid_argument("generate_box: hole outside domain or degenerate after snapping");
      // A hole covering a full axis extent would disconnect the domain tags;
      // still allowed geometrically.
      r.lo[d] = lo;
      r.hi[d] = hi;
      hole.lo[d] = lo * h[d];
      hole.hi[d] = hi * h[d];
    }
    ranges.push_back(r);
  }
  for (size_t a = 0; a < ranges.size(); ++a)
    for (size_t b = a + 1; b < ranges.size(); ++b) {
      bool overlap = true;
      for (int d = 0; d < dim; ++d)
        overlap &= ranges[a].lo[d] < ranges[b].hi[d] && ranges[b].lo[d] < ranges[a].hi[d];
      if (overlap) throw std::invalid_argument("generate_box: overlapping holes");
    }
  if (snapped) *snapped = holes;

  auto in_hole = [&](int i, int j, int k, int& which) {
    for (size_t a = 0; a < ranges.size(); ++a) {
      const auto& r = ranges[a];
      if (i >= r.lo[0] && i < r.hi[0] && j >= r.lo[1] && j < r.hi[1] &&
          (dim == 2 || (k >= r.lo[2] && k < r.hi[2]))) {
        which = static_cast<int>(a);
        return true;
      }
    }
    return false;
  };

  Mesh m;
  m.dim = dim;

  // Grid-point index -> mesh node id (only points touching a kept cell).
  std::array<int, 3> np{n[0] + 1, n[1] + 1, dim == 3 ? n[2] + 1 : 1};
  auto gp = [&](int i, int j, int k) { return (k * np[1] + j) * np[0] + i; };
  std::vector<int> node_id(static_cast<size_t>(np[0]) * np[1] * np[2], -1);

  // cell grid index -> element id (for facet ownership), -1 for holes
  auto cg = [&](int i, int j, int k) { return (k * n[1] + j) * n[0] + i; };
  std::vector<int> elem_id(static_cast<size_t>(n[0]) * n[1] * n[2], -1);

  const int nzc = dim == 3 ? n[2] : 1;
  for (int k = 0; k < nzc; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        int which;
        if (in_hole(i, j, k, which)) continue;
        Element el;
        el.kind = dim == 3 ? CellKind::Hex : CellKind::Quad;
        const int kmax = dim == 3 ? 1 : 0;
        for (int dk = 0; dk <= kmax; ++dk)
          for (int dj = 0; dj <= 1; ++dj)
            for (int di = 0; di <= 1; ++di) {
              int g = gp(i + di, j + dj, k + dk);
              if (node_id[g] < 0) {
                node_id[g] = m.n_nodes();
                m.nodes.push_back({(i + di) * h[0], (j + dj) * h[1],
                                   dim == 3 ? (k + dk) * h[2] : 0.0});
              }
              el.nodes.push_back(node_id[g]);
            }
        elem_id[cg(i, j, k)] = m.n_elements();
        m.elements.push_back(std::move(el));
      }

  // Boundary facets: any cell face not shared with another kept cell.
  // Tensor-lexicographic local faces: axis d, side s in {0,1}.
  auto face_nodes = [&](const Element& el, int axis, int side) {
    std::vector<int> out;
    const int kmax = dim == 3 ? 1 : 0;
    for (int dk = 0; dk <= kmax; ++dk)
      for (int dj = 0; dj <= 1; ++dj)
        for (int di = 0; di <= 1; ++di) {
          std::array<int, 3> c{di, dj, dk};
          if (c[axis] != side) continue;
          out.push_back(el.nodes[di + 2 * dj + 4 * dk]);
        }
    return out;
  };
  static const char* outer_tag[3][2] = {
      {"left", "right"}, {"bottom", "top"}, {"back", "front"}};

  for (int k = 0; k < nzc; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        int eid = elem_id[cg(i, j, k)];
        if (eid < 0) continue;
        std::array<int, 3> idx{i, j, k};
        for (int axis = 0; axis < dim; ++axis)
          for (int side = 0; side < 2; ++side) {
            std::array<int, 3> nb = idx;
            nb[axis] += side ? 1 : -1;
            std::string tag;
            if (nb[axis] < 0 || nb[axis] >= n[axis]) {
              tag = outer_tag[axis][side];
            } else {
              int which;
              if (in_hole(nb[0], nb[1], nb[2], which))
                tag = "hole_" + std::to_string(which);
              else
                continue;  // interior face
            }
            m.boundary_facets.push_back({face_nodes(m.elements[eid], axis, side), eid, tag});
          }
      }
  return m;
}

Mesh generate_annulus(double r_inner, double r_outer, int n_radial, int n_angular) {
  if (!(0 < r_inner && r_inner < r_outer))
    throw std::invalid_argument("generate_annulus: need 0 < r_inner < r_outer");
  if (n_radial < 1 || n_angular < 3)
    throw std::invalid_argument("generate_annulus: need n_radial >= 1, n_angular >= 3");
  Mesh m;
  m.dim = 2;
  // Nodes on polar grid; angular direction closes on itself.
  auto nid = [&](int ir, int ia) { return ir * n_angular + (ia % n_angular); };
  const double pi = 3.14159265358979323846;
  for (int ir = 0; ir <= n_radial; ++ir) {
    double r = r_inner + (r_outer - r_inner) * ir / n_radial;
    for (int ia = 0; ia < n_angular; ++ia) {
      double th = 2 * pi * ia / n_angular;
      m.nodes.push_back({r * std::cos(th), r * std::sin(th), 0});
    }
  }
  // Element (ir, ia): local xi = radial direction, eta = angular direction so
  // that the Jacobian determinant stays positive (counterclockwise footprint).
  for (int ir = 0; ir < n_radial; ++ir)
    for (int ia = 0; ia < n_angular; ++ia) {
      Element el;
      el.kind = CellKind::Quad;
      el.nodes = {nid(ir, ia), nid(ir + 1, ia), nid(ir, ia + 1), nid(ir + 1, ia + 1)};
      m.elements.push_back(el);
      if (ir == 0)
        m.boundary_facets.push_back({{nid(0, ia), nid(0, ia + 1)}, m.n_elements() - 1, "inner"});
      if (ir == n_radial - 1)
        m.boundary_facets.push_back(
            {{nid(n_radial, ia), nid(n_radial, ia + 1)}, m.n_elements() - 1, "outer"});
    }
  return m;
}

namespace {

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw std::runtime_error("mesh parse error at line " + std::to_string(line) + ": " + msg);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  Mesh m;
  std::string line;
  int lineno = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream probe(line);
      std::string tok;
      if (probe >> tok) {
        out = line;
        return true;
      }
    }
    return false;
  };

  std::string l;
  if (!next_line(l)) parse_fail(lineno, "empty document");
  {
    std::istringstream ss(l);
    std::string magic, ver, dimkv;
    ss >> magic >> ver >> dimkv;
    if (magic != "dpp-mesh" || ver != "v1" || dimkv.rfind("dim=", 0) != 0)
      parse_fail(lineno, "expected header 'dpp-mesh v1 dim=<d>'");
    m.dim = std::stoi(dimkv.substr(4));
    if (m.dim < 1 || m.dim > 3) parse_fail(lineno, "dim out of range");
  }

  auto section = [&](const std::string& name) {
    std::string s;
    if (!next_line(s)) parse_fail(lineno, "expected section '" + name + "'");
    std::istringstream ss(s);
    std::string key;
    long count = -1;
    ss >> key >> count;
    if (key != name || count < 0) parse_fail(lineno, "expected section '" + name + " <n>'");
    return count;
  };

  long n_nodes = section("nodes");
  if (n_nodes == 0) parse_fail(lineno, "empty node section");
  for (long i = 0; i < n_nodes; ++i) {
    std::string s;
    if (!next_line(s)) parse_fail(lineno, "unexpected end of node section");
    std::istringstream ss(s);
    std::array<double, 3> x{0, 0, 0};
    for (int d = 0; d < m.dim; ++d)
      if (!(ss >> x[d])) parse_fail(lineno, "bad node coordinate");
    std::string extra;
    if (ss >> extra) parse_fail(lineno, "trailing tokens on node line");
    m.nodes.push_back(x);
  }

  long n_elems = section("elements");
  if (n_elems == 0) parse_fail(lineno, "empty element section");
  for (long e = 0; e < n_elems; ++e) {
    std::string s;
    if (!next_line(s)) parse_fail(lineno, "unexpected end of element section");
    std::istringstream ss(s);
    std::string kind_name;
    ss >> kind_name;
    auto kind = cell_from_name(kind_name);
    if (!kind) parse_fail(lineno, "unknown element kind '" + kind_name + "'");
    Element el;
    el.kind = *kind;
    for (int v = 0; v < cell_num_vertices(*kind); ++v) {
      long idx;
      if (!(ss >> idx) || idx < 0 || idx >= n_nodes) parse_fail(lineno, "bad node index");
      el.nodes.push_back(static_cast<int>(idx));
    }
    std::string extra;
    if (ss >> extra) parse_fail(lineno, "trailing tokens on element line");
    m.elements.push_back(std::move(el));
  }

  long n_facets = section("facets");
  for (long f = 0; f < n_facets; ++f) {
    std::string s;
    if (!next_line(s)) parse_fail(lineno, "unexpected end of facet section");
    std::istringstream ss(s);
    Facet fa;
    long owner;
    if (!(ss >> fa.tag >> owner)) parse_fail(lineno, "bad facet line");
    if (owner < 0 || owner >= n_elems) parse_fail(lineno, "facet references missing element");
    fa.owner = static_cast<int>(owner);
    long idx;
    while (ss >> idx) {
      if (idx < 0 || idx >= n_nodes) parse_fail(lineno, "bad facet node index");
      fa.nodes.push_back(static_cast<int>(idx));
    }
    const int want = m.dim == 1 ? 1 : (m.dim == 2 ? 2 : 4);
    if (static_cast<int>(fa.nodes.size()) != want) parse_fail(lineno, "wrong facet node count");
    m.boundary_facets.push_back(std::move(fa));
  }
  return m;
}

Mesh read_mesh_string(const std::string& text) {
  std::istringstream ss(text);
  return read_mesh(ss);
}

void write_mesh(const Mesh& m, std::ostream& out) {
  out << "dpp-mesh v1 dim=" << m.dim << "\n";
  out << "nodes " << m.n_nodes() << "\n";
  char buf[96];
  for (const auto& x : m.nodes) {
    for (int d = 0; d < m.dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", x[d]);
      out << (d ? " " : "") << buf;
    }
    out << "\n";
  }
  out << "elements " << m.n_elements() << "\n";
  for (const auto& el : m.elements) {
    out << cell_name(el.kind);
    for (int v : el.nodes) out << ' ' << v;
    out << "\n";
  }
  out << "facets " << m.boundary_facets.size() << "\n";
  for (const auto& f : m.boundary_facets) {
    out << f.tag << ' ' << f.owner;
    for (int v : f.nodes) out << ' ' << v;
    out << "\n";
  }
}

std::string write_mesh_string(const Mesh& m) {
  std::ostringstream ss;
  write_mesh(m, ss);
  return ss.str();
}

void validate_mesh(const Mesh& m) {
  if (m.dim < 1 || m.dim > 3) throw std::runtime_error("mesh: bad dimension");
  for (const auto& el : m.elements) {
    if (static_cast<int>(el.nodes.size()) != cell_num_vertices(el.kind))
      throw std::runtime_error("mesh: wrong element node count");
    if (cell_dim(el.kind) != m.dim) throw std::runtime_error("mesh: element kind/dim mismatch");
    std::set<int> uniq(el.nodes.begin(), el.nodes.end());
    if (static_cast<int>(uniq.size()) != cell_num_vertices(el.kind))
      throw std::runtime_error("mesh: repeated node in element");
    for (int v : el.nodes)
      if (v < 0 || v >= m.n_nodes()) throw std::runtime_error("mesh: node index out of range");
  }
  for (const auto& f : m.boundary_facets) {
    if (f.owner < 0 || f.owner >= m.n_elements())
      throw std::runtime_error("mesh: facet owner out of range");
    const auto& en = m.elements[f.owner].nodes;
    for (int v : f.nodes)
      if (std::find(en.begin(), en.end(), v) == en.end())
        throw std::runtime_error("mesh: facet node not on owner element");
    if (f.tag.empty()) throw std::runtime_error("mesh: facet without tag");
  }
}

}  // namespace dpp
