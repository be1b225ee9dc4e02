#include <doctest.h>

#include <cstring>
#include <stdexcept>

#include <cstdlib>
#include <sstream>

#include "dpp/drivers.hpp"
#include "dpp/io.hpp"

using namespace dpp;

TEST_CASE("format_full round-trips doubles exactly") {
  for (double v : {1.0 / 3.0, 0.1, -2.5e-17, 81.81, 0.0, 1e300}) {
    CHECK(std::strtod(format_full(v).c_str(), nullptr) == v);
  }
  CHECK(format_full(1.0) == "1");
}

TEST_CASE("CSV writer: header, %.17g payload, LF endings") {
  std::ostringstream out;
  write_csv(out, {"a", "b"}, {{1.0, 1.0 / 3.0}, {2.0, 0.5}});
  std::string s = out.str();
  CHECK(s == "a,b\n1,0.33333333333333331\n2,0.5\n");
  CHECK(s.find('\r') == std::string::npos);
}

TEST_CASE("CSV writer rejects ragged rows") {
  std::ostringstream out;
  CHECK_THROWS_AS(write_csv(out, {"a", "b"}, {{1.0}}), std::invalid_argument);
}

TEST_CASE("CSV output is byte-identical across calls") {
  std::vector<std::vector<double>> rows = {{0.1, 0.2, 0.3}, {4e-7, 5e22, -1}};
  std::ostringstream a, b;
  write_csv(a, {"x", "y", "z"}, rows);
  write_csv(b, {"x", "y", "z"}, rows);
  CHECK(a.str() == b.str());
}

TEST_CASE("VTK writer emits a well-formed legacy unstructured grid") {
  Mesh mesh = generate_box({1.0, 1.0}, {2, 2});
  VtkField f;
  f.name = "height";
  f.components = 1;
  f.values = Eigen::MatrixXd::Zero(mesh.n_nodes(), 1);
  for (int n = 0; n < mesh.n_nodes(); ++n) f.values(n, 0) = mesh.nodes[n][1];
  std::ostringstream out;
  write_vtk(out, mesh, {f}, "unit-square");
  std::string s = out.str();
  CHECK(s.rfind("# vtk DataFile Version 3.0", 0) == 0);
  CHECK(s.find("unit-square") != std::string::npos);
  CHECK(s.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(s.find("POINTS 9 double") != std::string::npos);
  CHECK(s.find("CELLS 4 20") != std::string::npos);  // 4 quads, 5 ints each
  CHECK(s.find("CELL_TYPES 4") != std::string::npos);
  CHECK(s.find("POINT_DATA 9") != std::string::npos);
  CHECK(s.find("SCALARS height double 1") != std::string::npos);
  // quad cell type id appears once per cell
  size_t pos = s.find("CELL_TYPES 4");
  std::istringstream tail(s.substr(pos));
  std::string line;
  std::getline(tail, line);
  int nines = 0, t;
  while (tail >> t && nines < 10)
    if (t == 9) ++nines;
  CHECK(nines == 4);
}

TEST_CASE("VTK corner ordering walks the quad counter-clockwise") {
  Mesh mesh = generate_box({1.0, 1.0}, {1, 1});
  std::ostringstream out;
  write_vtk(out, mesh, {});
  std::string s = out.str();
  size_t pos = s.find("CELLS 1 5");
  REQUIRE(pos != std::string::npos);
  std::istringstream tail(s.substr(pos));
  std::string skip;
  std::getline(tail, skip);
  int n, a, b, c, d;
  tail >> n >> a >> b >> c >> d;
  CHECK(n == 4);
  // consecutive corners share an edge: signed area of the quad is positive
  auto& N = mesh.nodes;
  double area = 0;
  int idx[4] = {a, b, c, d};
  for (int k = 0; k < 4; ++k) {
    auto& p = N[idx[k]];
    auto& q = N[idx[(k + 1) % 4]];
    area += p[0] * q[1] - q[0] * p[1];
  }
  CHECK(area == doctest::Approx(2.0));  // 2 * unit area, CCW
}

TEST_CASE("solution point data matches the fields at the mesh vertices") {
  Mesh mesh = generate_box({1.0, 1.0}, {3, 3});
  MaterialData mat = MaterialData::isotropic(1.0, 1.0, 1.0, 0.01);
  BoundarySpec spec;
  spec.set_pressure(1, "left", 10.0);
  spec.set_pressure(2, "left", 10.0);
  spec.set_pressure(1, "right", 1.0);
  spec.set_pressure(2, "right", 1.0);
  for (const char* t : {"bottom", "top"}) {
    spec.set_normal_velocity(1, t, 0.0);
    spec.set_normal_velocity(2, t, 0.0);
  }
  FieldSolution sol = solve_steady(mesh, 2, mat, spec);
  auto fields = solution_point_data(sol);
  REQUIRE(fields.size() == 4);
  const VtkField* u1 = nullptr;
  const VtkField* p1 = nullptr;
  for (const auto& f : fields) {
    if (f.name == "u1") u1 = &f;
    if (f.name == "p1") p1 = &f;
  }
  REQUIRE(u1 != nullptr);
  REQUIRE(p1 != nullptr);
  CHECK(u1->components == 3);
  CHECK(p1->components == 1);
  CHECK(u1->values.rows() == mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    CHECK(u1->values(n, 0) == doctest::Approx(9.0).epsilon(1e-9));
    CHECK(p1->values(n, 0) == doctest::Approx(10.0 - 9.0 * mesh.nodes[n][0]).epsilon(1e-9));
  }
}

TEST_CASE("scalar point data picks the vertex coefficients") {
  Mesh mesh = generate_box({1.0, 1.0}, {2, 2});
  DofMap dm = build_dofmap(mesh, 3);
  Eigen::VectorXd c(dm.n_scalar);
  for (int n = 0; n < dm.n_scalar; ++n)
    c[n] = dm.node_coords[n][0] + 10.0 * dm.node_coords[n][1];
  VtkField f = scalar_point_data(mesh, dm, c, "c");
  CHECK(f.values.rows() == mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n)
    CHECK(f.values(n, 0) ==
          doctest::Approx(mesh.nodes[n][0] + 10.0 * mesh.nodes[n][1]).epsilon(1e-12));
}
