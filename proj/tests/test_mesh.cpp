#include <doctest.h>

#include <cstring>
#include <stdexcept>

#include <cmath>
#include <set>

#include "dpp/mesh.hpp"

using namespace dpp;

TEST_CASE("interval generator: counts, tags, stats") {
  Mesh m = generate_interval(2.0, 4);
  CHECK(m.dim == 1);
  CHECK(m.n_nodes() == 5);
  CHECK(m.n_elements() == 4);
  CHECK(m.boundary_facets.size() == 2);
  MeshStats st = mesh_stats(m);
  CHECK(st.h_max == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(st.h_min == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.facets_with_tag("left").size() == 1);
  CHECK(m.facets_with_tag("right").size() == 1);
  validate_mesh(m);
}

TEST_CASE("box generator 2D: structure and boundary tags") {
  Mesh m = generate_box({1.0, 2.0}, {4, 8});
  CHECK(m.dim == 2);
  CHECK(m.n_nodes() == 5 * 9);
  CHECK(m.n_elements() == 32);
  CHECK(m.facets_with_tag("left").size() == 8);
  CHECK(m.facets_with_tag("right").size() == 8);
  CHECK(m.facets_with_tag("bottom").size() == 4);
  CHECK(m.facets_with_tag("top").size() == 4);
  validate_mesh(m);
  // uniform cells 0.25 x 0.25
  MeshStats st = mesh_stats(m);
  CHECK(st.h_max == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("box generator 3D: counts") {
  Mesh m = generate_box({1.0, 1.0, 1.0}, {3, 3, 3});
  CHECK(m.dim == 3);
  CHECK(m.n_nodes() == 64);
  CHECK(m.n_elements() == 27);
  CHECK(m.boundary_facets.size() == 6 * 9);
  for (const char* t : {"left", "right", "bottom", "top", "back", "front"})
    CHECK(m.facets_with_tag(t).size() == 9);
  validate_mesh(m);
}

TEST_CASE("box generator: rectangular hole is carved and tagged") {
  BoxHole hole;
  hole.lo = {0.25, 0.25, 0};
  hole.hi = {0.5, 0.5, 0};
  std::vector<BoxHole> snapped;
  Mesh m = generate_box({1.0, 1.0}, {4, 4}, {hole}, &snapped);
  CHECK(m.n_elements() == 15);
  CHECK(snapped.size() == 1);
  CHECK(snapped[0].lo[0] == doctest::Approx(0.25));
  CHECK(m.facets_with_tag("hole_0").size() == 4);
  validate_mesh(m);
  // no node strictly inside the hole
  for (const auto& n : m.nodes) {
    bool inside = n[0] > 0.25 + 1e-12 && n[0] < 0.5 - 1e-12 && n[1] > 0.25 + 1e-12 &&
                  n[1] < 0.5 - 1e-12;
    CHECK_FALSE(inside);
  }
}

TEST_CASE("annulus generator: closed ring, positive area, tags") {
  Mesh m = generate_annulus(0.3, 1.0, 4, 12);
  CHECK(m.dim == 2);
  CHECK(m.n_nodes() == 5 * 12);
  CHECK(m.n_elements() == 48);
  CHECK(m.facets_with_tag("inner").size() == 12);
  CHECK(m.facets_with_tag("outer").size() == 12);
  validate_mesh(m);
  // all nodes within the radii
  for (const auto& n : m.nodes) {
    double r = std::hypot(n[0], n[1]);
    CHECK(r >= 0.3 - 1e-12);
    CHECK(r <= 1.0 + 1e-12);
  }
}

TEST_CASE("mesh text format round-trips byte-identically") {
  Mesh m = generate_box({1.0, 1.0}, {3, 2});
  m.nodes[0][0] = 1.0 / 3.0;  // exercise full-precision printing
  std::string first = write_mesh_string(m);
  Mesh back = read_mesh_string(first);
  std::string second = write_mesh_string(back);
  CHECK(first == second);
  CHECK(back.n_nodes() == m.n_nodes());
  CHECK(back.n_elements() == m.n_elements());
  CHECK(back.boundary_facets.size() == m.boundary_facets.size());
  CHECK(back.nodes[0][0] == m.nodes[0][0]);  // exact, not approximate
}

TEST_CASE("mesh parser reports malformed input") {
  CHECK_THROWS_WITH_AS(read_mesh_string("bogus"), doctest::Contains("line 1"),
                       std::runtime_error);
  CHECK_THROWS_AS(read_mesh_string("dpp-mesh v1 dim=2\nnodes 1\n0 0\nelements 1\nquad 0 0 0 5\n"),
                  std::runtime_error);
}

TEST_CASE("comments and blank lines are tolerated") {
  Mesh m = generate_interval(1.0, 2);
  std::string text = "# leading comment\n\n" + write_mesh_string(m);
  Mesh back = read_mesh_string(text);
  CHECK(back.n_elements() == 2);
}

TEST_CASE("validate_mesh rejects broken invariants") {
  Mesh m = generate_interval(1.0, 2);
  Mesh bad = m;
  bad.elements[0].nodes[1] = 99;
  CHECK_THROWS_AS(validate_mesh(bad), std::runtime_error);
  bad = m;
  bad.boundary_facets[0].owner = 7;
  CHECK_THROWS_AS(validate_mesh(bad), std::runtime_error);
  bad = m;
  bad.boundary_facets[0].tag = "";
  CHECK_THROWS_AS(validate_mesh(bad), std::runtime_error);
}

TEST_CASE("generators are deterministic") {
  std::string a = write_mesh_string(generate_box({1, 1}, {5, 5}));
  std::string b = write_mesh_string(generate_box({1, 1}, {5, 5}));
  CHECK(a == b);
}
