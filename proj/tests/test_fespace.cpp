#include <doctest.h>

#include <cstring>
#include <stdexcept>

#include <cmath>
#include <set>

#include "dpp/fespace.hpp"

using namespace dpp;

TEST_CASE("Lagrange basis: Kronecker delta and partition of unity") {
  for (auto [kind, order] : {std::pair{CellKind::Segment, 4}, {CellKind::Quad, 3},
                             {CellKind::Hex, 2}}) {
    ReferenceBasis b = ReferenceBasis::create(kind, order);
    Eigen::MatrixXd vals;
    std::vector<Eigen::MatrixXd> grads;
    tabulate(b, b.nodes, vals, grads);
    for (int i = 0; i < b.size; ++i)
      for (int j = 0; j < b.size; ++j)
        CHECK(vals(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));

    // partition of unity at interior points
    std::vector<Eigen::Vector3d> pts = {{0.137, -0.42, 0.77}, {-0.9, 0.3, -0.1}};
    tabulate(b, pts, vals, grads);
    for (size_t q = 0; q < pts.size(); ++q) {
      CHECK(vals.row(q).sum() == doctest::Approx(1.0).epsilon(1e-12));
      for (int d = 0; d < b.dim; ++d)
        CHECK(grads[q].col(d).sum() == doctest::Approx(0.0).epsilon(1e-11));
    }
  }
}

TEST_CASE("basis order limits are enforced") {
  CHECK_NOTHROW(ReferenceBasis::create(CellKind::Segment, 14));
  CHECK_THROWS_AS(ReferenceBasis::create(CellKind::Segment, 15), std::invalid_argument);
  CHECK_NOTHROW(ReferenceBasis::create(CellKind::Quad, 7));
  CHECK_THROWS_AS(ReferenceBasis::create(CellKind::Hex, 8), std::invalid_argument);
  CHECK_THROWS_AS(ReferenceBasis::create(CellKind::Quad, 0), std::invalid_argument);
}

TEST_CASE("Gauss-Legendre nodes/weights match known values") {
  Eigen::VectorXd pts, wts;
  gauss_legendre_1d(2, pts, wts);
  CHECK(pts[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(pts[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(wts[0] == doctest::Approx(1.0).epsilon(1e-14));
  gauss_legendre_1d(3, pts, wts);
  CHECK(pts[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(pts[2] == doctest::Approx(std::sqrt(3.0 / 5.0)).epsilon(1e-14));
  CHECK(wts[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(wts[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("quadrature integrates monomials exactly up to the stated degree") {
  for (int degree : {1, 3, 7, 13, 29}) {
    QuadratureRule rule = gauss_rule(CellKind::Segment, degree);
    for (int k = 0; k <= degree; ++k) {
      double acc = 0;
      for (int q = 0; q < rule.n(); ++q) acc += rule.weights[q] * std::pow(rule.points[q][0], k);
      const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      CHECK(acc == doctest::Approx(exact).epsilon(1e-13));
    }
  }
  // tensor rule: x^a y^b over [-1,1]^2
  QuadratureRule rule = gauss_rule(CellKind::Quad, 5);
  double acc = 0;
  for (int q = 0; q < rule.n(); ++q)
    acc += rule.weights[q] * std::pow(rule.points[q][0], 4) * std::pow(rule.points[q][1], 2);
  CHECK(acc == doctest::Approx((2.0 / 5) * (2.0 / 3)).epsilon(1e-13));
  CHECK_THROWS_AS(gauss_rule(CellKind::Quad, 16), std::invalid_argument);
  CHECK_THROWS_AS(gauss_rule(CellKind::Segment, 30), std::invalid_argument);
}

TEST_CASE("dofmap: scalar node counts and continuity across elements") {
  // 1D: p*n + 1 nodes
  Mesh m1 = generate_interval(1.0, 5);
  for (int p : {1, 2, 3}) {
    DofMap dm = build_dofmap(m1, p);
    CHECK(dm.n_scalar == 5 * p + 1);
    CHECK(dm.n_dofs() == dm.n_scalar * 4);
  }
  // 2D: (p*nx+1)(p*ny+1) nodes
  Mesh m2 = generate_box({1, 1}, {3, 2});
  for (int p : {1, 2, 4}) {
    DofMap dm = build_dofmap(m2, p);
    CHECK(dm.n_scalar == (3 * p + 1) * (2 * p + 1));
    CHECK(dm.n_dofs() == dm.n_scalar * 6);
  }
  // 3D
  Mesh m3 = generate_box({1, 1, 1}, {2, 2, 2});
  DofMap dm3 = build_dofmap(m3, 2);
  CHECK(dm3.n_scalar == 5 * 5 * 5);

  // shared nodes carry identical coordinates from both elements
  DofMap dm = build_dofmap(m2, 3);
  std::set<std::array<long, 3>> seen;
  for (int n = 0; n < dm.n_scalar; ++n) {
    std::array<long, 3> key{std::lround(dm.node_coords[n][0] * 1e12),
                            std::lround(dm.node_coords[n][1] * 1e12), 0};
    CHECK(seen.insert(key).second);  // no duplicated coordinates
  }
}

TEST_CASE("element geometry: affine map of a stretched box") {
  Mesh m = generate_box({2.0, 1.0}, {2, 2});  // cells 1.0 x 0.5
  auto geom = map_element(m, 0, {Eigen::Vector3d(0, 0, 0)});
  CHECK(geom.det[0] == doctest::Approx(0.125).epsilon(1e-14));  // (h/2)(k/2)
  CHECK(geom.x[0][0] == doctest::Approx(0.5));
  CHECK(geom.x[0][1] == doctest::Approx(0.25));
}

TEST_CASE("degenerate element is rejected") {
  Mesh m = generate_box({1, 1}, {1, 1});
  std::swap(m.elements[0].nodes[0], m.elements[0].nodes[1]);  // flips orientation
  CHECK_THROWS_WITH_AS(map_element(m, 0, {Eigen::Vector3d::Zero()}),
                       doctest::Contains("degenerate element"), std::runtime_error);
}

TEST_CASE("facet quadrature: measure and outward unit normals") {
  Mesh m = generate_box({2.0, 1.0}, {4, 2});
  for (const auto& facet : m.boundary_facets) {
    FacetQuadrature fq = facet_quadrature(m, facet, 3);
    double len = fq.weights.sum();
    const double expected = facet.tag == "left" || facet.tag == "right" ? 0.5 : 0.5;
    CHECK(len == doctest::Approx(expected).epsilon(1e-13));
    for (const auto& n : fq.normals) {
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-13));
      if (facet.tag == "left") CHECK(n[0] == doctest::Approx(-1.0));
      if (facet.tag == "right") CHECK(n[0] == doctest::Approx(1.0));
      if (facet.tag == "bottom") CHECK(n[1] == doctest::Approx(-1.0));
      if (facet.tag == "top") CHECK(n[1] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("annulus facet normals point radially outward/inward") {
  Mesh m = generate_annulus(0.5, 1.0, 3, 16);
  for (const auto& facet : m.boundary_facets) {
    FacetQuadrature fq = facet_quadrature(m, facet, 2);
    for (size_t q = 0; q < fq.x.size(); ++q) {
      Eigen::Vector2d rhat = fq.x[q].head(2).normalized();
      double align = rhat.dot(fq.normals[q].head(2));
      if (facet.tag == "outer") CHECK(align > 0.98);
      if (facet.tag == "inner") CHECK(align < -0.98);
    }
  }
}

TEST_CASE("facet scalar nodes lie on the facet") {
  Mesh m = generate_box({1, 1}, {2, 2});
  DofMap dm = build_dofmap(m, 3);
  for (const auto& facet : m.boundary_facets) {
    auto nodes = facet_scalar_nodes(m, dm, facet);
    CHECK(nodes.size() == 4);  // p+1 nodes on an edge
    for (int n : nodes) {
      const auto& x = dm.node_coords[n];
      if (facet.tag == "left") CHECK(x[0] == doctest::Approx(0.0));
      if (facet.tag == "top") CHECK(x[1] == doctest::Approx(1.0));
    }
  }
}
