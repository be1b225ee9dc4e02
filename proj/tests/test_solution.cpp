#include <doctest.h>

#include <cstring>
#include <stdexcept>

#include "dpp/drivers.hpp"
#include "dpp/solution.hpp"

using namespace dpp;

namespace {

// Fill a coefficient vector by nodal interpolation of smooth fields.
FieldSolution make_interpolant(const Mesh& mesh, std::shared_ptr<DofMap> dm) {
  FieldSolution sol;
  sol.mesh = &mesh;
  sol.dofmap = dm;
  sol.coeffs = Eigen::VectorXd::Zero(dm->n_dofs());
  for (int n = 0; n < dm->n_scalar; ++n) {
    const auto& x = dm->node_coords[n];
    sol.coeffs[dm->u_dof(1, n, 0)] = 2 * x[0] + x[1];
    sol.coeffs[dm->u_dof(1, n, 1)] = x[0] - 3 * x[1];
    sol.coeffs[dm->u_dof(2, n, 0)] = 1.0;
    sol.coeffs[dm->u_dof(2, n, 1)] = x[0] * x[1];
    sol.coeffs[dm->p_dof(1, n)] = 4 - x[0] + 2 * x[1];
    sol.coeffs[dm->p_dof(2, n)] = x[0] * x[0];
  }
  return sol;
}

}  // namespace

TEST_CASE("point evaluation reproduces an interpolated polynomial exactly") {
  Mesh mesh = generate_box({2.0, 1.0}, {4, 3});
  auto dm = std::make_shared<DofMap>(build_dofmap(mesh, 2));
  FieldSolution sol = make_interpolant(mesh, dm);

  for (auto xy : {std::pair{0.37, 0.22}, {1.63, 0.91}, {0.0, 0.0}, {2.0, 1.0}}) {
    Eigen::Vector3d x(xy.first, xy.second, 0.0);
    auto v = sol.eval_at(x);
    REQUIRE(v.has_value());
    CHECK(v->u1[0] == doctest::Approx(2 * x[0] + x[1]).epsilon(1e-11));
    CHECK(v->u1[1] == doctest::Approx(x[0] - 3 * x[1]).epsilon(1e-11));
    CHECK(v->u2[1] == doctest::Approx(x[0] * x[1]).epsilon(1e-11));
    CHECK(v->p1 == doctest::Approx(4 - x[0] + 2 * x[1]).epsilon(1e-11));
    CHECK(v->p2 == doctest::Approx(x[0] * x[0]).epsilon(1e-11));
    // gradients and divergences of the interpolated fields
    CHECK(v->grad_p1[0] == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(v->grad_p1[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(v->grad_p2[0] == doctest::Approx(2 * x[0]).epsilon(1e-10));
    CHECK(v->div_u1 == doctest::Approx(2.0 - 3.0).epsilon(1e-10));
    CHECK(v->div_u2 == doctest::Approx(x[0]).epsilon(1e-10));
  }
}

TEST_CASE("points outside the mesh are reported as such") {
  Mesh mesh = generate_box({1.0, 1.0}, {2, 2});
  auto dm = std::make_shared<DofMap>(build_dofmap(mesh, 1));
  FieldSolution sol = make_interpolant(mesh, dm);
  CHECK_FALSE(sol.eval_at({1.5, 0.5, 0.0}).has_value());
  CHECK_FALSE(sol.eval_at({-0.01, 0.5, 0.0}).has_value());
  CHECK_FALSE(locate_point(mesh, {0.5, 2.0, 0.0}).has_value());
}

TEST_CASE("locate_point returns consistent reference coordinates") {
  Mesh mesh = generate_box({1.0, 1.0}, {2, 2});
  Eigen::Vector3d x(0.62, 0.31, 0.0);
  auto hit = locate_point(mesh, x);
  REQUIRE(hit.has_value());
  auto geom = map_element(mesh, hit->first, {hit->second});
  CHECK(geom.x[0][0] == doctest::Approx(x[0]).epsilon(1e-10));
  CHECK(geom.x[0][1] == doctest::Approx(x[1]).epsilon(1e-10));
}

TEST_CASE("block extraction matches dof indexing") {
  Mesh mesh = generate_interval(1.0, 3);
  auto dm = std::make_shared<DofMap>(build_dofmap(mesh, 1));
  FieldSolution sol;
  sol.mesh = &mesh;
  sol.dofmap = dm;
  sol.coeffs = Eigen::VectorXd::LinSpaced(dm->n_dofs(), 0, dm->n_dofs() - 1);
  Eigen::VectorXd u1 = sol.u_block(1), p2 = sol.p_block(2);
  CHECK(u1.size() == dm->n_scalar);
  CHECK(u1[2] == doctest::Approx((double)dm->u_dof(1, 2, 0)));
  CHECK(p2[0] == doctest::Approx((double)dm->p_dof(2, 0)));
}

TEST_CASE("annulus point evaluation works through the curved inverse map") {
  Mesh mesh = generate_annulus(0.3, 1.0, 4, 24);
  auto dm = std::make_shared<DofMap>(build_dofmap(mesh, 2));
  FieldSolution sol = make_interpolant(mesh, dm);
  Eigen::Vector3d x(0.0, 0.65, 0.0);  // mid-annulus on the y-axis
  auto v = sol.eval_at(x);
  REQUIRE(v.has_value());
  CHECK(v->p1 == doctest::Approx(4 - x[0] + 2 * x[1]).epsilon(1e-6));
}
