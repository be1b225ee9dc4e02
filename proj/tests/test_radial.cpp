#include <doctest.h>

#include <cstring>
#include <stdexcept>

#include <cmath>

#include "dpp/radial_oracle.hpp"

using namespace dpp;

TEST_CASE("decoupled polar flow matches the logarithmic closed form") {
  // beta = 0 decouples the networks; network 1 is classical radial Darcy flow:
  // p1(r) = ln(r/b) / ln(a/b), u1 = -(k1/mu) p1'
  RadialProblem prob;
  prob.beta = 0.0;
  RadialSolution sol = solve_radial(prob, 2048);
  const double a = prob.r_inner, b = prob.r_outer;
  for (double r : {0.35, 0.5, 0.75, 0.95}) {
    double exact_p = std::log(r / b) / std::log(a / b);
    double exact_u = -(prob.k1 / prob.mu) / (r * std::log(a / b));
    CHECK(sol.interpolate(sol.p1, r) == doctest::Approx(exact_p).epsilon(1e-5));
    CHECK(sol.interpolate(sol.u1, r) == doctest::Approx(exact_u).epsilon(1e-4));
  }
}

TEST_CASE("decoupled spherical flow matches the 1/r closed form") {
  RadialProblem prob;
  prob.geometry = RadialGeometry::Spherical;
  prob.beta = 0.0;
  RadialSolution sol = solve_radial(prob, 2048);
  const double a = prob.r_inner, b = prob.r_outer;
  for (double r : {0.35, 0.6, 0.9}) {
    double exact_p = (1.0 / r - 1.0 / b) / (1.0 / a - 1.0 / b);
    CHECK(sol.interpolate(sol.p1, r) == doctest::Approx(exact_p).epsilon(1e-5));
  }
}

TEST_CASE("coupled reference solution obeys its structural invariants") {
  for (auto geom : {RadialGeometry::Polar, RadialGeometry::Spherical}) {
    RadialProblem prob;
    prob.geometry = geom;
    RadialSolution sol = solve_radial(prob);
    CHECK(sol.observed_order > 1.5);
    CHECK(sol.error_estimate < 1e-5);

    // boundary data
    CHECK(sol.p1.front() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.p1.back() == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    // zero micro flux at both walls
    CHECK(std::abs(sol.u2.front()) < 1e-6);
    CHECK(std::abs(sol.u2.back()) < 1e-6);

    // total mass conservation: r^m (u1 + u2) constant in r
    const double m = geom == RadialGeometry::Polar ? 1.0 : 2.0;
    double ref = std::pow(sol.r[1], m) * (sol.u1[1] + sol.u2[1]);
    for (size_t i = 2; i + 1 < sol.r.size(); i += sol.r.size() / 7) {
      double flux = std::pow(sol.r[i], m) * (sol.u1[i] + sol.u2[i]);
      CHECK(flux == doctest::Approx(ref).epsilon(1e-4));
    }

    // pressures decrease monotonically outward under this loading
    for (size_t i = 1; i < sol.r.size(); ++i) CHECK(sol.p1[i] <= sol.p1[i - 1] + 1e-12);
  }
}

TEST_CASE("coupling strength pulls the micro pressure toward the macro one") {
  RadialProblem weak, strong;
  weak.beta = 1e-4;
  strong.beta = 1e3;
  RadialSolution sw = solve_radial(weak, 1024);
  RadialSolution ss = solve_radial(strong, 1024);
  double dev_weak = 0, dev_strong = 0;
  for (size_t i = 0; i < sw.r.size(); ++i) {
    dev_weak = std::max(dev_weak, std::abs(sw.p1[i] - sw.p2[i]));
    dev_strong = std::max(dev_strong, std::abs(ss.p1[i] - ss.p2[i]));
  }
  CHECK(dev_strong < 0.05 * dev_weak);
}

TEST_CASE("reference solver is deterministic") {
  RadialProblem prob;
  RadialSolution a = solve_radial(prob, 512);
  RadialSolution b = solve_radial(prob, 512);
  REQUIRE(a.p1.size() == b.p1.size());
  for (size_t i = 0; i < a.p1.size(); ++i) {
    CHECK(a.p1[i] == b.p1[i]);  // bit-identical
    CHECK(a.u2[i] == b.u2[i]);
  }
}

TEST_CASE("interpolation clamps to the profile range") {
  RadialProblem prob;
  RadialSolution sol = solve_radial(prob, 256);
  CHECK(sol.interpolate(sol.p1, prob.r_inner) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.interpolate(sol.p1, prob.r_outer) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
}
