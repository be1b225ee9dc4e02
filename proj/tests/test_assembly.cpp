#include <doctest.h>

#include <cstring>
#include <stdexcept>

#include <random>
#include <set>

#include "dpp/assembly.hpp"
#include "dpp/mesh.hpp"

using namespace dpp;

namespace {

BoundarySpec patch_spec_1d(double pl = 10.0, double pr = 1.0) {
  BoundarySpec spec;
  for (int net : {1, 2}) {
    spec.set_pressure(net, "left", pl);
    spec.set_pressure(net, "right", pr);
  }
  return spec;
}

Eigen::MatrixXd dense(const SparseMat& m) { return Eigen::MatrixXd(m); }

}  // namespace

TEST_CASE("hand-checked element blocks on a single unit segment") {
  Mesh mesh = generate_interval(1.0, 1);
  DofMap dm = build_dofmap(mesh, 1);
  const double mu = 2.0, beta = 0.5, k1 = 4.0, k2 = 0.25;
  MaterialData mat = MaterialData::isotropic(mu, beta, k1, k2);
  BoundarySpec spec = patch_spec_1d();

  Eigen::MatrixXd G = dense(assemble_galerkin(mesh, dm, mat, spec).matrix);
  // velocity mass block (network 1): (mu/k1) * h/6 * [[2,1],[1,2]] with h=1
  const double m11 = mu / k1 / 6.0;
  CHECK(G(dm.u_dof(1, 0, 0), dm.u_dof(1, 0, 0)) == doctest::Approx(2 * m11).epsilon(1e-14));
  CHECK(G(dm.u_dof(1, 0, 0), dm.u_dof(1, 1, 0)) == doctest::Approx(m11).epsilon(1e-14));
  // inter-network pressure coupling: (beta/mu) * h/6 * [[2,1],[1,2]], sign
  // flipped across networks
  const double c = beta / mu / 6.0;
  CHECK(G(dm.p_dof(1, 0), dm.p_dof(1, 0)) == doctest::Approx(2 * c).epsilon(1e-14));
  CHECK(G(dm.p_dof(1, 0), dm.p_dof(2, 0)) == doctest::Approx(-2 * c).epsilon(1e-14));
  CHECK(G(dm.p_dof(2, 0), dm.p_dof(1, 1)) == doctest::Approx(-c).epsilon(1e-14));
  // -(div w, p) and (q, div u) are skew partners
  CHECK(G(dm.u_dof(1, 0, 0), dm.p_dof(1, 0)) ==
        doctest::Approx(-G(dm.p_dof(1, 0), dm.u_dof(1, 0, 0))).epsilon(1e-14));

  Eigen::MatrixXd S = dense(assemble_stabilized(mesh, dm, mat, spec).matrix);
  // stabilization halves the velocity mass ...
  CHECK(S(dm.u_dof(1, 0, 0), dm.u_dof(1, 0, 0)) == doctest::Approx(m11).epsilon(1e-14));
  // ... and adds the pressure stiffness (1/2)(k_i/mu) * (1/h) * [[1,-1],[-1,1]]
  const double stiff = 0.5 * k1 / mu;
  CHECK(S(dm.p_dof(1, 0), dm.p_dof(1, 0)) == doctest::Approx(2 * c + stiff).epsilon(1e-14));
  CHECK(S(dm.p_dof(1, 0), dm.p_dof(1, 1)) == doctest::Approx(c - stiff).epsilon(1e-14));
}

TEST_CASE("1D patch problem solved through the assembly layer") {
  // mu = beta = 1, k1 = 1, k2 = 0.01, p: 10 -> 1 on (0,1)
  // exact: u1 = 9, u2 = 0.09, p1 = p2 = 10 - 9x
  Mesh mesh = generate_interval(1.0, 7);
  DofMap dm = build_dofmap(mesh, 1);
  MaterialData mat = MaterialData::isotropic(1.0, 1.0, 1.0, 0.01);
  AssembledSystem sys = assemble_stabilized(mesh, dm, mat, patch_spec_1d());
  Eigen::VectorXd x = solve_direct(sys);
  for (int n = 0; n < dm.n_scalar; ++n) {
    const double xc = dm.node_coords[n][0];
    CHECK(x[dm.u_dof(1, n, 0)] == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(x[dm.u_dof(2, n, 0)] == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(x[dm.p_dof(1, n)] == doctest::Approx(10.0 - 9.0 * xc).epsilon(1e-12));
    CHECK(x[dm.p_dof(2, n)] == doctest::Approx(10.0 - 9.0 * xc).epsilon(1e-12));
  }
}

TEST_CASE("coercivity identity: x'Ax equals the stability norm squared") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist;
  int configs = 0;
  for (int dim : {1, 2, 3}) {
    for (int p : {1, 2, 3}) {
      if (dim == 3 && p > 2) continue;
      Mesh mesh = dim == 1   ? generate_interval(1.3, 4)
                  : dim == 2 ? generate_box({1.0, 0.7}, {3, 2})
                             : generate_box({1.0, 1.0, 0.5}, {2, 2, 2});
      DofMap dm = build_dofmap(mesh, p);
      MaterialData mat = MaterialData::isotropic(1.5, 0.8, 2.0, 0.05);
      BoundarySpec spec;  // empty: matrix only, no BC rows
      for (const auto& tag : mesh.tags()) {
        spec.set_pressure(1, tag, 0.0);
        spec.set_pressure(2, tag, 0.0);
      }
      AssembledSystem sys = assemble_stabilized(mesh, dm, mat, spec);
      SparseMat S = stab_norm_weights(mesh, dm, mat);
      ++configs;
      for (int trial = 0; trial < 25; ++trial) {
        Eigen::VectorXd v(dm.n_dofs());
        for (int i = 0; i < v.size(); ++i) v[i] = dist(rng);
        const double quad = v.dot(sys.matrix * v);
        const double norm2 = v.dot(S * v);
        CHECK(quad == doctest::Approx(norm2).epsilon(1e-10));
        CHECK(norm2 >= -1e-12 * v.squaredNorm());
      }
    }
  }
  CHECK(configs >= 7);
}

TEST_CASE("transient assembly reduces to the steady operator as rho -> 0") {
  Mesh mesh = generate_box({1, 1}, {3, 3});
  DofMap dm = build_dofmap(mesh, 1);
  MaterialData mat = MaterialData::isotropic(1.0, 1.0, 1.0, 0.01);
  BoundarySpec spec = patch_spec_1d();
  for (const char* t : {"bottom", "top"}) {
    spec.set_normal_velocity(1, t, 0.0);
    spec.set_normal_velocity(2, t, 0.0);
  }
  TransientData tr;
  tr.rho1 = tr.rho2 = 0.0;
  tr.dt = 0.5;
  tr.T = 1.0;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(dm.n_scalar * dm.dim);
  AssembledSystem a = assemble_transient_step(mesh, dm, mat, tr, spec, zero, zero, tr.dt);
  AssembledSystem b = assemble_stabilized(mesh, dm, mat, spec);
  CHECK((dense(a.matrix) - dense(b.matrix)).norm() < 1e-13 * dense(b.matrix).norm());
  CHECK((a.rhs - b.rhs).norm() < 1e-13);
}

TEST_CASE("transient rhs carries the previous velocity as momentum source") {
  Mesh mesh = generate_interval(1.0, 3);
  DofMap dm = build_dofmap(mesh, 1);
  MaterialData mat = MaterialData::isotropic(1.0, 1.0, 1.0, 0.01);
  BoundarySpec spec = patch_spec_1d(0.0, 0.0);
  TransientData tr;
  tr.rho1 = 2.0;
  tr.rho2 = 1.0;
  tr.dt = 0.25;
  tr.T = 1.0;
  Eigen::VectorXd prev1 = Eigen::VectorXd::Constant(dm.n_scalar, 3.0);
  Eigen::VectorXd prev2 = Eigen::VectorXd::Zero(dm.n_scalar);
  Eigen::VectorXd rhs = assemble_transient_rhs(mesh, dm, mat, tr, spec, prev1, prev2, tr.dt);
  AssembledSystem sys = assemble_transient_step(mesh, dm, mat, tr, spec, prev1, prev2, tr.dt);
  CHECK((rhs - sys.rhs).norm() < 1e-14);
  // velocity row for network 1 sees (1/2)(w, (rho1/dt) u_prev): interior node
  // weight h * (1/2) * (rho1/dt) * 3
  const double h = 1.0 / 3.0;
  CHECK(rhs[dm.u_dof(1, 1, 0)] == doctest::Approx(0.5 * (2.0 / 0.25) * 3.0 * h).epsilon(1e-12));
  CHECK(rhs[dm.u_dof(2, 1, 0)] == doctest::Approx(0.0));
}

TEST_CASE("strong velocity constraints refuse non-axis-aligned facets") {
  Mesh mesh = generate_annulus(0.3, 1.0, 2, 8);
  DofMap dm = build_dofmap(mesh, 1);
  BoundarySpec spec;
  spec.set_pressure(1, "inner", 1.0);
  spec.set_pressure(1, "outer", 0.0);
  spec.set_normal_velocity(2, "inner", 0.0);
  spec.set_normal_velocity(2, "outer", 0.0);
  CHECK_THROWS_WITH_AS(strong_velocity_constraints(mesh, dm, spec),
                       doctest::Contains("Nitsche"), std::invalid_argument);
}

TEST_CASE("strong velocity constraints pin the normal component dof") {
  Mesh mesh = generate_box({1, 1}, {2, 2});
  DofMap dm = build_dofmap(mesh, 2);
  BoundarySpec spec;
  spec.set_pressure(1, "left", 1.0);
  spec.set_pressure(2, "left", 1.0);
  spec.set_pressure(1, "right", 0.0);
  spec.set_pressure(2, "right", 0.0);
  spec.set_normal_velocity(1, "top", 2.5);  // u1 . (0,1) = 2.5
  spec.set_normal_velocity(2, "top", 0.0);
  spec.set_normal_velocity(1, "bottom", 0.0);
  spec.set_normal_velocity(2, "bottom", 0.0);
  auto cons = strong_velocity_constraints(mesh, dm, spec);
  std::set<int> pinned;  // facet-shared nodes may be listed twice (same value)
  for (auto [row, val] : cons) {
    for (int n = 0; n < dm.n_scalar; ++n)
      if (row == dm.u_dof(1, n, 1) && dm.node_coords[n][1] == doctest::Approx(1.0)) {
        CHECK(val == doctest::Approx(2.5));
        pinned.insert(row);
      }
  }
  CHECK(pinned.size() == 5);  // 2p+1 nodes on the top edge
}

TEST_CASE("datum constraint appends a mean-pressure row") {
  Mesh mesh = generate_box({2, 1}, {2, 2});
  DofMap dm = build_dofmap(mesh, 1);
  MaterialData mat = MaterialData::isotropic(1, 1, 1, 0.01);
  BoundarySpec spec;
  for (const auto& t : mesh.tags()) {
    spec.set_normal_velocity(1, t, 0.0);
    spec.set_normal_velocity(2, t, 0.0);
  }
  AssembledSystem sys = assemble_stabilized(mesh, dm, mat, spec);
  add_datum_constraint(sys, mesh, dm);
  REQUIRE(sys.constraint.has_value());
  const int n = dm.n_dofs();
  CHECK(sys.matrix.rows() == n + 1);
  // the multiplier row integrates p1: entries sum to the domain area
  double sum = 0;
  for (SparseMat::InnerIterator it(sys.matrix, n); it; ++it) sum += it.value();
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("assembly is deterministic") {
  Mesh mesh = generate_box({1, 1}, {4, 4});
  DofMap dm = build_dofmap(mesh, 2);
  MaterialData mat = MaterialData::isotropic(1, 1, 1, 0.01);
  BoundarySpec spec;
  for (const auto& t : mesh.tags()) {
    spec.set_pressure(1, t, 1.0);
    spec.set_pressure(2, t, 1.0);
  }
  AssembledSystem a = assemble_stabilized(mesh, dm, mat, spec);
  AssembledSystem b = assemble_stabilized(mesh, dm, mat, spec);
  Eigen::MatrixXd da = dense(a.matrix), db = dense(b.matrix);
  CHECK(std::memcmp(da.data(), db.data(), sizeof(double) * da.size()) == 0);
  CHECK(std::memcmp(a.rhs.data(), b.rhs.data(), sizeof(double) * a.rhs.size()) == 0);
}

TEST_CASE("transport step: pure decay without advection conserves constants") {
  // u = 0, D = 0, f = 0: backward Euler keeps a constant field unchanged
  Mesh mesh = generate_box({1, 1}, {3, 3});
  DofMap dm = build_dofmap(mesh, 1);
  TransportData tp;
  tp.D = Eigen::Matrix3d::Zero();
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(dm.n_scalar, 0.7);
  auto vel = [](int, int) { return Eigen::Vector3d::Zero(); };
  AssembledSystem sys = assemble_transport_step(mesh, dm, vel, tp, 0.1, prev);
  Eigen::VectorXd c = solve_direct(sys);
  for (int i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("transport dirichlet tag pins the inlet concentration") {
  Mesh mesh = generate_box({1, 1}, {3, 3});
  DofMap dm = build_dofmap(mesh, 1);
  TransportData tp;
  // diffusion keeps the cell Peclet number small so the front stays monotone
  tp.D = 0.2 * Eigen::Matrix3d::Identity();
  tp.dirichlet["left"] = [](const Eigen::Vector3d&, double) { return 1.0; };
  tp.outflow.insert("right");
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(dm.n_scalar);
  auto vel = [](int, int) { return Eigen::Vector3d(0.5, 0.0, 0.0); };
  AssembledSystem sys = assemble_transport_step(mesh, dm, vel, tp, 0.1, prev);
  Eigen::VectorXd c = solve_direct(sys);
  for (int n = 0; n < dm.n_scalar; ++n) {
    if (dm.node_coords[n][0] == doctest::Approx(0.0)) CHECK(c[n] == doctest::Approx(1.0));
    CHECK(c[n] >= -0.02);
    CHECK(c[n] <= 1.02);
  }
}
