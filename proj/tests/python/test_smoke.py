"""Smoke tests for the python bindings."""

import math

import pytest

dpp = pytest.importorskip("dpp")


def patch_setup():
    mesh = dpp.generate_box([1.0, 1.0], [4, 4])
    mat = dpp.MaterialData.isotropic(1.0, 1.0, 1.0, 0.01)
    spec = dpp.BoundarySpec()
    for net in (1, 2):
        spec.set_pressure(net, "left", 10.0)
        spec.set_pressure(net, "right", 1.0)
        spec.set_normal_velocity(net, "bottom", 0.0)
        spec.set_normal_velocity(net, "top", 0.0)
    return mesh, mat, spec


def test_mesh_generation_and_roundtrip():
    mesh = dpp.generate_box([1.0, 2.0], [3, 6])
    assert mesh.dim == 2
    assert mesh.n_elements() == 18
    assert set(mesh.tags()) == {"left", "right", "bottom", "top"}
    back = dpp.read_mesh(dpp.write_mesh(mesh))
    assert back.n_nodes() == mesh.n_nodes()


def test_steady_patch_solution():
    mesh, mat, spec = patch_setup()
    sol = dpp.solve_steady(mesh, 1, mat, spec)
    v = sol.eval_at([0.4, 0.6, 0.0])
    assert abs(v.u1[0] - 9.0) < 1e-9
    assert abs(v.u2[0] - 0.09) < 1e-10
    assert abs(v.p1 - (10.0 - 9.0 * 0.4)) < 1e-9
    with pytest.raises(ValueError):
        sol.eval_at([5.0, 5.0, 0.0])


def test_error_norms_and_dissipation():
    mesh, mat, spec = patch_setup()
    sol = dpp.solve_steady(mesh, 1, mat, spec)
    exact = dpp.ExactFields()
    exact.u1 = lambda x: [9.0, 0.0, 0.0]
    exact.p1 = lambda x: 10.0 - 9.0 * x[0]
    e = dpp.error_norms(sol, exact)
    assert e.l2_u1 < 1e-9
    assert e.l2_p1 < 1e-9
    assert math.isnan(e.l2_u2)  # unset reference field
    assert abs(dpp.dissipation(sol, mat) - 81.81) < 1e-8
    assert dpp.kinematic_admissibility_residual(sol) < 1e-9


def test_transient_series():
    mesh, mat, spec = patch_setup()
    tr = dpp.TransientData()
    # relaxation times rho*k_i/mu are far below dt, so the flow settles fast
    tr.rho1 = tr.rho2 = 1e-3
    tr.dt = 0.1
    tr.T = 0.3
    ts = dpp.solve_transient(mesh, 1, mat, tr, spec)
    assert ts.times[-1] == pytest.approx(0.3)
    last = ts.solution_at(ts.n_steps() - 1)
    assert last.eval_at([0.5, 0.5, 0.0]).u1[0] == pytest.approx(9.0, rel=1e-3)


def test_analytical_reference_and_reciprocity():
    ana = dpp.AnalyticalSolution2D()
    assert ana.eta() == pytest.approx(math.sqrt(11.0))
    mesh = dpp.generate_box([1.0, 1.0], [8, 8])
    sol = dpp.solve_steady(mesh, 2, ana.material(), ana.boundary_spec())
    e = dpp.error_norms(sol, ana.fields())
    assert e.l2_p1 < 1e-2


def test_radial_oracle():
    prob = dpp.RadialProblem()
    prob.beta = 0.0
    rad = dpp.solve_radial(prob, 1024)
    assert rad.observed_order > 1.5
    a, b = prob.r_inner, prob.r_outer
    exact = math.log(0.5 / b) / math.log(a / b)
    assert rad.interpolate(rad.p1, 0.5) == pytest.approx(exact, abs=1e-4)


def test_case_registry(tmp_path):
    assert "patch1d" in dpp.list_cases()
    defaults = dpp.case_defaults("patch1d")
    assert "[case]" in defaults
    cfg = defaults.replace("dir = out_patch1d", f"dir = {tmp_path}")
    log = dpp.run_case(cfg)
    assert (tmp_path / "report.txt").exists()
    with pytest.raises(dpp.ConfigError):
        dpp.case_defaults("bogus")
