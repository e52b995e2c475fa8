"""Gradient flow, Newton polishing, Morse indices and blow-up diagnostics."""
import numpy as np
import pytest

from ksbench import bubbles, solver
from ksbench.barycenter import JoinPoint
from ksbench.energy import EnergyFunctional, Parameters
from ksbench.errors import ConvergenceError

COERCIVE = Parameters(beta=1.0, rho=1.0)


def test_flow_coercive_decays_toward_trivial(square48, square48_basis):
    model = EnergyFunctional.for_mesh(square48)
    seed = 0.5 * square48_basis.eigenvectors[:, 0]
    h0 = model.h1_norm(seed)
    res = solver.flow(model, model.field(seed), COERCIVE, step_budget=2000)
    assert model.h1_norm(res.u.values) < 0.05 * h0
    # Newton polishing lands exactly on the trivial state.
    polished = solver.newton(model, res.u, COERCIVE, damped=True)
    assert polished.classification == solver.CLASS_TRIVIAL


def test_flow_energy_monotone(square48, square48_basis):
    model = EnergyFunctional.for_mesh(square48)
    seed = model.field(2.0 * square48_basis.eigenvectors[:, 0])
    e0 = model.energy(seed.values, COERCIVE)
    res = solver.flow(model, seed, COERCIVE, step_budget=50)
    assert res.energy <= e0 + 1e-12


def test_newton_from_near_zero(square48):
    model = EnergyFunctional.for_mesh(square48)
    rng = np.random.default_rng(4)
    u0 = 1e-2 * model.project_zero_mean(rng.standard_normal(
        square48.num_vertices))
    res = solver.newton(model, u0, COERCIVE)
    assert res.classification == solver.CLASS_TRIVIAL
    assert res.residual < 1e-9


def test_newton_quadratic_tail(disk128, disk128_basis):
    # Polish a nontrivial state found above the fold of the disk branch.
    model = EnergyFunctional.for_mesh(disk128)
    p = Parameters(beta=-5.0, rho=13.8)
    cfg = bubbles.TestConfig(
        lam=30.0, zeta=JoinPoint(measure=None,
                                 sphere=np.array([0.0, 0.0, 1.0]), t=1.0))
    seed = bubbles.phi_lambda(cfg, disk128, disk128_basis)
    smooth = solver.flow(model, seed, p, step_budget=300)
    res = solver.newton(model, smooth.u, p, damped=True, max_iter=60,
                        seed_descriptor="mode3")
    assert res.classification == solver.CLASS_NONTRIVIAL
    assert res.residual < 1e-9


def test_morse_index_at_zero_matches_bracket(square48, square48_basis):
    from ksbench import topology
    model = EnergyFunctional.for_mesh(square48)
    for p in (Parameters(beta=-5.0, rho=13.0), Parameters(beta=1.0, rho=1.0),
              Parameters(beta=-12.0, rho=7.0)):
        J = topology.trivial_morse_index(p, model.area,
                                         square48_basis.eigenvalues)
        idx = solver.morse_index_at(model, np.zeros(square48.num_vertices),
                                    p, count=8)
        assert idx == J


def test_find_critical_point_coercive_is_trivial(square48, square48_basis):
    pick, found = solver.find_critical_point(square48, square48_basis,
                                             COERCIVE, flow_budget=100)
    assert pick is not None
    assert pick.classification == solver.CLASS_TRIVIAL
    assert all(r.classification == solver.CLASS_TRIVIAL for r in found)


def test_find_critical_point_nontrivial_disk(disk128, disk128_basis):
    p = Parameters(beta=-5.0, rho=13.8)
    pick, _ = solver.find_critical_point(disk128, disk128_basis, p)
    assert pick is not None
    assert pick.classification == solver.CLASS_NONTRIVIAL
    assert pick.residual < 1e-8
    assert pick.morse_index is not None


def test_continuation_tracks_nontrivial_branch(disk128, disk128_basis):
    model = EnergyFunctional.for_mesh(disk128)
    p0 = Parameters(beta=-5.0, rho=13.7)
    p1 = Parameters(beta=-5.0, rho=14.0)
    pick, _ = solver.find_critical_point(disk128, disk128_basis, p0)
    assert pick.classification == solver.CLASS_NONTRIVIAL
    results, stop = solver.continuation(model, disk128_basis, p0, p1,
                                        steps=10, u0=pick.u)
    assert stop is None
    assert len(results) == 11
    assert all(r.classification == solver.CLASS_NONTRIVIAL for r in results)
    energies = np.array([r.energy for r in results])
    assert np.abs(np.diff(energies)).max() < 1.0


def test_continuation_stops_at_resonance(square48, square48_basis):
    model = EnergyFunctional.for_mesh(square48)
    four_pi = 4.0 * np.pi
    p0 = Parameters(beta=1.0, rho=four_pi - 1.0)
    p1 = Parameters(beta=1.0, rho=four_pi + 1.0)   # midpoint lands on 4*pi
    results, stop = solver.continuation(model, square48_basis, p0, p1,
                                        steps=2)
    assert stop is not None
    assert "resonance" in stop


def test_local_mass_quantization(disk128):
    model = EnergyFunctional.for_mesh(disk128)
    interior = bubbles.make_measure([np.array([0.0, 0.0])], [True])
    u = bubbles.bubble_values(interior, 40.0, disk128)
    diag = solver.local_mass(model, u, Parameters(beta=0.0, rho=8 * np.pi),
                             radius=0.3)
    assert diag.interpretation == "interior_like"

    boundary = bubbles.make_measure([bubbles.boundary_atom(disk128)], [False])
    u = bubbles.bubble_values(boundary, 40.0, disk128)
    diag = solver.local_mass(model, u, Parameters(beta=0.0, rho=4 * np.pi),
                             radius=0.3)
    assert diag.interpretation == "boundary_like"

    flat = solver.local_mass(model, np.zeros(disk128.num_vertices),
                             Parameters(beta=0.0, rho=10.0), radius=0.3)
    assert flat.interpretation == "none"
    assert not flat.candidate_points


def test_triviality_tol_scales_with_parameters():
    small = solver.triviality_tol(Parameters(beta=0.0, rho=1.0))
    large = solver.triviality_tol(Parameters(beta=-50.0, rho=100.0))
    assert large > small


def test_solve_result_json_roundtrip(square48):
    model = EnergyFunctional.for_mesh(square48)
    res = solver.newton(model, np.zeros(square48.num_vertices), COERCIVE)
    d = res.to_json_dict(COERCIVE)
    assert d["classification"] == solver.CLASS_TRIVIAL
    assert d["beta"] == 1.0 and d["rho"] == 1.0
    assert len(d["field"]) == square48.num_vertices
