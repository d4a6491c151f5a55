import numpy as np
import pytest

from adiacheck.dynamics import (
    MMatrixSeries,
    Trajectory,
    build_m_series,
    first_order_survival,
    integrate_coefficients,
    integrate_schrodinger,
    project_onto_adiabatic,
    propagate_at_depth,
    survival_probability,
    transition_probability,
)
from adiacheck.errors import GridMismatch, NoConvergence
from adiacheck.grid import TimeGrid
from adiacheck.linalg import SIGMA_X, SIGMA_Z
from adiacheck.models import FunctionModel, Schedule, SpinHalfModel, StaticModel
from adiacheck.oracles import spinhalf_exact_state, spinhalf_survival
from adiacheck.spectral import adiabatic_orbit, adiabatic_orbits, analyze
from _runs import RESONANCE_T, closed_form, lz_run, ode_route, run_model, spin_run

CORPUS = {
    "resonance": lambda: spin_run(1.0, 0.1, RESONANCE_T),
    "xi_dominant": lambda: spin_run(0.01, 1.0, 100.0, 8192),
    "weak": lambda: spin_run(1.0, 0.001, 100.0, 8192),
    "sinusoidal": lambda: spin_run(1.0, Schedule.sinusoidal(0.5, 0.3, 0.4), 30.0),
    "lz_slow": lambda: lz_run(0.1, 1.0, 60.0),
    "lz_fast": lambda: lz_run(5.0, 1.0, 12.0),
}


@pytest.mark.parametrize("name", CORPUS)
def test_route_equivalence(name):
    run = CORPUS[name]()
    c_ode = ode_route(run)
    assert np.max(np.abs(c_ode.c - run.projected.c)) <= 1e-6


@pytest.mark.parametrize("name", CORPUS)
def test_normalisation_both_routes(name):
    run = CORPUS[name]()
    for c in (run.projected, ode_route(run)):
        assert np.max(np.abs(np.sum(c.populations, axis=1) - 1.0)) <= 1e-8


@pytest.mark.parametrize("name", ["resonance", "sinusoidal", "lz_fast"])
def test_grid_halving(name):
    run = CORPUS[name]()
    model = run.analysis.model
    level = run.projected.initial_level
    fine = run_model(model, run.grid.refine(2), level, run.traj.states[0])
    assert np.max(np.abs(fine.survival[::2] - run.survival)) <= 1e-7


def test_exact_orbit_spin_half():
    run = spin_run(1.0, 0.1, 50.0, 8192)
    ref = spinhalf_exact_state(closed_form(1.0, 0.1, 50.0), 1, run.grid.points)
    fid = np.abs(np.einsum("ki,ki->k", np.conj(ref), run.traj.states)) ** 2
    assert np.min(fid) >= 1 - 1e-8


def test_resonance_survival_frozen():
    run = spin_run(1.0, 0.1, RESONANCE_T)
    assert run.survival[-1] == pytest.approx(0.00990099009901, abs=1e-9)
    assert ode_route(run).populations[-1, 1] == pytest.approx(0.00990099009901, abs=1e-6)


def test_survival_matches_closed_form_everywhere():
    run = spin_run(1.0, Schedule.sinusoidal(0.5, 0.3, 0.4), 30.0)
    cf = closed_form(1.0, Schedule.sinusoidal(0.5, 0.3, 0.4), 30.0)
    assert np.max(np.abs(run.survival - spinhalf_survival(cf, run.grid.points))) <= 1e-6


def test_xi_dominant_bound():
    run = spin_run(0.01, 1.0, 100.0, 8192)
    assert np.min(run.survival) >= 1 - 2 * 0.01**2 / (1 + 0.01**2)


def test_zero_hamiltonian():
    model = StaticModel(np.zeros((2, 2)), horizon=3.0)
    psi0 = np.array([0.6, 0.8j])
    traj = integrate_schrodinger(model, psi0, TimeGrid.uniform(3.0, 16))
    np.testing.assert_allclose(traj.states, np.broadcast_to(psi0, (17, 2)), atol=1e-15)


def test_stationary_state_phase():
    H = np.array([[0.3, 0.2], [0.2, -0.7]])
    w, V = np.linalg.eigh(H)
    grid = TimeGrid.uniform(5.0, 32)
    traj = integrate_schrodinger(StaticModel(H, horizon=5.0), V[:, 1], grid)
    expected = np.exp(-1j * w[1] * grid.points)[:, None] * V[:, 1]
    np.testing.assert_allclose(traj.states, expected, atol=1e-12)


def test_static_survival_is_one():
    H = np.array([[1.0, 0.4 - 0.1j, 0.0], [0.4 + 0.1j, 0.0, 0.2], [0.0, 0.2, -1.0]])
    run = run_model(StaticModel(H, horizon=10.0), TimeGrid.uniform(10.0, 64), 2)
    assert np.max(np.abs(run.survival - 1.0)) <= 1e-12
    c = integrate_coefficients(build_m_series(run.flow), 2)
    assert np.all(c.c == np.eye(3)[2])


def test_strict_adiabatic_when_coupling_vanishes():
    # eigenvectors fixed in time: gamma_nm = 0, evolution follows the orbit
    h = lambda t: (1.5 + np.sin(t))[..., None, None] * SIGMA_Z + 0.3 * np.cos(t)[..., None, None] * np.eye(2)
    model = FunctionModel(h, 2, horizon=8.0)
    a = analyze(model, TimeGrid.uniform(8.0, 512))
    assert np.max(np.abs(a.flow.gamma[:, 0, 1])) <= 1e-10
    orbit = adiabatic_orbit(a.frames, a.flow, 1)
    traj = integrate_schrodinger(model, orbit[0], a.grid)
    fid = np.abs(np.einsum("ki,ki->k", np.conj(orbit), traj.states)) ** 2
    assert np.min(fid) >= 1 - 1e-8


def test_projection_of_orbit_is_kronecker():
    run = spin_run(1.0, 0.1, RESONANCE_T)
    orbits = adiabatic_orbits(run.analysis.frames, run.flow)
    traj = Trajectory(run.grid, orbits[:, :, 0])
    c = project_onto_adiabatic(traj, orbits, 0)
    np.testing.assert_allclose(c.c, np.broadcast_to([1.0, 0.0], c.c.shape), atol=1e-10)


def test_initial_coefficients():
    run = spin_run(1.0, 0.1, RESONANCE_T)
    np.testing.assert_allclose(np.abs(run.projected.c[0]), [0.0, 1.0], atol=1e-12)
    assert first_order_survival(run.flow, 1)[0] == 1.0


def test_m_series_structure():
    run = spin_run(1.0, 0.1, RESONANCE_T)
    ms = build_m_series(run.flow)
    assert np.all(ms.amplitude[:, [0, 1], [0, 1]] == 0)
    np.testing.assert_allclose(np.abs(ms.M[:, 0, 1]), 0.099503719021, rtol=1e-9)


def test_zero_m_keeps_initial_level():
    grid = TimeGrid.uniform(1.0, 8)
    ms = MMatrixSeries(grid, np.zeros((9, 3, 3)), np.zeros((9, 3, 3)))
    c = integrate_coefficients(ms, 1)
    assert np.all(survival_probability(c) == 1.0)


def test_first_order_weak_coupling():
    run = spin_run(1.0, 0.001, 100.0, 8192)
    exact = transition_probability(run.projected)[1:]
    approx = 1.0 - first_order_survival(run.flow, 1)[1:]
    assert np.max(np.abs(approx - exact) / exact) <= 0.1


def test_grid_mismatch():
    run = spin_run(1.0, 0.1, RESONANCE_T)
    orbits = adiabatic_orbits(run.analysis.frames, run.flow)
    with pytest.raises(GridMismatch):
        project_onto_adiabatic(run.traj, orbits[::2], 1)
    with pytest.raises(GridMismatch):
        project_onto_adiabatic(run.traj, orbits, 1, orbit_grid=TimeGrid(run.grid.points * 1.01))


def test_no_convergence_is_typed():
    model = SpinHalfModel.build(1.0, 0.1, 50.0)
    with pytest.raises(NoConvergence):
        integrate_schrodinger(model, np.array([1.0, 0.0]), TimeGrid.uniform(50.0, 8), tol=1e-14, max_depth=2)


@pytest.mark.parametrize("method,order", [("cfm4", 4), ("midpoint", 2), ("rk4", 4)])
def test_integrator_order(method, order):
    model = SpinHalfModel.build(1.0, Schedule.sinusoidal(0.5, 0.3, 0.4), 4.0)
    grid = TimeGrid.uniform(4.0, 8)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    ref = propagate_at_depth(model, psi0, grid, 9, "cfm4")[-1]
    errs = [np.linalg.norm(propagate_at_depth(model, psi0, grid, d, method)[-1] - ref) for d in (2, 3, 4)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > order - 0.3)


def test_unitary_methods_preserve_norm():
    run = spin_run(1.0, 0.1, 50.0, 8192)
    assert np.max(np.abs(run.traj.norms - 1.0)) <= 1e-10


def test_rejects_unnormalised_state():
    with pytest.raises(ValueError):
        integrate_schrodinger(SpinHalfModel.build(1.0, 0.1, 1.0), np.array([1.0, 1.0]), TimeGrid.uniform(1.0, 8))
