import numpy as np
import pytest

from adiacheck.errors import DegenerateCrossing, MaskedInterval
from adiacheck.grid import TimeGrid, derivative
from adiacheck.linalg import SIGMA_X, SIGMA_Z
from adiacheck.models import FunctionModel, LandauZenerModel, Schedule, SpinHalfModel, StaticModel
from adiacheck.oracles import spinhalf_adiabatic_state
from adiacheck.spectral import (
    adiabatic_orbit,
    analyze,
    compute_flow,
    gamma_matrix,
    geometric_potential,
    theta_phase,
    track_frames,
)
from _runs import closed_form

# independent high-precision values for eta=1, xi=0.1
GAMMA_ABS = 0.099503719021
DELTA_UP_DOWN = 1.99007438042
THETA_DOT = -0.0199007438
OMEGA = 1.00498756211


@pytest.fixture(scope="module")
def resonance():
    return analyze(SpinHalfModel.build(1.0, 0.1, 20.0), TimeGrid.uniform(20.0, 4096))


@pytest.fixture(scope="module")
def sinusoidal():
    model = SpinHalfModel.build(1.0, Schedule.sinusoidal(0.6, 0.3, 0.5, 0.1), 20.0)
    return analyze(model, TimeGrid.uniform(20.0, 4096))


def test_levels_constant(resonance):
    np.testing.assert_allclose(resonance.frames.values, np.array([-OMEGA, OMEGA])[None, :].repeat(4097, 0), atol=1e-12)


def test_frozen_coupling_and_potential(resonance):
    flow = resonance.flow
    np.testing.assert_allclose(np.abs(flow.gamma[:, 0, 1]), GAMMA_ABS, rtol=1e-9)
    np.testing.assert_allclose(geometric_potential(flow, (1, 0)), DELTA_UP_DOWN, rtol=1e-9)
    np.testing.assert_allclose(flow.theta_dot(0, 1), THETA_DOT, rtol=1e-7)


def test_theta_anchor_is_arg_gamma(resonance):
    flow = resonance.flow
    assert theta_phase(flow, (0, 1))[0] == pytest.approx(np.angle(flow.gamma[0, 0, 1]), abs=1e-12)


def test_gamma_hermitian(sinusoidal):
    G = sinusoidal.flow.gamma
    assert np.max(np.abs(G - np.conj(np.swapaxes(G, 1, 2)))) <= 1e-8


def test_routes_cross_check(sinusoidal):
    G_diff, used, _ = gamma_matrix(sinusoidal.frames, method="differenced")
    G_pert, _, _ = gamma_matrix(sinusoidal.frames, sinusoidal.model, method="perturbative")
    assert used == "differenced"
    assert np.max(np.abs(G_diff - G_pert)) <= 1e-6


def test_theta_identity(sinusoidal):
    flow = sinusoidal.flow
    th = flow.theta[:, 0, 1]
    diff = derivative(th, flow.tau)
    assert np.max(np.abs(diff[2:-2] - flow.theta_dot(0, 1)[2:-2])) <= 1e-4


def test_eigenvector_rotation_tracks_mixing_angle():
    model = SpinHalfModel.build(1.0, Schedule.linear(0.0, 0.1), 10.0)
    a = analyze(model, TimeGrid.uniform(10.0, 1024))
    cf = closed_form(1.0, Schedule.linear(0.0, 0.1), 10.0)
    # upper level, lab frame rotated back by exp(i eta tau sz)
    v0 = a.frames.vectors[0, :, 1]
    vT = a.frames.vectors[-1, :, 1]
    Rz = np.diag(np.exp(1j * np.array([1.0, -1.0]) * 10.0))
    overlap = abs(np.vdot(v0, Rz @ vT))
    assert overlap == pytest.approx(np.cos(0.5 * cf.mixing_angle(10.0)), abs=1e-10)


def test_orbit_matches_closed_form(resonance):
    orbit = adiabatic_orbit(resonance.frames, resonance.flow, 1)
    cf = closed_form(1.0, 0.1, 20.0)
    ref = spinhalf_adiabatic_state(cf, 1, resonance.frames.tau)
    ref = ref * np.conj(np.vdot(ref[0], orbit[0]) / abs(np.vdot(ref[0], orbit[0])))
    fid = np.abs(np.einsum("ki,ki->k", np.conj(ref), orbit)) ** 2
    assert np.min(fid) >= 1 - 1e-6
    # same phase convention too
    assert np.max(np.linalg.norm(orbit - ref, axis=1)) <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_gauge_invariance(sinusoidal, seed):
    rng = np.random.default_rng(seed)
    tau = sinusoidal.frames.tau
    amp = rng.uniform(-2, 2, size=(3, 2))
    freq = rng.uniform(0.05, 1.0, size=(3, 2))
    f = sum(amp[j] * np.sin(freq[j] * tau[:, None]) for j in range(3))
    frames = sinusoidal.frames.regauge(f)
    flow = compute_flow(frames, sinusoidal.model)
    live = np.isfinite(flow.delta) & np.isfinite(sinusoidal.flow.delta)
    assert np.count_nonzero(live) == 2 * len(tau)
    assert np.max(np.abs(flow.delta[live] - sinusoidal.flow.delta[live])) <= 1e-6
    for m in range(2):
        a = adiabatic_orbit(sinusoidal.frames, sinusoidal.flow, m)
        b = adiabatic_orbit(frames, flow, m)
        assert np.max(np.linalg.norm(a - b, axis=1)) <= 1e-8


def test_real_symmetric_has_no_geometric_potential():
    model = LandauZenerModel(0.5, 1.0, 5.0, 10.0)
    a = analyze(model, TimeGrid.uniform(10.0, 2048))
    assert np.max(np.abs(np.real(np.diagonal(a.flow.gamma, axis1=1, axis2=2)))) <= 1e-8
    assert np.max(np.abs(a.flow.delta[:, 0, 1])) <= 1e-8


def test_static_model_fully_masked():
    model = StaticModel(np.array([[1.0, 0.4j], [-0.4j, -1.0]]), horizon=5.0)
    a = analyze(model, TimeGrid.uniform(5.0, 64))
    assert np.all(a.flow.gamma == 0) or np.max(np.abs(a.flow.gamma)) <= 1e-12
    assert a.flow.fully_masked(0, 1)
    assert np.all(np.isnan(geometric_potential(a.flow, (1, 0))))
    with pytest.raises(MaskedInterval):
        theta_phase(a.flow, (0, 1), strict=True)
    np.testing.assert_allclose(a.frames.vectors, a.frames.vectors[:1].repeat(65, 0), atol=1e-15)


def test_static_orbit_is_stationary():
    H = np.array([[0.3, 0.2], [0.2, -0.7]])
    model = StaticModel(H, horizon=4.0)
    a = analyze(model, TimeGrid.uniform(4.0, 32))
    orbit = adiabatic_orbit(a.frames, a.flow, 0)
    e0 = a.frames.values[0, 0]
    expected = np.exp(-1j * e0 * a.frames.tau)[:, None] * a.frames.vectors[0, :, 0]
    np.testing.assert_allclose(orbit, expected, atol=1e-13)


def test_degenerate_crossing_raises():
    model = FunctionModel(lambda t: (t - 1.0)[..., None, None] * SIGMA_Z, 2, horizon=2.0)
    with pytest.raises(DegenerateCrossing) as info:
        track_frames(model, TimeGrid.uniform(2.0, 16))
    assert info.value.tau == pytest.approx(1.0)


def test_no_coupling_no_frame_motion():
    model = FunctionModel(lambda t: (2.0 + np.sin(t))[..., None, None] * SIGMA_Z + 0.0 * SIGMA_X, 2, horizon=6.0)
    a = analyze(model, TimeGrid.uniform(6.0, 256))
    assert np.max(np.abs(a.flow.gamma[:, 0, 1])) <= 1e-10
