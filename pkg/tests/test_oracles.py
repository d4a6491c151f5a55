import numpy as np
import pytest
from hypothesis import given, strategies as st

from adiacheck.models import Schedule, SpinHalfModel
from adiacheck.oracles import (
    SpinHalfClosedForm,
    initial_state,
    regime_classify,
    spinhalf_adiabatic_state,
    spinhalf_exact_state,
    spinhalf_survival,
    spinhalf_transition,
)
from _runs import RESONANCE_T, spin_run

SCHEDULES = [
    Schedule.constant(0.1),
    Schedule.linear(0.05, 0.02),
    Schedule.sinusoidal(0.5, 0.3, 0.4, 0.3),
]


def cf_for(eta, xi, horizon):
    return SpinHalfClosedForm(SpinHalfModel.build(eta, xi, horizon).params)


@pytest.mark.parametrize("xi", SCHEDULES, ids=lambda s: s.kind)
@pytest.mark.parametrize("sign", [1, -1])
def test_exact_state_solves_schrodinger(xi, sign):
    cf = cf_for(1.0, xi, 30.0)
    model = SpinHalfModel(cf.params)
    tau = np.linspace(0.5, 29.5, 100)
    h = 1e-5
    dpsi = (spinhalf_exact_state(cf, sign, tau + h) - spinhalf_exact_state(cf, sign, tau - h)) / (2 * h)
    rhs = -1j * np.einsum("kij,kj->ki", model.h(tau), spinhalf_exact_state(cf, sign, tau))
    assert np.max(np.abs(dpsi - rhs)) <= 1e-6


@pytest.mark.parametrize("xi", SCHEDULES, ids=lambda s: s.kind)
def test_closed_forms_consistent(xi):
    cf = cf_for(1.0, xi, 30.0)
    tau = np.linspace(0.0, 30.0, 61)
    exact = spinhalf_exact_state(cf, 1, tau)
    adia = spinhalf_adiabatic_state(cf, 1, tau)
    overlap = np.abs(np.einsum("ki,ki->k", np.conj(adia), exact)) ** 2
    np.testing.assert_allclose(overlap, spinhalf_survival(cf, tau), atol=1e-10)
    np.testing.assert_allclose(spinhalf_transition(cf, tau), 1.0 - spinhalf_survival(cf, tau), atol=1e-12)


def test_initial_state_is_eigenvector():
    cf = cf_for(1.0, 0.1, 5.0)
    H = SpinHalfModel(cf.params).h(0.0)
    for sign in (1, -1):
        psi = initial_state(cf, sign)
        np.testing.assert_allclose(H @ psi, sign * np.sqrt(1.01) * psi, atol=1e-14)
        np.testing.assert_allclose(spinhalf_exact_state(cf, sign, 0.0), psi, atol=1e-15)
        np.testing.assert_allclose(spinhalf_adiabatic_state(cf, sign, 0.0), psi, atol=1e-15)


def test_vanishing_field_is_stationary():
    cf = cf_for(1.0, 0.0, 5.0)
    tau = np.linspace(0, 5, 11)
    up = np.exp(-1j * tau)[:, None] * np.array([1.0, 0.0])
    np.testing.assert_allclose(spinhalf_exact_state(cf, 1, tau), up, atol=1e-14)
    np.testing.assert_allclose(spinhalf_adiabatic_state(cf, 1, tau), up, atol=1e-14)


def test_survival_examples():
    assert spinhalf_survival(cf_for(1.0, 0.1, 20.0), 0.0) == pytest.approx(1.0, abs=1e-15)
    assert spinhalf_survival(cf_for(1.0, 0.1, 20.0), RESONANCE_T) == pytest.approx(0.00990099009901, abs=1e-12)
    weak = spinhalf_survival(cf_for(1.0, 0.001, 100.0), 100.0)
    assert weak == pytest.approx(0.990033298887, abs=1e-11)
    assert abs(weak - np.cos(0.1) ** 2) <= 1e-5


def test_brute_force_agrees_at_resonance():
    assert spin_run(1.0, 0.1, RESONANCE_T).survival[-1] == pytest.approx(0.00990099009901, abs=1e-6)


def test_numeric_state_at_tau_five():
    run = spin_run(1.0, 0.1, RESONANCE_T)
    k = int(np.argmin(np.abs(run.grid.points - 5.0)))
    ref = spinhalf_exact_state(cf_for(1.0, 0.1, RESONANCE_T), 1, run.grid.points[k])
    assert abs(np.vdot(ref, run.traj.states[k])) ** 2 >= 1 - 1e-8


def test_regime_examples():
    assert regime_classify(cf_for(0.01, 1.0, 100.0)) == "xi_dominant"
    assert regime_classify(cf_for(1.0, 0.001, 100.0)) == "eta_dominant_small_area"
    assert regime_classify(cf_for(1.0, 0.1, 100.0)) == "neither"
    assert regime_classify(cf_for(1.0, 1.0, 100.0)) == "neither"
    # just past the area boundary
    assert regime_classify(cf_for(1.0, 0.001, 101.0)) == "neither"
    assert regime_classify(cf_for(1.0, 0.001, 101.0), window=(0.0, 100.0)) == "eta_dominant_small_area"


def test_regime_threshold_shared():
    cf = cf_for(0.05, 1.0, 10.0)
    assert regime_classify(cf, threshold=10) == "xi_dominant"
    assert regime_classify(cf, threshold=50) == "neither"


@given(eta=st.floats(0.01, 0.1), xi=st.floats(1.0, 5.0), t=st.floats(1.0, 50.0))
def test_xi_dominant_survival_floor(eta, xi, t):
    cf = cf_for(eta, xi, t)
    if regime_classify(cf) != "xi_dominant":
        return
    tau = np.linspace(0.0, t, 2001)
    bound = 1.0 - 2.0 * eta**2 / np.min(cf.omega(tau)) ** 2
    assert np.min(spinhalf_survival(cf, tau)) >= bound


def test_sign_validation():
    with pytest.raises(ValueError):
        initial_state(cf_for(1.0, 0.1, 1.0), 0)


def test_outside_horizon():
    with pytest.raises(ValueError):
        spinhalf_survival(cf_for(1.0, 0.1, 1.0), 2.0)
