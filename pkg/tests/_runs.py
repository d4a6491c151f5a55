"""Cached reference runs shared across test modules."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from adiacheck.dynamics import (
    build_m_series,
    integrate_coefficients,
    integrate_schrodinger,
    project_onto_adiabatic,
    survival_probability,
)
from adiacheck.grid import TimeGrid
from adiacheck.models import LandauZenerModel, SpinHalfModel
from adiacheck.oracles import SpinHalfClosedForm, initial_state
from adiacheck.spectral import adiabatic_orbits, analyze

RESONANCE_T = np.pi / (2 * 0.1)


@dataclass(frozen=True)
class Run:
    analysis: object
    traj: object
    projected: object
    survival: np.ndarray
    wall_time: float

    @property
    def grid(self):
        return self.analysis.grid

    @property
    def flow(self):
        return self.analysis.flow


def run_model(model, grid, level, psi0=None):
    import time

    analysis = analyze(model, grid)
    if psi0 is None:
        psi0 = analysis.frames.vectors[0, :, level]
    start = time.perf_counter()
    traj = integrate_schrodinger(model, psi0, grid)
    wall = time.perf_counter() - start
    c = project_onto_adiabatic(traj, adiabatic_orbits(analysis.frames, analysis.flow), level)
    return Run(analysis, traj, c, survival_probability(c), wall)


@lru_cache(maxsize=None)
def spin_run(eta, xi, t_max, steps=4096, level=1):
    model = SpinHalfModel.build(eta, xi, t_max)
    cf = SpinHalfClosedForm(model.params)
    psi0 = initial_state(cf, 1 if level == 1 else -1)
    return run_model(model, TimeGrid.uniform(t_max, steps), level, psi0)


@lru_cache(maxsize=None)
def lz_run(rate, coupling, t_max, steps=8192):
    model = LandauZenerModel(rate, coupling, 0.5 * t_max, t_max)
    return run_model(model, TimeGrid.uniform(t_max, steps), 0)


def ode_route(run):
    return integrate_coefficients(build_m_series(run.flow), run.projected.initial_level)


def closed_form(eta, xi, t_max):
    return SpinHalfClosedForm(SpinHalfModel.build(eta, xi, t_max).params)
