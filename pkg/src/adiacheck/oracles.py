"""Closed-form solutions of the rotating-field spin-half model.

Level labels: ``sign=+1`` is the upper level (index 1 after ascending sort),
``sign=-1`` the lower one (index 0).
"""
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, pauli_exp
from .models import SpinHalfParams

REGIMES = ("xi_dominant", "eta_dominant_small_area", "neither")
# relative slack on regime boundaries, covers quadrature round-off only
BOUNDARY_SLACK = 1e-9


def level_index(sign):
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return 1 if sign > 0 else 0


def _basis(sign):
    level_index(sign)
    return np.array([1.0, 0.0], dtype=np.complex128) if sign > 0 else np.array([0.0, 1.0], dtype=np.complex128)


@dataclass(frozen=True)
class SpinHalfClosedForm:
    params: SpinHalfParams

    @property
    def eta(self):
        return self.params.eta

    def xi(self, tau):
        return self.params.xi.value(tau)

    def area(self, tau):
        return self.params.xi.integral(tau)

    def delta(self, tau):
        return -self.area(tau)

    def omega(self, tau):
        return np.sqrt(self.xi(tau) ** 2 + self.eta**2)

    def mixing_angle(self, tau):
        """theta(tau) with cos theta = eta / Omega."""
        return np.arctan2(self.xi(tau), self.eta)

    def _check(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < 0) or np.any(tau > self.params.horizon * (1 + 1e-12)):
            raise ValueError(f"tau outside [0, {self.params.horizon}]")
        return tau


def initial_state(cf, sign):
    """exp(-i sy theta(0)/2) |+-e_z>, the eigenvector of h(0) with eigenvalue +-Omega(0)."""
    return pauli_exp(0.5 * cf.mixing_angle(0.0), SIGMA_Y) @ _basis(sign)


def spinhalf_exact_state(cf, sign, tau):
    """exp(-i sz eta tau) exp(-i sx A(tau)) |+-,0>."""
    tau = cf._check(tau)
    U = pauli_exp(cf.eta * tau, SIGMA_Z) @ pauli_exp(cf.area(tau), SIGMA_X)
    return U @ initial_state(cf, sign)


def spinhalf_adiabatic_state(cf, sign, tau):
    """exp(-i eta tau sz) exp(-i theta(tau) sy / 2) exp(-i sz int (Omega - eta^2/Omega)) |+-e_z>."""
    tau = cf._check(tau)
    scalar = tau.ndim == 0
    tau = np.atleast_1d(tau)
    # int (Omega - eta^2/Omega) = int xi^2/Omega
    phase = np.array([_xi2_over_omega_integral(cf, t) for t in tau])
    rz = pauli_exp(cf.eta * tau, SIGMA_Z)
    ry = pauli_exp(0.5 * cf.mixing_angle(tau), SIGMA_Y)
    dyn = pauli_exp(phase, SIGMA_Z)
    out = rz @ ry @ dyn @ _basis(sign)
    return out[0] if scalar else out


def _xi2_over_omega_integral(cf, t):
    if t == 0.0:
        return 0.0
    if cf.params.xi.kind == "constant":
        x = cf.params.xi.params["value"]
        return x * x / np.sqrt(x * x + cf.eta**2) * t
    val, _ = integrate.quad(lambda s: cf.xi(s) ** 2 / np.sqrt(cf.xi(s) ** 2 + cf.eta**2), 0.0, t, epsabs=1e-13, epsrel=1e-13, limit=500)
    return val


def spinhalf_survival(cf, tau):
    """P = 1/2 + 1/2 (xi(0) xi(tau) + eta^2 cos 2 delta) / (Omega(0) Omega(tau))."""
    tau = cf._check(tau)
    xi0, om0 = cf.xi(0.0), cf.omega(0.0)
    return 0.5 + 0.5 * (xi0 * cf.xi(tau) + cf.eta**2 * np.cos(2.0 * cf.delta(tau))) / (om0 * cf.omega(tau))


def spinhalf_transition(cf, tau):
    """1 - P written without cancellation: [(Omega0 Omega - xi0 xi) + 2 eta^2 sin^2 delta] / (2 Omega0 Omega)."""
    tau = cf._check(tau)
    xi0, om0 = cf.xi(0.0), cf.omega(0.0)
    xi, om = cf.xi(tau), cf.omega(tau)
    # Omega0 Omega - xi0 xi - eta^2 = ((Omega0 Omega)^2 - (xi0 xi + eta^2)^2) / (Omega0 Omega + xi0 xi + eta^2)
    num = (om0 * om) ** 2 - (xi0 * xi + cf.eta**2) ** 2
    geom = num / (om0 * om + xi0 * xi + cf.eta**2)
    return (geom + 2.0 * cf.eta**2 * np.sin(cf.delta(tau)) ** 2) / (2.0 * om0 * om)


def regime_classify(cf, window=None, threshold=10.0):
    """Which sufficient regime, if any, holds over ``window`` = (t0, t1).

    xi_dominant: min xi/eta >= threshold.
    eta_dominant_small_area: min eta/xi >= threshold and int xi <= 1/threshold.
    Boundaries are inclusive.
    """
    t0, t1 = (0.0, cf.params.horizon) if window is None else window
    tau = np.linspace(t0, t1, 4097)
    xi = cf.xi(tau)
    slack = 1.0 - BOUNDARY_SLACK
    if np.min(xi) / cf.eta >= threshold * slack:
        return "xi_dominant"
    area = float(cf.area(t1) - cf.area(t0))
    xi_max = float(np.max(xi))
    eta_ratio = np.inf if xi_max == 0.0 else cf.eta / xi_max
    if eta_ratio >= threshold * slack and area <= (1.0 / threshold) / slack:
        return "eta_dominant_small_area"
    return "neither"
