"""Time-dependent Hamiltonians.

Every model evaluates vectorised over tau: ``h(tau)`` with tau of shape
``(K,)`` returns a ``(K, dim, dim)`` stack, a scalar tau returns one matrix.
"""
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import MissingPropagator, QuadratureFailure, ScheduleDomainError
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, eigh, pauli_exp

QUAD_TOL = 1e-12
SCHEDULE_KINDS = ("constant", "linear", "sinusoidal", "tabulated")


@dataclass(frozen=True, eq=False)
class Schedule:
    """A scalar drive xi(tau) with its derivative and running integral.

    Parameters per kind:

    - constant: ``value``
    - linear: ``start + slope * tau``
    - sinusoidal: ``offset + amplitude * sin(frequency * tau + phase)``
    - tabulated: ``tau``/``values`` arrays, C2 cubic-spline interpolated.
      At least 4 points; evaluation outside the table raises.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        p = dict(self.params)
        if self.kind == "tabulated":
            t = np.asarray(p["tau"], dtype=float)
            v = np.asarray(p["values"], dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 4:
                raise ValueError("tabulated schedule needs matching 1-d tau/values with at least 4 points")
            if np.any(np.diff(t) <= 0):
                raise ValueError("tabulated schedule grid must be strictly increasing")
            spline = CubicSpline(t, v)
            object.__setattr__(self, "_spline", spline)
            object.__setattr__(self, "_dspline", spline.derivative())
            object.__setattr__(self, "_ispline", spline.antiderivative())
        else:
            required = {
                "constant": ("value",),
                "linear": ("start", "slope"),
                "sinusoidal": ("offset", "amplitude", "frequency"),
            }[self.kind]
            missing = [k for k in required if k not in p]
            if missing:
                raise ValueError(f"{self.kind} schedule missing parameters {missing}")
            p.setdefault("phase", 0.0)
            for k in p:
                p[k] = float(p[k])
                if not np.isfinite(p[k]):
                    raise ValueError(f"schedule parameter {k} must be finite")
        object.__setattr__(self, "params", p)

    @classmethod
    def constant(cls, value):
        return cls("constant", {"value": value})

    @classmethod
    def linear(cls, start, slope):
        return cls("linear", {"start": start, "slope": slope})

    @classmethod
    def sinusoidal(cls, offset, amplitude, frequency, phase=0.0):
        return cls("sinusoidal", {"offset": offset, "amplitude": amplitude, "frequency": frequency, "phase": phase})

    @classmethod
    def tabulated(cls, tau, values):
        return cls("tabulated", {"tau": list(map(float, tau)), "values": list(map(float, values))})

    @property
    def domain(self):
        if self.kind == "tabulated":
            return float(self.params["tau"][0]), float(self.params["tau"][-1])
        return -np.inf, np.inf

    def _check(self, tau):
        tau = np.asarray(tau, dtype=float)
        lo, hi = self.domain
        eps = 1e-12 * max(1.0, abs(hi) if np.isfinite(hi) else 1.0)
        if np.any(tau < lo - eps) or np.any(tau > hi + eps):
            raise ScheduleDomainError(f"tau outside tabulated schedule range [{lo}, {hi}]")
        return np.clip(tau, lo, hi) if self.kind == "tabulated" else tau

    def value(self, tau):
        tau = self._check(tau)
        p = self.params
        if self.kind == "constant":
            return np.full_like(tau, p["value"])
        if self.kind == "linear":
            return p["start"] + p["slope"] * tau
        if self.kind == "sinusoidal":
            return p["offset"] + p["amplitude"] * np.sin(p["frequency"] * tau + p["phase"])
        return self._spline(tau)

    def derivative(self, tau):
        tau = self._check(tau)
        p = self.params
        if self.kind == "constant":
            return np.zeros_like(tau)
        if self.kind == "linear":
            return np.full_like(tau, p["slope"])
        if self.kind == "sinusoidal":
            return p["amplitude"] * p["frequency"] * np.cos(p["frequency"] * tau + p["phase"])
        return self._dspline(tau)

    def integral(self, tau):
        """Closed-form running integral from 0 to tau."""
        tau = self._check(tau)
        p = self.params
        if self.kind == "constant":
            return p["value"] * tau
        if self.kind == "linear":
            return p["start"] * tau + 0.5 * p["slope"] * tau**2
        if self.kind == "sinusoidal":
            w, ph = p["frequency"], p["phase"]
            if w == 0.0:
                return (p["offset"] + p["amplitude"] * np.sin(ph)) * tau
            return p["offset"] * tau + p["amplitude"] * (np.cos(ph) - np.cos(w * tau + ph)) / w
        self._check(0.0)
        return self._ispline(tau) - self._ispline(0.0)

    def to_dict(self):
        return {"kind": self.kind, **self.params}


def quad_integral(schedule, tau, tol=QUAD_TOL):
    """Adaptive quadrature of xi over [0, tau] (independent of ``Schedule.integral``)."""
    tau = np.asarray(tau, dtype=float)
    out = np.empty(tau.shape)
    for idx, t in np.ndenumerate(tau):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(schedule.value, 0.0, float(t), epsabs=tol, epsrel=0.0, limit=500)
        if not err <= tol:
            raise QuadratureFailure(f"integral of xi over [0, {t}] did not reach tolerance {tol} (estimate {err:.2e})")
        out[idx] = val
    return out[()] if out.ndim == 0 else out


class HamiltonianModel(ABC):
    """Contract for a dim x dim Hermitian h(tau).

    Subclasses may also supply ``hdot`` (set ``has_hdot``) and the exact
    propagator U(tau), Udot(tau) (set ``has_propagator``).
    """

    dim = 2
    horizon = np.inf
    has_hdot = False
    has_propagator = False

    @abstractmethod
    def h(self, tau):
        ...

    def hdot(self, tau):
        raise NotImplementedError(f"{type(self).__name__} has no analytic hdot")

    def propagator(self, tau):
        raise MissingPropagator(f"{type(self).__name__} exposes no propagator")

    def _tau(self, tau):
        tau = np.asarray(tau, dtype=float)
        eps = 1e-9 * max(1.0, self.horizon if np.isfinite(self.horizon) else 1.0)
        if np.any(tau < -eps) or np.any(tau > self.horizon + eps):
            raise ScheduleDomainError(f"tau outside model horizon [0, {self.horizon}]")
        return tau


@dataclass(frozen=True)
class SpinHalfParams:
    """Spin-half in a field rotating about z at angular rate 2*eta."""

    eta: float
    xi: Schedule
    horizon: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be > 0")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        lo, hi = self.xi.domain
        if lo > 0.0 or hi < self.horizon:
            raise ScheduleDomainError(f"xi schedule covers [{lo}, {hi}], horizon needs [0, {self.horizon}]")
        probe = np.linspace(0.0, self.horizon, 4097)
        if np.min(self.xi.value(probe)) < 0.0:
            raise ValueError("xi(tau) must be non-negative on the horizon")


def spin_half_h(p, tau):
    """h = eta sz + xi (sx cos 2 eta tau + sy sin 2 eta tau)."""
    tau = np.asarray(tau, dtype=float)
    xi = p.xi.value(tau)[..., None, None]
    ang = (2.0 * p.eta * tau)[..., None, None]
    return p.eta * SIGMA_Z + xi * (SIGMA_X * np.cos(ang) + SIGMA_Y * np.sin(ang))


def spin_half_hdot(p, tau):
    tau = np.asarray(tau, dtype=float)
    xi = p.xi.value(tau)[..., None, None]
    dxi = p.xi.derivative(tau)[..., None, None]
    ang = (2.0 * p.eta * tau)[..., None, None]
    c, s = np.cos(ang), np.sin(ang)
    return dxi * (SIGMA_X * c + SIGMA_Y * s) + 2.0 * p.eta * xi * (-SIGMA_X * s + SIGMA_Y * c)


def spin_half_propagator(p, tau):
    """U = exp(-i sz eta tau) exp(-i sx A(tau)) with A the running integral of xi, and its derivative."""
    tau = np.asarray(tau, dtype=float)
    area = p.xi.integral(tau)
    Rz = pauli_exp(p.eta * tau, SIGMA_Z)
    Rx = pauli_exp(area, SIGMA_X)
    U = Rz @ Rx
    xi = p.xi.value(tau)[..., None, None]
    Udot = -1j * p.eta * (SIGMA_Z @ U) + Rz @ (-1j * xi * SIGMA_X) @ Rx
    return U, Udot


class SpinHalfModel(HamiltonianModel):
    has_hdot = True
    has_propagator = True

    def __init__(self, params):
        self.params = params
        self.horizon = float(params.horizon)

    @classmethod
    def build(cls, eta, xi, horizon):
        if not isinstance(xi, Schedule):
            xi = Schedule.constant(xi)
        return cls(SpinHalfParams(float(eta), xi, float(horizon)))

    def h(self, tau):
        return spin_half_h(self.params, self._tau(tau))

    def hdot(self, tau):
        return spin_half_hdot(self.params, self._tau(tau))

    def propagator(self, tau):
        return spin_half_propagator(self.params, self._tau(tau))

    def __repr__(self):
        return f"SpinHalfModel(eta={self.params.eta}, xi={self.params.xi.to_dict()}, horizon={self.horizon})"


class LandauZenerModel(HamiltonianModel):
    """h = sweep_rate (tau - center) sz + coupling sx.

    The adiabatic survival after a full sweep is 1 - exp(-pi coupling^2 / sweep_rate).
    """

    has_hdot = True

    def __init__(self, sweep_rate, coupling, center, horizon):
        if not coupling > 0:
            raise ValueError("coupling must be > 0 (no exact crossing)")
        self.sweep_rate = float(sweep_rate)
        self.coupling = float(coupling)
        self.center = float(center)
        self.horizon = float(horizon)

    def h(self, tau):
        tau = self._tau(tau)[..., None, None]
        return self.sweep_rate * (tau - self.center) * SIGMA_Z + self.coupling * SIGMA_X

    def hdot(self, tau):
        tau = self._tau(tau)
        return np.broadcast_to(self.sweep_rate * SIGMA_Z, tau.shape + (2, 2)).copy()

    def diabatic_survival(self):
        return 1.0 - np.exp(-np.pi * self.coupling**2 / abs(self.sweep_rate))


class StaticModel(HamiltonianModel):
    """Time-independent H; propagator exp(-i H tau)."""

    has_hdot = True
    has_propagator = True

    def __init__(self, H, horizon=np.inf):
        H = np.asarray(H, dtype=np.complex128)
        eigh(H)  # validates Hermiticity
        self.H = H
        self.dim = H.shape[0]
        self.horizon = float(horizon)
        self._dec = eigh(H)

    def h(self, tau):
        tau = self._tau(tau)
        return np.broadcast_to(self.H, tau.shape + self.H.shape).copy()

    def hdot(self, tau):
        tau = self._tau(tau)
        return np.zeros(tau.shape + self.H.shape, dtype=np.complex128)

    def propagator(self, tau):
        tau = self._tau(tau)
        V, w = self._dec.vectors, self._dec.values
        U = (V * np.exp(-1j * w * tau[..., None])[..., None, :]) @ np.conj(V.T)
        return U, -1j * self.H @ U


class FunctionModel(HamiltonianModel):
    """Wrap user callables ``h(tau)`` (and optionally ``hdot(tau)``) taking array tau."""

    def __init__(self, h, dim, hdot=None, horizon=np.inf):
        self._h = h
        self._hdot = hdot
        self.dim = int(dim)
        self.horizon = float(horizon)
        self.has_hdot = hdot is not None

    def h(self, tau):
        return np.asarray(self._h(self._tau(tau)), dtype=np.complex128)

    def hdot(self, tau):
        if self._hdot is None:
            return super().hdot(tau)
        return np.asarray(self._hdot(self._tau(tau)), dtype=np.complex128)


def dual_h(base, tau):
    """h_b = i Udot^dagger U built from the base model's propagator."""
    if not base.has_propagator:
        raise MissingPropagator(f"{type(base).__name__} exposes no propagator; cannot build its dual")
    U, Udot = base.propagator(tau)
    return 1j * np.conj(np.swapaxes(Udot, -1, -2)) @ U


class DualModel(HamiltonianModel):
    """Companion system h_b = i Udot^dagger U = -U^dagger h_a U.

    Its eigenvalues are those of the base with the sign flipped, and its
    eigenvectors are U^dagger applied to the base eigenvectors.
    """

    has_propagator = False

    def __init__(self, base):
        if not base.has_propagator:
            raise MissingPropagator(f"{type(base).__name__} exposes no propagator; cannot build its dual")
        self.base = base
        self.dim = base.dim
        self.horizon = base.horizon
        self.has_hdot = base.has_hdot

    def h(self, tau):
        return dual_h(self.base, self._tau(tau))

    def hdot(self, tau):
        # d/dtau of -U^dagger h_a U
        if not self.base.has_hdot:
            return super().hdot(tau)
        tau = self._tau(tau)
        U, Udot = self.base.propagator(tau)
        Ud = np.conj(np.swapaxes(U, -1, -2))
        Udotd = np.conj(np.swapaxes(Udot, -1, -2))
        ha = self.base.h(tau)
        hadot = self.base.hdot(tau)
        return -(Udotd @ ha @ U + Ud @ hadot @ U + Ud @ ha @ Udot)
