"""Schrodinger propagation and the adiabatic-expansion coefficients."""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import GridMismatch, NoConvergence, StepTooCoarse
from .grid import TimeGrid, cumulative_integral
from .linalg import expm_hermitian

REFINE_TOL = 1e-9
MAX_DEPTH = 20
METHODS = ("cfm4", "midpoint", "rk4")
# fourth-order commutator-free exponential (two Gauss nodes)
_C1 = 0.5 - np.sqrt(3.0) / 6.0
_C2 = 0.5 + np.sqrt(3.0) / 6.0
_A1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_A2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0
_SUBSTEP_CHUNK = 1 << 16
PHASE_STEP_LIMIT = np.pi / 4


@dataclass(frozen=True)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray
    method: str = "cfm4"
    depth: int = 0
    refinement_delta: float = 0.0

    @property
    def norms(self):
        return np.linalg.norm(self.states, axis=1)


@dataclass(frozen=True)
class CoefficientSeries:
    grid: TimeGrid
    c: np.ndarray
    initial_level: int

    @property
    def populations(self):
        return np.abs(self.c) ** 2


@dataclass(frozen=True)
class MMatrixSeries:
    """M_nm = |gamma_nm| exp(i theta_nm) with zero diagonal.

    Stored as amplitude and unwrapped phase so that the coefficient ODE can
    interpolate two smooth series instead of a fast-rotating complex one.
    Masked pairs carry zero amplitude.
    """

    grid: TimeGrid
    amplitude: np.ndarray
    phase: np.ndarray

    @property
    def M(self):
        return self.amplitude * np.exp(1j * self.phase)


def _interval_propagators(model, t0, dt, method):
    """Exact-unitary single-substep propagators for substeps starting at t0."""
    if method == "midpoint":
        H = model.h(t0 + 0.5 * dt)
        return expm_hermitian(H, dt)
    H1 = model.h(t0 + _C1 * dt)
    H2 = model.h(t0 + _C2 * dt)
    first = expm_hermitian(_A2 * H1 + _A1 * H2, dt)
    second = expm_hermitian(_A1 * H1 + _A2 * H2, dt)
    return second @ first


def _compose(U):
    """Product U[:, s-1] ... U[:, 0] along axis 1 (s a power of two)."""
    while U.shape[1] > 1:
        U = U[:, 1::2] @ U[:, 0::2]
    return U[:, 0]


def _propagate_exponential(model, psi0, tau, subdiv, method):
    K = tau.size
    N = psi0.size
    states = np.empty((K, N), dtype=np.complex128)
    states[0] = psi0
    frac = np.arange(subdiv) / subdiv
    per_chunk = max(1, _SUBSTEP_CHUNK // subdiv)
    psi = psi0
    for start in range(0, K - 1, per_chunk):
        stop = min(K - 1, start + per_chunk)
        width = np.diff(tau[start:stop + 1])
        t0 = tau[start:stop, None] + width[:, None] * frac[None, :]
        dt = np.broadcast_to((width / subdiv)[:, None], t0.shape)
        U = _interval_propagators(model, t0.ravel(), dt.ravel(), method)
        P = _compose(U.reshape(stop - start, subdiv, N, N))
        for j in range(stop - start):
            psi = P[j] @ psi
            states[start + j + 1] = psi
    return states


def _propagate_rk4(model, psi0, tau, subdiv):
    K = tau.size
    states = np.empty((K, psi0.size), dtype=np.complex128)
    states[0] = psi0
    psi = psi0.astype(np.complex128)
    for k in range(K - 1):
        h = (tau[k + 1] - tau[k]) / subdiv
        ts = tau[k] + h * np.arange(subdiv)
        Ha = model.h(ts)
        Hb = model.h(ts + 0.5 * h)
        Hc = model.h(ts + h)
        for j in range(subdiv):
            k1 = -1j * Ha[j] @ psi
            k2 = -1j * Hb[j] @ (psi + 0.5 * h * k1)
            k3 = -1j * Hb[j] @ (psi + 0.5 * h * k2)
            k4 = -1j * Hc[j] @ (psi + h * k3)
            psi = psi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        states[k + 1] = psi
    return states


def propagate_at_depth(model, psi0, grid, depth, method="cfm4"):
    """States on ``grid`` with every interval split into 2**depth substeps."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    psi0 = np.asarray(psi0, dtype=np.complex128)
    subdiv = 1 << depth
    if method == "rk4":
        return _propagate_rk4(model, psi0, grid.points, subdiv)
    return _propagate_exponential(model, psi0, grid.points, subdiv, method)


def integrate_schrodinger(model, psi0, grid, method="cfm4", tol=REFINE_TOL, max_depth=MAX_DEPTH, start_depth=0):
    """Solve i psi' = h(tau) psi on ``grid`` by unitary exponential stepping.

    Substeps are halved until two successive refinements differ by at most
    ``tol`` (max state distance over the grid points). ``method`` is
    "cfm4" (fourth-order commutator-free exponential, default), "midpoint"
    (exponential midpoint) or "rk4" (non-unitary cross-check).
    """
    psi0 = np.asarray(psi0, dtype=np.complex128)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"initial state must be normalised (|psi0| = {norm:.12g})")
    if psi0.shape != (model.dim,):
        raise ValueError(f"initial state has shape {psi0.shape}, model dim is {model.dim}")
    prev = propagate_at_depth(model, psi0, grid, start_depth, method)
    delta = np.inf
    for depth in range(start_depth + 1, max_depth + 1):
        cur = propagate_at_depth(model, psi0, grid, depth, method)
        delta = float(np.max(np.linalg.norm(cur - prev, axis=1)))
        if delta <= tol:
            return Trajectory(grid=grid, states=cur, method=method, depth=depth, refinement_delta=delta)
        prev = cur
    raise NoConvergence(f"state refinement stalled at {delta:.3e} > {tol:.1e} after depth {max_depth}")


def build_m_series(flow):
    """Amplitude/phase form of M from a spectral flow; masked couplings are zero."""
    amp = np.abs(flow.gamma).copy()
    phase = np.nan_to_num(flow.theta, nan=0.0)
    N = flow.dim
    amp[:, np.arange(N), np.arange(N)] = 0.0
    amp[flow.mask] = 0.0
    phase[amp == 0.0] = 0.0
    return MMatrixSeries(grid=flow.grid, amplitude=amp, phase=phase)


def integrate_coefficients(mseries, initial_level, rtol=1e-10, atol=1e-12):
    """Integrate c_n' = i sum_{m != n} M_nm c_m from c_n(0) = delta_{n, initial_level}.

    M is interpolated with cubic splines of its amplitude and phase; the ODE
    is advanced with an adaptive 8(5,3) Runge-Kutta pair.
    """
    tau = mseries.grid.points
    N = mseries.amplitude.shape[1]
    if not 0 <= initial_level < N:
        raise ValueError(f"initial_level {initial_level} outside 0..{N - 1}")
    c0 = np.zeros(N, dtype=np.complex128)
    c0[initial_level] = 1.0
    if not np.any(mseries.amplitude):
        c = np.broadcast_to(c0, (tau.size, N)).copy()
        return CoefficientSeries(grid=mseries.grid, c=c, initial_level=initial_level)
    amp = CubicSpline(tau, mseries.amplitude, axis=0)
    ph = CubicSpline(tau, mseries.phase, axis=0)

    def rhs(t, c):
        return 1j * (amp(t) * np.exp(1j * ph(t))) @ c

    sol = solve_ivp(rhs, (tau[0], tau[-1]), c0, method="DOP853", t_eval=tau, rtol=rtol, atol=atol)
    if not sol.success:
        raise NoConvergence(f"coefficient integration failed: {sol.message}")
    return CoefficientSeries(grid=mseries.grid, c=sol.y.T.copy(), initial_level=initial_level)


def project_onto_adiabatic(traj, orbits, initial_level, orbit_grid=None):
    """c_n(tau_k) = <Phi_n^adia(tau_k) | psi(tau_k)>; ``orbits`` has shape (K, N, N)."""
    orbits = np.asarray(orbits)
    if orbit_grid is not None and (
        len(orbit_grid) != len(traj.grid) or not np.allclose(orbit_grid.points, traj.grid.points, rtol=0, atol=1e-12)
    ):
        raise GridMismatch("trajectory and adiabatic orbits live on different grids")
    if orbits.shape[0] != traj.states.shape[0]:
        raise GridMismatch(f"{orbits.shape[0]} orbit frames for {traj.states.shape[0]} trajectory points")
    c = np.einsum("kin,ki->kn", np.conj(orbits), traj.states)
    return CoefficientSeries(grid=traj.grid, c=c, initial_level=initial_level)


def survival_probability(c, m=None):
    """|c_m|^2 along the grid."""
    m = c.initial_level if m is None else m
    return np.abs(c.c[:, m]) ** 2


def transition_probability(c, m=None):
    """sum_{n != m} |c_n|^2, the complement of the survival probability."""
    m = c.initial_level if m is None else m
    pops = np.abs(c.c) ** 2
    return np.sum(pops, axis=1) - pops[:, m]


def first_order_amplitudes(flow, m):
    """Running integrals int_0^tau |gamma_nm| exp(i theta_nm) for every n (zero for n = m)."""
    tau = flow.tau
    K, N = flow.gamma.shape[:2]
    out = np.zeros((K, N), dtype=np.complex128)
    for n in range(N):
        if n == m or flow.fully_masked(n, m):
            continue
        amp = np.where(flow.mask[:, n, m], 0.0, np.abs(flow.gamma[:, n, m]))
        theta = np.nan_to_num(flow.theta[:, n, m], nan=0.0)
        dtheta = np.abs(np.diff(theta))
        live = ~(flow.mask[1:, n, m] | flow.mask[:-1, n, m])
        if np.any(dtheta[live] >= PHASE_STEP_LIMIT):
            k = int(np.flatnonzero(live & (dtheta >= PHASE_STEP_LIMIT))[0])
            raise StepTooCoarse(f"phase theta_{n}{m} advances {dtheta[k]:.3f} rad in one step (limit pi/4)", tau[k])
        sub = int(np.clip(np.ceil(np.max(dtheta[live], initial=0.0) / (np.pi / 32)), 1, 16))
        if sub == 1:
            out[:, n] = cumulative_integral(amp * np.exp(1j * theta), tau)
            continue
        fine = TimeGrid(tau).refine(sub).points
        amp_f = CubicSpline(tau, amp)(fine)
        th_f = CubicSpline(tau, theta)(fine)
        out[:, n] = cumulative_integral(amp_f * np.exp(1j * th_f), fine)[::sub]
    return out


def first_order_survival(flow, m):
    """1 - sum_{n != m} |int_0^tau |gamma_nm| exp(i theta_nm)|^2."""
    return 1.0 - np.sum(np.abs(first_order_amplitudes(flow, m)) ** 2, axis=1)
