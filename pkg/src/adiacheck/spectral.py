"""Instantaneous eigenframes along tau and the couplings derived from them.

Conventions (indices are tracked level labels, ascending energy at tau=0):

- ``gamma[k, n, m] = i <phi_n | d phi_m / dtau>`` at tau_k
- ``theta[k, n, m] = int_0^tau (e_n - e_m + gamma_mm - gamma_nn) + arg gamma_nm``
  so that ``d theta_nm / dtau = e_n - e_m + delta_mn``
- ``delta[k, m, n] = gamma_mm - gamma_nn + d/dtau arg gamma_nm`` (gauge invariant)

theta and delta are NaN wherever ``|gamma_nm| < zero_floor`` (the ``mask``).
"""
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateCrossing, GaugeAmbiguity, MaskedInterval, StepTooCoarse
from .grid import TimeGrid, cumulative_integral, derivative, index_runs, true_spans
from .linalg import eigh

GAP_FLOOR = 1e-8
ZERO_FLOOR = 1e-12
MIN_OVERLAP = 0.5
MAX_ARG_STEP = np.pi / 2
CROSSCHECK_TOL = 1e-5
CROSSCHECK_FAIL = 1e-3


@dataclass(frozen=True)
class EigenFrameSequence:
    """Gauge-fixed eigenframes on a grid.

    ``values[k, n]`` and ``vectors[k, :, n]`` follow level n continuously
    (matched by overlap, not by sort order). Consecutive frames of one level
    have real positive overlap unless the frames were deliberately regauged.
    """

    grid: TimeGrid
    values: np.ndarray
    vectors: np.ndarray
    gaps: np.ndarray

    @property
    def tau(self):
        return self.grid.points

    @property
    def dim(self):
        return self.values.shape[1]

    def overlaps(self):
        """<phi_n(tau_k) | phi_n(tau_{k+1})> for every level, shape (K-1, N)."""
        V = self.vectors
        return np.einsum("kin,kin->kn", np.conj(V[:-1]), V[1:])

    def regauge(self, phases):
        """Frames with level n multiplied by exp(i phases[:, n])."""
        phases = np.asarray(phases, dtype=float)
        return replace(self, vectors=self.vectors * np.exp(1j * phases)[:, None, :])


@dataclass(frozen=True)
class SpectralFlow:
    grid: TimeGrid
    values: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    delta: np.ndarray
    mask: np.ndarray
    zero_floor: float
    gamma_method: str
    crosscheck: float

    @property
    def tau(self):
        return self.grid.points

    @property
    def dim(self):
        return self.gamma.shape[1]

    def theta_dot(self, n, m):
        """Expanded phase rate e_n - e_m + delta_mn (NaN where masked)."""
        return self.values[:, n] - self.values[:, m] + self.delta[:, m, n]

    def fully_masked(self, n, m):
        return bool(np.all(self.mask[:, n, m]))


def _greedy_match(overlap):
    """Assign new columns to previous levels by descending |overlap|."""
    n = overlap.shape[0]
    mag = np.abs(overlap).copy()
    assign = np.empty(n, dtype=int)
    best = np.empty(n)
    for _ in range(n):
        i, j = np.unravel_index(np.argmax(mag), mag.shape)
        assign[i] = j
        best[i] = mag[i, j]
        mag[i, :] = -1.0
        mag[:, j] = -1.0
    return assign, best


def track_frames(model, grid, gap_floor=GAP_FLOOR):
    """Eigenframes of ``model.h`` along ``grid`` with a parallel-transport gauge.

    The first frame uses the canonical eigh gauge; each later eigenvector is
    rotated so its overlap with its predecessor is real positive. Raises
    DegenerateCrossing if any gap drops below ``gap_floor`` and GaugeAmbiguity
    if the best overlap between consecutive frames is below 0.5.
    """
    tau = grid.points
    H = model.h(tau)
    dec = eigh(H)
    w_all, V_all = dec.values, dec.vectors
    gaps = np.min(np.diff(w_all, axis=1), axis=1) if w_all.shape[1] > 1 else np.full(len(tau), np.inf)
    bad = np.flatnonzero(gaps < gap_floor)
    if bad.size:
        k = bad[0]
        raise DegenerateCrossing(tau[k], gaps[k], gap_floor)
    K, N = w_all.shape
    values = np.empty((K, N))
    vectors = np.empty((K, N, N), dtype=np.complex128)
    values[0] = w_all[0]
    vectors[0] = V_all[0]
    for k in range(1, K):
        prev = vectors[k - 1]
        ov = np.conj(prev.T) @ V_all[k]
        assign, best = _greedy_match(ov)
        if best.min() < MIN_OVERLAP:
            raise GaugeAmbiguity(tau[k], best.min())
        cols = V_all[k][:, assign]
        phase = ov[np.arange(N), assign]
        vectors[k] = cols * (np.conj(phase) / np.abs(phase))
        values[k] = w_all[k][assign]
    return EigenFrameSequence(grid=grid, values=values, vectors=vectors, gaps=gaps)


def _gamma_differenced(frames):
    V = frames.vectors
    dV = derivative(V, frames.tau)
    G = 1j * np.einsum("kin,kim->knm", np.conj(V), dV)
    # the anti-Hermitian part is pure discretisation error
    return 0.5 * (G + np.conj(np.swapaxes(G, 1, 2)))


def _gamma_perturbative(frames, model):
    V = frames.vectors
    hd = model.hdot(frames.tau)
    num = np.einsum("kin,kij,kjm->knm", np.conj(V), hd, V)
    e = frames.values
    den = e[:, None, :] - e[:, :, None]  # e_m - e_n
    N = frames.dim
    off = ~np.eye(N, dtype=bool)
    G = np.zeros_like(num)
    G[:, off] = 1j * num[:, off] / den[:, off]
    return G


def gamma_matrix(frames, model=None, method="auto"):
    """gamma_nm = i <phi_n | phi_m'> on every grid point.

    ``method``: "differenced" uses fourth-order differences of the tracked
    vectors; "perturbative" takes off-diagonals from i <n|hdot|m>/(e_m - e_n)
    (diagonals still differenced) and cross-checks them against the
    differenced route; "auto" picks perturbative when the model has hdot.

    Returns (gamma, method_used, crosscheck) where crosscheck is the maximum
    off-diagonal disagreement between routes (NaN if only one was computed).
    """
    if method == "auto":
        method = "perturbative" if model is not None and model.has_hdot else "differenced"
    G_diff = _gamma_differenced(frames)
    if method == "differenced":
        return G_diff, method, float("nan")
    if method != "perturbative":
        raise ValueError(f"unknown gamma method {method!r}")
    G_pert = _gamma_perturbative(frames, model)
    N = frames.dim
    off = ~np.eye(N, dtype=bool)
    diff = np.abs(G_pert[:, off] - G_diff[:, off])
    scale = max(1.0, float(np.max(np.abs(G_pert[:, off]), initial=0.0)))
    worst = float(np.max(diff, initial=0.0)) / scale
    if worst > CROSSCHECK_FAIL:
        k = int(np.argmax(np.max(diff, axis=1)))
        raise StepTooCoarse(f"gamma routes disagree by {worst:.2e} (> {CROSSCHECK_FAIL:.0e}); refine the grid", frames.tau[k])
    if worst > CROSSCHECK_TOL:
        warnings.warn(f"gamma routes disagree by {worst:.2e} (> {CROSSCHECK_TOL:.0e})", RuntimeWarning, stacklevel=2)
    G = G_pert.copy()
    idx = np.arange(N)
    G[:, idx, idx] = G_diff[:, idx, idx].real
    return G, method, worst


def _unwrapped_arg(g, tau):
    """Continuous arg of g over one unmasked run, anchored at the principal value."""
    inc = np.angle(g[1:] * np.conj(g[:-1]))
    big = np.flatnonzero(np.abs(inc) > MAX_ARG_STEP)
    if big.size:
        k = big[0]
        raise StepTooCoarse(f"arg gamma jumps by {inc[k]:.3f} rad in one step", tau[k])
    return np.angle(g[0]) + np.concatenate([[0.0], np.cumsum(inc)])


def compute_flow(frames, model=None, zero_floor=ZERO_FLOOR, method="auto"):
    """gamma, theta and delta series for every ordered level pair."""
    G, used, cross = gamma_matrix(frames, model, method)
    tau = frames.tau
    e = frames.values
    K, N = e.shape
    diag = np.real(np.einsum("knn->kn", G))
    mask = np.abs(G) < zero_floor
    idx = np.arange(N)
    mask[:, idx, idx] = False
    theta = np.full((K, N, N), np.nan)
    delta = np.full((K, N, N), np.nan)
    for n in range(N):
        for m in range(N):
            if n == m:
                continue
            g = G[:, n, m]
            rate = e[:, n] - e[:, m] + diag[:, m] - diag[:, n]
            dyn = cumulative_integral(rate, tau)
            for a, b in index_runs(~mask[:, n, m]):
                if b - a < 5:
                    mask[a:b, n, m] = True
                    continue
                uarg = _unwrapped_arg(g[a:b], tau[a:b])
                theta[a:b, n, m] = dyn[a:b] + uarg
                delta[a:b, m, n] = diag[a:b, m] - diag[a:b, n] + derivative(uarg, tau[a:b])
    return SpectralFlow(
        grid=frames.grid,
        values=e,
        gamma=G,
        theta=theta,
        delta=delta,
        mask=mask,
        zero_floor=zero_floor,
        gamma_method=used,
        crosscheck=cross,
    )


def theta_phase(flow, pair, strict=False):
    """theta_nm series for pair (n, m); NaN where masked unless ``strict``."""
    n, m = pair
    if strict and np.any(flow.mask[:, n, m]):
        raise MaskedInterval((n, m), true_spans(flow.mask[:, n, m], flow.tau))
    return flow.theta[:, n, m]


def geometric_potential(flow, pair, strict=False):
    """Quantum geometric potential delta_mn for pair (m, n)."""
    m, n = pair
    if strict and np.any(flow.mask[:, n, m]):
        raise MaskedInterval((m, n), true_spans(flow.mask[:, n, m], flow.tau))
    return flow.delta[:, m, n]


def adiabatic_orbit(frames, flow, m):
    """exp(-i int_0^tau (e_m - gamma_mm)) |phi_m(tau)>, shape (K, N).

    Unchanged (up to discretisation) when the frames are regauged by
    exp(i f(tau)) with f(0) = 0.
    """
    v = frames.vectors[:, :, m]
    # discrete parallel transport first: exactly covariant under regauging
    step = np.angle(np.einsum("ki,ki->k", np.conj(v[:-1]), v[1:]))
    v = v * np.exp(-1j * np.concatenate([[0.0], np.cumsum(step)]))[:, None]
    # residual connection of the transported frame, O(h^2) and smooth
    g = np.real(1j * np.einsum("ki,ki->k", np.conj(v), derivative(v, frames.tau)))
    phase = cumulative_integral(flow.values[:, m] - g, frames.tau)
    return np.exp(-1j * phase)[:, None] * v


def adiabatic_orbits(frames, flow):
    """All orbits stacked as columns: shape (K, N, N)."""
    return np.stack([adiabatic_orbit(frames, flow, m) for m in range(frames.dim)], axis=2)


@dataclass(frozen=True)
class Analysis:
    """A model with its tracked frames and spectral flow on one grid."""

    model: object
    frames: EigenFrameSequence
    flow: SpectralFlow

    @property
    def grid(self):
        return self.frames.grid


def analyze(model, grid, gap_floor=GAP_FLOOR, zero_floor=ZERO_FLOOR, method="auto"):
    frames = track_frames(model, grid, gap_floor=gap_floor)
    return Analysis(model, frames, compute_flow(frames, model, zero_floor=zero_floor, method=method))
