"""Time grids and the differencing/quadrature rules shared by the analysis modules."""
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing dimensionless times starting at 0 (at least 3 points)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 3:
            raise ValueError("a TimeGrid needs at least 3 points")
        if pts[0] != 0.0:
            raise ValueError("a TimeGrid must start at tau = 0")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise ValueError("TimeGrid points must be finite and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t_max, steps):
        if steps < 2:
            raise ValueError("steps must be >= 2")
        return cls(np.linspace(0.0, float(t_max), int(steps) + 1))

    def __len__(self):
        return self.points.size

    @property
    def t_max(self):
        return float(self.points[-1])

    @property
    def max_step(self):
        return float(np.max(np.diff(self.points)))

    @property
    def is_uniform(self):
        d = np.diff(self.points)
        return bool(np.allclose(d, d[0], rtol=1e-10, atol=0.0))

    def refine(self, factor=2):
        """Grid with every interval split into ``factor`` equal pieces."""
        p = self.points
        sub = p[:-1, None] + np.diff(p)[:, None] * (np.arange(factor) / factor)[None, :]
        return TimeGrid(np.append(sub.ravel(), p[-1]))

    def window(self, t_start=0.0, t_end=None):
        """Boolean mask of points inside [t_start, t_end]."""
        t_end = self.t_max if t_end is None else t_end
        eps = 1e-12 * max(1.0, abs(self.t_max))
        return (self.points >= t_start - eps) & (self.points <= t_end + eps)


# five-point stencils for a uniform grid: rows are offsets of the output point
_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def fornberg_weights(x0, x, order=1):
    """Finite-difference weights for the ``order``-th derivative at x0 from nodes x."""
    n = len(x)
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative(y, tau):
    """Fourth-order d/dtau of samples ``y`` (time along axis 0).

    Central five-point differences inside, one-sided five-point stencils at
    the two points nearest each end. Needs at least 5 samples.
    """
    y = np.asarray(y)
    tau = np.asarray(tau, dtype=float)
    K = y.shape[0]
    if K < 5:
        raise ValueError("fourth-order differencing needs at least 5 samples")
    d = np.diff(tau)
    out = np.empty_like(y, dtype=np.result_type(y, float))
    if np.allclose(d, d[0], rtol=1e-10, atol=0.0):
        h = d[0]
        out[2:-2] = (_CENTRAL[0] * y[:-4] + _CENTRAL[1] * y[1:-3] + _CENTRAL[3] * y[3:-1] + _CENTRAL[4] * y[4:]) / h
        out[0] = np.tensordot(_EDGE0, y[:5], axes=(0, 0)) / h
        out[1] = np.tensordot(_EDGE1, y[:5], axes=(0, 0)) / h
        out[-1] = -np.tensordot(_EDGE0, y[-1:-6:-1], axes=(0, 0)) / h
        out[-2] = -np.tensordot(_EDGE1, y[-1:-6:-1], axes=(0, 0)) / h
        return out
    for k in range(K):
        lo = min(max(k - 2, 0), K - 5)
        w = fornberg_weights(tau[k], tau[lo:lo + 5])
        out[k] = np.tensordot(w, y[lo:lo + 5], axes=(0, 0))
    return out


def cumulative_integral(y, tau):
    """Running integral from tau[0] of the cubic-spline interpolant of y."""
    y = np.asarray(y)
    tau = np.asarray(tau, dtype=float)
    if np.iscomplexobj(y):
        return cumulative_integral(y.real, tau) + 1j * cumulative_integral(y.imag, tau)
    if tau.size < 4:
        steps = 0.5 * (y[1:] + y[:-1]) * np.diff(tau).reshape((-1,) + (1,) * (y.ndim - 1))
        return np.concatenate([np.zeros((1,) + y.shape[1:]), np.cumsum(steps, axis=0)])
    anti = CubicSpline(tau, y, axis=0).antiderivative()
    return anti(tau) - anti(tau[0])


def true_spans(mask, tau):
    """[(tau_start, tau_end), ...] of the runs where ``mask`` is True."""
    spans = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return spans
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]])
    return [(tau[a], tau[b]) for a, b in zip(starts, ends)]


def index_runs(mask):
    """[(start, stop), ...] half-open index runs where ``mask`` is True."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]]) + 1
    return list(zip(starts.tolist(), ends.tolist()))
