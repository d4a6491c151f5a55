"""Adiabatic conditions evaluated on a spectral flow.

For the initial level m and each other level n:

- traditional: |gamma_nm| / |e_n - e_m|
- pointwise: |gamma_nm| / |e_n - e_m + delta_mn|, i.e. |gamma_nm| / |theta_nm'|
- integral: |int (e_n - e_m + delta_mn)| against int |gamma_nm|

"Much greater than" is read as a factor ``threshold`` (default 10). The
pointwise and integral verdicts are ``"inapplicable"`` when they hold but the
phase of the transition integrand neither turns at rate >= 1 nor sweeps
2 pi over the window; a violated inequality is always ``"fail"``. A pair
whose coupling vanishes on the whole window is ``"vacuous-pass"``. The
traditional form follows the usual coupling-over-gap reading and is kept as a
baseline only.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import LevelMatchingFailure, MaskedInterval
from .grid import cumulative_integral, derivative, index_runs, true_spans
from .spectral import Analysis, compute_flow

DEFAULT_THRESHOLD = 10.0
CONDITIONS = ("traditional", "pointwise", "integral")
PASS, FAIL, INAPPLICABLE, VACUOUS = "pass", "fail", "inapplicable", "vacuous-pass"


def _integrate(y, tau):
    return float(cumulative_integral(y, tau)[-1])


def phase_preconditions(theta, tau, theta_dot=None):
    """(rate_ok, span_ok): min |theta'| >= 1 and |theta(end) - theta(start)| >= 2 pi.

    ``theta_dot`` may be passed to skip differencing. NaN anywhere makes both
    flags False.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0 or np.any(~np.isfinite(theta)):
        return False, False
    if theta_dot is None:
        theta_dot = derivative(theta, tau)
    theta_dot = np.asarray(theta_dot, dtype=float)
    if np.any(~np.isfinite(theta_dot)):
        return False, False
    rate_ok = bool(np.min(np.abs(theta_dot)) >= 1.0)
    span_ok = bool(abs(theta[-1] - theta[0]) >= 2.0 * np.pi)
    return rate_ok, span_ok


def _differenced_theta_dot(theta, tau, mask):
    out = np.full(theta.shape, np.nan)
    for a, b in index_runs(~mask):
        if b - a >= 5:
            out[a:b] = derivative(theta[a:b], tau[a:b])
    return out


@dataclass
class PairConditions:
    n: int
    m: int
    tau: np.ndarray
    gamma_abs: np.ndarray
    gap: np.ndarray
    delta: np.ndarray
    theta: np.ndarray
    traditional_ratio: np.ndarray
    pointwise_ratio: np.ndarray
    pointwise_ratio_theta: np.ndarray
    theta_identity_residual: float
    integral_lhs: float
    integral_rhs: float
    rate_ok: bool
    span_ok: bool
    vacuous: bool
    threshold: float
    status: dict = field(default_factory=dict)

    @property
    def phase_ok(self):
        return self.rate_ok and self.span_ok

    def summary(self):
        def mx(a):
            return float(np.max(a)) if a.size else 0.0

        return {
            "n": self.n,
            "m": self.m,
            "max_traditional_ratio": mx(self.traditional_ratio),
            "max_pointwise_ratio": mx(self.pointwise_ratio),
            "theta_identity_residual": self.theta_identity_residual,
            "integral_lhs": self.integral_lhs,
            "integral_rhs": self.integral_rhs,
            "integral_ratio": (self.integral_lhs / self.integral_rhs) if self.integral_rhs > 0 else None,
            "rate_ok": self.rate_ok,
            "span_ok": self.span_ok,
            "vacuous": self.vacuous,
            "status": dict(self.status),
        }


@dataclass
class ConditionReport:
    initial_level: int
    threshold: float
    window: tuple
    pairs: list

    def verdict(self, name):
        """Aggregate status over pairs: any fail -> fail, then inapplicable, then pass."""
        statuses = [p.status[name] for p in self.pairs if name in p.status]
        if not statuses:
            return VACUOUS
        if FAIL in statuses:
            return FAIL
        if INAPPLICABLE in statuses:
            return INAPPLICABLE
        if all(s == VACUOUS for s in statuses):
            return VACUOUS
        return PASS

    def satisfied(self, name):
        return self.verdict(name) in (PASS, VACUOUS)

    def pair(self, n):
        for p in self.pairs:
            if p.n == n:
                return p
        raise KeyError(n)

    def to_dict(self):
        return {
            "initial_level": self.initial_level,
            "threshold": self.threshold,
            "window": list(self.window),
            "verdicts": {name: self.verdict(name) for name in CONDITIONS if any(name in p.status for p in self.pairs)},
            "pairs": [p.summary() for p in self.pairs],
        }


def _window_slice(flow, window):
    t0, t1 = (0.0, flow.grid.t_max) if window is None else window
    sel = flow.grid.window(t0, t1)
    if np.count_nonzero(sel) < 5:
        raise ValueError(f"window {window} holds fewer than 5 grid points")
    return sel, (float(t0), float(t1))


def _pair_data(flow, n, m, sel, threshold):
    tau = flow.tau[sel]
    mask = flow.mask[sel, n, m]
    gamma_abs = np.where(mask, 0.0, np.abs(flow.gamma[sel, n, m]))
    gap = flow.values[sel, n] - flow.values[sel, m]
    delta = flow.delta[sel, m, n]
    theta = flow.theta[sel, n, m]
    vacuous = bool(np.all(mask))
    with np.errstate(divide="ignore", invalid="ignore"):
        trad = np.where(gamma_abs == 0.0, 0.0, gamma_abs / np.abs(gap))
        expanded = gap + delta
        point = np.where(mask, 0.0, gamma_abs / np.abs(expanded))
        th_dot = _differenced_theta_dot(theta, tau, mask)
        point_theta = np.where(mask, 0.0, gamma_abs / np.abs(th_dot))
    live = ~mask & np.isfinite(th_dot) & np.isfinite(expanded)
    resid = float(np.max(np.abs(th_dot[live] - expanded[live]), initial=0.0))
    return dict(
        n=n, m=m, tau=tau, gamma_abs=gamma_abs, gap=gap, delta=delta, theta=theta,
        traditional_ratio=trad, pointwise_ratio=point, pointwise_ratio_theta=point_theta,
        theta_identity_residual=resid, vacuous=vacuous, threshold=threshold,
        mask=mask, expanded=expanded,
    )


def _status(satisfied, phase_ok):
    if not satisfied:
        return FAIL
    return PASS if phase_ok else INAPPLICABLE


def evaluate_conditions(flow, initial_level, threshold=DEFAULT_THRESHOLD, window=None, which=CONDITIONS):
    """ConditionReport for every pair (n, initial_level) over ``window``."""
    if not threshold > 1.0:
        raise ValueError("threshold must be > 1")
    m = int(initial_level)
    if not 0 <= m < flow.dim:
        raise ValueError(f"initial_level {m} outside 0..{flow.dim - 1}")
    sel, win = _window_slice(flow, window)
    pairs = []
    for n in range(flow.dim):
        if n == m:
            continue
        d = _pair_data(flow, n, m, sel, threshold)
        tau, mask, expanded = d.pop("tau"), d.pop("mask"), d.pop("expanded")
        if d["vacuous"]:
            lhs, rhs, rate_ok, span_ok = 0.0, 0.0, False, False
        else:
            rhs = _integrate(d["gamma_abs"], tau)
            if np.any(mask):
                lhs = float("nan")
                rate_ok = span_ok = False
                if "integral" in which:
                    raise MaskedInterval((m, n), true_spans(mask, tau))
            else:
                lhs = abs(_integrate(expanded, tau))
                rate_ok, span_ok = phase_preconditions(d["theta"], tau, theta_dot=expanded)
        pc = PairConditions(tau=tau, integral_lhs=lhs, integral_rhs=rhs, rate_ok=rate_ok, span_ok=span_ok, **d)
        limit = 1.0 / threshold
        if pc.vacuous:
            pc.status = {name: VACUOUS for name in which}
        else:
            if "traditional" in which:
                pc.status["traditional"] = PASS if np.max(pc.traditional_ratio) <= limit else FAIL
            if "pointwise" in which:
                pc.status["pointwise"] = _status(bool(np.max(pc.pointwise_ratio) <= limit), pc.phase_ok)
            if "integral" in which:
                pc.status["integral"] = _status(bool(lhs >= threshold * rhs), pc.phase_ok)
        pairs.append(pc)
    return ConditionReport(initial_level=m, threshold=float(threshold), window=win, pairs=pairs)


def pointwise_condition(flow, initial_level, threshold=DEFAULT_THRESHOLD, window=None):
    """Traditional and pointwise parts only; masked points count as zero coupling."""
    return evaluate_conditions(flow, initial_level, threshold, window, which=("traditional", "pointwise"))


def integral_condition(flow, initial_level, threshold=DEFAULT_THRESHOLD, window=None):
    return evaluate_conditions(flow, initial_level, threshold, window, which=("integral",))


def align_dual(a, b, min_overlap=0.5):
    """Relabel and rephase the dual system's frames so that |n_b> = U^dagger |n_a>.

    ``a`` must wrap a model with a propagator; ``b`` the analysis of its dual
    on the same grid. Returns a new Analysis whose level n corresponds to
    level n of ``a``.
    """
    if len(a.grid) != len(b.grid) or not np.array_equal(a.grid.points, b.grid.points):
        raise LevelMatchingFailure("base and dual analyses use different grids")
    U, _ = a.model.propagator(a.grid.points)
    ref = np.conj(np.swapaxes(U, 1, 2)) @ a.frames.vectors
    ov = np.einsum("kij,kin->kjn", np.conj(b.frames.vectors), ref)
    mag = np.abs(ov)
    perm = np.argmax(mag, axis=1)
    N = a.frames.dim
    if np.any(perm != perm[0]) or len(set(perm[0].tolist())) != N:
        raise LevelMatchingFailure("overlap assignment between U^dagger|n_a> and dual frames is not one-to-one")
    perm = perm[0]
    best = np.take_along_axis(mag, perm[None, None, :], axis=1)[:, 0, :]
    if best.min() < min_overlap:
        raise LevelMatchingFailure(f"best overlap {best.min():.3f} below {min_overlap}")
    phase = np.take_along_axis(ov, perm[None, None, :], axis=1)[:, 0, :]
    vectors = b.frames.vectors[:, :, perm] * (phase / np.abs(phase))[:, None, :]
    values = b.frames.values[:, perm]
    frames = type(b.frames)(grid=b.frames.grid, values=values, vectors=vectors, gaps=b.frames.gaps)
    flow = compute_flow(frames, b.model, zero_floor=b.flow.zero_floor, method=b.flow.gamma_method)
    return Analysis(b.model, frames, flow)


def dual_gamma_residual(a, b, aligned=False):
    """max over tau, n, m of |gamma_b,nm - (-e_a,m delta_nm + gamma_a,nm)|.

    ``b`` is aligned to ``a`` first unless ``aligned`` is set.
    """
    if not aligned:
        b = align_dual(a, b)
    N = a.frames.dim
    expected = a.flow.gamma.copy()
    idx = np.arange(N)
    expected[:, idx, idx] -= a.frames.values
    return float(np.max(np.abs(b.flow.gamma - expected)))


@dataclass
class DualComparison:
    pairs: list
    identity_residual: float
    summary: str

    def to_dict(self):
        return {"pairs": self.pairs, "identity_residual": self.identity_residual, "summary": self.summary}


def compare_dual_conditions(a_report, b_report):
    """Pointwise ratios of a system and its (aligned) dual, side by side.

    Checks the identity ratio_b = |gamma_a,nm| / |delta_a,mn| pointwise and
    reports the worst deviation (relative to max(1, ratio)).
    """
    rows = []
    worst = 0.0
    for pa in a_report.pairs:
        pb = b_report.pair(pa.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            predicted = np.where(pa.gamma_abs == 0.0, 0.0, pa.gamma_abs / np.abs(pa.delta))
        live = np.isfinite(predicted) & np.isfinite(pb.pointwise_ratio)
        dev = np.abs(pb.pointwise_ratio[live] - predicted[live]) / np.maximum(1.0, np.abs(predicted[live]))
        worst = max(worst, float(np.max(dev, initial=0.0)))
        rows.append(
            {
                "n": pa.n,
                "m": pa.m,
                "max_pointwise_ratio_a": float(np.max(pa.pointwise_ratio)),
                "max_pointwise_ratio_b": float(np.max(pb.pointwise_ratio)),
                "status_a": pa.status.get("pointwise"),
                "status_b": pb.status.get("pointwise"),
            }
        )
    va, vb = a_report.verdict("pointwise"), b_report.verdict("pointwise")
    ok = (PASS, VACUOUS)
    if va in ok and vb in ok:
        summary = "both adiabatic"
    elif va in ok:
        summary = "a adiabatic, b not guaranteed"
    elif vb in ok:
        summary = "b adiabatic, a not guaranteed"
    else:
        summary = "neither guaranteed"
    return DualComparison(pairs=rows, identity_residual=worst, summary=summary)
