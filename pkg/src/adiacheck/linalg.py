"""Dense Hermitian kernel for small dimensions (2-16).

Eigendecompositions use a cyclic complex Jacobi sweep, vectorised over any
leading batch axes so that thousands of 2x2 or 4x4 problems on a time grid are
solved in one call.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, NotHermitian

HERMITIAN_TOL = 1e-12
OFFDIAG_TOL = 1e-14
DEGENERACY_GAP = 1e-10
MAX_SWEEPS = 60


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and unit eigenvectors (columns).

    Arrays carry whatever batch shape the input had: ``values`` is
    ``(..., n)``, ``vectors`` is ``(..., n, n)`` and ``degenerate`` is a
    boolean of the batch shape, set when two eigenvalues are closer than
    ``DEGENERACY_GAP``.
    """

    values: np.ndarray
    vectors: np.ndarray
    degenerate: np.ndarray

    @property
    def min_gap(self):
        if self.values.shape[-1] < 2:
            return np.full(self.values.shape[:-1], np.inf)
        return np.min(np.diff(self.values, axis=-1), axis=-1)


def as_matrix_batch(H):
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim < 2 or H.shape[-1] != H.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    return H


def hermitian_asymmetry(H):
    H = np.asarray(H)
    return float(np.max(np.abs(H - np.conj(np.swapaxes(H, -1, -2))), initial=0.0))


def check_hermitian(H, tol=HERMITIAN_TOL):
    # absolute tolerance, scaled up only for matrices with entries above O(1)
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    asym = hermitian_asymmetry(H)
    if asym > tol * scale:
        raise NotHermitian(asym, tol * scale)


def _jacobi(A):
    """Cyclic Jacobi on a (B, n, n) stack of Hermitian matrices.

    Returns (eigenvalues unsorted (B, n), eigenvectors (B, n, n)).
    """
    A = A.copy()
    B, n, _ = A.shape
    V = np.broadcast_to(np.eye(n, dtype=np.complex128), A.shape).copy()
    if n == 1:
        return A[:, 0, 0].real.copy(), V
    iu = np.triu_indices(n, 1)
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(A) ** 2, axis=(1, 2))))
    for _ in range(MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(np.abs(A[:, iu[0], iu[1]]) ** 2, axis=1))
        if np.all(off < OFFDIAG_TOL * scale):
            return np.real(np.diagonal(A, axis1=1, axis2=2)).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                b = np.abs(apq)
                active = b > 0.0
                if not np.any(active):
                    continue
                phase = np.where(active, apq / np.where(active, b, 1.0), 1.0)
                app = A[:, p, p].real
                aqq = A[:, q, q].real
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    theta = (aqq - app) / (2.0 * b)
                    # theta^2 overflows for tiny |a_pq|; t -> 1/(2 theta) there
                    big = np.abs(theta) > 1e150
                    t = np.where(big, 0.5 / theta, np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(np.isinf(theta), 0.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on columns p, q
                g_pp = c.astype(np.complex128)
                g_pq = s.astype(np.complex128)
                g_qp = -s * np.conj(phase)
                g_qq = c * np.conj(phase)
                cp = A[:, :, p].copy()
                cq = A[:, :, q].copy()
                A[:, :, p] = cp * g_pp[:, None] + cq * g_qp[:, None]
                A[:, :, q] = cp * g_pq[:, None] + cq * g_qq[:, None]
                rp = A[:, p, :].copy()
                rq = A[:, q, :].copy()
                A[:, p, :] = np.conj(g_pp)[:, None] * rp + np.conj(g_qp)[:, None] * rq
                A[:, q, :] = np.conj(g_pq)[:, None] * rp + np.conj(g_qq)[:, None] * rq
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
                vp = V[:, :, p].copy()
                vq = V[:, :, q].copy()
                V[:, :, p] = vp * g_pp[:, None] + vq * g_qp[:, None]
                V[:, :, q] = vp * g_pq[:, None] + vq * g_qq[:, None]
    raise NoConvergence(f"Jacobi sweeps did not converge in {MAX_SWEEPS} sweeps")


def canonical_gauge(vectors):
    """Rotate each column so its largest-magnitude entry is real positive."""
    idx = np.argmax(np.abs(vectors), axis=-2)
    lead = np.take_along_axis(vectors, idx[..., None, :], axis=-2)
    return vectors * (np.conj(lead) / np.abs(lead))


def eigh(H):
    """Eigendecomposition of a Hermitian matrix or a stack of them.

    Eigenvalues are ascending; each eigenvector column is phased so its
    largest-magnitude entry is real and positive. Ties in magnitude resolve
    to the lowest row index, which keeps the output deterministic.

    Raises NotHermitian when max |H - H^dagger| exceeds 1e-12 (scaled by the
    largest entry when that exceeds one).
    """
    H = as_matrix_batch(H)
    check_hermitian(H)
    batch = H.shape[:-2]
    n = H.shape[-1]
    A = H.reshape(-1, n, n)
    A = 0.5 * (A + np.conj(np.swapaxes(A, -1, -2)))
    w, V = _jacobi(A)
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    V = np.take_along_axis(V, order[:, None, :], axis=-1)
    V = canonical_gauge(V)
    w = w.reshape(batch + (n,))
    V = V.reshape(batch + (n, n))
    if n > 1:
        degenerate = np.min(np.diff(w, axis=-1), axis=-1) < DEGENERACY_GAP
    else:
        degenerate = np.zeros(batch, dtype=bool)
    return EigenDecomposition(values=w, vectors=V, degenerate=np.asarray(degenerate))


def expm_hermitian(H, dt):
    """exp(-i H dt) through the eigendecomposition; batched like ``eigh``."""
    dec = eigh(H)
    dt = np.asarray(dt, dtype=float)
    phases = np.exp(-1j * dec.values * dt[..., None]) if dt.ndim else np.exp(-1j * dec.values * float(dt))
    V = dec.vectors
    return (V * phases[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def propagate_step(H, dt, psi):
    """Return exp(-i H dt) psi for one Hermitian H and a unit vector psi."""
    psi = np.asarray(psi, dtype=np.complex128)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"psi must be normalised (|psi| = {norm:.12g})")
    return expm_hermitian(H, dt) @ psi


def pauli_exp(angle, sigma):
    """exp(-i angle sigma) = cos(angle) I - i sin(angle) sigma, batched over angle."""
    angle = np.asarray(angle, dtype=float)
    c = np.cos(angle)[..., None, None]
    s = np.sin(angle)[..., None, None]
    return c * np.eye(2) - 1j * s * sigma


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
