"""Exception hierarchy.

``NumericalError`` subclasses signal a breakdown of the numerics (the CLI maps
them to exit code 3); everything else is a usage/config error.
"""


class AdiacheckError(Exception):
    pass


class ConfigInvalid(AdiacheckError, ValueError):
    pass


class NotHermitian(AdiacheckError, ValueError):
    def __init__(self, asymmetry, tol):
        self.asymmetry = float(asymmetry)
        self.tol = float(tol)
        super().__init__(f"matrix is not Hermitian: max |H - H^dagger| = {asymmetry:.3e} > {tol:.1e}")


class ScheduleDomainError(AdiacheckError, ValueError):
    pass


class MissingPropagator(AdiacheckError, TypeError):
    pass


class GridMismatch(AdiacheckError, ValueError):
    pass


class NumericalError(AdiacheckError, ArithmeticError):
    tau = None


class QuadratureFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class DegenerateCrossing(NumericalError):
    def __init__(self, tau, gap, gap_floor):
        self.tau = float(tau)
        self.gap = float(gap)
        super().__init__(f"eigenvalue gap {gap:.3e} below gap_floor {gap_floor:.1e} at tau={tau:.6g}")


class GaugeAmbiguity(NumericalError):
    def __init__(self, tau, overlap):
        self.tau = float(tau)
        self.overlap = float(overlap)
        super().__init__(
            f"frame matching ambiguous at tau={tau:.6g} (best overlap {overlap:.3f} < 0.5); refine the grid"
        )


class StepTooCoarse(NumericalError):
    def __init__(self, message, tau=None):
        self.tau = None if tau is None else float(tau)
        if tau is not None:
            message = f"{message} (at tau={tau:.6g})"
        super().__init__(message)


class MaskedInterval(NumericalError):
    """Coupling |gamma_nm| fell below ``zero_floor`` where a phase was required."""

    def __init__(self, pair, spans):
        self.pair = tuple(pair)
        self.spans = [(float(a), float(b)) for a, b in spans]
        self.tau = self.spans[0][0] if self.spans else None
        shown = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in self.spans[:5])
        super().__init__(f"coupling for pair {self.pair} vanishes on {shown}")


class LevelMatchingFailure(NumericalError):
    pass
