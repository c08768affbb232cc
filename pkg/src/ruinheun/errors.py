"""Exception hierarchy shared by the solver, the tail fit and the simulator."""


class RuinHeunError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(RuinHeunError, ValueError):
    """A model parameter violates its admissible range."""

    def __init__(self, name, value, bound):
        self.name = name
        self.value = value
        self.bound = bound
        super().__init__(f"invalid parameter {name}={value!r}: must satisfy {bound}")


class DegenerateModel(RuinHeunError):
    """Raised when gamma <= 1, i.e. the log-capital drift is not positive."""

    def __init__(self, gamma):
        self.gamma = gamma
        super().__init__(
            f"degenerate model: gamma = {gamma:.6g} <= 1, ruin is certain "
            "(a_kappa - sigma_kappa**2 / 2 must be positive)"
        )


class SeedDiverged(RuinHeunError):
    """The asymptotic series at u = 0 is not accurate enough at the seed point."""


class StepSizeUnderflow(RuinHeunError):
    """The adaptive integrator could not make progress."""


class NegativeDensity(RuinHeunError):
    """The computed density H(u) became non-positive.

    Positivity is not proven analytically, so a violation is surfaced instead
    of being clipped.
    """

    def __init__(self, u, value):
        self.u = u
        self.value = value
        super().__init__(f"density became non-positive: H({u:.6g}) = {value:.6g}")


class OutOfRange(RuinHeunError, ValueError):
    """Evaluation point outside the integrated interval."""


class PlateauNotReached(RuinHeunError):
    """H(u) (mu u)**gamma is not flat enough over the fit window."""

    def __init__(self, window, rel_spread, cap):
        self.window = window
        self.rel_spread = rel_spread
        self.cap = cap
        super().__init__(
            f"no power-law plateau on [{window[0]:.6g}, {window[1]:.6g}]: "
            f"relative spread {rel_spread:.3g} exceeds cap {cap:.3g}"
        )


class TailTooHeavy(RuinHeunError):
    """The analytic tail remainder is too large; integrate to a larger u_max."""

    def __init__(self, ratio, cap, u_max):
        self.ratio = ratio
        self.cap = cap
        self.u_max = u_max
        super().__init__(
            f"tail remainder ratio {ratio:.3g} exceeds cap {cap:.3g} at "
            f"u_max = {u_max:.6g}; increase u_max"
        )
