"""Exception types raised across the package.

Every failure mode carries enough context (location, offending value) to
diagnose a run without re-executing it.
"""


class MhdShockError(Exception):
    """Base class for all package errors."""


class StiffnessError(MhdShockError):
    """Step size underflow during adaptive integration."""

    def __init__(self, x, step):
        self.x = x
        self.step = step
        super().__init__(f"step size underflow ({step:.3e}) near x = {x:.6g}; "
                         "field is stiff or singular there")


class NonConvergenceError(MhdShockError):
    """Iterative eigen/root computation failed to converge."""


class BracketError(MhdShockError):
    """Root bracket does not contain a sign change."""


class RankDeficiencyError(MhdShockError):
    """Frame passed to orthonormalization is numerically rank deficient."""

    def __init__(self, smallest):
        self.smallest = smallest
        super().__init__(f"frame is rank deficient (smallest triangular "
                         f"diagonal {smallest:.3e})")


class ConsistentSplittingError(MhdShockError):
    """A limiting coefficient matrix has a near-center eigenvalue."""

    def __init__(self, eigenvalue, where=""):
        self.eigenvalue = eigenvalue
        suffix = f" at {where}" if where else ""
        super().__init__(f"consistent splitting violated{suffix}: eigenvalue "
                         f"{eigenvalue:.6g} has |Re| below tolerance")


class InvalidShockError(MhdShockError):
    """Rescaling input does not describe a left-moving shock."""


class DegenerateBifurcationError(MhdShockError):
    """K = 1: three rest points collapse and the algebra degenerates."""


class NotPhysicalError(MhdShockError):
    """Jump conditions force a non-positive pressure constant."""

    def __init__(self, a, bound):
        self.a = a
        self.bound = bound
        super().__init__(f"pressure constant a = {a:.6g} is not physical; "
                         f"field strength exceeds admissible bound {bound:.6g}")


class NonGenericConfigError(MhdShockError):
    """Rest-point function has a (near-)double root; types are ambiguous."""


class SingularConfigError(MhdShockError):
    """Rest point sits on the Alfven line v = K."""


class EntropyViolationError(MhdShockError):
    """Requested connection has increasing specific volume."""


class NoConnectionError(MhdShockError):
    """Shooting orbit escaped or failed to land at the target rest point."""


class NonConvergentOrbitError(MhdShockError):
    """Orbit exhausted the integration budget before converging."""


class NearCompositeError(MhdShockError):
    """Required truncation domain exceeds the cap; wave is near-composite."""

    def __init__(self, L_needed, L_max):
        self.L_needed = L_needed
        self.L_max = L_max
        super().__init__(f"profile needs L > {L_needed:.1f} (cap {L_max}); "
                         "treat as composite wave via analytical verdicts")


class InconclusiveError(MhdShockError):
    """Adaptive computation could not certify its result within budget."""


class ConfigurationError(MhdShockError):
    """Inconsistent options (e.g. wrong origin policy for the shock class)."""
