"""Exception hierarchy shared by every opcalc module."""


class OpcalcError(Exception):
    """Base class for all opcalc failures."""


class SingularShift(OpcalcError):
    """The shifted matrix z - A is numerically singular (z is in the spectrum)."""


class NotDiagonalizable(OpcalcError):
    pass


class NotSectorial(OpcalcError):
    pass


class NotNormal(OpcalcError):
    pass


class NotBoundedSemigroup(OpcalcError):
    pass


class DomainMismatch(OpcalcError):
    pass


class QuadratureFailure(OpcalcError):
    pass


class QuadratureStall(QuadratureFailure):
    """Panel doubling did not settle within the allowed number of refinements."""


class TruncationFailure(QuadratureFailure):
    pass


class ContourThroughSpectrum(OpcalcError):
    pass


class AngleViolation(OpcalcError):
    pass


class CertificateMissing(OpcalcError):
    pass


class NoRegularizerFound(OpcalcError):
    """The bounded regularizer search came back empty.

    This is a search failure, not a proof that the function is not anchored.
    """


class EmptySet(OpcalcError):
    pass


class NoConvergence(OpcalcError):
    pass


class NoOperatorLimit(OpcalcError):
    pass


class UndefinedAtEigenvalue(OpcalcError):
    pass


class ConfigError(OpcalcError):
    pass


class AxiomViolation(OpcalcError):
    """An axiom check failed; ``payload`` carries the counterexample."""

    def __init__(self, axiom, residual, payload=None):
        self.axiom = axiom
        self.residual = residual
        self.payload = payload or {}
        super().__init__(f"{axiom} violated (residual {residual:.3e})")
