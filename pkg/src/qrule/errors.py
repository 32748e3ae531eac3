"""Exception hierarchy shared by all qrule modules."""


class QRuleError(Exception):
    """Base class for every error raised by qrule."""


class InvalidParameterError(QRuleError, ValueError):
    """A builder or configuration parameter violates its constraint."""


class JointDiscontinuityError(QRuleError):
    """A slope was requested exactly on a joint where V jumps."""


class TurningPointError(QRuleError):
    """The turning-point structure at the requested energy is unusable."""


class TangencyError(TurningPointError):
    """V - E has a double root (energy at a well bottom or barrier top)."""


class NonConfiningError(TurningPointError):
    """A tail of the potential stays at or below the energy."""


class PoleError(QRuleError, ValueError):
    """Argument sits on a pole of a special function."""


class ConvergenceError(QRuleError):
    """A series or iterative method ran out of iterations."""


class TruncationError(QRuleError):
    """The integration start point is not deep enough in the forbidden tail."""


class IntegrationOverflowError(QRuleError):
    """Renormalization could not keep the propagated state finite."""


class QuadratureError(QRuleError):
    """Quadrature found the integrand outside its region's kind."""


class CoverageError(QRuleError):
    """A trace does not cover the requested interval."""


class DegenerateStateError(QRuleError):
    """phi vanishes exactly at a turning point, the boundary terms are undefined."""


class DomainTooSmallError(QRuleError):
    """Finite-difference eigenvector has weight at the Dirichlet walls."""


class ConfigError(QRuleError):
    """Malformed or out-of-range job configuration."""
