"""Exception hierarchy shared by all modules."""


class CommuteError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CommuteError, ValueError):
    """An argument lies outside the admissible domain."""


class IntegrationError(CommuteError, RuntimeError):
    """The ODE integrator failed (typically step-size underflow).

    Attributes
    ----------
    x : float or None
        Abscissa at which the integrator gave up.
    """

    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} (at x={x:.17g})")
        self.x = x


class SeriesError(CommuteError, RuntimeError):
    """A Frobenius series did not converge at the requested point."""


class PositivityError(CommuteError, ValueError):
    """A commutation seed is not of one sign on its certificate grid."""

    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} (at x={x:.17g})")
        self.x = x


class WeylPoleError(CommuteError, ArithmeticError):
    """W(phi, u_+) vanishes to working precision: z sits at a pole of M."""


class SeedError(CommuteError, ValueError):
    """GBDT seed data violate the Lyapunov/Hermitian conditions."""


class SingularTransformError(CommuteError, ArithmeticError):
    """S(x) lost positive definiteness, so the GBDT step is undefined."""

    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} (at x={x:.17g})")
        self.x = x


class ConfigError(CommuteError, ValueError):
    """A run configuration or seed file could not be parsed or validated."""
