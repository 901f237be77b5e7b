"""Exception hierarchy shared by the library and the command line front end."""


class WeakOPAError(Exception):
    """Base class for all package errors."""


class ConfigError(WeakOPAError, ValueError):
    """Invalid physical parameters or run configuration."""


class DomainError(WeakOPAError, ValueError):
    """Special function evaluated outside its supported domain."""


class NumericalError(WeakOPAError, ArithmeticError):
    """Base class for failures of the numerical pipeline itself."""


class TruncationError(NumericalError):
    """The Fock cutoff leaves more probability mass out than allowed."""


class ZeroProbabilityOutcome(NumericalError):
    """The requested idler detection record cannot occur for these parameters."""


class GridTooNarrowError(NumericalError):
    """A sampling grid cuts off a non-negligible part of a distribution."""


class NegativeProbabilityError(NumericalError):
    """A probability came out below the round-off clipping threshold."""


class UndefinedMandelQ(NumericalError):
    """Mandel Q requested for a state with zero mean photon number."""
