"""Physical inputs and numerical controls for one run of the scheme."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

from .errors import ConfigError

#: environment variable overriding the hard Fock-cutoff cap
NMAX_CAP_ENV = "WEAKOPA_NMAX_CAP"
DEFAULT_NMAX_CAP = 5000


def nmax_cap() -> int:
    raw = os.environ.get(NMAX_CAP_ENV)
    if raw is None or raw == "":
        return DEFAULT_NMAX_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"{NMAX_CAP_ENV} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"{NMAX_CAP_ENV} must be positive, got {cap}")
    return cap


@dataclass(frozen=True)
class SchemeParams:
    """Coherent signal seed, OPA gain, idler detector and truncation controls.

    ``n_max=None`` lets :func:`weakopa.fock.choose_truncation` size the
    cutoff.
    """

    alpha: float
    r: float
    eta: float
    n_det: int = 0
    n_max: int | None = None
    tail_tol: float = 1e-12

    def __post_init__(self):
        for name in ("alpha", "r", "eta", "tail_tol"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha}")
        if self.r < 0:
            raise ConfigError(f"r must be nonnegative, got {self.r}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if not isinstance(self.n_det, int) or isinstance(self.n_det, bool) or self.n_det < 0:
            raise ConfigError(f"n_det must be a nonnegative integer, got {self.n_det!r}")
        if self.n_max is not None and (
            not isinstance(self.n_max, int) or isinstance(self.n_max, bool) or self.n_max < 1
        ):
            raise ConfigError(f"n_max must be a positive integer, got {self.n_max!r}")
        if not 0.0 < self.tail_tol < 1.0:
            raise ConfigError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")
        if not self.epsilon < 1.0:
            raise ConfigError(
                f"epsilon = (1-eta) tanh^2 r must be < 1, got {self.epsilon!r}"
            )

    @property
    def tanh_r(self) -> float:
        return math.tanh(self.r)

    @property
    def epsilon(self) -> float:
        """(1 - eta) tanh^2 r: sets the shift and broadening of every conditional distribution."""
        return (1.0 - self.eta) * math.tanh(self.r) ** 2

    @property
    def alpha_prime(self) -> float:
        """Coherent amplitude after the disentangling step, alpha / cosh r."""
        return self.alpha / math.cosh(self.r)

    def with_(self, **changes) -> "SchemeParams":
        return replace(self, **changes)
