"""Closed-form statistics of the signal state conditioned on zero idler counts.

All of these depend on the parameters only through
``epsilon = (1 - eta) tanh^2 r`` and ``alpha' = alpha / cosh r``. The
conditional state is a displaced thermal state: thermal occupation
epsilon/(1-epsilon), displacement alpha'/(1-epsilon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UndefinedMandelQ
from .params import SchemeParams
from .special import log_factorials, log_laguerre_sequence


@dataclass(frozen=True)
class ClosedFormContext:
    epsilon: float
    alpha_prime: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.alpha_prime < 0:
            raise ConfigError(f"alpha' must be nonnegative, got {self.alpha_prime}")

    @classmethod
    def from_params(cls, params: SchemeParams) -> "ClosedFormContext":
        return cls(params.epsilon, params.alpha_prime)

    @classmethod
    def from_physical(cls, alpha: float, r: float, eta: float) -> "ClosedFormContext":
        return cls((1.0 - eta) * math.tanh(r) ** 2, alpha / math.cosh(r))


def quad_peak(ctx: ClosedFormContext) -> float:
    """Location of the quadrature maximum, sqrt(2) alpha' / (1 - epsilon)."""
    return math.sqrt(2.0) * (ctx.alpha_prime / (1.0 - ctx.epsilon))


def quad_width2(ctx: ClosedFormContext) -> float:
    """2 (delta x)^2 = (1 + epsilon) / (1 - epsilon)."""
    return (1.0 + ctx.epsilon) / (1.0 - ctx.epsilon)


def quad_pdf(ctx: ClosedFormContext, x):
    """Gaussian quadrature density.

    The exponent uses the squared distance from the peak; without the
    square the expression is not a normalizable density.
    """
    e = ctx.epsilon
    k = (1.0 - e) / (1.0 + e)
    x = np.asarray(x, dtype=float)
    return math.sqrt(k / math.pi) * np.exp(-k * (x - quad_peak(ctx)) ** 2)


def photon_pmf(ctx: ClosedFormContext, n):
    """(1-eps) e^{-a'^2/(1-eps)} eps^n L_n(-a'^2/eps); Poisson(a'^2) at eps = 0."""
    n = np.asarray(n, dtype=np.int64)
    top = int(n.max(initial=0))
    e = ctx.epsilon
    a2 = ctx.alpha_prime**2
    if e == 0.0:
        if a2 == 0.0:
            return np.where(n == 0, 1.0, 0.0)
        log_p = -a2 + n * math.log(a2) - log_factorials(top)[n]
        return np.exp(log_p)
    log_l = log_laguerre_sequence(top, -a2 / e)
    log_p = math.log1p(-e) - a2 / (1.0 - e) + n * math.log(e) + log_l[n]
    return np.exp(log_p)


def photon_pmf_series(ctx: ClosedFormContext, n: int) -> float:
    """Same probability from the finite sum over m of n!/(m! (n-m)!^2) q^(n-m).

    Independent of the Laguerre recursion; terms are summed with
    ``math.fsum`` in the log domain, q = alpha'^2 / epsilon.
    """
    e = ctx.epsilon
    a2 = ctx.alpha_prime**2
    if e == 0.0:
        raise ConfigError("the finite-sum form needs epsilon > 0")
    lf = log_factorials(n)
    m = np.arange(n + 1)
    if a2 == 0.0:
        log_terms = np.where(m == n, 0.0, -np.inf)
    else:
        log_terms = lf[n] - lf[m] - 2.0 * lf[n - m] + (n - m) * math.log(a2 / e)
    peak = float(np.max(log_terms))
    series = math.fsum(np.exp(log_terms - peak))
    return math.exp(math.log1p(-e) - a2 / (1.0 - e) + n * math.log(e) + peak) * series


def mean_photons(ctx: ClosedFormContext) -> float:
    e = ctx.epsilon
    return (e - e * e + ctx.alpha_prime**2) / (1.0 - e) ** 2


def mandel_q(ctx: ClosedFormContext) -> float:
    e = ctx.epsilon
    a2 = ctx.alpha_prime**2
    s = e - e * e + a2
    if s == 0.0:
        raise UndefinedMandelQ("Mandel Q is undefined for the vacuum (epsilon = alpha' = 0)")
    return (s * (1.0 - e + a2) - a2 * a2) / ((1.0 - e) ** 2 * s) - 1.0


def wigner_center(ctx: ClosedFormContext) -> complex:
    return complex(ctx.alpha_prime / (1.0 - ctx.epsilon), 0.0)


def wigner_peak(ctx: ClosedFormContext) -> float:
    e = ctx.epsilon
    return 2.0 * (1.0 - e) / (math.pi * (1.0 + e))


def wigner_gaussian(ctx: ClosedFormContext, gamma):
    e = ctx.epsilon
    g = np.asarray(gamma, dtype=complex)
    spread = 2.0 * (1.0 - e) / (1.0 + e)
    return wigner_peak(ctx) * np.exp(-spread * np.abs(g - wigner_center(ctx)) ** 2)
