"""Stable special functions used by the Fock-space pipeline.

Everything here works either in the log domain or with a running scale
factor, so that cutoffs of a few thousand photons do not overflow.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

_RESCALE = 1e150
_LOG_PI_QUARTER = 0.25 * math.log(math.pi)


@lru_cache(maxsize=8)
def _log_factorial_table(n: int, dtype=np.float64) -> np.ndarray:
    if dtype is np.float64:
        out = _log_factorial_table(n, np.longdouble).astype(np.float64)
    else:
        # accumulate in extended precision
        logs = np.log(np.arange(1, n + 1, dtype=np.longdouble))
        out = np.zeros(n + 1, dtype=np.longdouble)
        out[1:] = np.cumsum(logs)
    out.setflags(write=False)
    return out


def _table_size(n: int) -> int:
    # round the table size up so repeated calls hit the cache
    return max(64, 1 << max(0, int(n)).bit_length())


def log_factorials(n: int) -> np.ndarray:
    """Return ``log(k!)`` for k = 0..n."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    return _log_factorial_table(_table_size(n))[: n + 1]


def xlogy(k, y: float):
    """``k * log(y)`` with the convention ``0 * log(0) = 0``."""
    k = np.asarray(k, dtype=float)
    if y == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(y)


def logsumexp(values: np.ndarray, axis=None):
    """Log of a sum of exponentials; all ``-inf`` input gives ``-inf``."""
    values = np.asarray(values, dtype=float)
    peak = np.max(values, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        total = np.log(np.sum(np.exp(values - safe), axis=axis, keepdims=True)) + safe
    if axis is None:
        return float(total.reshape(()))
    return np.squeeze(total, axis=axis)


def hermite_functions(x, n_max: int) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions psi_0..psi_{n_max} at ``x``.

    Convention: ``x = (a + a^dag)/sqrt(2)``, so
    ``psi_0(x) = pi^(-1/4) exp(-x^2/2)``. Uses the normalized three-term
    recursion with a per-point running scale; values that are truly below
    the double range come out as 0.

    Returns shape ``(n_max+1,)`` for scalar ``x`` and ``(len(x), n_max+1)``
    otherwise.
    """
    if n_max < 0:
        raise DomainError(f"n_max must be nonnegative, got {n_max}")
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).ravel()

    out = np.empty((xs.size, n_max + 1))
    log_scale = -0.5 * xs * xs - _LOG_PI_QUARTER
    prev = np.zeros_like(xs)
    cur = np.ones_like(xs)
    out[:, 0] = np.exp(log_scale)
    sqrt2x = math.sqrt(2.0) * xs
    for n in range(n_max):
        nxt = math.sqrt(1.0 / (n + 1)) * sqrt2x * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            factor = np.abs(cur[big])
            cur[big] /= factor
            prev[big] /= factor
            log_scale[big] += np.log(factor)
        out[:, n + 1] = cur * np.exp(log_scale)
    return out[0] if scalar else out


def log_laguerre_sequence(n_max: int, q: float) -> np.ndarray:
    """``log L_k(q)`` for k = 0..n_max and ``q <= 0``.

    For ``q <= 0`` every Laguerre polynomial is positive and the forward
    recursion ``(k+1) L_{k+1} = (2k+1-q) L_k - k L_{k-1}`` follows the
    dominant solution, so it is stable.
    """
    if q > 0:
        raise DomainError(f"laguerre is only supported for q <= 0, got q={q}")
    if n_max < 0:
        raise DomainError(f"order must be nonnegative, got {n_max}")
    out = np.empty(n_max + 1)
    out[0] = 0.0
    if n_max == 0:
        return out
    prev, cur, log_scale = 1.0, 1.0 - q, 0.0
    out[1] = math.log(cur)
    for k in range(1, n_max):
        prev, cur = cur, ((2 * k + 1 - q) * cur - k * prev) / (k + 1)
        if cur > _RESCALE:
            prev /= cur
            log_scale += math.log(cur)
            cur = 1.0
        out[k + 1] = math.log(cur) + log_scale
    return out


def laguerre(n: int, q: float) -> float:
    """Laguerre polynomial ``L_n(q)`` for ``q <= 0`` (may be ``inf`` for huge n)."""
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    log_value = log_laguerre_sequence(n, q)[n]
    with np.errstate(over="ignore"):
        return float(np.exp(log_value))


def _log_binomial_ld(m: np.ndarray, n: int, eta: float) -> np.ndarray:
    # extended-precision log of C(m,n) eta^n (1-eta)^(m-n); -inf where m < n
    lf = _log_factorial_table(_table_size(int(m.max(initial=0))), np.longdouble)
    eta_ld = np.longdouble(eta)
    valid = m >= n
    d = np.where(valid, m - n, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_eta = np.log(eta_ld) * n if n else np.longdouble(0)
        log_miss = np.where(d > 0, d * np.log1p(-eta_ld), np.longdouble(0))
    out = lf[np.where(valid, m, 0)] - lf[n] - lf[d] + log_eta + log_miss
    out = np.where(valid, out, -np.inf)
    return np.where(np.isnan(out), -np.inf, out)


def _check_weight_args(m: np.ndarray, n: int, eta: float):
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    if n < 0 or (m < 0).any():
        raise DomainError("photon numbers must be nonnegative")


def log_efficiency_weight(m, n: int, eta: float) -> np.ndarray:
    """Log of the binomial detection probability, vectorized over ``m``.

    ``C(m, n) eta^n (1-eta)^(m-n)``: probability that a detector of
    efficiency ``eta`` registers ``n`` of ``m`` incident photons. Entries
    with ``m < n`` are ``-inf``. Evaluated in extended precision.
    """
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    _check_weight_args(m, n, eta)
    return _log_binomial_ld(m, n, eta).astype(np.float64)


def efficiency_weight(m: int, n: int, eta: float) -> float:
    """Probability of registering ``n`` counts from ``m`` photons at efficiency ``eta``."""
    if m < n:
        raise DomainError(f"cannot register n={n} counts from m={m} photons")
    return float(detection_distribution(m, eta)[n])


def detection_distribution(m: int, eta: float) -> np.ndarray:
    """Weights for n = 0..m registered counts out of ``m`` photons.

    Exponentiated before rounding to double, so the entries sum to 1 to
    within a few units in the last place.
    """
    mm = np.atleast_1d(np.asarray(m, dtype=np.int64))
    if mm.size != 1:
        raise DomainError("detection_distribution takes a single photon number")
    _check_weight_args(mm, 0, eta)
    m = int(mm[0])
    lf = _log_factorial_table(_table_size(m), np.longdouble)
    n = np.arange(m + 1)
    eta_ld = np.longdouble(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = (
            lf[m] - lf[n] - lf[m - n]
            + np.where(n > 0, n * np.log(eta_ld), np.longdouble(0))
            + np.where(m - n > 0, (m - n) * np.log1p(-eta_ld), np.longdouble(0))
        )
    log_w = np.where(np.isnan(log_w), -np.inf, log_w)
    return np.exp(log_w).astype(np.float64)
