"""Truncated Fock-space states and the OPA output state.

Amplitudes are assembled in the log domain and exponentiated once per
entry. Truncation is always checked a posteriori by summing what was kept
against what should be there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .errors import NumericalError, TruncationError, ZeroProbabilityOutcome
from .params import SchemeParams, nmax_cap
from .special import log_efficiency_weight, log_factorials, logsumexp, xlogy

# relative size below which a log-domain series term is ignored (e^-80 ~ 1e-35)
_LOG_NEGLIGIBLE = -80.0
_ROW_BLOCK = 256
# tails are summed until terms fall e^-25 below tail_tol
_TAIL_MARGIN = 25.0
# largest acceptable disagreement between the direct row sum and the exact total
_NORM_SANITY = 1e-9
# mass estimates formed as 1 - (sum kept) cannot resolve less than this
_SUBTRACTION_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class FockVector:
    amps: np.ndarray

    @property
    def n_max(self) -> int:
        return self.amps.size - 1

    @property
    def norm2(self) -> float:
        return math.fsum(np.abs(self.amps) ** 2)


@dataclass(frozen=True, eq=False)
class TwoModeState:
    """Joint amplitudes ``amps[m, k]``: m signal photons, k idler photons.

    ``tail_mass`` is the probability left outside the cutoff, computed
    against the exact overall prefactor.
    """

    amps: np.ndarray
    tail_mass: float

    @property
    def n_max(self) -> int:
        return self.amps.shape[0] - 1

    def idler_marginal(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=0)

    def signal_marginal(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Single-mode density matrix in the Fock basis, Hermitian by construction.

    ``tail_mass`` records the probability the construction had to leave
    outside the cutoff (a diagnostic, 0 when unknown).
    """

    rho: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        rho = 0.5 * (rho + rho.conj().T)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_vector(cls, vec: FockVector) -> "DensityMatrix":
        a = np.asarray(vec.amps, dtype=complex)
        return cls(np.outer(a, a.conj()))

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    @property
    def purity(self) -> float:
        return float(np.real(np.sum(self.rho * self.rho.T)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    def resized(self, n_max: int) -> "DensityMatrix":
        """Zero-pad or cut to a new cutoff."""
        out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        keep = min(n_max, self.n_max) + 1
        out[:keep, :keep] = self.rho[:keep, :keep]
        return DensityMatrix(out, self.tail_mass)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of the difference (the smaller matrix is zero-padded)."""
    n = max(a.n_max, b.n_max)
    diff = a.resized(n).rho - b.resized(n).rho
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _check_tail(tail: float, tail_tol: float, what: str):
    if tail > tail_tol:
        raise TruncationError(
            f"{what}: neglected probability {tail:.3e} exceeds tail_tol {tail_tol:.1e}"
        )


def coherent_state(alpha_prime: complex, n_max: int, tail_tol: float = 1e-12) -> FockVector:
    """|alpha'> on photon numbers 0..n_max.

    Amplitudes are the exact (not renormalized) expansion coefficients; the
    missing Poisson tail must stay below ``tail_tol``.
    """
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    mod = abs(alpha_prime)
    k = np.arange(n_max + 1)
    log_amp = -0.5 * mod * mod + xlogy(k, mod) - 0.5 * log_factorials(n_max)
    amps = np.exp(log_amp).astype(complex)
    if mod > 0 and alpha_prime != mod:
        amps *= np.exp(1j * np.angle(alpha_prime) * k)
    # Poisson mass above n_max is the regularized lower incomplete gamma P(n_max+1, |a|^2)
    tail = float(gammainc(n_max + 1, mod * mod)) if mod > 0 else 0.0
    _check_tail(tail, tail_tol, f"coherent state alpha={alpha_prime}")
    return FockVector(amps)


def log_photon_added_norm2(alpha_prime: float, m, j_from=None) -> np.ndarray:
    """``log ||a^dag^m |alpha'>||^2`` by direct summation over the Fock support.

    Sums ``(m+j)!/j! * e^{-a^2} a^{2j}/j!`` over j until the terms are
    negligible, for each requested m. With ``j_from`` (one entry per m)
    only the terms with ``j >= j_from`` are kept, which gives the norm that
    lies above a cutoff without any cancellation.
    """
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    lower = np.zeros_like(m) if j_from is None else np.broadcast_to(np.asarray(j_from, dtype=np.int64), m.shape)
    lower = np.maximum(lower, 0)
    a2 = float(alpha_prime) ** 2
    if a2 == 0.0:
        return np.where(lower == 0, log_factorials(int(m.max(initial=0)))[m], -np.inf)
    m_top = int(m.max(initial=0))
    span = int(a2 + 12.0 * math.sqrt(a2) + 3.0 * math.sqrt(a2 * (m_top + 1)) + 40) + int(lower.max(initial=0))
    while True:
        lf = log_factorials(m_top + span)
        j = np.arange(span + 1)
        terms = lf[m[:, None] + j] - 2.0 * lf[j] - a2 + j * math.log(a2)
        peak = terms.max(axis=1)
        if np.all(terms[:, -1] - peak < _LOG_NEGLIGIBLE) and np.all(terms[:, -1] < terms[:, -2]):
            terms = np.where(j[None, :] >= lower[:, None], terms, -np.inf)
            return logsumexp(terms, axis=1)
        span *= 2


def photon_added_coherent(base: FockVector, m: int, tail_tol: float = 1e-12) -> FockVector:
    """Normalized ``a^dag^m |base>`` on the same cutoff as ``base``.

    The raised vector is formed on an extended support first, so the
    normalization uses its full norm; the part pushed beyond the cutoff
    must stay below ``tail_tol``.
    """
    if m < 0:
        raise ValueError(f"m must be nonnegative, got {m}")
    if m == 0:
        return base
    amps = np.asarray(base.amps, dtype=complex)
    n = amps.size
    lf = log_factorials(n - 1 + m)
    with np.errstate(divide="ignore"):
        log_b = np.log(np.abs(amps))
    j = np.arange(n)
    log_out = log_b + 0.5 * (lf[j + m] - lf[j])
    if not np.isfinite(log_out).any():
        raise TruncationError("photon-added state has zero norm within the cutoff")
    shift = np.max(log_out)
    mags = np.exp(log_out - shift)
    total = math.fsum(mags**2)
    if total == 0.0:
        raise TruncationError("photon-added state norm underflows")
    phase = np.where(np.abs(amps) > 0, np.exp(1j * np.angle(amps)), 0)
    extended = np.zeros(n + m, dtype=complex)
    extended[m:] = phase * mags / math.sqrt(total)
    _check_tail(math.fsum(np.abs(extended[n:]) ** 2), tail_tol, f"{m}-photon-added state")
    return FockVector(extended[:n])


def _log_pair_prefactor(p: SchemeParams) -> float:
    # e^{-|alpha|^2 tanh^2 r / 2} / cosh r, times the e^{-alpha'^2/2} of |alpha'>
    return -0.5 * p.alpha**2 - math.log(math.cosh(p.r))


def _log_pair_block(p: SchemeParams, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """log|c[m, k]| for the OPA output; -inf where m < k.

    c[m, k] = pref * t^k / sqrt(k!) * sqrt(m!/(m-k)!) * a'^(m-k) / sqrt((m-k)!),
    the sqrt(k!) coming from b^dag^k |0> = sqrt(k!) |k>.
    """
    lf = log_factorials(int(max(rows.max(initial=0), cols.max(initial=0))))
    m = rows[:, None]
    k = cols[None, :]
    d = m - k
    valid = d >= 0
    d = np.where(valid, d, 0)
    out = (
        _log_pair_prefactor(p)
        + xlogy(k, p.tanh_r)
        - 0.5 * lf[k]
        + 0.5 * lf[m]
        - lf[d]
        + xlogy(d, p.alpha_prime)
    )
    return np.where(valid, out, -np.inf)


def opa_two_mode_state(
    params: SchemeParams,
    n_max: int | None = None,
    *,
    check_tail: bool = True,
    phase: float = 0.0,
) -> TwoModeState:
    """Signal/idler amplitudes after the OPA acting on |alpha, 0>.

    ``phase`` rotates the coherent seed to ``alpha * e^{i phase}``; the
    public parameters stay real.
    """
    n = n_max or params.n_max or choose_truncation(params)
    idx = np.arange(n + 1)
    amps = np.exp(_log_pair_block(params, idx, idx)).astype(complex)
    if phase:
        amps *= np.exp(1j * phase * (idx[:, None] - idx[None, :]))
    tail = 1.0 - math.fsum(np.abs(amps).ravel() ** 2)
    if check_tail:
        _check_tail(tail, max(params.tail_tol, _SUBTRACTION_FLOOR), "two-mode OPA state")
    return TwoModeState(amps, max(tail, 0.0))


def log_detection_probability(params: SchemeParams) -> float:
    """log of the probability that the idler detector registers ``n_det`` counts.

    Sums detection weight times the full norm of each idler column, the
    columns being summed directly over the signal index.
    """
    t = params.tanh_r
    a = params.alpha_prime
    n = params.n_det
    if t == 0.0:
        return float(log_efficiency_weight(0, n, params.eta)[0] + 2 * _log_pair_prefactor(params) + a * a)
    span = max(64, 2 * n + 64)
    while True:
        k = np.arange(n, n + span)
        terms = (
            log_efficiency_weight(k, n, params.eta)
            + 2.0 * _log_pair_prefactor(params)
            + a * a
            + 2.0 * xlogy(k, t)
            - log_factorials(int(k[-1]))[k]
            + log_photon_added_norm2(a, k)
        )
        peak = terms.max()
        if not np.isfinite(peak):
            return -math.inf
        if terms[-1] - peak < _LOG_NEGLIGIBLE and not terms[-1] >= terms[-2] > -math.inf:
            return logsumexp(terms)
        if n + span > 50 * nmax_cap():
            raise TruncationError("idler detection probability series does not converge")
        span *= 2


def conditional_log_diagonal(params: SchemeParams, n_max: int) -> np.ndarray:
    """Unnormalized log of the conditional signal photon distribution, 0..n_max."""
    rows_all = np.arange(n_max + 1)
    logw = log_efficiency_weight(rows_all, params.n_det, params.eta)
    out = np.empty(n_max + 1)
    for start in range(0, n_max + 1, _ROW_BLOCK):
        rows = rows_all[start : start + _ROW_BLOCK]
        cols = np.arange(rows[-1] + 1)
        block = 2.0 * _log_pair_block(params, rows, cols) + logw[None, : cols.size]
        out[rows] = logsumexp(block, axis=1)
    return out


def _heuristic_cutoff(params: SchemeParams) -> int:
    eps = params.epsilon
    a2 = params.alpha_prime**2
    n_th = eps / (1.0 - eps)
    d2 = a2 / (1.0 - eps) ** 2
    mean = n_th + d2 + params.n_det / (1.0 - eps)
    var = n_th * (n_th + 1.0) + d2 * (2.0 * n_th + 1.0) + params.n_det
    geometric = math.log(params.tail_tol) / math.log(eps) if eps > 0 else 0.0
    return int(mean + 8.0 * math.sqrt(var + 1.0) + geometric + 10)


def conditional_log_tails(params: SchemeParams, reach: int = 0, cap: int | None = None) -> np.ndarray:
    """``tails[N]`` = log of the conditional signal probability above photon number N.

    Rows of the conditional photon distribution are summed directly, far
    enough that the last terms sit well below ``tail_tol`` and are falling;
    what lies beyond is bounded by a geometric series with the last
    observed ratio. The returned array covers at least 0..reach.
    """
    cap = cap or nmax_cap()
    log_total = log_detection_probability(params)
    if not math.isfinite(log_total):
        raise ZeroProbabilityOutcome(
            f"detecting n={params.n_det} idler photons has zero probability "
            f"(eta={params.eta}, r={params.r})"
        )
    target = math.log(params.tail_tol) - _TAIL_MARGIN
    size = max(reach + 8, _heuristic_cutoff(params), 16)
    while True:
        rel = conditional_log_diagonal(params, size) - log_total
        last, before = rel[-1], rel[-2]
        if last < target and not last >= before > -math.inf:
            break
        if size >= 2 * cap:
            raise TruncationError(
                f"cutoff would exceed the hard cap {cap} "
                f"(conditional distribution still at {math.exp(last):.3e} near n={size})"
            )
        size = min(2 * size, 2 * cap)
    norm_err = abs(math.expm1(logsumexp(rel)))
    if norm_err > _NORM_SANITY:
        raise NumericalError(f"conditional photon distribution sums to 1 - {norm_err:.3e}")
    if np.isfinite(last) and np.isfinite(before):
        step = last - before
        remainder = last + step - math.log(-math.expm1(step))
    else:
        remainder = -math.inf
    rev = np.logaddexp.accumulate(rel[::-1])[::-1]
    tails = np.empty_like(rel)
    tails[:-1] = np.logaddexp(rev[1:], remainder)
    tails[-1] = remainder
    return tails


def choose_truncation(params: SchemeParams, cap: int | None = None) -> int:
    """Smallest cutoff leaving less than ``tail_tol`` of the conditional signal state out.

    A displaced-thermal estimate gives the starting size; the decision is
    made by direct summation of the conditional photon distribution's tail.
    """
    cap = cap or nmax_cap()
    tails = conditional_log_tails(params, cap=cap)
    n = int(np.nonzero(tails < math.log(params.tail_tol))[0][0])
    if n > cap:
        raise TruncationError(f"required cutoff {n} exceeds the hard cap {cap}")
    return max(n, 1)
