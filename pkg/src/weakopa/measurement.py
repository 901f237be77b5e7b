"""Conditioning the OPA output on an inefficient idler photon count.

Two independent routes to the conditional signal state are provided:

* :func:`condition_on_idler` builds the weighted mixture of photon-added
  coherent states directly;
* :func:`condition_via_oracle` builds the full two-mode state, applies the
  binomial-loss POVM to the idler and traces it out.

They share no code beyond the log-factorial table and the detection
weights, and are checked against each other in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TruncationError, ZeroProbabilityOutcome
from .fock import (
    DensityMatrix,
    FockVector,
    _log_pair_block,
    choose_truncation,
    conditional_log_tails,
    log_detection_probability,
    log_photon_added_norm2,
)
from .params import SchemeParams, nmax_cap
from .special import log_efficiency_weight, log_factorials, logsumexp, xlogy


@dataclass(frozen=True, eq=False)
class SignalEnsemble:
    """Conditional signal state as a mixture of photon-added coherent states.

    ``states[j]`` holds the Fock amplitudes of the normalized state
    ``a^dag^m |alpha'>`` with ``m = m_indices[j]``, cut at ``n_max``.
    ``truncation_loss`` is the weighted probability those cuts discard.
    """

    weights: np.ndarray
    states: np.ndarray
    m_indices: np.ndarray
    truncation_loss: float
    tail_tol: float

    @property
    def n_max(self) -> int:
        return self.states.shape[1] - 1

    def __len__(self) -> int:
        return self.weights.size

    def member(self, j: int) -> FockVector:
        return FockVector(self.states[j].astype(complex))


def log_raw_weights(params: SchemeParams, m) -> np.ndarray:
    """Unnormalized log mixture weights, including each member's squared norm.

    C(m,n) eta^n (1-eta)^(m-n) tanh^(2m) r / m! * ||a^dag^m |alpha'>||^2.
    """
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    return (
        log_efficiency_weight(m, params.n_det, params.eta)
        + xlogy(2 * m, params.tanh_r)
        - log_factorials(int(m.max(initial=0)))[m]
        + log_photon_added_norm2(params.alpha_prime, m)
    )


def _ensemble_terms(params: SchemeParams) -> np.ndarray:
    # grow the m range until the remaining weights are far below tail_tol
    n = params.n_det
    stop = math.log(params.tail_tol) - 40.0
    span = 64
    while True:
        logw = log_raw_weights(params, np.arange(n, n + span))
        peak = logw.max()
        if not np.isfinite(peak):
            raise ZeroProbabilityOutcome(
                f"detecting n={n} idler photons has zero probability "
                f"(eta={params.eta}, r={params.r})"
            )
        if logw[-1] - peak < stop and not logw[-1] >= logw[-2] > -math.inf:
            return logw
        if span > 50 * nmax_cap():
            raise TruncationError("mixture weights do not converge")
        span *= 2


def condition_on_idler(params: SchemeParams, n_max: int | None = None) -> SignalEnsemble:
    """Signal state after ``n_det`` idler counts, as a photon-added mixture.

    The member range n_det..M is the shortest one whose dropped weight is
    at most ``tail_tol``; kept weights are renormalized to sum to 1.
    """
    n_cut = n_max or params.n_max or choose_truncation(params)
    logw = _ensemble_terms(params)
    total = logsumexp(logw)
    # log weight strictly after each index, summed from the far end
    after = np.append(np.logaddexp.accumulate(logw[::-1])[::-1][1:], -np.inf) - total
    count = int(np.nonzero(after <= math.log(params.tail_tol))[0][0]) + 1
    logw = logw[:count]
    weights = np.exp(logw - logsumexp(logw))
    weights /= math.fsum(weights)
    m_idx = np.arange(params.n_det, params.n_det + count)

    a = params.alpha_prime
    lf = log_factorials(n_cut + int(m_idx[-1]))
    lognorm = log_photon_added_norm2(a, m_idx)
    k = np.arange(n_cut + 1)[None, :]
    mm = m_idx[:, None]
    d = k - mm
    ok = d >= 0
    d = np.where(ok, d, 0)
    log_amp = 0.5 * (lf[k] - lf[d]) - 0.5 * a * a + xlogy(d, a) - 0.5 * lf[d] - 0.5 * lognorm[:, None]
    states = np.where(ok, np.exp(np.where(ok, log_amp, -np.inf)), 0.0)

    # probability of each member above the cutoff, summed directly
    log_lost = log_photon_added_norm2(a, m_idx, j_from=n_cut + 1 - m_idx) - lognorm
    loss = math.fsum(weights * np.exp(log_lost))
    if loss > params.tail_tol:
        raise TruncationError(
            f"mixture members lose {loss:.3e} of weighted probability at n_max={n_cut} "
            f"(tail_tol {params.tail_tol:.1e})"
        )
    return SignalEnsemble(weights, states, m_idx, loss, params.tail_tol)


def ensemble_to_density(ens: SignalEnsemble, n_max: int | None = None) -> DensityMatrix:
    """rho = sum_j w_j |psi_j><psi_j| on photon numbers 0..n_max (not renormalized)."""
    n_cut = ens.n_max if n_max is None else n_max
    states = np.zeros((len(ens), n_cut + 1), dtype=ens.states.dtype)
    keep = min(n_cut, ens.n_max) + 1
    states[:, :keep] = ens.states[:, :keep]
    dropped = np.sum(np.abs(ens.states[:, keep:]) ** 2, axis=1)
    loss = ens.truncation_loss + math.fsum(ens.weights * dropped)
    if loss > ens.tail_tol:
        raise TruncationError(
            f"mixture members lose {loss:.3e} of weighted probability at n_max={n_cut}"
        )
    rho = (states.T * ens.weights) @ states.conj()
    return DensityMatrix(rho, loss)


def condition_via_oracle(
    params: SchemeParams, n_max: int | None = None, *, phase: float = 0.0
) -> DensityMatrix:
    """Brute-force conditional signal state from the full two-mode amplitudes.

    rho[m, m'] = sum_k P(n_det | k) c[m, k] conj(c[m', k]), divided by the
    exact detection probability; the shortfall of the trace is the
    neglected mass and must stay below ``tail_tol``. The result is then
    normalized by its trace. ``phase`` rotates the coherent seed.
    """
    n_cut = n_max or params.n_max or choose_truncation(params)
    log_p = log_detection_probability(params)
    if not math.isfinite(log_p):
        raise ZeroProbabilityOutcome(
            f"detecting n={params.n_det} idler photons has zero probability "
            f"(eta={params.eta}, r={params.r})"
        )
    k = np.arange(n_cut + 1)
    # scale before exponentiating: the joint amplitudes alone may underflow
    log_b = _log_pair_block(params, k, k) + 0.5 * (log_efficiency_weight(k, params.n_det, params.eta) - log_p)[None, :]
    b = np.exp(log_b).astype(complex)
    if phase:
        b *= np.exp(1j * phase * (k[:, None] - k[None, :]))
    rho = b @ b.conj().T
    trace = float(np.real(np.trace(rho)))
    missing = math.exp(conditional_log_tails(params, n_cut)[n_cut])
    if missing > params.tail_tol:
        raise TruncationError(
            f"conditional state: neglected probability {missing:.3e} at n_max={n_cut} "
            f"exceeds tail_tol {params.tail_tol:.1e}"
        )
    return DensityMatrix(rho / trace, missing)
