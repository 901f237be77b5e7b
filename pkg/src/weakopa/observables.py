"""Quadrature, photon-number, moment and Wigner statistics of a density matrix.

These are the numerical ground truth that the closed forms are checked
against. Distributions are returned as computed, with their normalization
residual attached, and are never silently renormalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridTooNarrowError, NegativeProbabilityError
from .fock import DensityMatrix
from .special import hermite_functions, log_factorials

CLIP_TOL = 1e-12
NEGATIVE_TOL = 1e-9
BOUNDARY_TOL = 1e-12
_CHUNK = 1024
_RESCALE = 1e150
_MAX_WIDEN = 8


class GridSpec(NamedTuple):
    lo: float
    hi: float
    step: float

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"min:max:step"``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must look like min:max:step, got {text!r}")
        lo, hi, step = (float(p) for p in parts)
        return cls(lo, hi, step).validated()

    def validated(self) -> "GridSpec":
        if not all(math.isfinite(v) for v in self):
            raise ValueError(f"grid values must be finite, got {tuple(self)}")
        if self.step <= 0 or self.hi <= self.lo:
            raise ValueError(f"grid needs min < max and step > 0, got {tuple(self)}")
        return self

    def points(self) -> np.ndarray:
        count = int(round((self.hi - self.lo) / self.step)) + 1
        return self.lo + self.step * np.arange(count)


@dataclass(frozen=True, eq=False)
class Distribution1D:
    """Sampled density (``axis="quadrature"``) or mass function (``"photon-number"``)."""

    axis: str
    coords: np.ndarray
    values: np.ndarray
    norm_residual: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.coords.tolist(), self.values.tolist()))

    def argmax(self) -> float:
        return float(self.coords[int(np.argmax(self.values))])

    def _weights(self) -> np.ndarray:
        if self.axis == "quadrature":
            # trapezoid weights on the uniform grid
            w = np.full(self.coords.size, self.coords[1] - self.coords[0])
            w[[0, -1]] *= 0.5
            return self.values * w
        return self.values

    def total(self) -> float:
        return math.fsum(self._weights())

    def mean(self) -> float:
        w = self._weights()
        return math.fsum(w * self.coords) / math.fsum(w)

    def variance(self) -> float:
        w = self._weights()
        mu = self.mean()
        return math.fsum(w * (self.coords - mu) ** 2) / math.fsum(w)


@dataclass(frozen=True, eq=False)
class MomentReport:
    """Photon-number moments; ``mandel_q`` is NaN when the mean is zero."""

    mean_n: float
    var_n: float
    mandel_q: float

    @property
    def q_defined(self) -> bool:
        return not math.isnan(self.mandel_q)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """W(gamma) on ``values[i_im, i_re]`` with gamma = re + i*im."""

    re_range: GridSpec
    im_range: GridSpec
    values: np.ndarray

    @property
    def re(self) -> np.ndarray:
        return self.re_range.points()

    @property
    def im(self) -> np.ndarray:
        return self.im_range.points()

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.re, axis=1), self.im))

    def peak(self) -> tuple[complex, float]:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return complex(self.re[j], self.im[i]), float(self.values[i, j])

    def quadrature_marginal(self) -> tuple[np.ndarray, np.ndarray]:
        """Integrate over Im gamma and rescale to the x = sqrt(2) Re gamma density."""
        along_re = np.trapezoid(self.values, self.im, axis=0)
        return math.sqrt(2.0) * self.re, along_re / math.sqrt(2.0)


def _clip(values: np.ndarray, what: str) -> np.ndarray:
    low = float(values.min(initial=0.0))
    if low < -NEGATIVE_TOL:
        raise NegativeProbabilityError(f"{what}: probability {low:.3e} below -{NEGATIVE_TOL:g}")
    return np.where(values < 0.0, 0.0, values)


def _rho(rho) -> np.ndarray:
    return rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _quadrature_values(rho: np.ndarray, xs: np.ndarray) -> np.ndarray:
    n_max = rho.shape[0] - 1
    out = np.empty(xs.size)
    for start in range(0, xs.size, 4 * _CHUNK):
        h = hermite_functions(xs[start : start + 4 * _CHUNK], n_max)
        out[start : start + h.shape[0]] = np.real(np.sum((h @ rho) * h, axis=1))
    return out


def quadrature_distribution(
    rho, grid=GridSpec(-5.0, 25.0, 0.01), *, auto_widen: bool = False
) -> Distribution1D:
    """P(x) = sum_{mn} psi_m(x) rho[m, n] psi_n(x) for x = (a + a^dag)/sqrt(2).

    The density at both grid ends must be below 1e-12. With ``auto_widen``
    the offending side is pushed outward (grid step kept) until it is;
    otherwise :class:`GridTooNarrowError` is raised.
    """
    rho = _rho(rho)
    grid = GridSpec(*grid).validated()
    for _ in range(_MAX_WIDEN + 1):
        xs = grid.points()
        values = _quadrature_values(rho, xs)
        low_bad = values[0] >= BOUNDARY_TOL
        high_bad = values[-1] >= BOUNDARY_TOL
        if not (low_bad or high_bad):
            break
        if not auto_widen:
            raise GridTooNarrowError(
                f"quadrature density at the grid boundary is "
                f"{max(values[0], values[-1]):.3e} (grid {tuple(grid)})"
            )
        width = grid.hi - grid.lo
        grid = GridSpec(grid.lo - width * low_bad, grid.hi + width * high_bad, grid.step)
    else:
        raise GridTooNarrowError(f"quadrature grid still too narrow after widening to {tuple(grid)}")
    values = _clip(values, "quadrature distribution")
    total = float(np.trapezoid(values, xs))
    return Distribution1D("quadrature", xs, values, abs(1.0 - total))


def photon_distribution(rho) -> Distribution1D:
    """P(n) = rho[n, n]."""
    rho = _rho(rho)
    values = _clip(np.real(np.diagonal(rho)).copy(), "photon distribution")
    n = np.arange(values.size)
    return Distribution1D("photon-number", n, values, abs(1.0 - math.fsum(values)))


def moments(rho) -> MomentReport:
    """Mean, variance and Mandel Q of the photon number.

    The diagonal is divided by its sum, so a slightly sub-normalized
    truncated state still gives the moments of the state it represents.
    """
    p = photon_distribution(rho).values
    p = p / math.fsum(p)
    n = np.arange(p.size, dtype=float)
    mean = math.fsum(n * p)
    var = math.fsum((n - mean) ** 2 * p)
    q = var / mean - 1.0 if mean > 0 else math.nan
    return MomentReport(mean, var, q)


def _wigner_values(rho: np.ndarray, gamma: np.ndarray, d_top: int) -> np.ndarray:
    """(2/pi) Tr[rho D(2 gamma) Parity] through normalized Laguerre functions.

    For each diagonal offset d the matrix element of the displaced parity
    is (-1)^n l_n^d(x), x = 4|gamma|^2, with l_n^d the normalized
    Laguerre function sqrt(n!/(n+d)!) x^(d/2) e^(-x/2) L_n^(d)(x). It is
    advanced in n by its three-term recursion, which follows the dominant
    solution, with a running scale to survive underflow of the start value.
    Only offsets d <= d_top are summed.
    """
    n_max = rho.shape[0] - 1
    x = 4.0 * np.abs(gamma) ** 2
    theta = np.angle(gamma)
    d = np.arange(d_top + 1)[:, None]
    lf = log_factorials(n_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_x = np.log(x)[None, :]
        log_scale = np.where(d == 0, 0.0, 0.5 * d * log_x) - 0.5 * lf[d] - 0.5 * x[None, :]
    scale = np.exp(log_scale)
    # diags[n, d] = rho[n, n + d], doubled for d > 0 (the d and -d terms pair up)
    diags = np.zeros((n_max + 1, d_top + 1), dtype=complex)
    for off in range(d_top + 1):
        diags[: n_max + 1 - off, off] = np.diagonal(rho, off) * (2.0 if off else 1.0)
    real_only = not np.any(diags.imag)
    cos_d = np.cos(d * theta[None, :])
    sin_d = None if real_only else np.sin(d * theta[None, :])

    prev = np.zeros((d_top + 1, x.size))
    cur = np.ones((d_top + 1, x.size))
    acc = np.zeros(x.size)
    for n in range(n_max + 1):
        live = min(d_top, n_max - n) + 1
        coef = cur[:live] * scale[:live]
        h = diags[n, :live, None].real * cos_d[:live]
        if not real_only:
            h -= diags[n, :live, None].imag * sin_d[:live]
        term = np.einsum("ij,ij->j", coef, h)
        acc += -term if n % 2 else term
        if n == n_max:
            break
        dd = d[:live]
        nxt = (2 * n + 1 + dd - x[None, :]) * cur[:live]
        nxt -= (math.sqrt(n) * np.sqrt(n + dd)) * prev[:live]
        nxt /= np.sqrt((n + 1) * (n + 1.0 + dd))
        prev[:live] = cur[:live]
        cur[:live] = nxt
        if n % 4 == 3:
            big = np.abs(cur) > _RESCALE
            if big.any():
                f = np.abs(cur[big])
                cur[big] /= f
                prev[big] /= f
                log_scale[big] += np.log(f)
                scale[big] = np.exp(log_scale[big])
    return (2.0 / math.pi) * acc


def _significant_offsets(rho: np.ndarray, tol: float = 1e-14) -> int:
    # |l_n^d| <= 1, so dropping offsets > d_top changes W by at most
    # (4/pi) * sum of |rho| over the dropped diagonals
    sums = np.array([np.abs(np.diagonal(rho, off)).sum() for off in range(rho.shape[0])])
    tail = np.cumsum(sums[::-1])[::-1] * (4.0 / math.pi)
    over = np.nonzero(tail >= tol)[0]
    return int(over[-1]) if over.size else 0


def wigner_at(rho, gamma) -> np.ndarray:
    """W at arbitrary complex points (same shape as ``gamma``)."""
    rho = _rho(rho)
    g = np.asarray(gamma, dtype=complex)
    flat = g.ravel()
    out = np.empty(flat.size)
    d_top = _significant_offsets(rho)
    for start in range(0, flat.size, _CHUNK):
        out[start : start + _CHUNK] = _wigner_values(rho, flat[start : start + _CHUNK], d_top)
    return out.reshape(g.shape)


def wigner(rho, re_range, im_range, *, check_boundary: bool = True) -> WignerGrid:
    """Wigner function on a rectangular grid, normalized to integrate to Tr rho.

    ``check_boundary`` requires |W| < 1e-12 along the grid edge.
    """
    re_range = GridSpec(*re_range).validated()
    im_range = GridSpec(*im_range).validated()
    re = re_range.points()
    im = im_range.points()
    rho = _rho(rho)
    if not np.any(rho.imag) and np.allclose(im, -im[::-1], rtol=0, atol=1e-12 * im_range.step):
        # real rho: W(conj gamma) = W(gamma), evaluate the upper half only
        upper = im.size // 2
        gamma = re[None, :] + 1j * im[upper:, None]
        half = wigner_at(rho, gamma)
        values = np.concatenate([half[1 if im.size % 2 else 0 :][::-1], half], axis=0)
    else:
        gamma = re[None, :] + 1j * im[:, None]
        values = wigner_at(rho, gamma)
    if check_boundary:
        edge = max(
            np.abs(values[0]).max(), np.abs(values[-1]).max(),
            np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max(),
        )
        if edge >= BOUNDARY_TOL:
            raise GridTooNarrowError(f"Wigner function at the grid edge is {edge:.3e}")
    return WignerGrid(re_range, im_range, values)
