import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from weakopa import (
    DensityMatrix,
    GridSpec,
    GridTooNarrowError,
    NegativeProbabilityError,
    SchemeParams,
    analytic,
    coherent_state,
    condition_via_oracle,
    moments,
    photon_distribution,
    quadrature_distribution,
    wigner,
    wigner_at,
)

from conftest import ALPHA_PRIME, ensemble_rho, fig_wigner


def _fock(n, n_max=None):
    size = (n_max if n_max is not None else n) + 1
    rho = np.zeros((size, size))
    rho[n, n] = 1.0
    return DensityMatrix(rho)


def _coherent(a, n_max=80):
    return DensityMatrix.from_vector(coherent_state(a, n_max))


# ---- grid specification


def test_grid_parse():
    g = GridSpec.parse("-1:2:0.5")
    assert g == GridSpec(-1.0, 2.0, 0.5)
    assert g.points().tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]


@pytest.mark.parametrize("text", ["1:2", "a:b:c", "2:1:0.1", "0:1:0", "0:1:-0.1", "0:inf:0.1"])
def test_grid_parse_rejects(text):
    with pytest.raises(ValueError):
        GridSpec.parse(text)


# ---- quadrature distribution


def test_vacuum_quadrature():
    dist = quadrature_distribution(_fock(0), GridSpec(-8, 8, 0.01))
    assert np.allclose(dist.values, np.exp(-dist.coords**2) / math.sqrt(math.pi), atol=1e-15)
    assert dist.argmax() == pytest.approx(0.0, abs=1e-12)


def test_coherent_quadrature_peak_and_width():
    dist = quadrature_distribution(_coherent(ALPHA_PRIME), GridSpec(-5, 12, 0.01))
    assert abs(dist.argmax() - 3.0059) <= 0.01
    assert 2.0 * dist.variance() == pytest.approx(1.0, abs=1e-8)
    assert dist.mean() == pytest.approx(math.sqrt(2) * ALPHA_PRIME, abs=1e-8)
    assert dist.norm_residual < 1e-8


def test_figure_quadrature_peak():
    dist = quadrature_distribution(ensemble_rho())
    assert abs(dist.argmax() - 11.445) <= 0.01
    assert dist.norm_residual < 1e-8


def test_quadrature_grid_too_narrow():
    with pytest.raises(GridTooNarrowError):
        quadrature_distribution(_coherent(ALPHA_PRIME), GridSpec(-1, 3, 0.01))


def test_quadrature_auto_widen():
    dist = quadrature_distribution(_coherent(ALPHA_PRIME), GridSpec(-1, 3, 0.01), auto_widen=True)
    assert dist.coords[0] < -1 and dist.coords[-1] > 3
    assert dist.values[0] < 1e-12 and dist.values[-1] < 1e-12
    assert dist.norm_residual < 1e-8


def test_quadrature_of_complex_state_uses_conjugation():
    a = 1.5 * np.exp(0.6j)
    dist = quadrature_distribution(DensityMatrix.from_vector(coherent_state(a, 60)), GridSpec(-7, 9, 0.01))
    # only the real part of the amplitude moves the x quadrature
    ref = np.exp(-((dist.coords - math.sqrt(2) * a.real) ** 2)) / math.sqrt(math.pi)
    assert np.max(np.abs(dist.values - ref)) < 1e-12


def test_negative_probability_is_rejected():
    rho = DensityMatrix(np.diag([1.0 + 1e-6, -1e-6]))
    with pytest.raises(NegativeProbabilityError):
        photon_distribution(rho)


def test_tiny_negative_probability_is_clipped():
    rho = DensityMatrix(np.diag([1.0, -1e-13]))
    assert photon_distribution(rho).values.tolist() == [1.0, 0.0]


# ---- photon statistics


def test_coherent_photon_distribution_is_poisson():
    dist = photon_distribution(_coherent(ALPHA_PRIME))
    assert np.allclose(dist.values, poisson.pmf(dist.coords, ALPHA_PRIME**2), rtol=1e-12, atol=1e-300)
    assert dist.mean() == pytest.approx(4.5177, abs=1e-4)


def test_vacuum_photon_distribution():
    dist = photon_distribution(_fock(0, 5))
    assert dist.values[0] == 1.0 and dist.argmax() == 0


def test_figure_mean_photon_number():
    assert abs(photon_distribution(ensemble_rho()).mean() - 68.30) <= 0.05
    assert photon_distribution(ensemble_rho()).norm_residual < 1e-12


def test_moments():
    assert abs(moments(_coherent(ALPHA_PRIME)).mandel_q) < 1e-9
    assert moments(_fock(5)).mandel_q == pytest.approx(-1.0, abs=1e-15)
    assert abs(moments(ensemble_rho()).mandel_q - 5.499) <= 0.01


def test_vacuum_mandel_q_is_undefined():
    report = moments(_fock(0, 3))
    assert report.mean_n == 0.0 and not report.q_defined and math.isnan(report.mandel_q)


def test_moments_match_distribution():
    rho = ensemble_rho(eta=0.4)
    dist = photon_distribution(rho)
    mom = moments(rho)
    assert mom.mean_n == pytest.approx(dist.mean(), rel=1e-10)
    assert mom.var_n == pytest.approx(dist.variance(), rel=1e-10)
    assert mom.var_n >= 0
    assert mom.mandel_q == pytest.approx(mom.var_n / mom.mean_n - 1.0, rel=1e-12)


# ---- Wigner function


def test_vacuum_wigner():
    g = wigner(_fock(0), GridSpec(-4, 4, 0.1), GridSpec(-4, 4, 0.1))
    gamma = g.re[None, :] + 1j * g.im[:, None]
    assert np.max(np.abs(g.values - 2 / math.pi * np.exp(-2 * np.abs(gamma) ** 2))) < 1e-15


def test_coherent_wigner_is_shifted_vacuum():
    g = wigner(_coherent(ALPHA_PRIME), GridSpec(-3, 8, 0.1), GridSpec(-5, 5, 0.1))
    gamma = g.re[None, :] + 1j * g.im[:, None]
    ref = 2 / math.pi * np.exp(-2 * np.abs(gamma - ALPHA_PRIME) ** 2)
    assert np.max(np.abs(g.values - ref)) < 1e-12
    assert abs(g.integral() - 1.0) < 1e-6


def test_single_photon_wigner():
    gamma = np.array([0.0, 0.5, 0.3 + 0.4j, 1.2j])
    ref = 2 / math.pi * (4 * np.abs(gamma) ** 2 - 1) * np.exp(-2 * np.abs(gamma) ** 2)
    assert np.max(np.abs(wigner_at(_fock(1), gamma) - ref)) < 1e-15


def _small_state():
    return condition_via_oracle(SchemeParams(1.0, 0.5, 0.6, n_det=1))


def test_wigner_against_displaced_parity_matrix():
    rho = _small_state()
    big = 160
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    parity = np.diag((-1.0) ** np.arange(big))
    r = np.zeros((big, big), dtype=complex)
    r[: rho.n_max + 1, : rho.n_max + 1] = rho.rho
    for gamma in (0.0, 0.4 + 0.2j, -0.7 + 0.9j, 1.3 - 0.1j):
        d = expm(gamma * a.conj().T - np.conj(gamma) * a)
        w = 2 / math.pi * np.trace(r @ d @ parity @ d.conj().T).real
        assert wigner_at(rho, np.array([gamma]))[0] == pytest.approx(w, abs=1e-12)


def test_wigner_against_coherent_state_integral():
    # W(g) = (2/pi^2) e^{2|g|^2} Int <-b|rho|b> e^{-2(b g* - b* g)} d^2b, by brute force
    rho = _small_state()
    n = np.arange(rho.n_max + 1)
    h = 0.05
    axis = np.arange(-9.0, 9.0 + 1e-9, h)
    b = (axis[None, :] + 1j * axis[:, None]).ravel()
    log_norm = -0.5 * np.abs(b) ** 2
    with np.errstate(divide="ignore"):
        ket = np.exp(log_norm[:, None] - 0.5 * gammaln(n + 1.0)[None, :]) * b[:, None] ** n[None, :]
    bra = np.exp(log_norm[:, None] - 0.5 * gammaln(n + 1.0)[None, :]) * (-b[:, None]) ** n[None, :]
    kernel = np.einsum("pm,mn,pn->p", bra.conj(), rho.rho, ket)
    for gamma in (0.0, 0.3 - 0.2j, -0.5 + 0.6j):
        phase = np.exp(-2 * (b * np.conj(gamma) - np.conj(b) * gamma))
        integral = np.sum(kernel * phase) * h * h
        w = (2 / math.pi**2 * math.exp(2 * abs(gamma) ** 2) * integral).real
        assert wigner_at(rho, np.array([gamma]))[0] == pytest.approx(w, abs=1e-10)


def test_figure_wigner_peak_and_positivity():
    g = fig_wigner()
    center, peak = g.peak()
    assert abs(center.real - 8.093) <= 0.1 and center.imag == 0.0
    assert g.values.min() >= -1e-9
    assert abs(g.integral() - 1.0) < 1e-6


def test_wigner_real_symmetry_shortcut_matches_full_evaluation():
    rho = ensemble_rho(eta=0.6)
    g = wigner(rho, GridSpec(-4, 10, 0.25), GridSpec(-6, 6, 0.25))
    gamma = g.re[None, :] + 1j * g.im[:, None]
    assert np.max(np.abs(g.values - wigner_at(rho, gamma))) < 1e-15


def test_wigner_boundary_check():
    with pytest.raises(GridTooNarrowError):
        wigner(_coherent(ALPHA_PRIME), GridSpec(0, 4, 0.1), GridSpec(-1, 1, 0.1))
    g = wigner(_coherent(ALPHA_PRIME), GridSpec(0, 4, 0.1), GridSpec(-1, 1, 0.1), check_boundary=False)
    assert g.values.shape == (21, 41)


def test_wigner_marginal_is_quadrature_distribution():
    g = fig_wigner()
    x, marginal = g.quadrature_marginal()
    dist = quadrature_distribution(ensemble_rho(), GridSpec(x[0], x[-1], x[1] - x[0]))
    assert np.max(np.abs(marginal - dist.values)) < 1e-6


def test_wigner_of_mixture_matches_closed_form():
    p = SchemeParams(5.0, 1.5, 0.1)
    g = fig_wigner()
    gamma = g.re[None, :] + 1j * g.im[:, None]
    ctx = analytic.ClosedFormContext.from_params(p)
    assert np.max(np.abs(g.values - analytic.wigner_gaussian(ctx, gamma))) < 1e-6
