import math

import mpmath
import numpy as np
import pytest
from scipy.stats import poisson

from weakopa import ConfigError, UndefinedMandelQ, analytic
from weakopa.analytic import (
    ClosedFormContext,
    mandel_q,
    mean_photons,
    photon_pmf,
    photon_pmf_series,
    quad_pdf,
    quad_peak,
    quad_width2,
    wigner_center,
    wigner_gaussian,
    wigner_peak,
)


@pytest.fixture
def fig_ctx():
    return ClosedFormContext.from_physical(5.0, 1.5, 0.1)


def test_context_values(fig_ctx):
    assert fig_ctx.epsilon == pytest.approx(0.737364, abs=1e-6)
    assert fig_ctx.alpha_prime**2 == pytest.approx(4.5177, abs=1e-4)


@pytest.mark.parametrize("eps,a", [(1.0, 1.0), (-0.1, 1.0), (0.5, -1.0)])
def test_context_rejects(eps, a):
    with pytest.raises(ConfigError):
        ClosedFormContext(eps, a)


def test_figure_values(fig_ctx):
    assert quad_peak(fig_ctx) == pytest.approx(11.445, abs=1e-3)
    assert quad_width2(fig_ctx) == pytest.approx(6.614, abs=0.01)
    assert mean_photons(fig_ctx) == pytest.approx(68.303, abs=1e-3)
    assert mandel_q(fig_ctx) == pytest.approx(5.499, abs=1e-3)
    c = wigner_center(fig_ctx)
    assert c.real == pytest.approx(8.093, abs=1e-3) and c.imag == 0.0
    assert wigner_peak(fig_ctx) == pytest.approx(0.09623, abs=1e-5)


def test_coherent_limit():
    ctx = ClosedFormContext(0.0, 2.0)
    n = np.arange(60)
    assert np.allclose(photon_pmf(ctx, n), poisson.pmf(n, 4.0), rtol=1e-13)
    assert mean_photons(ctx) == 4.0
    assert mandel_q(ctx) == 0.0
    assert quad_width2(ctx) == 1.0
    gamma = np.array([2.0, 2.3 + 0.1j, 0.0])
    assert np.allclose(wigner_gaussian(ctx, gamma), 2 / math.pi * np.exp(-2 * np.abs(gamma - 2.0) ** 2), rtol=1e-15)


def test_coherent_limit_of_vacuum():
    ctx = ClosedFormContext(0.0, 0.0)
    assert photon_pmf(ctx, np.arange(4)).tolist() == [1.0, 0.0, 0.0, 0.0]


def test_thermal_limit():
    eps = 0.3
    ctx = ClosedFormContext(eps, 0.0)
    assert mean_photons(ctx) == pytest.approx(eps / (1 - eps), rel=1e-15)
    n = np.arange(50)
    assert np.allclose(photon_pmf(ctx, n), (1 - eps) * eps**n, rtol=1e-13)
    # geometric statistics: var = nbar (nbar + 1), so Q = nbar
    geo = (1 - eps) * eps ** np.arange(400)
    k = np.arange(400)
    nbar = math.fsum(k * geo)
    q_direct = math.fsum((k - nbar) ** 2 * geo) / nbar - 1.0
    assert mandel_q(ctx) == pytest.approx(q_direct, rel=1e-12)
    assert mandel_q(ctx) == pytest.approx(eps / (1 - eps), rel=1e-13)


def test_vacuum_has_no_mandel_q():
    with pytest.raises(UndefinedMandelQ):
        mandel_q(ClosedFormContext(0.0, 0.0))


@pytest.mark.parametrize("eps,a", [(0.737364, 2.1255), (0.2, 0.0), (0.9, 3.0), (0.01, 5.0)])
def test_photon_pmf_normalized(eps, a):
    ctx = ClosedFormContext(eps, a)
    p = photon_pmf(ctx, np.arange(3000))
    assert abs(math.fsum(p) - 1.0) < 1e-12
    n = np.arange(3000)
    assert math.fsum(n * p) == pytest.approx(mean_photons(ctx), rel=1e-11)
    var = math.fsum((n - mean_photons(ctx)) ** 2 * p)
    if mean_photons(ctx) > 0:
        assert var / mean_photons(ctx) - 1.0 == pytest.approx(mandel_q(ctx), rel=1e-9, abs=1e-12)


def test_photon_pmf_against_mpmath(fig_ctx):
    mpmath.mp.dps = 40
    e = mpmath.mpf(fig_ctx.epsilon)
    a2 = mpmath.mpf(fig_ctx.alpha_prime) ** 2
    p = photon_pmf(fig_ctx, np.arange(201))
    for n in range(0, 201, 7):
        ref = (1 - e) * mpmath.exp(-a2 / (1 - e)) * e**n * mpmath.laguerre(n, 0, -a2 / e)
        assert abs(p[n] / float(ref) - 1.0) < 1e-11


@pytest.mark.parametrize("eps,a", [(0.737364, 2.1255), (0.05, 4.0), (0.6, 0.3), (0.3, 0.0)])
def test_finite_sum_equals_laguerre_form(eps, a):
    ctx = ClosedFormContext(eps, a)
    lag = photon_pmf(ctx, np.arange(101))
    for n in range(101):
        assert abs(photon_pmf_series(ctx, n) / lag[n] - 1.0) < 1e-10


def test_finite_sum_needs_positive_epsilon():
    with pytest.raises(ConfigError):
        photon_pmf_series(ClosedFormContext(0.0, 1.0), 3)


def test_quadrature_density_normalized_and_centered(fig_ctx):
    x = np.arange(-20.0, 45.0, 0.005)
    p = quad_pdf(fig_ctx, x)
    assert abs(np.trapezoid(p, x) - 1.0) < 1e-12
    mean = np.trapezoid(x * p, x)
    assert mean == pytest.approx(math.sqrt(2) * wigner_center(fig_ctx).real, abs=1e-10)
    assert 2 * np.trapezoid((x - mean) ** 2 * p, x) == pytest.approx(quad_width2(fig_ctx), rel=1e-10)


def test_quadrature_peak_is_scaled_wigner_center():
    for eps, a in [(0.0, 1.0), (0.4, 2.0), (0.95, 0.3), (0.737364, 2.1255)]:
        ctx = ClosedFormContext(eps, a)
        assert quad_peak(ctx) == math.sqrt(2) * wigner_center(ctx).real


def test_unsquared_exponent_is_not_a_density(fig_ctx):
    # the printed form exp(-k (x - x0)) grows without bound for x < x0
    k = (1 - fig_ctx.epsilon) / (1 + fig_ctx.epsilon)
    x = np.array([quad_peak(fig_ctx) - 40.0])
    assert math.sqrt(k / math.pi) * np.exp(-k * (x - quad_peak(fig_ctx)))[0] > 1.0
    assert quad_pdf(fig_ctx, x)[0] < 1e-100


def test_wigner_integrates_to_one(fig_ctx):
    h = 0.05
    re = np.arange(-5.0, 21.0, h)
    im = np.arange(-13.0, 13.0, h)
    w = wigner_gaussian(fig_ctx, re[None, :] + 1j * im[:, None])
    assert abs(w.sum() * h * h - 1.0) < 1e-10
    assert w.max() == pytest.approx(wigner_peak(fig_ctx), rel=1e-3)


def test_limit_toward_perfect_detection():
    alpha, r = 5.0, 1.5
    coh = ClosedFormContext.from_physical(alpha, r, 1.0)
    gamma = np.array([1.0, 2.1, 2.5 + 0.5j])
    prev = None
    for k in range(1, 7):
        ctx = ClosedFormContext.from_physical(alpha, r, 1.0 - 10.0**-k)
        errs = np.array([
            abs(quad_peak(ctx) - quad_peak(coh)),
            abs(quad_width2(ctx) - 1.0),
            abs(mean_photons(ctx) - mean_photons(coh)),
            abs(mandel_q(ctx)),
            np.max(np.abs(photon_pmf(ctx, np.arange(40)) - photon_pmf(coh, np.arange(40)))),
            np.max(np.abs(wigner_gaussian(ctx, gamma) - wigner_gaussian(coh, gamma))),
        ])
        # every difference shrinks in proportion to 1 - eta
        assert np.all(errs < 40.0 * 10.0**-k)
        if prev is not None:
            assert np.all(errs < prev)
        prev = errs


def test_mandel_q_decreases_with_efficiency():
    q = [mandel_q(ClosedFormContext.from_physical(5.0, 1.5, eta)) for eta in np.arange(0.05, 1.0001, 0.05)]
    assert all(a > b for a, b in zip(q, q[1:]))
    assert q[-1] == pytest.approx(0.0, abs=1e-15)


def test_mandel_q_just_above_ninety_percent_is_small_and_positive():
    q = mandel_q(ClosedFormContext.from_physical(5.0, 1.5, 0.91))
    assert 0.0 < q < 0.5
    assert analytic.mandel_q(ClosedFormContext.from_physical(5.0, 1.5, 0.95)) < q
