import functools
import math

import pytest

from weakopa import SchemeParams, condition_on_idler, condition_via_oracle, ensemble_to_density

# the regime of the figures: strong seed, high gain
FIG_ALPHA = 5.0
FIG_R = 1.5
ALPHA_PRIME = FIG_ALPHA / math.cosh(FIG_R)


@functools.lru_cache(maxsize=None)
def ensemble_rho(alpha=FIG_ALPHA, r=FIG_R, eta=0.1, n_det=0, tail_tol=1e-12):
    return ensemble_to_density(condition_on_idler(SchemeParams(alpha, r, eta, n_det=n_det, tail_tol=tail_tol)))


@functools.lru_cache(maxsize=None)
def oracle_rho(alpha=FIG_ALPHA, r=FIG_R, eta=0.1, n_det=0, tail_tol=1e-12):
    return condition_via_oracle(SchemeParams(alpha, r, eta, n_det=n_det, tail_tol=tail_tol))


@pytest.fixture
def fig_params():
    return SchemeParams(FIG_ALPHA, FIG_R, 0.1)


@functools.lru_cache(maxsize=None)
def fig_wigner():
    """Wigner grid of the eta = 0.1 state, wide enough for the boundary check."""
    from weakopa import GridSpec, wigner

    return wigner(ensemble_rho(), GridSpec(-3.0, 19.0, 0.1), GridSpec(-11.0, 11.0, 0.1))
