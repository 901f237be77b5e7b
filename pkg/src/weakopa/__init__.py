"""Signal-mode statistics of a seeded parametric amplifier after an idler count.

A coherent signal seed is amplified together with a vacuum idler; the idler
is measured by a detector of finite efficiency and the signal state is
conditioned on the count. The package builds that state in a truncated
Fock basis by two independent routes, evaluates quadrature, photon-number,
Mandel Q and Wigner statistics numerically, and compares them with the
closed forms for the zero-count case.
"""

from .analytic import ClosedFormContext
from .errors import (
    ConfigError,
    DomainError,
    GridTooNarrowError,
    NegativeProbabilityError,
    NumericalError,
    TruncationError,
    UndefinedMandelQ,
    WeakOPAError,
    ZeroProbabilityOutcome,
)
from .fock import (
    DensityMatrix,
    FockVector,
    TwoModeState,
    choose_truncation,
    coherent_state,
    opa_two_mode_state,
    photon_added_coherent,
    trace_distance,
)
from .measurement import SignalEnsemble, condition_on_idler, condition_via_oracle, ensemble_to_density
from .observables import (
    Distribution1D,
    GridSpec,
    MomentReport,
    WignerGrid,
    moments,
    photon_distribution,
    quadrature_distribution,
    wigner,
    wigner_at,
)
from .params import SchemeParams

__version__ = "0.1.0"

__all__ = [
    "ClosedFormContext",
    "ConfigError",
    "DensityMatrix",
    "Distribution1D",
    "DomainError",
    "FockVector",
    "GridSpec",
    "GridTooNarrowError",
    "MomentReport",
    "NegativeProbabilityError",
    "NumericalError",
    "SchemeParams",
    "SignalEnsemble",
    "TruncationError",
    "TwoModeState",
    "UndefinedMandelQ",
    "WeakOPAError",
    "WignerGrid",
    "ZeroProbabilityOutcome",
    "choose_truncation",
    "coherent_state",
    "condition_on_idler",
    "condition_via_oracle",
    "ensemble_to_density",
    "moments",
    "opa_two_mode_state",
    "photon_added_coherent",
    "photon_distribution",
    "quadrature_distribution",
    "trace_distance",
    "wigner",
    "wigner_at",
]
