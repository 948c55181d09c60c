"""Commutation methods for singular one-dimensional Schrodinger operators.

The package builds potentials (free, Bessel, Coulomb, tabulated), integrates
their fundamental systems, evaluates Weyl functions and spectral measures, and
transforms operators by single commutation, double commutation and the rank-n
GBDT construction. ``python -m commute`` exposes the same functionality on the
command line.
"""

from .double import GAMMA_INF, double_commute, double_commute_infinite
from .errors import CommuteError, ConfigError, DomainError
from .gbdt import GBDTSeed, lan1, lan2, propagate
from .ode import BesselSystem, FreeSystem, fundamental_system
from .potentials import bessel, coulomb, free, tabulated
from .single import commute_phi, commute_theta, coulomb_ladder
from .weyl import WeylFunction, estimate_kappa, free_weyl, spectral_measure

__version__ = "0.1.0"

__all__ = [
    "BesselSystem", "CommuteError", "ConfigError", "DomainError", "FreeSystem", "GAMMA_INF",
    "GBDTSeed", "WeylFunction", "bessel", "commute_phi", "commute_theta", "coulomb",
    "coulomb_ladder", "double_commute", "double_commute_infinite", "estimate_kappa", "free",
    "free_weyl", "fundamental_system", "lan1", "lan2", "propagate", "spectral_measure",
    "tabulated",
]
