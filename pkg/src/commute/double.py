"""Double commutation: insert a point mass ``gamma`` at ``lam`` into the spectral measure.

With ``s = phi(lam, .)`` and ``N(x) = int_a^x s**2`` the transform is driven by
``D = 1/gamma + N`` and ``tilde_phi = s / D``. Every transformed solution is

    T u = u + tilde_phi * W(s, u) / (z - lam),

where ``W(s, u) = s u' - s' u`` is read off the base rows directly (its
derivative is ``(lam - z) s u``, so no quadrature over ``z`` is needed). The
limit ``gamma = inf`` drops the ``1/gamma`` term and rescales both solutions
by powers of ``z - lam``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .ode import DerivedSystem
from .potentials import Potential
from .single import MeasureMap, TransformResult, WeylMap, make_seed, PHI


class Gamma(enum.Enum):
    INFINITE = "inf"

    def __str__(self):
        return "inf"


GAMMA_INF = Gamma.INFINITE


def parse_gamma(value):
    """Normalize ``gamma``: positive float, or :data:`GAMMA_INF` for ``inf``/``"inf"``.

    Raises
    ------
    DomainError
        For ``gamma <= 0`` or NaN.
    """
    if value is GAMMA_INF:
        return GAMMA_INF
    if isinstance(value, str):
        v = value.strip().lower()
        if v in ("inf", "infinity", "+inf", "oo"):
            return GAMMA_INF
        try:
            value = float(v)
        except ValueError as exc:
            raise DomainError(f"gamma must be a positive number or inf, got {value!r}") from exc
    value = float(value)
    if math.isinf(value) and value > 0:
        return GAMMA_INF
    if not value > 0:
        raise DomainError(f"gamma must be positive, got {value}")
    return value


@dataclass(frozen=True, eq=False)
class DoubleCommutationData:
    """Seed data of a double commutation.

    ``phi_lambda`` maps ``x`` to ``(s, s')`` and ``accumulated_norm`` to
    ``int_a^x s**2``.
    """

    lam: float
    gamma: object
    phi_lambda: object
    accumulated_norm: object

    @property
    def infinite(self):
        return self.gamma is GAMMA_INF

    def denominator(self, x):
        n = np.asarray(self.accumulated_norm(x), dtype=float)
        return n if self.infinite else 1.0 / self.gamma + n

    def tilde_phi(self, x, derivative=False):
        """``s / D`` and optionally its derivative ``s'/D - s**3/D**2``."""
        s, ds = self.phi_lambda(x)
        D = self.denominator(x)
        ft = s / D
        if not derivative:
            return ft
        return ft, ds / D - s * ft * ft

    def transform(self, z, x, u, du):
        """``(T u, (T u)')`` for a solution ``(u, u')`` at spectral parameter ``z``."""
        s, ds = self.phi_lambda(x)
        ft, dft = self.tilde_phi(x, derivative=True)
        d = z - self.lam
        W = s * du - ds * u
        return u + ft * W / d, du + dft * W / d - ft * s * u


class DoubleSystem(DerivedSystem):
    """``(phi_gamma, theta_gamma)`` built from a base system; ``z = lam`` is removable."""

    def __init__(self, base, data, potential):
        self.base, self.data, self.potential = base, data, potential
        self.lam = data.lam
        self.removable_points = (self.lam,)
        self.basepoint = dict(base.basepoint, transform="double", lam=self.lam,
                              gamma=str(data.gamma))
        if data.infinite:
            self.normalization = {"phi": "T phi / (z - lam)",
                                  "theta": "(z - lam) theta + tilde_phi W(s, theta)"}
        else:
            self.normalization = {"phi": "T phi",
                                  "theta": "T theta + gamma phi_gamma / (z - lam)"}

    def eval_point(self, z):
        return self.base.eval_point(z)

    def _direct(self, z, x):
        p, dp, t, dt = self.base.rows(z, x)
        data = self.data
        s, ds = data.phi_lambda(x)
        s = np.asarray(s, dtype=float)[None, :]
        ds = np.asarray(ds, dtype=float)[None, :]
        ft, dft = data.tilde_phi(x, derivative=True)
        ft, dft = ft[None, :], dft[None, :]
        d = (z - self.lam)[:, None]
        Wp = s * dp - ds * p
        Wt = s * dt - ds * t
        ph = p + ft * Wp / d
        dph = dp + dft * Wp / d - ft * s * p
        if data.infinite:
            return np.stack([ph / d, dph / d, d * t + ft * Wt, d * dt + dft * Wt - d * ft * s * t])
        g = data.gamma
        th = t + (ft * Wt + g * ph) / d
        dth = dt + (dft * Wt + g * dph) / d - ft * s * t
        return np.stack([ph, dph, th, dth])


def _double_potential(q, data, kind):
    qf = q.func

    def func(x):
        x = np.asarray(x, dtype=float)
        s, ds = data.phi_lambda(x)
        D = data.denominator(x)
        r = s * s / D
        # -2 (log D)'' with D' = s**2
        return qf(x) - 4.0 * s * ds / D + 2.0 * r * r

    l_new, left = q.l, q.endpoint_class[0]
    if l_new is not None and data.infinite:
        l_new, left = q.l + 2.0, "limit-point"
    params = {"base": q.kind, "lambda": data.lam, "gamma": str(data.gamma)}
    return Potential(func, q.domain, l_new, None, (left, q.endpoint_class[1]), kind, params,
                     q.x_max)


def _prepare(q, fs, lam, grid):
    if fs.potential is not q:
        raise DomainError("fs must be a fundamental system of q")
    if q.endpoint_class[1] == "limit-circle":
        raise DomainError("limit-circle endpoint at b is not supported: the seed would have to "
                          "be an eigenfunction satisfying the boundary condition there")
    seed = make_seed(fs, lam, PHI, grid)
    if seed.norm is None:
        raise DomainError("seed has no running norm")
    return seed


def double_commute(q, fs, lam, gamma, grid=None):
    """Double commutation with finite ``gamma > 0`` (``inf`` is forwarded to
    :func:`double_commute_infinite`).

    The Weyl function becomes ``M(z) - gamma/(z - lam)`` and the measure gains
    the atom ``gamma`` at ``lam``.
    """
    gamma = parse_gamma(gamma)
    if gamma is GAMMA_INF:
        return double_commute_infinite(q, fs, lam, grid)
    seed = _prepare(q, fs, lam, grid)
    lam = seed.lam
    data = DoubleCommutationData(lam, gamma, seed.solution, seed.norm)
    q_new = _double_potential(q, data, "double-commuted")
    fs_new = DoubleSystem(fs, data, q_new)

    def shift(z):
        return -gamma / (np.asarray(z) - lam)

    wm = WeylMap(f"M(z) - {gamma:.17g} / (z - {lam:.17g})", lambda z: 1.0, shift)
    mm = MeasureMap(f"d rho(t) + {gamma:.17g} delta(t - {lam:.17g})",
                    lambda t: np.ones_like(np.asarray(t, dtype=float)), ((lam, gamma),))
    return TransformResult(q_new, fs_new, wm, mm, data,
                           {"type": "double", "lambda": lam, "gamma": gamma})


def double_commute_infinite(q, fs, lam, grid=None):
    """The ``gamma = inf`` limit: Weyl map ``(z - lam)**2 M(z)``; index ``l`` becomes ``l + 2``."""
    seed = _prepare(q, fs, lam, grid)
    lam = seed.lam
    data = DoubleCommutationData(lam, GAMMA_INF, seed.solution, seed.norm)
    q_new = _double_potential(q, data, "double-commuted")
    fs_new = DoubleSystem(fs, data, q_new)

    def factor(z):
        return (np.asarray(z) - lam) ** 2

    wm = WeylMap(f"(z - {lam:.17g})**2 * M(z)", factor)
    mm = MeasureMap(f"(t - {lam:.17g})**2 d rho(t)", lambda t: (np.asarray(t) - lam) ** 2)
    return TransformResult(q_new, fs_new, wm, mm, data,
                           {"type": "double", "lambda": lam, "gamma": "inf"})


def psi_gamma(data, psi, z, x):
    """Transformed Weyl solution ``(psi_gamma, psi_gamma')`` at ``x``.

    ``psi`` is a callable ``x -> (psi, psi')``, e.g. a
    :class:`~commute.weyl.WeylSolution`, or a ready pair of arrays. For finite
    ``gamma`` the result equals ``theta_gamma + M_gamma phi_gamma``; for
    ``gamma = inf`` it equals ``theta_inf + M_inf phi_inf``.
    """
    z = complex(z)
    if z == data.lam:
        raise DomainError("psi_gamma is undefined at z = lambda")
    x = np.asarray(x, dtype=float)
    u, du = psi(x) if callable(psi) else psi
    v, dv = data.transform(z, x, np.asarray(u), np.asarray(du))
    if data.infinite:
        d = z - data.lam
        return d * v, d * dv
    return v, dv
