"""Weyl solutions at the right endpoint, singular Weyl functions and spectral measures.

The Weyl solution ``u_+`` is represented through its logarithmic derivative
``m = u_+'/u_+``, which obeys the Riccati equation ``m' = q - z - m**2``.
Integrated from the cutoff towards the left, the Weyl solution is the growing
one, so the Riccati flow contracts onto it and errors in the initial value are
damped like ``exp(-2 Im k dx)``. The singular Weyl function then follows from
``M = -(theta m - theta') / (phi m - phi')`` at a single abscissa.
"""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from . import tables
from ._numerics import adaptive_integral, branch_sqrt
from .errors import DomainError, IntegrationError, WeylPoleError

RICCATI_RTOL = 1e-11
POLE_RATIO = 1e-10
DECAY_LENGTHS = 18.0  # contraction length exp(-2*18) ~ 2e-16 past the Riccati start
DEFAULT_EPS = (1e-1, 1e-2, 1e-3)
LEFT_LIMIT_STEP = 1e-6


def _dq(q, x):
    h = 1e-5 * max(1.0, abs(x))
    return (float(q(x + h)) - float(q(x - h))) / (2 * h)


def initial_log_derivative(q, z, x):
    """WKB value of ``u_+'/u_+`` at ``x``: ``i k + q'/(4 k**2)`` with ``k = sqrt(z - q(x))``.

    ``q`` must be slowly varying at ``x``; the first-order correction removes
    the reflection caused by a ``1/x`` or ``1/x**2`` tail.
    """
    qx = float(q(x))
    k2 = np.asarray(z, dtype=complex) - qx
    k = branch_sqrt(k2)
    return 1j * k + _dq(q, x) / (4.0 * k2)


def _check_z(q, z, allow_real=True):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    real = z.imag == 0.0
    if np.any(real):
        if not allow_real:
            raise DomainError("Weyl solutions need Im z != 0")
        q_inf = float(q(q.upper_cutoff))
        if np.any(z.real[real] >= q_inf):
            raise DomainError("real z must lie below the essential spectrum")
    return z


def riccati_inward(q, z, x_from, x_to, m0=None, rtol=RICCATI_RTOL):
    """Integrate ``m' = q - z - m**2`` from ``x_from`` down to ``x_to`` for a batch of ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if m0 is None:
        m0 = initial_log_derivative(q, z, x_from)
    m0 = np.asarray(m0, dtype=complex)

    def rhs(x, m):
        return q(x) - z - m * m

    scale = max(1.0, float(np.max(np.abs(m0))))
    sol = solve_ivp(rhs, (x_from, x_to), m0, method="DOP853", rtol=rtol,
                    atol=rtol * 1e-2 * scale)
    if sol.status != 0:
        raise IntegrationError(f"Riccati integration failed: {sol.message}", float(sol.t[-1]))
    return sol.y[:, -1]


def riccati_start(q, z, x_c, x_max=None):
    """Cutoff for the inward Riccati sweep: no farther than needed for full damping."""
    x_max = q.upper_cutoff if x_max is None else float(x_max)
    k = branch_sqrt(np.atleast_1d(z).astype(complex) - float(q(x_max)))
    decay = float(np.min(k.imag))
    if decay > 0:
        x_max = min(x_max, x_c + DECAY_LENGTHS / decay)
    return max(x_max, x_c + 1e-3)


def weyl_values(fs, q, z, x_c=None, x_max=None, pole_ratio=POLE_RATIO):
    """Vectorized singular Weyl function ``M(z)`` of the system ``fs`` on ``q``.

    Raises
    ------
    WeylPoleError
        If ``|W(phi, u_+)| < pole_ratio * |W(theta, u_+)|`` for some ``z``.
    """
    zs = np.ndim(z) == 0
    z = _check_z(q, z)
    if x_c is None:
        x_c = fs.eval_point(z)
    x_hi = riccati_start(q, z, x_c, x_max)
    m = riccati_inward(q, z, x_hi, x_c)
    # real z may only see the Riccati flow in complex arithmetic; rows must match
    r = fs.rows(z, np.array([x_c]))[:, :, 0]
    phi, dphi, th, dth = r
    den = phi * m - dphi
    num = th * m - dth
    bad = np.abs(den) < pole_ratio * np.abs(num)
    if np.any(bad):
        raise WeylPoleError(f"W(phi, u_+) vanishes at z={complex(z[bad][0])!r}")
    M = -num / den
    # M is real on the real axis below the spectrum
    M = np.where(z.imag == 0.0, M.real + 0j, M)
    return M[0] if zs else M


def singular_weyl(fs, q, z, x_c=None, x_max=None):
    """``M(z) = -W(theta, u_+)/W(phi, u_+)`` for scalar or array ``z``."""
    return weyl_values(fs, q, z, x_c=x_c, x_max=x_max)


@dataclass(frozen=True)
class WeylFunction:
    """Vectorized evaluator ``z -> M(z)`` with a record of how it was built."""

    func: Callable
    provenance: Mapping = field(default_factory=dict)

    def __call__(self, z):
        return self.func(z)

    @classmethod
    def numeric(cls, fs, q, x_c=None, x_max=None):
        def func(z):
            return weyl_values(fs, q, z, x_c=x_c, x_max=x_max)

        prov = {"route": "riccati", "system": type(fs).__name__, "basepoint": fs.basepoint,
                "potential": q.describe()}
        return cls(func, prov)

    @classmethod
    def closed_form(cls, func, name):
        return cls(func, {"route": "closed-form", "formula": name})

    def left_limit(self, lam, delta=LEFT_LIMIT_STEP):
        """``lim_{eps -> 0+} M(lam - eps)`` by linear extrapolation from two points."""
        v = self.func(np.array([lam - delta, lam - 2 * delta], dtype=complex))
        return complex(2 * v[0] - v[1]).real


def free_weyl(z):
    """``M(z) = i sqrt(z)``, the Weyl function of ``q = 0`` with Dirichlet base point 0."""
    return 1j * branch_sqrt(z)


class WeylSolution:
    """Dense inward sweep of the Weyl solution, stored as ``(m, log u)``."""

    def __init__(self, z, sol, x_lo, x_max):
        self.z, self._sol, self.x_lo, self.x_max = z, sol, x_lo, x_max

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.x_lo * (1 - 1e-12)) or np.any(x > self.x_max * (1 + 1e-12)):
            raise DomainError(f"x outside the swept range [{self.x_lo}, {self.x_max}]")
        y = self._sol(x)
        u = np.exp(y[1])
        return u, y[0] * u

    def samples(self, xs):
        from .ode import SolutionSample

        u, du = self(np.asarray(xs, dtype=float))
        return [SolutionSample(float(x), complex(a), complex(b), self.z)
                for x, a, b in zip(np.atleast_1d(xs), np.atleast_1d(u), np.atleast_1d(du))]


def weyl_solution_b(q, z, x_max=None, x_lo=None, rtol=RICCATI_RTOL):
    """Weyl solution at the right endpoint, normalized by ``u(x_max) = exp(i sqrt(z) x_max)``.

    The sweep starts from ``(u, u') = exp(i sqrt(z) x_max) (1, i sqrt(z))`` and
    runs to ``x_lo``.

    Raises
    ------
    DomainError
        If ``Im z = 0``, or the decay diagnostic fails (``|u|`` not smaller at
        ``x_max`` than at the midpoint), which signals a cutoff that is too small.
    """
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("Weyl solutions need Im z != 0")
    if q.endpoint_class[1] != "limit-point":
        raise DomainError("weyl_solution_b needs a limit-point right endpoint")
    x_max = q.upper_cutoff if x_max is None else float(x_max)
    a = q.domain[0]
    if x_lo is None:
        x_lo = a + (1e-2 if q.endpoint_class[0] != "regular" else 0.0)
    if not a <= x_lo < x_max:
        raise DomainError("need a <= x_lo < x_max")
    k = branch_sqrt(z)

    def rhs(x, y):
        m = y[0]
        return np.array([q(x) - z - m * m, m])

    y0 = np.array([1j * k, 1j * k * x_max], dtype=complex)
    lo = x_lo if x_lo > a else a + 1e-14
    sol = solve_ivp(rhs, (x_max, lo), y0, method="DOP853", dense_output=True, rtol=rtol,
                    atol=rtol * 1e-2)
    if sol.status != 0:
        raise IntegrationError(f"Weyl sweep failed: {sol.message}", float(sol.t[-1]))
    ws = WeylSolution(z, sol.sol, lo, x_max)
    mid = 0.5 * (lo + x_max)
    if not abs(ws(x_max)[0]) < abs(ws(mid)[0]):
        raise DomainError("decay diagnostic failed: increase x_max")
    return ws


def weyl_psi(fs, M, z, x):
    """``psi = theta + M(z) phi`` and its derivative at ``x``."""
    Mz = M(z) if callable(M) else M
    r = fs.evaluate(z, x)
    return r[2] + Mz * r[0], r[3] + Mz * r[1]


def write_weyl_csv(path, z, M):
    header = tables.complex_columns("z") + tables.complex_columns("M")
    rows = [[*tables.split_complex(a), *tables.split_complex(b)]
            for a, b in zip(np.atleast_1d(z), np.atleast_1d(M))]
    tables.write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# spectral measure


@dataclass(frozen=True)
class SpectralMeasureEstimate:
    """Masses of sub-intervals recovered by Stieltjes inversion.

    ``raw[i][j]`` is the mass of interval ``i`` at ``epsilon_schedule[j]``.
    ``converged`` compares the extrapolations from the two smallest and the two
    next-smallest ``eps``; ``signed`` flags a negative mass.
    """

    intervals: list
    epsilon_schedule: tuple
    extrapolated: bool
    converged: bool
    signed: bool
    raw: list

    @property
    def total(self):
        return float(sum(m for _, _, m in self.intervals))


def _extrapolate(eps, vals):
    e1, e2 = eps[-2], eps[-1]
    v1, v2 = vals[-2], vals[-1]
    return (e1 * v2 - e2 * v1) / (e1 - e2)


def spectral_measure(M, x0, x1, eps_schedule=DEFAULT_EPS, bins=1, rtol=1e-7, atol=1e-10,
                     rel_check=1e-3, extrapolate=True):
    """Masses ``rho`` of ``[x0, x1]`` (split into ``bins`` pieces) from ``Im M(t + i eps)``.

    The endpoint convention is the symmetric one produced by the Stieltjes
    limit: an atom sitting exactly on an endpoint contributes half its mass.
    """
    if not x0 < x1:
        raise DomainError("need x0 < x1")
    eps = tuple(float(e) for e in eps_schedule)
    if len(eps) == 0 or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("eps_schedule must be positive and strictly decreasing")
    edges = np.linspace(x0, x1, int(bins) + 1)
    raw = []
    all_converged = True
    for lo, hi in zip(edges[:-1], edges[1:]):
        row = []
        for e in eps:
            def f(t, e=e):
                return np.imag(M(np.asarray(t) + 1j * e)) / math.pi

            val, _, ok = adaptive_integral(f, lo, hi, rtol=rtol, atol=atol)
            all_converged &= ok
            row.append(float(np.real(val)))
        raw.append(row)
    use_extrap = extrapolate and len(eps) >= 2
    intervals = []
    agree = True
    for (lo, hi), row in zip(zip(edges[:-1], edges[1:]), raw):
        if use_extrap:
            mass = _extrapolate(eps, row)
            if len(eps) >= 3:
                prev = _extrapolate(eps[:-1], row[:-1])
                agree &= abs(mass - prev) <= rel_check * max(abs(mass), 1.0)
        else:
            mass = row[-1]
        intervals.append((float(lo), float(hi), float(mass)))
    signed = any(m < -max(atol, 1e-8) for _, _, m in intervals)
    return SpectralMeasureEstimate(intervals, eps, use_extrap, bool(all_converged and agree),
                                   signed, raw)


def write_measure_csv(path, est):
    header = ["x0", "x1", "mass"] + [f"mass_eps_{e:.3g}" for e in est.epsilon_schedule]
    rows = [[a, b, m, *r] for (a, b, m), r in zip(est.intervals, est.raw)]
    tables.write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# generalized Nevanlinna index


class KappaEstimate(NamedTuple):
    kappa: int | None
    slope: float
    ambiguous: bool


def estimate_kappa(M, y_grid=None, slope_tol=0.05, phase_tol=0.1):
    """Index ``kappa`` from the growth of ``M(iy)`` along the imaginary axis.

    ``kappa`` is the smallest nonnegative integer for which ``M(iy)/(iy)**(2 kappa + 1)``
    has a limit in ``[0, inf)``. The growth exponent is the least-squares slope
    of ``log|M(iy)|`` against ``log y``. When the slope sits on an odd integer
    the phase of the ratio decides; an undecidable phase or a curved log-log
    plot yields ``kappa=None`` with ``ambiguous=True``.
    """
    if y_grid is None:
        y_grid = np.geomspace(1e1, 1e4, 16)
    y = np.asarray(y_grid, dtype=float)
    if np.any(y <= 0) or math.log10(y.max() / y.min()) < 3 - 1e-9:
        raise DomainError("y_grid must be positive and span at least three decades")
    vals = np.asarray(M(1j * y), dtype=complex)
    ly, lm = np.log(y), np.log(np.abs(vals))
    slope, icpt = np.polyfit(ly, lm, 1)
    resid = np.max(np.abs(lm - (slope * ly + icpt)))
    # compare the slope over the upper half with the global fit to detect curvature
    half = ly.size // 2
    s_upper = np.polyfit(ly[half:], lm[half:], 1)[0]
    if resid > 0.5 or abs(s_upper - slope) > 4 * slope_tol:
        return KappaEstimate(None, float(s_upper), True)
    s = float(s_upper)
    nearest_odd = 2 * round((s - 1) / 2) + 1
    if abs(s - nearest_odd) <= slope_tol and nearest_odd >= 1:
        j = (nearest_odd - 1) // 2
        ratio = vals[-1] / (1j * y[-1]) ** nearest_odd
        ang = abs(np.angle(ratio))
        if ang < phase_tol:
            return KappaEstimate(int(j), s, False)
        if ang > 3 * phase_tol:
            return KappaEstimate(int(j + 1), s, False)
        return KappaEstimate(None, s, True)
    kappa = max(0, math.ceil((s - 1) / 2 + 1e-12))
    if 2 * kappa + 1 <= s:
        kappa += 1
    return KappaEstimate(int(kappa), s, False)
