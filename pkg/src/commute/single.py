"""Single commutation: factor ``H - lam = A* A`` with a positive solution and swap the factors.

The phi-based step uses ``phi(lam, .)`` and raises a Bessel index by one; the
theta-based step uses ``theta(lam, .)`` and lowers it by one. With the
log-derivative ``w`` of the seed, the transformed potential is
``2 lam - q + 2 w**2``, which equals ``q - 2 w'`` because ``w' = q - lam - w**2``;
no numerical differentiation is needed.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PositivityError
from .ode import DerivedSystem, FundamentalSystem, RealSolution
from .potentials import Potential
from .weyl import WeylFunction

PHI, THETA = "phi_based", "theta_based"


@dataclass(frozen=True, eq=False)
class CommutationSeed:
    """Positive solution at ``lam`` defining the factorization.

    ``solution`` maps ``x`` to ``(u, u')``; ``norm`` (phi-based seeds only)
    maps ``x`` to ``int_a^x u**2``.
    """

    lam: float
    solution: Callable
    kind: str
    certificate: np.ndarray
    norm: Callable | None = None

    def log_derivative(self, x):
        u, du = self.solution(x)
        return du / u


def default_grid(q, n=400):
    a, b = q.domain
    hi = q.upper_cutoff
    if q.endpoint_class[0] == "regular":
        return np.linspace(a + (hi - a) * 1e-4, hi, n)
    return np.geomspace(max(a, 0.0) + 1e-4 if a == 0 else a + 1e-4, hi, n)


def make_seed(fs, lam, kind=PHI, grid=None, solution=None, norm=None):
    """Build and certify a seed: the solution must be positive on ``grid``.

    Raises
    ------
    PositivityError
        With the first abscissa where the seed is not positive.
    """
    if kind not in (PHI, THETA):
        raise DomainError(f"unknown seed kind {kind!r}")
    lam = float(lam)
    if solution is None:
        real = fs.seed(lam)
        solution = real.phi if kind == PHI else real.theta
        if kind == PHI and norm is None:
            norm = real.norm
    grid = default_grid(fs.potential) if grid is None else np.asarray(grid, dtype=float)
    u, _ = solution(grid)
    u = np.asarray(u)
    if u[0] < 0:
        raise PositivityError("seed is negative; flip its sign or choose another lambda",
                              float(grid[0]))
    bad = np.flatnonzero(~(u > 0))
    if bad.size:
        raise PositivityError(f"seed at lambda={lam} is not positive", float(grid[bad[0]]))
    return CommutationSeed(lam, solution, kind, grid, norm)


@dataclass(frozen=True)
class WeylMap:
    """``M_new(z) = factor(z) * M(z) + shift(z)`` with a readable formula."""

    formula: str
    factor: Callable
    shift: Callable | None = None

    def __call__(self, M, z):
        Mz = M(z) if callable(M) else M
        v = self.factor(z) * Mz
        return v if self.shift is None else v + self.shift(z)

    def apply(self, M):
        return WeylFunction(lambda z: self(M, z),
                            {"route": "weyl-map", "formula": self.formula,
                             "from": getattr(M, "provenance", {})})

    def then(self, other):
        """Compose: first ``self``, then ``other``."""
        def factor(z):
            return other.factor(z) * self.factor(z)

        shift = None
        if self.shift is not None or other.shift is not None:
            def shift(z):
                s = 0.0 if self.shift is None else other.factor(z) * self.shift(z)
                return s + (0.0 if other.shift is None else other.shift(z))
        return WeylMap(f"{other.formula} o {self.formula}", factor, shift)


@dataclass(frozen=True)
class MeasureMap:
    """``d rho_new(t) = density(t) d rho(t) + sum_k mass_k delta(t - t_k)``.

    ``atoms`` holds ``(position, mass)`` pairs where ``mass`` may be a
    callable of the original Weyl function (evaluated lazily).
    """

    formula: str
    density: Callable
    atoms: tuple = ()

    def mass(self, M, x0, x1, eps_schedule=(1e-1, 1e-2, 1e-3), **kw):
        """Predicted ``rho_new([x0, x1])`` from the original ``M``."""
        from ._numerics import adaptive_integral
        from .weyl import _extrapolate

        vals = []
        for e in eps_schedule:
            def f(t, e=e):
                t = np.asarray(t)
                return self.density(t) * np.imag(M(t + 1j * e)) / math.pi

            v, _, _ = adaptive_integral(f, x0, x1, rtol=kw.get("rtol", 1e-7),
                                        atol=kw.get("atol", 1e-10))
            vals.append(float(np.real(v)))
        total = _extrapolate(eps_schedule, vals) if len(vals) >= 2 else vals[-1]
        for pos, m in self.atoms:
            if x0 < pos < x1:
                total += m(M) if callable(m) else m
            elif pos == x0 or pos == x1:
                total += 0.5 * (m(M) if callable(m) else m)
        return total


@dataclass(frozen=True, eq=False)
class TransformResult:
    """Transformed potential and system together with the induced Weyl and measure maps."""

    q_new: Potential
    fs_new: FundamentalSystem
    weyl_map: WeylMap
    measure_map: MeasureMap
    seed: object = None
    info: dict = field(default_factory=dict)

    def describe(self):
        d = {"weyl_map": self.weyl_map.formula, "measure_map": self.measure_map.formula}
        d.update(self.info)
        return d


def _shifted_potential(q, seed, l_new, kind):
    lam = seed.lam
    sol = seed.solution
    qf = q.func
    x_min = seed.certificate[0] if seed.certificate is not None else None

    def func(x):
        x = np.asarray(x, dtype=float)
        u, du = sol(x)
        w = du / u
        return 2.0 * lam - qf(x) + 2.0 * w * w

    left = q.endpoint_class[0]
    if l_new is not None:
        left = "limit-point" if l_new >= 0.5 else "limit-circle"
    params = {"base": q.kind, "lambda": lam, "seed": kind}
    if x_min is not None:
        params["certified_from"] = float(x_min)
    return Potential(func, q.domain, l_new, None, (left, q.endpoint_class[1]),
                     f"{kind.split('_')[0]}-commuted", params, q.x_max)


class PhiCommutedSystem(DerivedSystem):
    """``phi_hat = a_phi phi / (z - lam)``, ``theta_hat = a_phi theta``, ``a_phi = -d/dx + w``."""

    def __init__(self, base, seed, potential):
        self.base, self.seed_data, self.potential = base, seed, potential
        self.lam = seed.lam
        self.removable_points = (self.lam,)
        self.basepoint = dict(base.basepoint, transform="phi", lam=self.lam)
        self.normalization = {"phi": "a_phi phi / (z - lam)", "theta": "a_phi theta"}

    def eval_point(self, z):
        return self.base.eval_point(z)

    def _seed(self, x):
        u, du = self.seed_data.solution(x)
        return np.asarray(u, dtype=float), np.asarray(du, dtype=float)

    def _direct(self, z, x):
        r = self.base.rows(z, x)
        u, du = self._seed(x)
        w = (du / u)[None, :]
        d = (z - self.lam)[:, None]
        p, dp, t, dt = r
        A = d - w * w
        return np.stack([(-dp + w * p) / d, (A * p + w * dp) / d, -dt + w * t, A * t + w * dt])

    def _exact(self, z, x):
        if self.seed_data.norm is None:
            return None
        u, du = self._seed(x)
        w = du / u
        n = np.asarray(self.seed_data.norm(x), dtype=float)
        ph = n / u
        # W(theta, phi) = 1 turns -theta' + w theta into 1/u without cancellation
        th = 1.0 / u
        return np.stack([ph, u - w * ph, th, -w * th])[:, None, :]

    def seed(self, lam):
        return RealSolution(self, lam)


class ThetaCommutedSystem(DerivedSystem):
    """``phi_check = phi' - w phi``, ``theta_check = (theta' - w theta)/(z - lam)`` with ``w = theta'/theta``."""

    def __init__(self, base, seed, potential):
        self.base, self.seed_data, self.potential = base, seed, potential
        self.lam = seed.lam
        self.removable_points = (self.lam,)
        self.basepoint = dict(base.basepoint, transform="theta", lam=self.lam)
        self.normalization = {"phi": "-a_theta phi", "theta": "-a_theta theta / (z - lam)"}

    def eval_point(self, z):
        return self.base.eval_point(z)

    def _direct(self, z, x):
        r = self.base.rows(z, x)
        u, du = self.seed_data.solution(x)
        w = (np.asarray(du) / np.asarray(u))[None, :]
        d = (z - self.lam)[:, None]
        p, dp, t, dt = r
        B = -d + w * w
        return np.stack([dp - w * p, B * p - w * dp, (dt - w * t) / d, (B * t - w * dt) / d])

    def seed(self, lam):
        return RealSolution(self, lam)


def commute_phi(q, fs, lam, grid=None, seed=None):
    """Phi-based single commutation at ``lam`` (``lam`` at or below the spectrum).

    ``seed`` may supply a ready :class:`CommutationSeed` (for instance a
    closed-form ground state); otherwise ``phi(lam, .)`` of ``fs`` is used.
    """
    if fs.potential is not q:
        raise DomainError("fs must be a fundamental system of q")
    if seed is None:
        seed = make_seed(fs, lam, PHI, grid)
    elif seed.kind != PHI:
        raise DomainError("commute_phi needs a phi-based seed")
    lam = seed.lam
    l_new = None if q.l is None else q.l + 1.0
    q_new = _shifted_potential(q, seed, l_new, "phi_based")
    fs_new = PhiCommutedSystem(fs, seed, q_new)

    def factor(z):
        return np.asarray(z) - lam

    wm = WeylMap(f"(z - {lam:.17g}) * M(z)", factor)
    mm = MeasureMap(f"(t - {lam:.17g}) d rho(t)", lambda t: np.asarray(t) - lam)
    return TransformResult(q_new, fs_new, wm, mm, seed, {"type": "single", "kind": "phi",
                                                        "lambda": lam})


def commute_theta(q, fs, lam, grid=None, seed=None, M=None):
    """Theta-based single commutation at ``lam``; requires a limit-point endpoint at ``a``.

    ``M`` (the Weyl function of ``fs``) is only needed for the point mass of the
    measure map, ``-M(lam)`` with ``M(lam)`` the limit from the left.
    """
    if fs.potential is not q:
        raise DomainError("fs must be a fundamental system of q")
    if q.endpoint_class[0] != "limit-point":
        raise DomainError("theta-based commutation needs a limit-point left endpoint")
    if seed is None:
        seed = make_seed(fs, lam, THETA, grid)
    elif seed.kind != THETA:
        raise DomainError("commute_theta needs a theta-based seed")
    lam = seed.lam
    l_new = None if q.l is None else q.l - 1.0
    q_new = _shifted_potential(q, seed, l_new, "theta_based")
    fs_new = ThetaCommutedSystem(fs, seed, q_new)

    def factor(z):
        return 1.0 / (np.asarray(z) - lam)

    def atom(Mfun):
        value = Mfun.left_limit(lam) if hasattr(Mfun, "left_limit") else \
            WeylFunction(Mfun).left_limit(lam)
        if not math.isfinite(value):
            raise DomainError("M(lambda) diverges")
        return -value

    wm = WeylMap(f"M(z) / (z - {lam:.17g})", factor)
    mm = MeasureMap(f"d rho(t) / (t - {lam:.17g}) - M({lam:.17g}) delta(t - {lam:.17g})",
                    lambda t: 1.0 / (np.asarray(t) - lam), ((lam, atom),))
    return TransformResult(q_new, fs_new, wm, mm, seed, {"type": "single", "kind": "theta",
                                                        "lambda": lam})


def commuted_solution(seed, u, x=None, z=None, derivative=False):
    """Apply the commutation operator of ``seed`` to a solution ``u`` at ``z``.

    Phi-based seeds give ``-W(seed, u)/seed = -u' + w u``; theta-based seeds
    give ``W(seed, u)/seed = u' - w u``. ``u`` is a
    :class:`~commute.ode.SolutionSample` or a ``(value, derivative)`` pair.
    With ``derivative=True`` the pair ``(u_new, u_new')`` is returned, which
    needs ``z``.
    """
    if hasattr(u, "u"):
        x = u.x if x is None else x
        z = u.z if z is None else z
        val, der = u.u, u.du
    else:
        val, der = u
    if x is None:
        raise DomainError("x is required")
    s, ds = seed.solution(np.asarray(x, dtype=float))
    if np.any(np.asarray(s) == 0):
        raise DomainError("seed vanishes at x")
    w = np.asarray(ds) / np.asarray(s)
    sign = 1.0 if seed.kind == PHI else -1.0
    new = sign * (-der + w * val)
    if not derivative:
        return new
    if z is None:
        raise DomainError("z is required for the derivative")
    # u_new' = sign * ((z - lam - w**2) u + w u') for both kinds
    new_d = sign * ((z - seed.lam - w * w) * val + w * der)
    return new, new_d


def coulomb_ladder(l, gamma, x_max=None):
    """Phi-commutations climbing the Coulomb chain ``l' = 0 -> l``.

    Step ``k`` factors ``H_k - lam_k`` with the ground state
    ``x**(k+1) exp(-c_k x)``, ``c_k = gamma/(2(k+1))`` and ``lam_k = -c_k**2``.
    The closed-form seed avoids integrating a recessive solution outwards.
    Returns the list of step results; the composed Weyl map of step ``j`` is
    ``results[j].info['weyl_from_l0']``.
    """
    from .ode import BesselSystem
    from .potentials import DEFAULT_X_MAX, coulomb

    if int(l) != l or l < 1:
        raise DomainError("the ladder needs an integer l >= 1")
    gamma = float(gamma)
    q = coulomb(0, gamma, x_max=DEFAULT_X_MAX if x_max is None else x_max)
    fs = BesselSystem(q)
    results = []
    composed = None
    for k in range(int(l)):
        c = gamma / (2.0 * (k + 1))
        lam = -c * c

        def solution(x, k=k, c=c):
            x = np.asarray(x, dtype=float)
            e = np.exp(-c * x)
            u = x ** (k + 1) * e
            return u, ((k + 1) / x - c) * u

        sol = RealSolution(fs, lam)
        sol.phi = solution
        seed = make_seed(fs, lam, PHI, solution=solution, norm=sol.norm)
        res = commute_phi(q, fs, lam, seed=seed)
        composed = res.weyl_map if composed is None else composed.then(res.weyl_map)
        res.info.update({"step": k, "c": c, "weyl_from_l0": composed,
                         "l_from": k, "l_to": k + 1})
        results.append(res)
        q, fs = res.q_new, res.fs_new
    return results
