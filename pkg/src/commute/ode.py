"""Solutions of ``-u'' + q u = z u`` and normalized fundamental systems.

Every fundamental system exposes one batched primitive, :meth:`FundamentalSystem.rows`,
returning the four rows ``(phi, phi', theta, theta')`` on a grid of spectral
parameters ``z`` and abscissae ``x``. Transformed systems (commutations, GBDT)
are built on top of that primitive, so any system can be fed back into the
Weyl machinery or transformed again.

Systems launched at the singular endpoint of a perturbed Bessel potential are
evaluated by a Frobenius series wherever the series is cheap and accurate
(``x <= x_series(z)``) and by a high-order Runge-Kutta integration beyond. The
series is never used as a mere launch point very close to zero: launching the
recessive branch ``x**-l`` at a tiny offset and integrating outwards amplifies
the unavoidable admixture of the dominant branch by ``(x / x_start)**(2l+1)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.integrate import solve_ivp

from . import tables
from ._numerics import branch_sqrt, gauss_legendre
from .errors import DomainError, IntegrationError, SeriesError
from .potentials import Potential

RTOL = 1e-10
ATOL = 1e-12
# fundamental systems feed identities checked at 1e-8 for solutions that grow
# or decay by many orders of magnitude, so they run tighter than the default
SYSTEM_RTOL = 1e-12
SYSTEM_ATOL = 1e-13
RICCATI_SWITCH = 50.0
SERIES_TERMS = 60


@dataclass(frozen=True)
class SolutionSample:
    """Value and derivative of one solution at ``x`` for spectral parameter ``z``."""

    x: float
    u: complex
    du: complex
    z: complex


def wronskian(s1, s2):
    """``W(u1, u2) = u1 u2' - u1' u2`` for two samples taken at the same ``(x, z)``."""
    if not math.isclose(s1.x, s2.x, rel_tol=1e-14, abs_tol=1e-300):
        raise DomainError(f"samples taken at different x ({s1.x} vs {s2.x})")
    if abs(complex(s1.z) - complex(s2.z)) > 1e-14 * max(1.0, abs(s1.z)):
        raise DomainError(f"samples taken at different z ({s1.z} vs {s2.z})")
    return complex(s1.u * s2.du - s1.du * s2.u)


def write_samples_csv(samples, path):
    """Export samples as ``x, re_u, im_u, re_du, im_du``."""
    header = ["x"] + tables.complex_columns("u") + tables.complex_columns("du")
    rows = [[s.x, *tables.split_complex(s.u), *tables.split_complex(s.du)] for s in samples]
    tables.write_csv(path, header, rows)


# ---------------------------------------------------------------------------
# low-level integration


def _fail(sol, what):
    x = float(sol.t[-1]) if len(sol.t) else None
    raise IntegrationError(f"{what}: {sol.message}", x)


def solve_linear(q, z, x0, y0, x_end, t_eval=None, dense=False, rtol=SYSTEM_RTOL,
                 atol=SYSTEM_ATOL):
    """Integrate ``u'' = (q - z) u`` for a batch of columns.

    Parameters
    ----------
    z : ndarray, shape (m,)
        Spectral parameter per column.
    y0 : ndarray, shape (2, m)
        Values and derivatives at ``x0``.

    Returns the ``solve_ivp`` result; ``sol.y`` has shape ``(2m, len(t))``.
    """
    zz = np.asarray(z)
    m = zz.size
    real = not np.iscomplexobj(zz) and not np.iscomplexobj(y0)
    dtype = float if real else complex
    y0 = np.asarray(y0, dtype=dtype).reshape(2 * m)
    if not real:
        zz = zz.astype(complex)

    def rhs(x, y):
        return np.concatenate([y[m:], (q(x) - zz) * y[:m]])

    sol = solve_ivp(rhs, (x0, x_end), y0, method="DOP853", t_eval=t_eval,
                    dense_output=dense, rtol=rtol, atol=atol)
    if sol.status != 0:
        _fail(sol, "linear integration failed")
    return sol


def _growing(z):
    z = complex(z)
    return z.imag != 0.0 or z.real < 0.0


def integrate(q, z, x0, u0, du0, targets, rtol=RTOL, atol=ATOL,
              riccati_threshold=RICCATI_SWITCH):
    """Samples of the solution with ``u(x0) = u0``, ``u'(x0) = du0`` at ``targets``.

    Targets must be monotone in one direction away from ``x0``. Once
    ``|sqrt(z)| x`` exceeds ``riccati_threshold`` and solutions grow
    exponentially, the integration continues in the variables
    ``(u'/u, log u)`` so that the stored state cannot overflow.

    Raises
    ------
    IntegrationError
        On step-size underflow, with the abscissa where it happened.
    DomainError
        If ``x0`` or a target lies outside the domain.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    a, b = q.domain
    for x in np.concatenate([[x0], targets]):
        if not a < x < b:
            raise DomainError(f"x={x} outside the open interval ({a}, {b})")
    d = np.diff(np.concatenate([[x0], targets]))
    if np.any(d > 0) and np.any(d < 0):
        raise DomainError("targets must be monotone away from x0")
    z = complex(z)
    if targets.size == 0:
        return []
    forward = targets[-1] >= x0
    k = abs(branch_sqrt(z))
    x_switch = riccati_threshold / k if k > 0 else math.inf
    log_ok = _growing(z) and math.isfinite(x_switch)

    out = []
    xc, uc, dc = float(x0), complex(u0), complex(du0)
    pending = list(targets)
    # split the path at x_switch; only the part beyond it may use the log form
    breaks = [x_switch] if log_ok and min(xc, pending[-1]) < x_switch < max(xc, pending[-1]) else []
    legs = []
    start = xc
    for xb in breaks + [pending[-1]]:
        legs.append((start, xb))
        start = xb
    for lo, hi in legs:
        seg = [t for t in pending if (lo < t <= hi) or (hi <= t < lo) or t == lo]
        pending = [t for t in pending if t not in seg]
        beyond = log_ok and min(lo, hi) >= x_switch * (1 - 1e-12)
        if beyond and uc != 0:
            res = _integrate_log(q, z, lo, uc, dc, hi, seg, rtol, atol)
            if res is not None:
                vals, (uc, dc) = res
                out.extend(SolutionSample(float(t), v[0], v[1], z) for t, v in zip(seg, vals))
                continue
        t_eval = np.array(seg + [hi]) if seg else np.array([hi])
        sol = solve_linear(q, np.array([z]), lo, np.array([[uc], [dc]], dtype=complex), hi,
                           t_eval=np.unique(t_eval) if forward else np.unique(t_eval)[::-1],
                           rtol=rtol, atol=atol)
        lookup = {float(t): (sol.y[0, i], sol.y[1, i]) for i, t in enumerate(sol.t)}
        out.extend(SolutionSample(float(t), *lookup[float(t)], z) for t in seg)
        uc, dc = lookup[float(hi)]
    return out


def _integrate_log(q, z, x0, u0, du0, x1, seg, rtol, atol):
    """Integrate ``m' = q - z - m**2, L' = m`` with ``m = u'/u``, ``L = log u``.

    Returns None when the log form breaks down (``u`` passing too close to a
    zero), so the caller can fall back to the linear form.
    """

    def rhs(x, y):
        m = y[0]
        return np.array([q(x) - z - m * m, m])

    y0 = np.array([du0 / u0, np.log(u0)], dtype=complex)
    t_eval = np.unique(np.array(seg + [x1]))
    if x1 < x0:
        t_eval = t_eval[::-1]
    sol = solve_ivp(rhs, (x0, x1), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        return None
    u = np.exp(sol.y[1])
    if not np.all(np.isfinite(u)):
        raise IntegrationError("solution overflows double precision", float(x1))
    lookup = {float(t): (u[i], sol.y[0, i] * u[i]) for i, t in enumerate(sol.t)}
    return [lookup[float(t)] for t in seg], lookup[float(x1)]


# ---------------------------------------------------------------------------
# Frobenius series at a regular singular endpoint


def perturbation_series(potential, fit_radius=0.25, degree=14):
    """Taylor coefficients of ``x * q_pert(x)`` at 0 for a Bessel-type potential.

    Uses the exact coefficients carried by the perturbation when available and
    a Chebyshev fit on ``[0, fit_radius]`` otherwise. Returns ``(coeffs, radius)``
    with ``radius`` the largest ``x`` at which the coefficients may be trusted.
    """
    pert = potential.perturbation
    if pert is None or pert.series is not None:
        return np.asarray(pert.series if pert is not None else (), dtype=float), math.inf

    def xq(x):
        return x * np.asarray(pert.func(x), dtype=float)

    cheb = Chebyshev.interpolate(xq, degree, domain=[0.0, fit_radius])
    check = np.linspace(fit_radius * 1e-3, fit_radius, 41)
    err = np.max(np.abs(cheb(check) - xq(check)))
    if not np.isfinite(err) or err > 1e-11 * max(1.0, np.max(np.abs(xq(check)))):
        raise SeriesError("x * q_pert is not smooth enough near 0 for a series fit")
    coef = cheb.convert(kind=Polynomial).convert(domain=[-1, 1], window=[-1, 1]).coef
    return coef, fit_radius


class FrobeniusSeries:
    """Frobenius solutions of ``-u'' + (l(l+1)/x**2 + P(x)/x) u = z u``.

    ``P(x) = sum_j p[j] x**j``. The regular branch is
    ``phi = x**(l+1) sum_k a_k x**k`` with ``a_0 = 1``; the singular branch is
    ``theta = (x**(-l) sum_m b_m x**m + C phi log x) / (2l+1)`` with ``b_0 = 1``,
    the logarithm appearing only at resonance (``2l+1`` an integer). With this
    normalization ``W(theta, phi) = 1``.

    Parameters
    ----------
    z : ndarray, shape (nz,)
    """

    def __init__(self, l, p, z, nterms=SERIES_TERMS):
        l = float(l)
        N = 2.0 * l + 1.0
        if N <= 0.0:
            raise DomainError("the logarithmic case l = -1/2 is not supported")
        z = np.atleast_1d(np.asarray(z))
        dtype = complex if np.iscomplexobj(z) else float
        p = np.asarray(p, dtype=float)
        K = int(nterms)
        a = np.zeros((K, z.size), dtype=dtype)
        b = np.zeros((K, z.size), dtype=dtype)
        a[0] = 1.0
        b[0] = 1.0
        for k in range(1, K):
            s = np.zeros(z.size, dtype=dtype)
            for j in range(min(k, p.size)):
                s = s + p[j] * a[k - 1 - j]
            if k >= 2:
                s = s - z * a[k - 2]
            a[k] = s / (k * (k + N))
        resonant = abs(N - round(N)) < 1e-12
        n_res = int(round(N)) if resonant else -1
        C = np.zeros(z.size, dtype=dtype)
        for m in range(1, K):
            s = np.zeros(z.size, dtype=dtype)
            for j in range(min(m, p.size)):
                s = s + p[j] * b[m - 1 - j]
            if m >= 2:
                s = s - z * b[m - 2]
            if m == n_res:
                C = s / N
                b[m] = 0.0
                continue
            if n_res > 0 and m > n_res:
                s = s - C * (2 * m - N) * a[m - n_res]
            b[m] = s / (m * (m - N))
        self.l, self.N, self.z = l, N, z
        self.a, self.b, self.C = a, b, C
        self.log_term = bool(np.any(C != 0))

    def _check_tail(self, coef, pw, x):
        terms = np.abs(coef[:, :, None]) * pw[:, None, :]
        scale = terms.max(axis=0)
        tail = terms[-4:].max(axis=0)
        bad = tail > 1e-15 * scale + 1e-300
        if np.any(bad):
            raise SeriesError(f"Frobenius series not converged at x={float(np.max(x)):.6g}")

    def rows(self, x):
        """``(phi, phi', theta, theta')`` with shape (4, nz, nx) for ``x > 0``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        l, N = self.l, self.N
        K = self.a.shape[0]
        k = np.arange(K)[:, None]
        pw = x[None, :] ** k
        self._check_tail(self.a, pw, x)
        self._check_tail(self.b, pw, x)
        A = self.a.T @ pw
        Ad = self.a.T @ (pw * (k + l + 1.0))
        B = self.b.T @ pw
        Bd = self.b.T @ (pw * (k - l))
        phi = x ** (l + 1.0) * A
        dphi = x ** l * Ad
        theta = x ** (-l) * B
        dtheta = x ** (-l - 1.0) * Bd
        if self.log_term:
            lx = np.log(x)
            C = self.C[:, None]
            theta = theta + C * phi * lx
            dtheta = dtheta + C * (dphi * lx + phi / x)
        return np.stack([phi, dphi, theta / N, dtheta / N])

    def norm(self, x):
        """``int_0^x phi**2`` for each ``z`` (shape (nz, nx)), from the squared series."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        K = self.a.shape[0]
        sq = np.zeros((2 * K - 1, self.z.size), dtype=self.a.dtype)
        for i in range(K):
            sq[i:i + K] += self.a[i] * self.a
        e = np.arange(2 * K - 1)[:, None] + 2.0 * self.l + 3.0
        return (sq.T @ (x[None, :] ** e / e)).reshape(self.z.size, x.size)


def frobenius_start(l, q_pert=None, z=0.0, x_start=1e-3, branch="phi", nterms=SERIES_TERMS):
    """Initial data ``(u, u')`` of the ``x**(l+1)`` (phi) or ``x**-l`` (theta) branch.

    ``q_pert`` is None, a :class:`~commute.potentials.Perturbation` or a plain
    callable (whose series is fitted). The theta branch carries the factor
    ``1/(2l+1)`` so that ``W(theta, phi) = 1``.
    """
    from .potentials import bessel

    if branch not in ("phi", "theta"):
        raise DomainError(f"branch must be 'phi' or 'theta', got {branch!r}")
    if not x_start > 0:
        raise DomainError("x_start must be positive")
    pot = bessel(l, q_pert)
    p, radius = perturbation_series(pot)
    if x_start > radius:
        raise SeriesError(f"x_start={x_start} beyond the trusted series radius {radius}")
    zz = np.array([z])
    if np.iscomplexobj(zz) and zz.imag[0] == 0.0:
        zz = zz.real
    r = FrobeniusSeries(l, p, zz, nterms).rows([x_start])[:, 0, 0]
    i = 0 if branch == "phi" else 2
    return (r[i].item(), r[i + 1].item())


# ---------------------------------------------------------------------------
# fundamental systems


def _as_z(z):
    z = np.atleast_1d(np.asarray(z))
    if np.iscomplexobj(z) and np.all(z.imag == 0.0):
        z = z.real
    if not np.iscomplexobj(z):
        z = z.astype(float)
    return z


class FundamentalSystem:
    """Real entire pair ``(phi, theta)`` with ``W(theta, phi) = 1``.

    Subclasses implement :meth:`rows`. ``basepoint`` describes where the
    normalization is imposed and ``normalization`` records the chosen leading
    constants.
    """

    potential: Potential
    basepoint: dict
    normalization: dict

    def rows(self, z, x):
        """``(phi, phi', theta, theta')`` with shape (4, nz, nx).

        ``z`` is 1-D (real or complex), ``x`` is 1-D and strictly increasing.
        """
        raise NotImplementedError

    def evaluate(self, z, x):
        """Rows for scalar-or-1-D ``z`` and ``x``; scalar axes are dropped."""
        zs = np.ndim(z) == 0
        xs = np.ndim(x) == 0
        zz = _as_z(z)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        order = np.argsort(xx, kind="stable")
        ux, inv = np.unique(xx[order], return_inverse=True)
        r = self.rows(zz, ux)
        back = np.empty_like(order)
        back[order] = np.arange(order.size)
        r = r[:, :, inv][:, :, back]
        if np.iscomplexobj(zz) or np.iscomplexobj(r):
            r = r.astype(complex)
        if xs:
            r = r[:, :, 0]
        if zs:
            r = r[:, 0]
        return r

    def phi(self, z, x):
        r = self.evaluate(z, x)
        return r[0], r[1]

    def theta(self, z, x):
        r = self.evaluate(z, x)
        return r[2], r[3]

    def sample(self, which, z, x):
        """:class:`SolutionSample` list of ``phi`` or ``theta`` along ``x``."""
        i = {"phi": 0, "theta": 2}[which]
        r = self.evaluate(complex(z), np.atleast_1d(x))
        return [SolutionSample(float(t), complex(r[i][k]), complex(r[i + 1][k]), complex(z))
                for k, t in enumerate(np.atleast_1d(x))]

    def eval_point(self, z):
        """A good abscissa for evaluating Wronskians against this system."""
        raise NotImplementedError

    def seed(self, lam):
        """Real solutions at real ``lam`` usable as commutation seeds."""
        return RealSolution(self, float(lam))


class RealSolution:
    """``phi(lam, .)``, ``theta(lam, .)`` and ``int_a^x phi(lam)**2`` for real ``lam``.

    The running norm is computed by composite Gauss-Legendre quadrature with
    panels refined geometrically towards ``a``.
    """

    ORDER = 16

    def __init__(self, fs, lam):
        self.fs = fs
        self.lam = float(lam)
        self._edges = None
        self._cum = None

    def phi(self, x):
        r = self.fs.evaluate(self.lam, x)
        return np.real(r[0]), np.real(r[1])

    def theta(self, x):
        r = self.fs.evaluate(self.lam, x)
        return np.real(r[2]), np.real(r[3])

    def _build(self, x_hi):
        a = self.fs.potential.domain[0]
        hi = max(float(x_hi), a + 1.0)
        geo = a + np.geomspace(1e-7, 0.5, 23)
        lin = np.arange(a + 0.75, hi + 0.25, 0.25)
        edges = np.concatenate([[a], geo, lin])
        nodes, weights = gauss_legendre(self.ORDER)
        lo, w = edges[:-1], np.diff(edges)
        pts = (lo[:, None] + w[:, None] * nodes[None, :]).ravel()
        u, _ = self.phi(pts)
        panel = (u.reshape(lo.size, -1) ** 2 * weights[None, :]).sum(axis=1) * w
        self._edges = edges
        self._cum = np.concatenate([[0.0], np.cumsum(panel)])

    def norm(self, x):
        """``int_a^x phi(lam, t)**2 dt``."""
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        if self._edges is None or xx.max() > self._edges[-1]:
            self._build(max(xx.max(), self.fs.potential.upper_cutoff + 1.0))
        i = np.clip(np.searchsorted(self._edges, xx, side="right") - 1, 0, self._edges.size - 2)
        lo = self._edges[i]
        nodes, weights = gauss_legendre(self.ORDER)
        w = xx - lo
        pts = (lo[:, None] + w[:, None] * nodes[None, :]).ravel()
        u, _ = self.phi(pts)
        part = (u.reshape(xx.size, -1) ** 2 * weights[None, :]).sum(axis=1) * w
        out = self._cum[i] + part
        return out[0] if np.ndim(x) == 0 else out


class _DenseReal:
    """Dense real trajectories of ``(phi, phi', theta, theta')`` for one ``lam``."""

    def __init__(self, pieces, below=None):
        self.pieces = pieces  # list of (lo, hi, OdeSolution)
        self.below = below

    def __call__(self, x):
        out = np.empty((4, x.size))
        done = np.zeros(x.size, dtype=bool)
        for lo, hi, sol in self.pieces:
            m = (x >= lo) & (x <= hi) & ~done
            if np.any(m):
                out[:, m] = sol(x[m])
                done |= m
        if not np.all(done):
            if self.below is None:
                raise DomainError("abscissa outside the integrated range")
            out[:, ~done] = self.below(x[~done])
        return out


class _CachedDense:
    _limit = 32

    def _dense_cache(self):
        if not hasattr(self, "_dense_store"):
            object.__setattr__(self, "_dense_store", {})
        return self._dense_store

    def _dense_for(self, lam, x_need):
        store = self._dense_cache()
        key = float(lam)
        d = store.get(key)
        if d is None or x_need > d[0]:
            hi = max(x_need, self.potential.upper_cutoff + 1.0)
            if math.isfinite(self.potential.domain[1]):
                hi = min(hi, self.potential.domain[1])
            d = (hi, self._make_dense(key, hi))
            if len(store) >= self._limit:
                store.pop(next(iter(store)))
            store[key] = d
        return d[1]


class BesselSystem(_CachedDense, FundamentalSystem):
    """System normalized at the singular endpoint of ``l(l+1)/x**2 + q_pert``.

    ``phi ~ x**(l+1)`` and ``theta ~ x**(-l) / (2l+1)``.

    Parameters
    ----------
    x_start : float, optional
        Fixed abscissa where the series hands over to the integrator. By
        default the hand-over point adapts to ``z`` (see :meth:`series_limit`).
    """

    def __init__(self, potential, x_start=None, nterms=SERIES_TERMS, rtol=SYSTEM_RTOL,
                 atol=SYSTEM_ATOL):
        if potential.l is None:
            raise DomainError("potential has no singularity index l")
        if potential.l <= -0.5:
            raise DomainError("the logarithmic case l = -1/2 is not supported")
        self.potential = potential
        self.l = float(potential.l)
        self.p, self._radius = perturbation_series(potential)
        if x_start is not None and not 0 < x_start <= self._radius:
            raise DomainError(f"x_start must lie in (0, {self._radius}]")
        self.x_start = x_start
        self.nterms = nterms
        self.rtol, self.atol = rtol, atol
        self.basepoint = {"kind": "singular", "a": 0.0, "l": self.l}
        self.normalization = {"phi": "x**(l+1)", "theta": "x**(-l)/(2l+1)"}

    def series_limit(self, z):
        """Largest ``x`` where the series is used for every entry of ``z``."""
        if self.x_start is not None:
            return self.x_start
        zmax = float(np.max(np.abs(np.atleast_1d(z)))) if np.size(z) else 0.0
        p = np.abs(self.p)
        if zmax == 0.0 and not np.any(p):
            return math.inf
        limit = min(1.0, self._radius)
        if zmax > 0:
            limit = min(limit, 2.5 / math.sqrt(zmax))
        if np.any(p):
            scale = max(p[j] ** (1.0 / (j + 1)) for j in range(p.size) if p[j] > 0)
            limit = min(limit, 2.5 / scale)
        return limit

    def eval_point(self, z):
        return min(1.0, self.series_limit(z))

    def _series(self, z):
        return FrobeniusSeries(self.l, self.p, z, self.nterms)

    def rows(self, z, x):
        z = _as_z(z)
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("x must be positive")
        if z.size == 1 and not np.iscomplexobj(z):
            return self._dense_for(z[0], float(x.max()))(x)[:, None, :]
        x0 = self.series_limit(z)
        out = np.empty((4, z.size, x.size), dtype=complex if np.iscomplexobj(z) else float)
        lo = x <= x0
        ser = self._series(z)
        if np.any(lo):
            out[:, :, lo] = ser.rows(x[lo])
        if not np.all(lo):
            start = ser.rows([x0])[:, :, 0]  # (4, nz)
            y0 = np.stack([np.concatenate([start[0], start[2]]),
                           np.concatenate([start[1], start[3]])])
            zz = np.concatenate([z, z])
            sol = solve_linear(self.potential.func, zz, x0, y0, float(x[-1]), t_eval=x[~lo],
                               rtol=self.rtol, atol=self.atol)
            n = z.size
            y = sol.y  # (4n, nt): phi, theta values then derivatives
            out[0, :, ~lo] = y[:n].T
            out[2, :, ~lo] = y[n:2 * n].T
            out[1, :, ~lo] = y[2 * n:3 * n].T
            out[3, :, ~lo] = y[3 * n:].T
        return out

    def _make_dense(self, lam, hi):
        z = np.array([lam])
        x0 = self.series_limit(z)
        ser = self._series(z)

        def below(x):
            return ser.rows(x)[:, 0, :]

        if x0 >= hi:
            return _DenseReal([], below)
        start = ser.rows([x0])[:, 0, 0]
        y0 = np.array([[start[0], start[2]], [start[1], start[3]]])
        sol = solve_linear(self.potential.func, np.array([lam, lam]), x0, y0, hi, dense=True,
                           rtol=self.rtol, atol=self.atol)
        f = sol.sol

        def ordered(x):
            y = f(x)
            return np.stack([y[0], y[2], y[1], y[3]])

        return _DenseReal([(x0, hi, ordered)], below)

    def seed(self, lam):
        return BesselSeed(self, float(lam))


class BesselSeed(RealSolution):
    """Seed whose running norm uses the squared series near the singular endpoint."""

    def norm(self, x):
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        x0 = self.fs.series_limit(np.array([self.lam]))
        cut = min(x0, 0.5)
        ser = self.fs._series(np.array([self.lam]))
        out = np.empty(xx.size)
        lo = xx <= cut
        if np.any(lo):
            out[lo] = np.real(ser.norm(xx[lo])[0])
        if not np.all(lo):
            base = np.real(ser.norm([cut])[0, 0])
            nodes, weights = gauss_legendre(self.ORDER)
            if self._edges is None or xx.max() > self._edges[-1]:
                hi = max(xx.max(), self.fs.potential.upper_cutoff + 1.0)
                edges = np.concatenate([np.arange(cut, hi, 0.25), [hi]])
                lo_e, w = edges[:-1], np.diff(edges)
                pts = (lo_e[:, None] + w[:, None] * nodes[None, :]).ravel()
                u, _ = self.phi(pts)
                panel = (u.reshape(lo_e.size, -1) ** 2 * weights[None, :]).sum(axis=1) * w
                self._edges = edges
                self._cum = np.concatenate([[0.0], np.cumsum(panel)])
            xs = xx[~lo]
            i = np.clip(np.searchsorted(self._edges, xs, side="right") - 1, 0,
                        self._edges.size - 2)
            e = self._edges[i]
            w = xs - e
            pts = (e[:, None] + w[:, None] * nodes[None, :]).ravel()
            u, _ = self.phi(pts)
            part = (u.reshape(xs.size, -1) ** 2 * weights[None, :]).sum(axis=1) * w
            out[~lo] = base + self._cum[i] + part
        return out[0] if np.ndim(x) == 0 else out


class RegularSystem(_CachedDense, FundamentalSystem):
    """``phi(c) = 0, phi'(c) = 1`` and ``theta(c) = 1, theta'(c) = 0`` at a regular point ``c``.

    ``c`` may coincide with the left endpoint when that endpoint is declared
    regular.
    """

    def __init__(self, potential, c, rtol=SYSTEM_RTOL, atol=SYSTEM_ATOL):
        a, b = potential.domain
        c = float(c)
        if c == a:
            if potential.endpoint_class[0] != "regular":
                raise DomainError("c = a requires a regular left endpoint")
        elif not a < c < b:
            raise DomainError(f"base point c={c} outside ({a}, {b})")
        self.potential = potential
        self.c = c
        self.rtol, self.atol = rtol, atol
        self.basepoint = {"kind": "regular", "c": c}
        self.normalization = {"phi": "phi(c)=0, phi'(c)=1", "theta": "theta(c)=1, theta'(c)=0"}
        self._at_a = c == a

    def eval_point(self, z):
        if not self._at_a:
            return self.c
        zmax = float(np.max(np.abs(np.atleast_1d(z))))
        return self.c + min(1.0, 2.5 / math.sqrt(zmax) if zmax > 0 else 1.0)

    def rows(self, z, x):
        z = _as_z(z)
        x = np.asarray(x, dtype=float)
        if z.size == 1 and not np.iscomplexobj(z):
            return self._dense_for(z[0], float(x.max()))(x)[:, None, :]
        n = z.size
        dtype = complex if np.iscomplexobj(z) else float
        out = np.empty((4, n, x.size), dtype=dtype)
        y0 = np.stack([np.concatenate([np.zeros(n), np.ones(n)]),
                       np.concatenate([np.ones(n), np.zeros(n)])]).astype(dtype)
        zz = np.concatenate([z, z])
        at = x == self.c
        out[:, :, at] = np.array([0.0, 1.0, 1.0, 0.0])[:, None, None]
        for mask in (x > self.c, x < self.c):
            if not np.any(mask):
                continue
            xs = x[mask]
            t_eval = xs if xs[0] > self.c else xs[::-1]
            sol = solve_linear(self.potential.func, zz, self.c, y0, float(t_eval[-1]),
                               t_eval=t_eval, rtol=self.rtol, atol=self.atol)
            y = sol.y if xs[0] > self.c else sol.y[:, ::-1]
            out[0, :, mask] = y[:n].T
            out[2, :, mask] = y[n:2 * n].T
            out[1, :, mask] = y[2 * n:3 * n].T
            out[3, :, mask] = y[3 * n:].T
        return out

    def _make_dense(self, lam, hi):
        y0 = np.array([[0.0, 1.0], [1.0, 0.0]])
        pieces = []
        lo_end = self.potential.domain[0]
        for end in (hi, lo_end):
            if end == self.c:
                continue
            if not math.isfinite(end):
                continue
            if end < self.c and self._at_a:
                continue
            target = end if end > self.c else lo_end + 1e-12 * max(1.0, abs(lo_end))
            sol = solve_linear(self.potential.func, np.array([lam, lam]), self.c, y0, target,
                               dense=True, rtol=self.rtol, atol=self.atol)
            f = sol.sol

            def ordered(x, f=f):
                y = f(x)
                return np.stack([y[0], y[2], y[1], y[3]])

            pieces.append((min(self.c, target), max(self.c, target), ordered))
        return _DenseReal(pieces)


class FreeSystem(FundamentalSystem):
    """Closed form for ``q = 0`` with base point ``c``: ``phi = sin(k(x-c))/k``, ``theta = cos(k(x-c))``."""

    def __init__(self, potential=None, c=0.0):
        from .potentials import free

        self.potential = potential if potential is not None else free()
        self.c = float(c)
        self.basepoint = {"kind": "regular", "c": self.c}
        self.normalization = {"phi": "phi(c)=0, phi'(c)=1", "theta": "theta(c)=1, theta'(c)=0"}

    def eval_point(self, z):
        zmax = float(np.max(np.abs(np.atleast_1d(z))))
        return self.c + min(1.0, 2.5 / math.sqrt(zmax) if zmax > 0 else 1.0)

    def rows(self, z, x):
        z = _as_z(z)
        t = np.asarray(x, dtype=float)[None, :] - self.c
        zc = z[:, None]
        if np.iscomplexobj(z) or np.any(z.real < 0):
            k = branch_sqrt(zc.astype(complex))
            kt = k * t
            s = np.where(np.abs(kt) < 1e-8, t * (1 - kt * kt / 6), np.sin(kt) / np.where(k == 0, 1, k))
            c = np.cos(kt)
        else:
            k = np.sqrt(zc)
            kt = k * t
            s = np.where(np.abs(kt) < 1e-8, t * (1 - kt * kt / 6), np.sin(kt) / np.where(k == 0, 1, k))
            c = np.cos(kt)
        out = np.stack([s, c, c, -zc * s])
        if not np.iscomplexobj(z):
            out = np.real(out)
        return out


def fundamental_system(q, mode="regular", c=None, x_start=None):
    """Build a normalized fundamental system.

    Parameters
    ----------
    mode : {'regular', 'singular_bessel'}
        ``regular`` normalizes at a base point ``c`` (``phi = s``, ``theta = c``
        in the usual sine/cosine notation); ``singular_bessel`` normalizes at
        the singular endpoint of a potential carrying an index ``l``.
    """
    if mode == "regular":
        if c is None:
            raise DomainError("regular mode needs a base point c")
        if q.kind == "free":
            return FreeSystem(q, c)
        return RegularSystem(q, c)
    if mode == "singular_bessel":
        return BesselSystem(q, x_start=x_start)
    raise DomainError(f"unknown mode {mode!r}")


class DerivedSystem(FundamentalSystem):
    """System obtained from a base system by a transformation with removable points.

    Subclasses implement :meth:`_direct`, the closed formulas that may divide
    by ``z - p`` for ``p`` in :attr:`removable_points`. Within ``radius / 2`` of
    such a point the rows are recovered from Cauchy's integral over the circle
    of radius ``radius``, which the entire rows make exact up to quadrature
    error decaying like ``2**-n``.
    """

    radius = 0.25
    removable_points = ()

    def _direct(self, z, x):
        raise NotImplementedError

    def _exact(self, z, x):
        """Rows at a removable point itself, or None to fall back to the contour."""
        return None

    def _near(self, z):
        hits = np.full(z.shape, -1)
        for i, p in enumerate(self.removable_points):
            d = np.abs(z - p)
            hits = np.where((hits < 0) & (d < self.radius / 2), i, hits)
        return hits

    def rows(self, z, x):
        z = _as_z(z)
        x = np.asarray(x, dtype=float)
        hits = self._near(z)
        if not np.any(hits >= 0):
            return self._direct(z, x)
        cplx = np.iscomplexobj(z) or any(np.iscomplexobj(p) and np.imag(p) != 0
                                         for p in self.removable_points)
        out = np.empty((4, z.size, x.size), dtype=complex)
        far = hits < 0
        if np.any(far):
            out[:, far] = self._direct(z[far], x)
        from ._numerics import removable

        for i, p in enumerate(self.removable_points):
            sel = np.flatnonzero(hits == i)
            if sel.size == 0:
                continue
            zsel = z[sel]
            exact = None
            if np.all(zsel == p):
                exact = self._exact(zsel, x)
            if exact is not None:
                out[:, sel] = exact
                continue

            def f(zeta):
                return np.moveaxis(self._direct(zeta, x), 1, 0)

            vals = removable(f, zsel, p, self.radius)  # (len(sel), 4, nx)
            out[:, sel] = np.moveaxis(vals, 0, 1)
        if not cplx:
            out = out.real
        return out
