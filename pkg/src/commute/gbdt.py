"""Generalized Backlund-Darboux transformation (GBDT) with matrix seeds.

A seed is ``(A, S(0), Lambda(0))`` with ``A`` of size ``n x n`` satisfying the
Lyapunov-type identity ``A S - S A* = Lambda J Lambda*``. Along ``x`` the pair
``Lambda = [Lambda_1, Lambda_2]`` evolves by

    Lambda_1' = A Lambda_2 - q Lambda_2,    Lambda_2' = -Lambda_1,

and ``S' = Lambda_2 Lambda_2*``. The transfer matrix

    w_A(z, x) = I + J Lambda* S^{-1} (z - A)^{-1} Lambda

maps free solutions to solutions of the transformed equation, whose potential
is ``q - 2 (log det S)''``.

For ``q = 0`` the seed evolution is the matrix cosine/sine of ``sqrt(A) x``;
near ``x = 0`` it is summed as a power series, including the integral for
``S``. This keeps every entry of ``S`` accurate to working precision even
though ``S`` becomes strongly graded there (``det S ~ x**6/45`` in the
Jordan-block example), so no extended precision is needed.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ._numerics import branch_sqrt
from .errors import DomainError, IntegrationError, SingularTransformError
from .ode import DerivedSystem, FreeSystem, _as_z
from .potentials import Potential, free
from .weyl import WeylFunction

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
SEED_TOL = 1e-10
SPECTRUM_GUARD = 1e-8
COND_LIMIT = 1e12
PROPAGATE_RTOL = 1e-12
PROPAGATE_ATOL = 1e-15
SERIES_ORDER = 24
SYLVESTER_FROM = 0.5  # below, S is graded and comes from the series or quadrature


class IllConditionedWarning(RuntimeWarning):
    """``S(x)`` is close to singular; ``S^{-1}`` loses accuracy."""


@dataclass(frozen=True, eq=False)
class GBDTSeed:
    """Matrix data ``(A, Lambda(0), S(0))``; ``Lambda0`` is ``n x 2`` with columns ``Lambda_1, Lambda_2``."""

    A: np.ndarray
    Lambda0: np.ndarray
    S0: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        L = np.atleast_2d(np.asarray(self.Lambda0, dtype=complex))
        S = np.atleast_2d(np.asarray(self.S0, dtype=complex))
        n = A.shape[0]
        if A.shape != (n, n) or L.shape != (n, 2) or S.shape != (n, n):
            raise DomainError(f"inconsistent seed shapes A{A.shape}, Lambda0{L.shape}, S0{S.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Lambda0", L)
        object.__setattr__(self, "S0", S)

    @property
    def n(self):
        return self.A.shape[0]


def lyapunov_residual(A, S, Lam):
    """``A S - S A* - Lambda J Lambda*`` (stacked over leading axes)."""
    AH = np.conj(np.swapaxes(A, -1, -2))
    LH = np.conj(np.swapaxes(Lam, -1, -2))
    return A @ S - S @ AH - Lam @ J @ LH


def validate_seed(seed, tol=SEED_TOL):
    """Residuals of the Hermitian and Lyapunov conditions at ``x = 0``.

    Returns
    -------
    dict
        ``hermitian`` and ``lyapunov`` (Frobenius norms).

    Raises
    ------
    DomainError
        If either residual exceeds ``tol``; violations of the nonnegative
        definiteness of ``S0`` are reported the same way.
    """
    S = seed.S0
    herm = float(np.linalg.norm(S - S.conj().T))
    lyap = float(np.linalg.norm(lyapunov_residual(seed.A, S, seed.Lambda0)))
    diag = {"hermitian": herm, "lyapunov": lyap}
    if herm > tol:
        raise DomainError(f"S0 is not Hermitian (residual {herm:.3g})")
    if lyap > tol:
        raise DomainError(f"seed violates A S0 - S0 A* = Lambda J Lambda* (residual {lyap:.3g})")
    ev = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    if ev.min() < -tol * max(1.0, abs(ev).max()):
        raise DomainError("S0 must be nonnegative definite")
    diag["min_eig_S0"] = float(ev.min())
    return diag


class _FreeSeries:
    """Power series of ``Lambda`` and ``S`` for ``q = 0`` about ``x = 0``."""

    def __init__(self, seed, order=SERIES_ORDER):
        A = seed.A
        n = seed.n
        l1, l2 = seed.Lambda0[:, 0], seed.Lambda0[:, 1]
        a = np.zeros((2 * order, n), dtype=complex)
        P = np.eye(n, dtype=complex)  # (-A)**k
        for k in range(order):
            a[2 * k] = P @ l2 / math.factorial(2 * k)
            a[2 * k + 1] = -(P @ l1) / math.factorial(2 * k + 1)
            P = -A @ P
        self.a = a  # Lambda_2 = sum_j a_j x**j
        m = a.shape[0]
        self.b = -(np.arange(1, m)[:, None] * a[1:])  # Lambda_1 = -Lambda_2'
        C = np.zeros((2 * m - 1, n, n), dtype=complex)
        for j in range(m):
            C[j:j + m] += a[j][None, :, None] * np.conj(a)[:, None, :]
        self.C = C / np.arange(1, 2 * m)[:, None, None]  # S = S0 + sum_k C_k x**(k+1)
        self.S0 = seed.S0
        norm = max(1.0, float(np.linalg.norm(A, 2)))
        self.limit = min(0.5, 0.5 / math.sqrt(norm))

    def Lambda(self, x):
        x = np.asarray(x, dtype=float)
        pw = x[:, None] ** np.arange(self.a.shape[0])[None, :]
        l2 = pw @ self.a
        l1 = pw[:, :-1] @ self.b
        return np.stack([l1, l2], axis=-1)

    def S(self, x):
        x = np.asarray(x, dtype=float)
        pw = x[:, None] ** np.arange(1, self.C.shape[0] + 1)[None, :]
        return self.S0[None] + np.einsum("xk,kij->xij", pw, self.C)


def _hermitian(S):
    return 0.5 * (S + np.conj(np.swapaxes(S, -1, -2)))


@dataclass(frozen=True, eq=False)
class GBDTState:
    """Propagated seed: ``Lambda(x)`` of shape (nx, n, 2) and ``S(x)`` of shape (nx, n, n)."""

    seed: GBDTSeed
    q: Potential
    x_grid: np.ndarray
    _series: object = None
    _dense: object = None
    _x_dense: float = 0.0
    _sylvester: object = None
    diagnostics: dict = field(default_factory=dict)

    def _eval(self, x, closure=True):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = self.seed.n
        lam = np.empty((x.size, n, 2), dtype=complex)
        S = np.empty((x.size, n, n), dtype=complex)
        lo = x <= self._x_dense
        if np.any(lo):
            if self._series is None:
                raise DomainError("x below the propagated range")
            lam[lo] = self._series.Lambda(x[lo])
            S[lo] = self._series.S(x[lo])
        if not np.all(lo):
            if np.any(x[~lo] > self._dense.t_max + 1e-12):
                raise DomainError(f"x beyond the propagated range {self._dense.t_max}")
            y = self._dense(x[~lo])  # (dim, k)
            lam[~lo] = np.moveaxis(y[: 2 * n].reshape(2, n, -1), -1, 0).transpose(0, 2, 1)
            S[~lo] = np.moveaxis(y[2 * n:].reshape(n, n, -1), -1, 0)
        if closure and self._sylvester is not None:
            far = x >= SYLVESTER_FROM
            if np.any(far):
                S[far] = self._sylvester(lam[far])
        return lam, _hermitian(S)

    def Lambda(self, x):
        return self._eval(x)[0]

    def S(self, x):
        return self._eval(x)[1]

    def lyapunov_residual(self, x=None):
        """Max over ``x`` of ``|A S - S A* - Lambda J Lambda*| / (|A| |S|)``."""
        x = self.x_grid[self.x_grid > 0] if x is None else np.atleast_1d(x)
        lam, S = self._eval(x)
        r = np.linalg.norm(lyapunov_residual(self.seed.A[None], S, lam), axis=(1, 2))
        scale = np.linalg.norm(self.seed.A) * np.maximum(np.linalg.norm(S, axis=(1, 2)), 1e-300)
        return float(np.max(r / scale))


def propagate(seed, q=None, x_grid=None, x_end=None, rtol=PROPAGATE_RTOL, atol=PROPAGATE_ATOL):
    """Evolve ``Lambda`` and ``S`` from ``x = 0``.

    Parameters
    ----------
    q : Potential, optional
        Defaults to ``q = 0``; for ``q = 0`` the first stretch uses the exact
        power series. Other potentials must be finite at 0.
    x_grid : array_like
        Check points; must start at 0. Positivity of ``S`` and the Lyapunov
        identity are checked there.
    x_end : float, optional
        Right end of the dense propagation, by default
        ``max(x_grid[-1], q.upper_cutoff + 1)``.

    Raises
    ------
    SingularTransformError
        If ``S(x)`` is not positive definite at some grid point ``x > 0``.
    """
    validate_seed(seed)
    if q is None:
        q = free()
    if x_grid is None:
        x_grid = np.concatenate([[0.0], np.geomspace(1e-3, q.upper_cutoff, 60)])
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid[0] != 0.0 or np.any(np.diff(x_grid) <= 0):
        raise DomainError("x_grid must start at 0 and increase strictly")
    hi = float(max(x_grid[-1], q.upper_cutoff + 1.0 if x_end is None else x_end))
    n = seed.n
    A = seed.A
    is_free = q.kind == "free"
    series = _FreeSeries(seed) if is_free else None
    if is_free:
        x0 = min(series.limit, hi)
        L0 = series.Lambda([x0])[0]
        S0 = series.S([x0])[0]
    else:
        x0 = 0.0
        if not np.isfinite(q.func(np.array([1e-300]))).all():
            raise DomainError("propagate needs a potential finite at x = 0")
        L0, S0 = seed.Lambda0, seed.S0
    qf = q.func

    def rhs(x, y):
        l1 = y[:n]
        l2 = y[n:2 * n]
        dl1 = A @ l2 - float(qf(np.array([x]))[0]) * l2
        return np.concatenate([dl1, -l1, np.outer(l2, np.conj(l2)).ravel()])

    y0 = np.concatenate([L0[:, 0], L0[:, 1], S0.ravel()])
    if hi > x0:
        sol = solve_ivp(rhs, (x0, hi), y0, method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        if sol.status != 0:
            raise IntegrationError(f"seed propagation failed: {sol.message}", float(sol.t[-1]))
        dense = sol.sol
    else:
        dense = None
    closure = _sylvester_closure(A)
    state = GBDTState(seed, q, x_grid, series, dense, x0, closure)
    pos = x_grid[x_grid > 0]
    _, S = state._eval(pos)
    if closure is not None:
        far = pos[pos >= SYLVESTER_FROM]
        if far.size:
            _, S_ode = state._eval(far, closure=False)
            S_lyap = state.S(far)
            gap = np.linalg.norm(S_ode - S_lyap, axis=(1, 2)) / np.linalg.norm(S_lyap, axis=(1, 2))
            state.diagnostics["closure_gap"] = float(gap.max())
    for x, s in zip(pos, S):
        try:
            np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            raise SingularTransformError("S(x) is not positive definite", float(x)) from None
    state.diagnostics["lyapunov"] = state.lyapunov_residual(pos)
    state.diagnostics["hermitian"] = 0.0
    return state


def _sylvester_closure(A):
    """Solver ``Lambda -> S`` of ``A S - S A* = Lambda J Lambda*``, or None when it is singular.

    The equation has a unique solution iff ``A`` and ``A*`` share no
    eigenvalue; then ``S`` follows from ``Lambda`` without accumulated
    quadrature error and the identity holds to rounding.
    """
    n = A.shape[0]
    ev = np.linalg.eigvals(A)
    sep = np.min(np.abs(ev[:, None] - np.conj(ev)[None, :]))
    if sep < 1e-3 * max(1.0, float(np.linalg.norm(A, 2))):
        return None
    # column-major vec: vec(A S - S A*) = (I (x) A - conj(A) (x) I) vec(S)
    K = np.kron(np.eye(n), A) - np.kron(np.conj(A), np.eye(n))

    def solve(lam):
        LH = np.conj(np.swapaxes(lam, -1, -2))
        rhs = lam @ J @ LH  # (k, n, n)
        vec = np.swapaxes(rhs, -1, -2).reshape(rhs.shape[0], n * n).T
        sol = np.linalg.solve(K, vec).T.reshape(rhs.shape[0], n, n)
        return np.swapaxes(sol, -1, -2)

    return solve


def _spd_solve(S, B):
    """``S^{-1} B`` through the Cholesky factor (broadcasts over leading axes)."""
    L = np.linalg.cholesky(S)
    y = np.linalg.solve(L, B)
    return np.linalg.solve(np.conj(np.swapaxes(L, -1, -2)), y)


def _guard(A, z):
    ev = np.linalg.eigvals(A)
    dist = np.min(np.abs(np.asarray(z)[:, None] - ev[None, :]), axis=1)
    if np.any(dist < SPECTRUM_GUARD):
        raise DomainError("z coincides with an eigenvalue of A")


def transfer_values(state, z, x):
    """Batched ``w_A`` with shape (nz, nx, 2, 2) for 1-D ``z`` and ``x``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    lam, S = state._eval(x)
    n = state.seed.n
    zA = z[:, None, None] * np.eye(n)[None] - state.seed.A[None]
    R = np.linalg.solve(zA[:, None], np.broadcast_to(lam[None], (z.size,) + lam.shape))
    X = _spd_solve(np.broadcast_to(S[None], (z.size,) + S.shape), R)
    LH = np.conj(np.swapaxes(lam, -1, -2))[None]
    return np.eye(2)[None, None] + J @ (LH @ X)


@dataclass(frozen=True)
class TransferMatrix:
    """``w_A(z, x)`` as a 2x2 value with diagnostics."""

    value: np.ndarray
    z: complex
    x: float

    @property
    def det(self):
        return complex(np.linalg.det(self.value))


def transfer_matrix(state, z, x):
    """``w_A(z, x)`` at a single point.

    Raises
    ------
    DomainError
        If ``z`` lies within ``1e-8`` of an eigenvalue of ``A`` or ``x <= 0``.
    """
    z = complex(z)
    x = float(x)
    if x <= 0:
        raise DomainError("w_A needs x > 0")
    _guard(state.seed.A, np.array([z]))
    S = state.S(x)[0]
    cond = np.linalg.cond(S)
    if cond > COND_LIMIT:
        warnings.warn(f"S({x:g}) has condition number {cond:.3g}", IllConditionedWarning,
                      stacklevel=2)
    return TransferMatrix(transfer_values(state, [z], [x])[0, 0], z, x)


def j_unitarity_residual(state, z, x):
    """``|w_A(conj z, x)* J w_A(z, x) - J|``."""
    w = transfer_values(state, [z], [x])[0, 0]
    wc = transfer_values(state, [np.conj(z)], [x])[0, 0]
    return float(np.max(np.abs(wc.conj().T @ J @ w - J)))


def free_w(z, x):
    """Free fundamental matrix ``[[cos, sin/k], [-k sin, cos]]`` with ``k = sqrt(z)``; shape (nz, nx, 2, 2)."""
    r = FreeSystem().rows(_as_z(z), np.asarray(x, dtype=float))
    phi, dphi, th, dth = (np.asarray(v, dtype=complex) for v in r)
    return np.stack([np.stack([th, phi], -1), np.stack([dth, dphi], -1)], -2)


def _gauge(state, x):
    """``g = Lambda_2* S^{-1} Lambda_2`` and ``h = Lambda_1* S^{-1} Lambda_2`` on ``x``."""
    lam, S = state._eval(x)
    X = _spd_solve(S, lam[:, :, 1:2])[:, :, 0]
    g = np.einsum("xi,xi->x", np.conj(lam[:, :, 1]), X).real
    h = np.einsum("xi,xi->x", np.conj(lam[:, :, 0]), X)
    return g, h


def transformed_solutions(state, z, x):
    """``(y, y')`` with ``y = [1 0] w_A w`` and ``y' = [-g, 1] w_A w``; shapes (nz, nx, 2).

    ``g = Lambda_2* S^{-1} Lambda_2``. Only the ``q = 0`` seed evolution has the
    built-in free matrix ``w``.
    """
    if state.q.kind != "free":
        raise DomainError("transformed solutions are available for q = 0 only")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    P = transfer_values(state, z, x) @ free_w(z, x)
    g, _ = _gauge(state, x)
    y = P[:, :, 0, :]
    dy = -g[None, :, None] * y + P[:, :, 1, :]
    return y, dy


def transformed_potential(state):
    """``q + 2 (g**2 + 2 Re h)`` with ``g = Lambda_2* S^{-1} Lambda_2``, ``h = Lambda_1* S^{-1} Lambda_2``.

    This is ``q - 2 (log det S)''`` expanded with the seed equations, so no
    numerical differentiation enters.
    """
    qf = state.q.func

    def func(x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xx = np.atleast_1d(x)
        if np.any(xx <= 0):
            raise DomainError("the transformed potential is defined for x > 0")
        g, h = _gauge(state, xx)
        out = qf(xx) + 2.0 * (g * g + 2.0 * h.real)
        return out[0] if scalar else out

    q = state.q
    return Potential(func, (0.0, q.domain[1]), None, None, ("limit-point", q.endpoint_class[1]),
                     "gbdt", {"n": state.seed.n}, q.x_max)


class GBDTSystem(DerivedSystem):
    """``phi = p_phi(z) * y . c_phi`` and ``theta = p_theta(z) * y . c_theta`` from the GBDT solutions.

    The scalar prefactors cancel the poles of ``w_A`` at ``spec(A)``; those
    points and their conjugates are treated as removable.
    """

    def __init__(self, state, potential, c_phi, p_phi, c_theta, p_theta, removable_points):
        self.state, self.potential = state, potential
        self.c_phi = np.asarray(c_phi, dtype=complex)
        self.c_theta = np.asarray(c_theta, dtype=complex)
        self.p_phi, self.p_theta = p_phi, p_theta
        self.removable_points = tuple(complex(p) for p in removable_points)
        self.basepoint = {"kind": "singular", "a": 0.0, "transform": "gbdt"}
        self.normalization = {"phi": "p_phi(z) [1 0] w_A w c_phi",
                              "theta": "p_theta(z) [1 0] w_A w c_theta"}

    def eval_point(self, z):
        return 1.0

    def _direct(self, z, x):
        y, dy = transformed_solutions(self.state, z, x)
        pp = self.p_phi(z)[:, None]
        pt = self.p_theta(z)[:, None]
        return np.stack([pp * (y @ self.c_phi), pp * (dy @ self.c_phi),
                         pt * (y @ self.c_theta), pt * (dy @ self.c_theta)])

    def rows(self, z, x):
        z = _as_z(z)
        out = super().rows(z, x)
        if not np.iscomplexobj(z):
            # real z gives real phi, theta; drop the rounding-level imaginary part
            out = np.real(out)
        return out


@dataclass(frozen=True, eq=False)
class ExplicitExample:
    """One of the closed-form GBDT examples on ``q = 0``."""

    name: str
    seed: GBDTSeed
    state: GBDTState
    potential: Potential
    system: GBDTSystem
    weyl: WeylFunction
    closed_lambda: object
    constants: dict

    def det_w_closed(self, z):
        return self.constants["det_w"](np.asarray(z))


def lan1(A, v1, x_end=None):
    """Rank-one example with scalar ``A != 0`` and real ``v1``.

    ``Lambda_2 = cos(k x) - v1 sin(k x)/k``, ``Lambda_1 = v1 cos(k x) + k sin(k x)``
    with ``k = sqrt(A)``, ``S(0) = 0``. The Weyl function of the transformed
    operator is ``-(z - A)(z - conj A) / (i sqrt(z) + v1)``.
    """
    A = complex(A)
    if A == 0:
        raise DomainError("A must be nonzero")
    v1 = float(v1)
    seed = GBDTSeed([[A]], [[v1, 1.0]], [[0.0]])
    q0 = free()
    state = propagate(seed, q0, np.concatenate([[0.0], np.geomspace(1e-3, q0.upper_cutoff, 50)]),
                      x_end)
    pot = transformed_potential(state)
    Ab = A.conjugate()
    system = GBDTSystem(state, pot, [1.0, -v1], lambda z: 1.0 / (z - Ab),
                        [0.0, 1.0], lambda z: -(z - A), (A, Ab))
    k = np.sqrt(A)

    def closed_lambda(x):
        x = np.asarray(x, dtype=float)
        c, s = np.cos(k * x), np.sin(k * x)
        return np.stack([v1 * c + k * s, c - v1 * s / k], axis=-1)[:, None, :]

    def M(z):
        z = np.asarray(z, dtype=complex)
        return -(z - A) * (z - Ab) / (1j * branch_sqrt(z) + v1)

    weyl = WeylFunction.closed_form(M, f"-(z - A)(z - conj A)/(i sqrt(z) + v1), A={A}, v1={v1}")
    return ExplicitExample("lan1", seed, state, pot, system, weyl, closed_lambda,
                           {"A": A, "v1": v1, "det_w": lambda z: (z - Ab) / (z - A)})


def lan2(mu, d, x_end=None):
    """Jordan-block example: ``A = [[mu, 1], [0, mu]]``, ``Lambda(0) = [d v, v]``, ``v = (0, 1)``, ``S(0) = 0``.

    Requires non-real ``mu`` and real ``d``. The transformed potential behaves
    like ``12/x**2`` at 0 and the Weyl function is
    ``-(z - mu)**2 (z - conj mu)**2 / (i sqrt(z) + d)``.
    """
    mu = complex(mu)
    if mu.imag == 0:
        raise DomainError("mu must be non-real")
    d = float(d)
    A = np.array([[mu, 1.0], [0.0, mu]])
    v = np.array([0.0, 1.0])
    seed = GBDTSeed(A, np.stack([d * v, v], axis=-1), np.zeros((2, 2)))
    q0 = free()
    state = propagate(seed, q0, np.concatenate([[0.0], np.geomspace(1e-3, q0.upper_cutoff, 50)]),
                      x_end)
    pot = transformed_potential(state)
    mub = mu.conjugate()
    system = GBDTSystem(state, pot, [1.0, -d], lambda z: 1.0 / (z - mub) ** 2,
                        [0.0, 1.0], lambda z: -(z - mu) ** 2, (mu, mub))

    omega = 1j * np.sqrt(mu)
    N = np.array([[0.0, 1.0], [0.0, 0.0]])
    sqrtA = -1j * omega * np.eye(2) + (1j / (2 * omega)) * N
    c1 = 1 + d / omega
    c2 = 1 - d / omega
    c3 = c1 / (2 * omega)
    c4 = d / (2 * omega ** 3)
    c5 = -c2 / (2 * omega)

    def closed_lambda(x):
        x = np.asarray(x, dtype=float)
        em, ep = np.exp(-omega * x), np.exp(omega * x)
        f = em[:, None] * np.stack([c3 * x + c4, np.full(x.shape, c1)], -1)
        g = ep[:, None] * np.stack([c5 * x - c4, np.full(x.shape, c2)], -1)
        l1 = 0.5j * (f - g) @ sqrtA.T
        l2 = 0.5 * (f + g)
        return np.stack([l1, l2], axis=-1)

    def M(z):
        z = np.asarray(z, dtype=complex)
        return -(z - mu) ** 2 * (z - mub) ** 2 / (1j * branch_sqrt(z) + d)

    weyl = WeylFunction.closed_form(M, f"-(z - mu)^2 (z - conj mu)^2/(i sqrt(z) + d), mu={mu}, d={d}")
    consts = {"mu": mu, "d": d, "omega": omega, "sqrtA": sqrtA,
              "c": (c1, c2, c3, c4, c5), "det_w": lambda z: (z - mub) ** 2 / (z - mu) ** 2}
    return ExplicitExample("lan2", seed, state, pot, system, weyl, closed_lambda, consts)


def double_commutation_seed(lam, phi0, dphi0, gamma):
    """Rank-one real seed realizing double commutation: ``A = lam``, ``Lambda(0) = [-phi'(0), phi(0)]``,
    ``S(0) = 1/gamma`` (``0`` for ``gamma = inf``)."""
    from .double import GAMMA_INF, parse_gamma

    gamma = parse_gamma(gamma)
    s0 = 0.0 if gamma is GAMMA_INF else 1.0 / gamma
    return GBDTSeed([[float(lam)]], [[-float(dphi0), float(phi0)]], [[s0]])


def gbdt_equals_double_commutation(lam=-1.0, gamma=1.0, z=(1j, 2j, -1 + 1j), x=None,
                                   base=None):
    """Compare ``phi_gamma`` from the rank-one GBDT with the double-commutation construction.

    On GBDT's side ``phi_gamma = [1 0] w_A (phi, phi')`` (divided by
    ``z - lam`` for ``gamma = inf``) with ``phi`` the free Dirichlet solution.

    Returns
    -------
    dict
        ``max_abs`` and ``max_rel`` discrepancies, plus ``potential`` (max
        difference of the transformed potentials over ``x``).
    """
    from .double import GAMMA_INF, double_commute, parse_gamma

    gamma = parse_gamma(gamma)
    q = free() if base is None else base.potential
    fs = FreeSystem(q) if base is None else base
    x = np.linspace(0.1, 5.0, 50) if x is None else np.asarray(x, dtype=float)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r0 = fs.rows(np.array([float(lam)]), np.array([0.0]))[:, 0, 0].real
    seed = double_commutation_seed(lam, r0[0], r0[1], gamma)
    state = propagate(seed, q, np.concatenate([[0.0], x]))
    w = transfer_values(state, z, x)
    r = np.asarray(fs.rows(z, x), dtype=complex)
    phi_g = w[:, :, 0, 0] * r[0] + w[:, :, 0, 1] * r[1]
    if gamma is GAMMA_INF:
        phi_g = phi_g / (z[:, None] - lam)
    dc = double_commute(q, fs, lam, gamma)
    phi_dc = np.asarray(dc.fs_new.rows(z, x)[0], dtype=complex)
    diff = np.abs(phi_g - phi_dc)
    qg = transformed_potential(state)(x)
    return {"lambda": float(lam), "gamma": str(gamma), "max_abs": float(diff.max()),
            "max_rel": float((diff / np.maximum(np.abs(phi_dc), 1e-300)).max()),
            "potential": float(np.max(np.abs(qg - dc.q_new(x))))}
