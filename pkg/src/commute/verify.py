"""Self-checks of the numerical identities, grouped into suites.

Each check reports a measured residual against its tolerance. The suites
are deterministic (fixed grids, seeded random points) and reuse one grid of
spectral parameters, ``z = s + i t`` with ``s`` in ``linspace(-2, 2, 5)`` and
``t`` in ``linspace(0.5, 4, 5)``.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import double, gbdt, single
from ._numerics import branch_sqrt
from .ode import BesselSystem, FreeSystem
from .potentials import bessel, coulomb, exponential_perturbation, free
from .weyl import WeylFunction, estimate_kappa, free_weyl, spectral_measure

SUITES = ("wronskian", "single", "double", "gbdt", "measure")


def standard_grid():
    s = np.linspace(-2.0, 2.0, 5)
    t = np.linspace(0.5, 4.0, 5)
    return (s[:, None] + 1j * t[None, :]).ravel()


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    tol: float
    seconds: float = 0.0
    passed: bool | None = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.suite:<9} {self.name:<58} {self.residual:.3e} <= {self.tol:.1e}"


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(a))))


def _relative(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.abs(b)))


def _wronskian_error(fs, z, x):
    r = fs.evaluate(z, x)
    return float(np.max(np.abs(r[2] * r[1] - r[3] * r[0] - 1.0)))


def _systems():
    f = free()
    b1 = bessel(1)
    be = bessel(1, exponential_perturbation())
    c = coulomb(1, 2.0)
    return [("free", f, FreeSystem(f)), ("bessel(1)", b1, BesselSystem(b1)),
            ("bessel(1)+exp(-x)", be, BesselSystem(be)), ("coulomb(1,2)", c, BesselSystem(c))]


def suite_wronskian(tol=1e-8):
    Z = standard_grid()
    x = np.array([0.2, 0.5, 1.0, 2.0, 3.0])
    for name, q, fs in _systems():
        yield "Wronskian W(theta, phi) = 1, " + name, _wronskian_error(fs, Z, x), tol
        M = WeylFunction.numeric(fs, q)
        yield "conjugation M(conj z) = conj M(z), " + name, _rel(M(np.conj(Z)),
                                                                  np.conj(M(Z))), tol


def single_weyl_cases():
    f = free()
    b1 = bessel(1)
    be = bessel(1, exponential_perturbation())
    return [("free", f, FreeSystem(f)), ("bessel(1)", b1, BesselSystem(b1)),
            ("bessel(1)+exp(-x)", be, BesselSystem(be))]


def coulomb_product(z, gamma, l):
    """``prod_k (z + c_k**2)`` with ``c_k = gamma / (2(k+1))``."""
    out = np.ones_like(np.asarray(z, dtype=complex))
    for k in range(l):
        out = out * (z + (gamma / (2.0 * (k + 1))) ** 2)
    return out


def suite_single(tol=1e-8):
    Z = standard_grid()
    x = np.array([0.3, 1.0, 2.0, 3.0])
    for name, q, fs in single_weyl_cases():
        r = single.commute_phi(q, fs, 0.0)
        M = WeylFunction.numeric(fs, q)
        Mh = WeylFunction.numeric(r.fs_new, r.q_new)(Z)
        yield f"Weyl map M_hat = z M, {name}", _rel(Mh, Z * M(Z)), 1e-6
        yield f"unit Wronskian after phi-commutation, {name}", _wronskian_error(
            r.fs_new, np.r_[Z, 0.0, 0.05], x), tol
    for l in (1, 2, 3):
        q = bessel(l)
        fs = BesselSystem(q)
        up = single.commute_phi(q, fs, 0.0)
        down = single.commute_theta(q, fs, 0.0)
        x0 = 1e-2
        yield f"index raise x^2 q_hat -> (l+1)(l+2), l={l}", abs(
            x0 ** 2 * up.q_new(x0) - (l + 1) * (l + 2)), 1e-6
        yield f"index lower x^2 q_check -> (l-1)l, l={l}", abs(
            x0 ** 2 * down.q_new(x0) - (l - 1) * l), 1e-6
        yield f"unit Wronskian after theta-commutation, l={l}", _wronskian_error(
            down.fs_new, np.r_[Z[:5], 0.0, 0.05], x), tol
    for name, q, fs in [("bessel(1)", bessel(1), None), ("free", free(), None)]:
        fs = BesselSystem(q) if name != "free" else FreeSystem(q)
        lam = 0.0 if name != "free" else -1.0
        r1 = single.commute_phi(q, fs, lam)
        r2 = single.commute_theta(r1.q_new, r1.fs_new, lam)
        xs = np.linspace(0.05, 5.0, 60)
        yield f"round trip theta o phi restores q, {name}", float(
            np.max(np.abs(r2.q_new(xs) - q(xs)))), tol
        yield f"round trip restores (phi, theta), {name}", _rel(
            fs.evaluate(Z[:5], x), r2.fs_new.evaluate(Z[:5], x)), tol
    # Wronskian scaling of commuted solutions
    q = bessel(1)
    fs = BesselSystem(q)
    seed = single.make_seed(fs, 0.0)
    worst = 0.0
    for z in Z[:6]:
        r = fs.evaluate(z, x)
        u, v = (r[0], r[1]), (r[2], r[3])
        uh = single.commuted_solution(seed, u, x, z, derivative=True)
        vh = single.commuted_solution(seed, v, x, z, derivative=True)
        wh = uh[0] * vh[1] - uh[1] * vh[0]
        w = u[0] * v[1] - u[1] * v[0]
        worst = max(worst, float(np.max(np.abs(wh - (z - 0.0) * w) / np.abs(z * w))))
    yield "Wronskian scaling W(u_hat, v_hat) = (z - lam) W(u, v)", worst, tol
    # Coulomb chain
    gamma = 2.0
    steps = single.coulomb_ladder(2, gamma)
    q0 = coulomb(0, gamma)
    M0 = WeylFunction.numeric(BesselSystem(q0), q0)
    last = steps[-1]
    Ml = WeylFunction.numeric(last.fs_new, last.q_new)(Z)
    yield "Coulomb chain M_2 = M_0 (z+1)(z+1/4), gamma=2", _rel(
        Ml, M0(Z) * coulomb_product(Z, gamma, 2)), 1e-6
    xs = np.linspace(0.1, 10.0, 40)
    q2 = coulomb(2, gamma)
    yield "Coulomb chain potential equals coulomb(2, 2)", float(
        np.max(np.abs(last.q_new(xs) - q2(xs)) / np.abs(q2(xs)))), tol
    for l in range(5):
        est = estimate_kappa(lambda z, l=l: branch_sqrt(-np.asarray(z)) * np.asarray(z) ** l)
        expect = math.floor(l / 2 + 0.75)
        yield f"kappa of sqrt(-z) z^{l} is {expect}", 0.0 if est.kappa == expect else 1.0, 0.0


def suite_double(tol=1e-8):
    Z = standard_grid()
    f = free()
    fs = FreeSystem(f)
    x = np.array([0.3, 1.0, 2.0, 3.0])
    r = double.double_commute(f, fs, -1.0, 1.0)
    Mg = WeylFunction.numeric(r.fs_new, r.q_new)
    yield "M_gamma = i sqrt(z) - 1/(z+1), gamma=1", _rel(Mg(Z), free_weyl(Z) - 1 / (Z + 1)), 1e-6
    yield "unit Wronskian, gamma=1", _wronskian_error(r.fs_new, np.r_[Z, -1.0, -0.97], x), tol
    circle = -1.0 + 0.01 * np.exp(2j * np.pi * np.arange(16) / 16)
    th = r.fs_new.evaluate(circle, x)[2]
    yield "theta_gamma Lipschitz across z = lam (difference quotient)", float(
        np.max(np.abs(th - r.fs_new.evaluate(-1.0, x)[2])) / 0.01), 10.0
    zc = np.array([-1.0 + 0.1j])
    yield "contour and direct theta_gamma agree at |z - lam| = 0.1", _rel(
        r.fs_new.rows(zc, x)[2], r.fs_new._direct(zc, x)[2]), tol
    est = spectral_measure(Mg, -1.05, -0.95)
    yield "mass of rho_gamma on [-1.05, -0.95] is gamma=1", abs(est.total - 1.0), 1e-2
    ri = double.double_commute_infinite(f, fs, -1.0)
    Mi = WeylFunction.numeric(ri.fs_new, ri.q_new)
    yield "M_inf = (z+1)^2 i sqrt(z)", _rel(Mi(Z), (Z + 1) ** 2 * free_weyl(Z)), 1e-6
    yield "unit Wronskian, gamma=inf", _wronskian_error(ri.fs_new, np.r_[Z, -1.0, -0.97], x), tol
    b = bessel(1)
    bs = BesselSystem(b)
    rb = double.double_commute(b, bs, -1.0, 1.0)
    yield "finite gamma keeps the index: x^2 q_gamma -> 2", abs(1e-4 * rb.q_new(1e-2) - 2.0), 1e-5
    rbi = double.double_commute_infinite(b, bs, -1.0)
    yield "gamma=inf raises the index: x^2 q_inf -> 12", abs(1e-6 * rbi.q_new(1e-3) - 12.0), 1e-4
    z = 1j
    xs = np.array([0.5, 1.0, 2.0, 4.0])
    base = fs.evaluate(z, xs)
    psi = (base[2] + free_weyl(z) * base[0], base[3] + free_weyl(z) * base[1])
    pg, _ = double.psi_gamma(r.seed, psi, z, xs)
    rows = r.fs_new.evaluate(z, xs)
    yield "psi_gamma = theta_gamma + M_gamma phi_gamma", float(
        np.max(np.abs(pg - (rows[2] + Mg(z) * rows[0])))), tol


def suite_gbdt(tol=1e-8):
    Z = standard_grid()
    rng = np.random.default_rng(20240607)
    for d in (0.0, 0.5):
        ex = gbdt.lan2(1j, d)
        yield f"lan2 d={d}: x^2 q/12 at x=1e-2 in [0.98, 1.02]", abs(
            1e-4 * ex.potential(1e-2) / 12 - 1.0), 0.02
        zz = rng.uniform(-2, 2, 10) + 1j * rng.uniform(-2, 2, 10)
        xx = rng.uniform(0.5, 5.0, 10)
        dets = np.array([np.linalg.det(gbdt.transfer_values(ex.state, [a], [b])[0, 0])
                         for a, b in zip(zz, xx)])
        yield f"lan2 d={d}: det w_A = (z - conj mu)^2/(z - mu)^2", _relative(
            dets, ex.det_w_closed(zz)), tol
        M = WeylFunction.numeric(ex.system, ex.potential)(Z)
        yield f"lan2 d={d}: numeric M = closed form", _relative(M, ex.weyl(Z)), 1e-6
        xs = np.geomspace(1e-3, 1e-2, 12)
        slope = np.polyfit(np.log(xs), np.log(np.linalg.det(ex.state.S(xs)).real), 1)[0]
        yield f"lan2 d={d}: log-log slope of det S is 6", abs(slope / 6 - 1.0), 0.02
        yield f"lan2 d={d}: unit Wronskian", _wronskian_error(
            ex.system, np.r_[Z, 1j, -1j, -1.0], np.array([0.3, 1.0, 3.0])), tol
        yield f"lan2 d={d}: phi, theta real for real z", float(np.max(np.abs(np.imag(
            ex.system.evaluate(np.array([-1.0 + 0j, 0.5 + 0j]), np.array([0.5, 2.0])))))), tol
        xg = np.linspace(0.5, 5.0, 10)
        w = gbdt.transfer_values(ex.state, np.array([0.3 + 0.7j, -1.0 + 2.0j]), xg)
        dw = np.linalg.det(w)
        yield f"lan2 d={d}: det w_A independent of x", float(
            np.max(np.abs(dw - dw[:, :1]) / np.abs(dw[:, :1]))), tol
        yield f"lan2 d={d}: Lyapunov identity", ex.state.lyapunov_residual(), tol
        yield f"lan2 d={d}: Lambda matches the exponential closed form", float(np.max(np.abs(
            ex.closed_lambda(xg) - ex.state.Lambda(xg)))), tol
    for v1 in (0.0, 1.0):
        ex = gbdt.lan1(1j, v1)
        M = WeylFunction.numeric(ex.system, ex.potential)(Z)
        yield f"lan1 v1={v1}: numeric M = closed form", _relative(M, ex.weyl(Z)), 1e-6
        yield f"lan1 v1={v1}: x^2 q/2 -> 1 at x=1e-2", abs(1e-4 * ex.potential(1e-2) / 2 - 1), 0.02
        yield f"lan1 v1={v1}: unit Wronskian", _wronskian_error(
            ex.system, np.r_[Z, 1j, -1.0], np.array([0.3, 1.0, 3.0])), tol
        zz = rng.uniform(-2, 2, 20) + 1j * rng.uniform(-2, 2, 20)
        xx = rng.uniform(0.5, 5.0, 20)
        yield f"lan1 v1={v1}: J-unitarity of w_A", max(
            gbdt.j_unitarity_residual(ex.state, a, b) for a, b in zip(zz, xx)), tol
    ex = gbdt.lan2(1j, 0.0)
    zz = rng.uniform(-2, 2, 20) + 1j * rng.uniform(-2, 2, 20)
    xx = rng.uniform(0.5, 5.0, 20)
    yield "lan2: J-unitarity of w_A", max(
        gbdt.j_unitarity_residual(ex.state, a, b) for a, b in zip(zz, xx)), tol
    for g in (0.5, 2.0, "inf"):
        rep = gbdt.gbdt_equals_double_commutation(-1.0, g)
        yield f"rank-one GBDT phi_gamma = double commutation, gamma={g}", rep["max_abs"], tol


def suite_measure(tol=1e-8):
    f = free()
    M = WeylFunction.closed_form(free_weyl, "i sqrt(z)")
    est = spectral_measure(M, 1.0, 2.0)
    exact = (2.0 / 3.0) * (2 ** 1.5 - 1.0) / math.pi
    yield "free rho([1,2]) = (2/3)(2^1.5 - 1)/pi", abs(est.total - exact) / exact, 1e-3
    fs = FreeSystem(f)
    r = single.commute_phi(f, fs, 0.0)
    Mh = WeylFunction.numeric(r.fs_new, r.q_new)
    est = spectral_measure(Mh, 1.0, 2.0)
    pred = r.measure_map.mass(M, 1.0, 2.0)
    yield "rho_hat([1,2]) = int (t - lam) d rho", abs(est.total - pred) / abs(pred), 1e-2
    rd = double.double_commute(f, fs, -1.0, 2.0)
    pred = rd.measure_map.mass(M, -1.5, -0.5)
    yield "measure map of double commutation adds the atom gamma=2", abs(pred - 2.0) / 2.0, 1e-2


_SUITE_FUNCS = {"wronskian": suite_wronskian, "single": suite_single, "double": suite_double,
                "gbdt": suite_gbdt, "measure": suite_measure}


def run(suite="all", tol=1e-8, report=None):
    """Run one suite (or all) and return the list of :class:`Check` results.

    ``report`` is called with each check as soon as it finishes.
    """
    names = SUITES if suite == "all" else (suite,)
    if any(n not in _SUITE_FUNCS for n in names):
        raise ValueError(f"unknown suite {suite!r}")
    checks = []
    for name in names:
        gen = _SUITE_FUNCS[name](tol)
        while True:
            t0 = time.perf_counter()
            try:
                label, residual, limit = next(gen)
            except StopIteration:
                break
            except Exception as exc:  # a crashing check fails its suite, the run goes on
                c = Check(name, f"suite aborted: {type(exc).__name__}: {exc}", math.nan, 0.0,
                          time.perf_counter() - t0)
                checks.append(c)
                if report is not None:
                    report(c)
                break
            c = Check(name, label, float(residual), float(limit), time.perf_counter() - t0)
            checks.append(c)
            if report is not None:
                report(c)
    return checks
