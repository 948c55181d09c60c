import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commute._numerics import branch_sqrt
from commute.errors import DomainError, WeylPoleError
from commute.ode import BesselSystem, FreeSystem
from commute.potentials import bessel, coulomb, exponential_perturbation, free
from commute.weyl import (WeylFunction, estimate_kappa, free_weyl, singular_weyl,
                          spectral_measure, weyl_psi, weyl_solution_b, weyl_values)

z_upper = st.builds(complex, st.floats(-3, 3), st.floats(0.3, 3))


def test_branch_is_upper_half_plane():
    z = np.array([-4.0, -1 + 0j, 1j, -1j, -1 - 1e-30j, 4.0])
    r = branch_sqrt(z)
    assert np.all(r.imag >= 0)
    assert r[0] == pytest.approx(2j) and r[-1] == pytest.approx(2.0)


def test_free_weyl_example():
    q = free()
    M = singular_weyl(FreeSystem(q), q, 1j)
    assert M == pytest.approx(-0.7071067811865476 + 0.7071067811865476j, abs=1e-10)
    assert M == pytest.approx(free_weyl(1j))


def test_weyl_solution_examples():
    q = free()
    z = 1j
    ws = weyl_solution_b(q, z)
    x = np.linspace(1, 10, 10)
    u, du = ws(x)
    ratio = u / u[0]
    assert np.allclose(ratio, np.exp(1j * branch_sqrt(z) * (x - 1)), rtol=1e-8)
    assert np.all(np.diff(np.abs(u)) < 0)
    z = -1 + 1e-3j
    u = weyl_solution_b(q, z)(np.array([1.0, 3.0]))[0]
    assert abs(u[1] / u[0]) == pytest.approx(math.exp(-2.0), rel=1e-3)
    wb = weyl_solution_b(bessel(1), 1j)
    assert abs(wb(10.0)[0] / wb(5.0)[0]) < 1


def test_weyl_solution_errors():
    with pytest.raises(DomainError):
        weyl_solution_b(free(), 2.0)
    from commute.potentials import Potential

    lc = Potential(lambda x: 0 * x, (0.0, 1.0), endpoint_class=("regular", "limit-circle"))
    with pytest.raises(DomainError):
        weyl_solution_b(lc, 1j)


def test_weyl_psi_examples():
    q = free()
    fs = FreeSystem(q)
    z = 1j
    x = np.array([0.5, 1.0, 2.0])
    psi, _ = weyl_psi(fs, free_weyl, z, x)
    psi0, _ = weyl_psi(fs, free_weyl, z, np.array([1e-12]))
    assert np.allclose(psi / psi0, np.exp(1j * branch_sqrt(z) * x), rtol=1e-10)
    th = fs.evaluate(z, x)[2]
    assert np.allclose(weyl_psi(fs, 0.0, z, x)[0], th)
    qb = bessel(1)
    fb = BesselSystem(qb)
    M = WeylFunction.numeric(fb, qb)
    p, _ = weyl_psi(fb, M, 2j, np.array([5.0, 10.0]))
    assert abs(p[1]) < abs(p[0])


def test_normalization_and_evaluation_point_independence():
    q = bessel(1, exponential_perturbation())
    fs = BesselSystem(q)
    z = 0.5 + 1.2j
    M_ref = weyl_values(fs, q, z)
    # Wronskian route with an arbitrarily scaled Weyl solution, at two points
    ws = weyl_solution_b(q, z)
    for scale, x in ((1.0, 0.7), (3.0 - 4.0j, 2.5)):
        u, du = (scale * v for v in ws(np.array([x])))
        phi, dphi, th, dth = fs.evaluate(z, np.array([x]))
        M = -(th * du - dth * u) / (phi * du - dphi * u)
        assert abs(M[0] - M_ref) / abs(M_ref) < 1e-8
    assert abs(weyl_values(fs, q, z, x_c=0.3) - weyl_values(fs, q, z, x_c=2.0)) < 1e-8 * abs(M_ref)


def test_pole_detection_at_inserted_eigenvalue():
    from commute.double import double_commute

    q = free()
    r = double_commute(q, FreeSystem(q), -1.0, 1.0)
    with pytest.raises(WeylPoleError):
        weyl_values(r.fs_new, r.q_new, np.array([-1.0 + 0j]))


def test_bessel_two_growth_degree():
    q = bessel(2)
    M = WeylFunction.numeric(BesselSystem(q), q)
    y = np.geomspace(10, 1e3, 8)
    slope = np.polyfit(np.log(y), np.log(np.abs(M(1j * y))), 1)[0]
    assert slope == pytest.approx(2.5, abs=0.02)
    assert estimate_kappa(M, np.geomspace(10, 1e4, 12)).kappa == 1


def test_spectral_measure_examples():
    M = WeylFunction.closed_form(free_weyl, "i sqrt(z)")
    est = spectral_measure(M, 1.0, 4.0)
    assert est.total == pytest.approx(14 / (3 * math.pi), rel=1e-4) and est.converged
    assert spectral_measure(M, -4.0, -1.0).total == pytest.approx(0.0, abs=1e-6)
    pole = WeylFunction.closed_form(lambda z: -1.0 / (np.asarray(z) - 1.0), "-1/(z-1)")
    assert spectral_measure(pole, 0.0, 2.0).total == pytest.approx(1.0, rel=1e-3)


def test_spectral_measure_bins_and_signed_flag():
    M = WeylFunction.closed_form(free_weyl, "i sqrt(z)")
    est = spectral_measure(M, 0.0, 4.0, bins=4)
    assert len(est.intervals) == 4 and not est.signed
    assert est.total == pytest.approx(16 / (3 * math.pi), rel=1e-3)
    neg = WeylFunction.closed_form(lambda z: 1.0 / (np.asarray(z) - 1.0), "1/(z-1)")
    assert spectral_measure(neg, 0.0, 2.0).signed
    with pytest.raises(DomainError):
        spectral_measure(M, 2.0, 1.0)
    with pytest.raises(DomainError):
        spectral_measure(M, 1.0, 2.0, eps_schedule=(0.01, 0.1))


def test_kappa_examples():
    assert estimate_kappa(free_weyl).kappa == 0
    for l, k in ((2, 1), (4, 2)):
        def model(z, l=l):
            return branch_sqrt(-np.asarray(z)) * np.asarray(z) ** l
        assert estimate_kappa(model).kappa == k
    with pytest.raises(DomainError):
        estimate_kappa(free_weyl, np.geomspace(1, 10, 5))


def test_kappa_ambiguous_for_curved_growth():
    est = estimate_kappa(lambda z: np.exp(np.sqrt(np.asarray(z, dtype=complex))))
    assert est.kappa is None and est.ambiguous


def test_left_limit_below_spectrum():
    q = free()
    M = WeylFunction.numeric(FreeSystem(q), q)
    assert M.left_limit(-1.0) == pytest.approx(-1.0, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(z_upper)
def test_conjugation_symmetry(z):
    q = coulomb(1, 1.0)
    fs = BesselSystem(q)
    a, b = weyl_values(fs, q, np.conj(z)), np.conj(weyl_values(fs, q, z))
    assert abs(a - b) <= 1e-8 * (1 + abs(b))


@settings(max_examples=20, deadline=None)
@given(z_upper)
def test_free_weyl_is_herglotz(z):
    q = free()
    assert weyl_values(FreeSystem(q), q, z).imag > 0


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 2))
def test_measure_of_herglotz_function_is_nonnegative(x0, width):
    M = WeylFunction.closed_form(free_weyl, "i sqrt(z)")
    assert spectral_measure(M, x0, x0 + width).total >= -1e-8
