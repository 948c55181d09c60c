import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commute.errors import DomainError, SeriesError
from commute.ode import (BesselSystem, FreeSystem, RegularSystem, SolutionSample,
                         fundamental_system, frobenius_start, integrate, wronskian)
from commute.potentials import Potential, bessel, coulomb, exponential_perturbation, free

upper = st.floats(0.2, 3.0)
z_upper = st.builds(complex, st.floats(-3, 3), st.floats(0.2, 3))


def test_integrate_examples():
    q = free()
    (s,) = integrate(q, 0.0, 1.0, 1.0, 1.0, [2.0])  # u = x
    assert s.u == pytest.approx(2.0) and s.du == pytest.approx(1.0)
    (s,) = integrate(q, -1.0, 1e-9, 1e-9, 1.0, [1.0])
    assert s.u == pytest.approx(1.17520119364, rel=1e-8)
    assert s.du == pytest.approx(1.54308063482, rel=1e-8)
    (s,) = integrate(bessel(1), 0.0, 0.1, 0.01, 0.2, [1.0])
    assert s.u == pytest.approx(1.0, rel=1e-9) and s.du == pytest.approx(2.0, rel=1e-9)


def test_integrate_backwards_and_bad_targets():
    out = integrate(free(), 1.0, 2.0, math.sin(2.0), math.cos(2.0), [1.5, 1.0, 0.5])
    assert [s.x for s in out] == [1.5, 1.0, 0.5]
    assert out[-1].u == pytest.approx(math.sin(0.5), rel=1e-9)
    with pytest.raises(DomainError):
        integrate(free(), 1.0, 1.0, 0.0, 1.0, [-1.0])
    with pytest.raises(DomainError):
        integrate(free(), 1.0, 1.0, 0.0, 1.0, [2.0, 1.5])


def test_integrate_switches_to_log_form_without_overflow():
    (s,) = integrate(free(), -400.0, 1.0, 1.0, 20.0, [30.0])
    assert np.isfinite(s.u) and s.du / s.u == pytest.approx(20.0, rel=1e-8)


def test_wronskian_examples():
    a = SolutionSample(0.7, 2.0 + 1j, 3.0, 1.0)
    assert wronskian(a, a) == 0
    x, z = 1.3, 1.0
    c = SolutionSample(x, math.cos(x), -math.sin(x), z)
    s = SolutionSample(x, math.sin(x), math.cos(x), z)
    assert wronskian(c, s) == pytest.approx(1.0)
    x = 0.7
    th = SolutionSample(x, 1 / (3 * x), -1 / (3 * x * x), 0.0)
    ph = SolutionSample(x, x * x, 2 * x, 0.0)
    assert wronskian(th, ph) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        wronskian(th, SolutionSample(0.8, 1, 1, 0.0))
    with pytest.raises(DomainError):
        wronskian(th, SolutionSample(0.7, 1, 1, 1.0))


def test_free_system_closed_form():
    fs = fundamental_system(free(), "regular", c=0.0)
    r = fs.evaluate(1.0, math.pi / 2)
    assert r[0] == pytest.approx(1.0) and r[2] == pytest.approx(0.0, abs=1e-15)


def test_regular_system_matches_free_closed_form():
    # a zero potential that is not tagged free forces the numerical route
    zero = Potential(lambda x: np.zeros_like(np.asarray(x, dtype=float)), (0.0, math.inf),
                     endpoint_class=("regular", "limit-point"))
    z = np.array([1j, -2 + 0.5j, 3.0])
    x = np.linspace(0.2, 6, 12)
    a = RegularSystem(zero, 0.0).evaluate(z, x)
    b = FreeSystem(free()).evaluate(z, x)
    assert np.max(np.abs(a - b) / (1 + np.abs(b))) < 1e-9


def test_bessel_system_at_zero_energy():
    fs = BesselSystem(bessel(1))
    x = np.array([0.05, 0.5, 2.0, 5.0])
    r = fs.evaluate(0.0, x)
    assert np.allclose(r[0], x ** 2, rtol=1e-10)
    assert np.allclose(r[2], 1 / (3 * x), rtol=1e-10)


def test_bessel_system_matches_spherical_bessel():
    # phi(1, x) = 3 (sin x / x - cos x) for l = 1
    fs = BesselSystem(bessel(1))
    x = np.array([0.01, 0.3, 1.0, 4.0, 9.0])
    assert np.allclose(fs.evaluate(1.0, x)[0], 3 * (np.sin(x) / x - np.cos(x)), rtol=1e-9,
                       atol=1e-14)


def test_frobenius_examples():
    xs = 1e-3
    assert frobenius_start(0, z=0.0, x_start=xs) == pytest.approx((xs, 1.0))
    u, du = frobenius_start(1, z=0.0, x_start=xs, branch="theta")
    assert u == pytest.approx(1 / (3 * xs)) and du == pytest.approx(-1 / (3 * xs * xs))
    # tiny-step high-precision integration of u'' = (2/x^2 - 1) u from x = 1e-5
    u, du = frobenius_start(1, z=1.0, x_start=xs)
    assert u == pytest.approx(9.9999990000000357143e-7, rel=1e-12)
    assert du == pytest.approx(0.0019999996000000214286, rel=1e-12)


def test_frobenius_rejects_large_start_and_bad_branch():
    with pytest.raises(SeriesError):
        frobenius_start(1, exponential_perturbation(), x_start=50.0)
    with pytest.raises(DomainError):
        frobenius_start(1, branch="psi")


def test_singular_mode_rejects_log_case_and_missing_index():
    with pytest.raises(DomainError):
        fundamental_system(bessel(-0.5), "singular_bessel")
    with pytest.raises(DomainError):
        fundamental_system(Potential(np.cos, (0.0, 1.0)), "singular_bessel")


SYSTEMS = [BesselSystem(bessel(1)), BesselSystem(bessel(2, exponential_perturbation())),
           BesselSystem(coulomb(1, 2.0)), FreeSystem(free())]


@pytest.mark.parametrize("fs", SYSTEMS, ids=["bessel1", "bessel2+exp", "coulomb", "free"])
def test_unit_wronskian_on_fifty_points(fs):
    z = np.array([1j, -1.5 + 0.5j, 2.0, -0.7])
    x = np.linspace(0.05, 6.0, 50)
    r = fs.evaluate(z, x)
    W = r[2] * r[1] - r[3] * r[0]
    assert np.max(np.abs(W - 1.0)) < 1e-8


@pytest.mark.parametrize("fs", SYSTEMS[:3], ids=["bessel1", "bessel2+exp", "coulomb"])
def test_reality_and_conjugation(fs):
    x = np.array([0.1, 1.0, 3.0])
    assert np.max(np.abs(np.imag(fs.evaluate(np.array([-1.0 + 0j, 2.0 + 0j]), x)))) < 1e-10
    z = 0.7 + 1.3j
    a, b = fs.evaluate(np.conj(z), x), np.conj(fs.evaluate(z, x))
    assert np.max(np.abs(a - b) / (1 + np.abs(b))) < 1e-10


def test_ode_residual_of_phi():
    q = bessel(1, exponential_perturbation())
    fs = BesselSystem(q)
    z = 0.4 + 0.9j
    x = np.linspace(0.5, 3.0, 201)
    phi, dphi = fs.evaluate(z, x)[:2]
    h = x[1] - x[0]
    d2 = np.gradient(dphi, h)[5:-5]
    res = -d2 + (q(x) - z)[5:-5] * phi[5:-5]
    assert np.max(np.abs(res)) < 1e-4 * np.max(np.abs(phi))


@settings(max_examples=25, deadline=None)
@given(z_upper, upper, upper)
def test_wronskian_constancy_for_random_data(z, x0, x1):
    q = bessel(1, exponential_perturbation())
    fs = BesselSystem(q)
    r = fs.evaluate(z, np.array(sorted({x0, x1})))
    W = r[2] * r[1] - r[3] * r[0]
    assert np.max(np.abs(W - 1)) < 1e-8


@settings(max_examples=25, deadline=None)
@given(z_upper)
def test_conjugation_symmetry_of_free_system(z):
    fs = FreeSystem(free())
    x = np.array([0.3, 2.0])
    assert np.allclose(fs.evaluate(np.conj(z), x), np.conj(fs.evaluate(z, x)), rtol=1e-13)
