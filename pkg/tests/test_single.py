import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commute import single
from commute.errors import DomainError, PositivityError
from commute.ode import BesselSystem, FreeSystem, SolutionSample
from commute.potentials import bessel, coulomb, exponential_perturbation, free
from commute.weyl import WeylFunction, free_weyl, spectral_measure

z_upper = st.builds(complex, st.floats(-3, 3), st.floats(0.3, 3))
X = np.array([0.2, 0.7, 1.5, 3.0])


def wronskian_error(fs, z, x=X):
    r = fs.evaluate(z, x)
    return float(np.max(np.abs(r[2] * r[1] - r[3] * r[0] - 1)))


def _free_phi():
    q = free()
    fs = FreeSystem(q)
    return q, fs, single.commute_phi(q, fs, 0.0)


@pytest.mark.parametrize("l", [0, 1, 2, 3])
def test_phi_commutation_raises_bessel_index(l):
    q = bessel(l)
    r = single.commute_phi(q, BesselSystem(q), 0.0)
    x = np.geomspace(1e-3, 10, 12)
    assert np.allclose(x ** 2 * r.q_new(x), (l + 1) * (l + 2), rtol=1e-10)
    assert r.q_new.l == l + 1


@pytest.mark.parametrize("l", [1, 2, 3])
def test_theta_commutation_lowers_bessel_index(l):
    q = bessel(l)
    r = single.commute_theta(q, BesselSystem(q), 0.0)
    x = np.geomspace(1e-3, 10, 12)
    assert np.allclose(x ** 2 * r.q_new(x), (l - 1) * l, rtol=1e-9, atol=1e-9)


def test_free_weyl_map_example():
    q, fs, r = _free_phi()
    Mh = WeylFunction.numeric(r.fs_new, r.q_new)(1j)
    assert Mh == pytest.approx(-np.exp(1j * np.pi / 4), abs=1e-9)
    assert r.weyl_map(free_weyl, 1j) == pytest.approx(-np.exp(1j * np.pi / 4))


def test_phi_hat_at_lambda_is_norm_over_seed():
    _, _, r = _free_phi()
    assert r.fs_new.evaluate(0.0, 2.0)[0] == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_phi_check_is_inverse_theta():
    q = bessel(1)
    r = single.commute_theta(q, BesselSystem(q), 0.0)
    x = np.array([0.1, 1.0, 3.0])
    assert np.allclose(r.fs_new.evaluate(0.0, x)[0], 3 * x, rtol=1e-10)


@pytest.mark.parametrize("name", ["free", "bessel1"])
def test_round_trip(name):
    q = free() if name == "free" else bessel(1)
    fs = FreeSystem(q) if name == "free" else BesselSystem(q)
    lam = -1.0 if name == "free" else 0.0
    r1 = single.commute_phi(q, fs, lam)
    r2 = single.commute_theta(r1.q_new, r1.fs_new, lam)
    x = np.linspace(0.05, 5, 40)
    assert np.max(np.abs(r2.q_new(x) - q(x))) < 1e-8
    z = np.array([1j, -1 + 2j])
    assert np.allclose(r2.fs_new.evaluate(z, X), fs.evaluate(z, X), rtol=1e-8, atol=1e-10)


def test_commuted_solution_examples():
    q = free()
    fs = FreeSystem(q)
    seed = single.make_seed(fs, 0.0)
    x = np.array([0.5, 1.0, 2.0])
    s, ds = seed.solution(x)
    assert np.allclose(single.commuted_solution(seed, (s, ds), x), 0.0, atol=1e-15)
    z = math.pi ** 2
    k = math.pi
    u = SolutionSample(1.0, math.sin(k) / k, math.cos(k), z)
    # -(x cos(k x) - sin(k x)/k)/x at x = 1, k = pi: -(-1 - 0) = 1
    assert single.commuted_solution(seed, u) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        single.commuted_solution(seed, (1.0, 1.0))


def test_commuted_solution_solves_new_equation():
    q = bessel(1, exponential_perturbation())
    fs = BesselSystem(q)
    r = single.commute_phi(q, fs, 0.0)
    z = 0.3 + 1.1j
    x = np.linspace(0.5, 3.0, 401)
    rows = fs.evaluate(z, x)
    u, du = single.commuted_solution(r.seed, (rows[0], rows[1]), x, z, derivative=True)
    h = x[1] - x[0]
    res = -np.gradient(du, h) + (r.q_new(x) - z) * u
    assert np.max(np.abs(res[5:-5])) < 1e-4 * np.max(np.abs(u))


def test_seed_positivity_certificate():
    q = free()
    fs = FreeSystem(q)
    with pytest.raises(PositivityError) as info:
        single.commute_phi(q, fs, 1.0)
    assert info.value.x == pytest.approx(math.pi, abs=0.2)
    seed = single.make_seed(fs, -1.0)
    assert np.all(seed.solution(seed.certificate)[0] > 0)
    with pytest.raises(DomainError):
        single.make_seed(fs, 0.0, kind="psi")


def test_preconditions():
    q = free()
    with pytest.raises(DomainError):
        single.commute_phi(q, FreeSystem(free()), 0.0)
    with pytest.raises(DomainError):
        single.commute_theta(q, FreeSystem(q), -1.0)


def test_theta_commutation_weyl_map():
    q = bessel(1)
    fs = BesselSystem(q)
    r = single.commute_theta(q, fs, 0.0)
    z = np.array([1j, -1 + 0.5j, 2 + 3j])
    M = WeylFunction.numeric(fs, q)(z)
    Mc = WeylFunction.numeric(r.fs_new, r.q_new)(z)
    assert np.max(np.abs(Mc - M / z) / (1 + np.abs(Mc))) < 1e-6


def test_measure_relation_for_free_particle():
    q, fs, r = _free_phi()
    Mh = WeylFunction.numeric(r.fs_new, r.q_new)
    got = spectral_measure(Mh, 1.0, 2.0).total
    want = (2 / 5) * (2 ** 2.5 - 1) / math.pi  # int_1^2 t sqrt(t) dt / pi
    assert got == pytest.approx(want, rel=1e-2)
    M = WeylFunction.closed_form(free_weyl, "i sqrt(z)")
    assert r.measure_map.mass(M, 1.0, 2.0) == pytest.approx(want, rel=1e-4)


def test_theta_measure_map_has_left_limit_atom():
    q = bessel(1)
    fs = BesselSystem(q)
    r = single.commute_theta(q, fs, 0.0)
    (pos, atom), = r.measure_map.atoms
    M = WeylFunction.numeric(fs, q)
    assert pos == 0.0
    assert atom(M) == pytest.approx(-M.left_limit(0.0))
    assert abs(atom(M)) < 1e-3  # M is continuous at the bottom of the spectrum


def test_coulomb_ladder_examples():
    z = np.array([1j, -1 + 2j, 2 + 0.5j])
    one = single.coulomb_ladder(1, 2.0)
    assert one[0].info["c"] == 1.0 and one[0].seed.lam == -1.0
    assert np.allclose(one[-1].info["weyl_from_l0"](lambda z: 1.0, z), z + 1.0)
    zero = single.coulomb_ladder(2, 0.0)
    assert np.allclose(zero[-1].info["weyl_from_l0"](lambda z: 1.0, z), z * z)
    four = single.coulomb_ladder(2, 4.0)
    assert [s.info["c"] for s in four] == [2.0, 1.0]
    assert np.allclose(four[-1].info["weyl_from_l0"](lambda z: 1.0, z), (z + 4) * (z + 1))


def test_coulomb_ladder_reproduces_coulomb_potentials():
    steps = single.coulomb_ladder(3, 2.0)
    x = np.linspace(0.1, 10, 30)
    for k, s in enumerate(steps, start=1):
        ref = coulomb(k, 2.0)(x)
        assert np.max(np.abs(s.q_new(x) - ref) / np.abs(ref)) < 1e-10


def test_coulomb_ladder_weyl_function_one_step():
    gamma = 2.0
    (step,) = single.coulomb_ladder(1, gamma)
    q0 = coulomb(0, gamma)
    z = np.array([1j, -1 + 2j, 1.5 + 1j])
    M0 = WeylFunction.numeric(BesselSystem(q0), q0)(z)
    M1 = WeylFunction.numeric(step.fs_new, step.q_new)(z)
    assert np.max(np.abs(M1 - M0 * (z + 1)) / np.abs(M1)) < 1e-6


def test_ladder_needs_positive_integer():
    with pytest.raises(DomainError):
        single.coulomb_ladder(0, 1.0)


def test_weyl_map_composition():
    a = single.WeylMap("2M", lambda z: 2.0)
    b = single.WeylMap("M + 1", lambda z: 1.0, lambda z: 1.0)
    c = a.then(b)
    assert c(3.0, 0.0) == 7.0
    assert b.then(a)(3.0, 0.0) == 8.0


@settings(max_examples=15, deadline=None)
@given(z_upper)
def test_unit_wronskian_after_each_commutation(z):
    q = bessel(2, exponential_perturbation())
    assert wronskian_error(single.commute_phi(q, BesselSystem(q), 0.0).fs_new, z) < 1e-8
    q = bessel(2)
    assert wronskian_error(single.commute_theta(q, BesselSystem(q), 0.0).fs_new, z) < 1e-8


@settings(max_examples=20, deadline=None)
@given(z_upper, z_upper)
def test_wronskian_scaling(z, w):
    q = bessel(1)
    fs = BesselSystem(q)
    seed = single.make_seed(fs, 0.0)
    r = fs.evaluate(z, X)
    u = single.commuted_solution(seed, (r[0], r[1]), X, z, derivative=True)
    v = single.commuted_solution(seed, (r[2] + w * r[0], r[3] + w * r[1]), X, z, derivative=True)
    W = 1.0  # W(phi, theta + w phi) = -1 in the u v' - u' v convention
    Wold = r[0] * (r[3] + w * r[1]) - r[1] * (r[2] + w * r[0])
    Wnew = u[0] * v[1] - u[1] * v[0]
    assert np.max(np.abs(Wnew - z * Wold)) <= 1e-8 * abs(z) * W
