import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commute import gbdt
from commute._numerics import branch_sqrt
from commute.errors import DomainError, SingularTransformError
from commute.potentials import Potential, free
from commute.weyl import WeylFunction, weyl_values

X = np.array([0.3, 1.0, 2.5])

# Lambda(x) of the rank-two Jordan seed with mu = i, from a 30-digit matrix exponential
LAN2_ORACLE = {
    (0.0, 0.5): ([-0.12493489717890066 + 0.0052079458115898589j,
                  0.99739593021402404 - 0.12497829888022486j],
                 [0.49921877691130733 - 0.041660466343235932j,
                  0.020831783246359436 + 0.49973958871560264j]),
    (0.0, 1.0): ([-0.49583471111900072 + 0.083234139509798823j,
                  0.95835813283300702 - 0.49861138667283276j],
                 [0.97501377753550423 - 0.3325398328462152j,
                  0.16646827901959765 + 0.99166942223800144j]),
    (0.0, 2.0): ([-1.7347429528891926 + 1.3079877896005649j,
                  0.33967399169472475 - 1.9113931101642099j],
                 [1.207045468139321 - 2.5653870049644924j,
                  1.3079877896005649 + 1.7347429528891926j]),
    (0.5, 1.0): ([-0.41279893420569194 + 0.074906317158550217j,
                  0.4625234217140063 - 0.41537724716303394j],
                 [0.72709642197600387 - 0.29092276309131579j,
                  0.64564734543610115 + 0.74236372890158506j]),
}


@pytest.fixture(scope="module")
def lan2_0():
    return gbdt.lan2(1j, 0.0)


@pytest.fixture(scope="module")
def lan1_0():
    return gbdt.lan1(1j, 0.0)


def five_point(f, h):
    return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)


def jordan_seed(mu, d):
    v = np.array([0.0, 1.0])
    return gbdt.GBDTSeed([[mu, 1.0], [0.0, mu]], np.stack([d * v, v], -1), np.zeros((2, 2)))


def test_validate_seed_examples():
    diag = gbdt.validate_seed(gbdt.GBDTSeed([[-1.0]], [[-1.0, 0.0]], [[1.0]]))
    assert diag["hermitian"] == 0.0 and diag["lyapunov"] == 0.0
    assert gbdt.validate_seed(jordan_seed(1j, 0.7))["lyapunov"] < 1e-15
    with pytest.raises(DomainError):
        gbdt.validate_seed(jordan_seed(1j, 1j))
    with pytest.raises(DomainError):
        gbdt.validate_seed(gbdt.GBDTSeed([[1.0]], [[0.0, 0.0]], [[-1.0]]))
    with pytest.raises(DomainError):
        gbdt.GBDTSeed([[1.0, 0.0]], [[0.0, 0.0]], [[1.0]])


def test_lyapunov_residual_of_jordan_seed_with_complex_d():
    s = jordan_seed(1j, 1j)
    r = gbdt.lyapunov_residual(s.A, s.S0, s.Lambda0)
    # Lambda J Lambda* = [[0, 0], [0, d - conj d]] and the S side vanishes
    assert np.allclose(r, -np.array([[0, 0], [0, 2j]]))


def test_propagate_sinh_example():
    state = gbdt.propagate(gbdt.GBDTSeed([[-1.0]], [[-1.0, 0.0]], [[1.0]]))
    lam = state.Lambda(np.array([1.0]))[0, 0]
    assert lam[0] == pytest.approx(-1.5430806348152437, abs=1e-10)
    assert lam[1] == pytest.approx(1.1752011936438014, abs=1e-10)
    # S = 1 + int_0^x sinh^2
    assert state.S(np.array([1.0]))[0, 0, 0].real == pytest.approx(
        1 + (math.sinh(2) / 2 - 1) / 2, rel=1e-10)


def test_propagate_general_potential():
    q = Potential(lambda x: np.ones_like(np.asarray(x, dtype=float)), (0.0, math.inf),
                  endpoint_class=("regular", "limit-point"), x_max=10.0)
    state = gbdt.propagate(gbdt.GBDTSeed([[-1.0]], [[-1.0, 0.0]], [[1.0]]), q)
    # Lambda_2'' = (q - A) Lambda_2 = 2 Lambda_2, Lambda_2(0) = 0, Lambda_2'(0) = 1
    x = np.array([0.5, 2.0])
    r2 = math.sqrt(2)
    assert np.allclose(state.Lambda(x)[:, 0, 1], np.sinh(r2 * x) / r2, rtol=1e-9)
    with pytest.raises(DomainError):
        gbdt.transformed_solutions(state, 1j, x)


def test_lan2_lambda_matches_two_routes(lan2_0):
    for (d, x), (l2, l1) in LAN2_ORACLE.items():
        ex = lan2_0 if d == 0.0 else gbdt.lan2(1j, d)
        num = ex.state.Lambda(np.array([x]))[0]
        closed = ex.closed_lambda(np.array([x]))[0]
        assert np.allclose(num[:, 1], l2, atol=1e-9) and np.allclose(num[:, 0], l1, atol=1e-9)
        assert np.allclose(closed[:, 1], l2, atol=1e-12) and np.allclose(closed[:, 0], l1,
                                                                           atol=1e-12)


def test_lan2_constants(lan2_0):
    sq = lan2_0.constants["sqrtA"]
    assert np.max(np.abs(sq @ sq - lan2_0.seed.A)) < 1e-15


def test_lan2_det_s_small_x(lan2_0):
    xs = np.geomspace(1e-3, 1e-2, 15)
    slope, icpt = np.polyfit(np.log(xs), np.log(np.linalg.det(lan2_0.state.S(xs)).real), 1)
    assert slope == pytest.approx(6.0, rel=0.02)
    assert icpt == pytest.approx(-math.log(45), rel=0.02)


def test_lan2_potential_small_x(lan2_0):
    assert 1e-4 * lan2_0.potential(1e-2) / 12 == pytest.approx(1.0, abs=0.02)


def test_transfer_matrix_examples(lan2_0):
    for x in (0.5, 1.0, 3.0):
        assert gbdt.transfer_matrix(lan2_0.state, 1.0, x).det == pytest.approx(-1.0, abs=1e-10)
    zero = gbdt.propagate(gbdt.GBDTSeed([[2.0]], [[0.0, 0.0]], [[1.0]]))
    assert np.allclose(gbdt.transfer_matrix(zero, 1j, 1.0).value, np.eye(2))


def test_transfer_matrix_errors(lan2_0):
    with pytest.raises(DomainError):
        gbdt.transfer_matrix(lan2_0.state, 1j, 1.0)
    with pytest.raises(DomainError):
        gbdt.transfer_matrix(lan2_0.state, 1.0, 0.0)
    with pytest.warns(gbdt.IllConditionedWarning):
        gbdt.transfer_matrix(lan2_0.state, 1.0, 1e-4)


def test_singular_seed_is_reported():
    with pytest.raises(SingularTransformError) as info:
        gbdt.propagate(gbdt.GBDTSeed([[2.0]], [[0.0, 0.0]], [[0.0]]))
    assert info.value.x > 0


def test_identities_of_lan2(lan2_0):
    st_ = lan2_0.state
    assert st_.lyapunov_residual() < 1e-8
    w = gbdt.transfer_values(st_, np.array([0.3 + 0.7j, -1 + 2j]), np.linspace(0.5, 5, 10))
    dets = np.linalg.det(w)
    assert np.max(np.abs(dets - dets[:, :1]) / np.abs(dets[:, :1])) < 1e-8
    z = np.array([0.3 + 0.7j, -1 + 2j])
    assert np.allclose(dets[:, 0], lan2_0.det_w_closed(z), rtol=1e-8)


def test_transformed_solutions_residual(lan2_0):
    z = np.array([0.4 + 0.8j])
    h = 0.0025
    x = np.arange(0.5, 3.0, h)
    y, dy = gbdt.transformed_solutions(lan2_0.state, z, x)
    q = lan2_0.potential(x)
    for col in range(2):
        term = (q[2:-2] - z[0]) * y[0, 2:-2, col]
        res = -five_point(dy[0, :, col], h) + term
        assert np.max(np.abs(res)) < 1e-6 * np.max(np.abs(term))
        slope = five_point(y[0, :, col], h)
        assert np.max(np.abs(slope - dy[0, 2:-2, col])) < 1e-6 * np.max(np.abs(dy[0, :, col]))


def test_transformed_solutions_reduce_to_free_for_trivial_seed():
    zero = gbdt.propagate(gbdt.GBDTSeed([[2.0]], [[0.0, 0.0]], [[1.0]]))
    z = np.array([1j])
    y, _ = gbdt.transformed_solutions(zero, z, X)
    k = branch_sqrt(1j)
    assert np.allclose(y[0, :, 0], np.cos(k * X)) and np.allclose(y[0, :, 1], np.sin(k * X) / k)


def test_phi_tilde_is_entire_at_conjugate_mu(lan2_0):
    sys = lan2_0.system
    centre = sys.evaluate(-1j, X)
    ring = sys.evaluate(-1j + 1e-3 * np.exp(2j * np.pi * np.arange(8) / 8), X)
    assert np.all(np.isfinite(centre))
    assert np.max(np.abs(ring[0] - centre[0])) < 1e-2 * np.max(np.abs(centre[0]))


@pytest.mark.parametrize("which", ["lan1", "lan2"])
def test_system_unit_wronskian_and_reality(which, lan1_0, lan2_0):
    ex = lan1_0 if which == "lan1" else lan2_0
    z = np.array([1j, -1 + 0.5j, 2.0 + 0j, 1j + 1e-4])
    r = ex.system.evaluate(z, X)
    assert np.max(np.abs(r[2] * r[1] - r[3] * r[0] - 1)) < 1e-8
    real = ex.system.evaluate(np.array([-1.0, 0.5]), X)
    assert not np.iscomplexobj(real)
    raw = ex.system._direct(np.array([-1.0 + 0j, 0.5 + 0j]), X)
    assert np.max(np.abs(raw.imag)) < 1e-8


def test_closed_form_weyl_examples(lan1_0, lan2_0):
    assert lan1_0.weyl(np.array([-1.0 + 0j]))[0] == pytest.approx(2.0)
    assert lan2_0.weyl(np.array([-1.0 + 0j]))[0] == pytest.approx(4.0)


def test_numeric_weyl_matches_closed_form(lan1_0, lan2_0, z_grid):
    for ex in (lan1_0, lan2_0):
        M = WeylFunction.numeric(ex.system, ex.potential)(z_grid)
        assert np.max(np.abs(M - ex.weyl(z_grid)) / np.abs(ex.weyl(z_grid))) < 1e-6


def test_numeric_weyl_on_the_negative_axis(lan1_0):
    assert weyl_values(lan1_0.system, lan1_0.potential, -1.0 + 0j) == pytest.approx(2.0, rel=1e-6)


def test_lan1_potential_and_decay(lan1_0):
    assert 1e-4 * lan1_0.potential(1e-2) / 2 == pytest.approx(1.0, abs=0.02)
    z = 1j
    M = lan1_0.weyl(np.array([z]))[0]
    r = lan1_0.system.evaluate(z, np.array([2.0, 5.0, 10.0]))
    psi = np.abs(r[2] + M * r[0])
    assert psi[2] < psi[1] < psi[0]


def test_lan1_lambda_closed_form(lan1_0):
    x = np.linspace(0.5, 5, 7)
    assert np.max(np.abs(lan1_0.closed_lambda(x) - lan1_0.state.Lambda(x))) < 1e-8


def test_explicit_examples_reject_bad_parameters():
    with pytest.raises(DomainError):
        gbdt.lan1(0.0, 1.0)
    with pytest.raises(DomainError):
        gbdt.lan2(1.0, 0.0)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, "inf"])
def test_rank_one_gbdt_is_double_commutation(gamma):
    rep = gbdt.gbdt_equals_double_commutation(-1.0, gamma)
    assert rep["max_abs"] < 1e-8
    assert rep["potential"] < 1e-8


def test_large_gamma_approaches_infinity_on_gbdt_side():
    z = np.array([1j, 2j])
    x = np.linspace(0.5, 4, 8)
    seeds = [gbdt.double_commutation_seed(-1.0, 0.0, 1.0, g) for g in (1e9, "inf")]
    w = [gbdt.transfer_values(gbdt.propagate(s), z, x) for s in seeds]
    assert np.max(np.abs(w[0] - w[1])) < 1e-6


_STATES = {}


def _lan_state(name):
    if name not in _STATES:
        _STATES[name] = (gbdt.lan1(1j, 1.0) if name == "lan1" else gbdt.lan2(1j, 0.5)).state
    return _STATES[name]


off_spectrum = st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)).filter(
    lambda z: abs(z.imag) > 0.05 and abs(z - 1j) > 0.05 and abs(z + 1j) > 0.05)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["lan1", "lan2"]), off_spectrum, st.floats(0.5, 5))
def test_j_unitarity(name, z, x):
    assert gbdt.j_unitarity_residual(_lan_state(name), z, x) < 1e-8
