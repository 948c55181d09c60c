import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commute import tables
from commute._numerics import adaptive_integral, branch_sqrt, gauss_legendre, removable

finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(finite, finite)
def test_branch_sqrt_squares_back(re, im):
    z = complex(re, im)
    r = branch_sqrt(z)
    assert r.imag >= 0
    assert abs(r * r - z) <= 1e-12 * max(1.0, abs(z))


def test_removable_recovers_sinc():
    # sin(z)/z at z = 0 is removable with value 1
    val = removable(lambda t: np.sin(t) / t, [0.0, 0.1j], 0.0, 0.5)
    assert val[0] == pytest.approx(1.0, abs=1e-14)
    assert val[1] == pytest.approx(np.sin(0.1j) / 0.1j, abs=1e-14)


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(5)
    assert np.sum(w * x ** 9) == pytest.approx(0.1, rel=1e-14)


def test_adaptive_integral():
    val, err, ok = adaptive_integral(np.sqrt, 1.0, 4.0)
    assert ok and val == pytest.approx(14 / 3, rel=1e-12)
    val, _, ok = adaptive_integral(lambda t: 0.01 / (t * t + 1e-4), -1.0, 1.0)
    assert ok and val == pytest.approx(2 * math.atan(100), rel=1e-9)


def test_csv_and_json_round_trip(tmp_path):
    rows = [[0.1, 1 / 3, -2.5e-300], [1e300, math.pi, 0.0]]
    tables.write_csv(tmp_path / "t.csv", ["a", "b", "c"], rows)
    header, back = tables.read_csv(tmp_path / "t.csv")
    assert header == ["a", "b", "c"] and back == rows
    tables.write_json(tmp_path / "t.json", ["a", "b", "c"], rows, {"note": "x"})
    assert (tmp_path / "t.json").read_text().count("\n") > 3
    assert tables.complex_columns("M") == ["re_M", "im_M"]
    assert tables.split_complex(1 - 2j) == [1.0, -2.0]


@settings(max_examples=50)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_formatting_round_trips_every_double(v):
    assert float(tables.fmt(v)) == v
