import math

import pytest

from commute import verify


def test_check_line_and_status():
    c = verify.Check("single", "demo", 1e-10, 1e-8)
    assert c.passed and c.line().startswith("PASS  single")
    assert not verify.Check("single", "nan", math.nan, 1.0).passed


def test_unknown_suite():
    with pytest.raises(ValueError):
        verify.run("everything")


def test_crashing_suite_fails_without_stopping_the_run(monkeypatch):
    def broken(tol):
        yield "first", 0.0, tol
        raise RuntimeError("boom")

    monkeypatch.setitem(verify._SUITE_FUNCS, "single", broken)
    seen = []
    checks = [c for name in ("single", "measure") for c in verify.run(name, report=seen.append)]
    assert [c.passed for c in checks[:2]] == [True, False]
    assert "boom" in checks[1].name
    assert any(c.suite == "measure" and c.passed for c in checks)
    assert len(seen) == len(checks)


def test_gbdt_suite_covers_the_explicit_identities():
    names = [c.name for c in verify.run("gbdt")]
    for key in ("det w_A = (z - conj mu)^2/(z - mu)^2", "x^2 q/12", "numeric M = closed form",
                "J-unitarity", "Lyapunov"):
        assert any(key in n for n in names), key


def test_wronskian_suite_passes():
    assert all(c.passed for c in verify.run("wronskian"))


def test_coulomb_product_helper():
    assert verify.coulomb_product(0.0, 2.0, 2) == pytest.approx(1.0 * 0.25)
    assert verify.coulomb_product(-1.0, 2.0, 1) == pytest.approx(0.0)
