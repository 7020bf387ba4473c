import json
import math

import pytest

import polyneck


def test_model_a_invariants():
    a = polyneck.make_model()
    assert (a.m, a.k, a.n) == (5, 2, 3)
    assert a.S == pytest.approx(6.0)
    assert a.injectivity_gap() == pytest.approx(0.5)
    assert a.injectivity_gap(symmetric=True) == pytest.approx(1.5)


def test_model_b_curvature():
    b = polyneck.make_model("sphere2_x_sphere3")
    assert b.S == pytest.approx(7.0)


def test_errors_are_translated():
    with pytest.raises(polyneck.PolyneckError):
        polyneck.make_model("klein_bottle")


def test_cutoffs_and_factor():
    eps = 0.05
    assert polyneck.chi(0.0, eps) == pytest.approx(0.5)
    assert polyneck.eta(0.0, eps) == 1.0
    assert polyneck.u_eps(0.4, eps, 3) == pytest.approx(2 * math.sqrt(eps) * math.cosh(0.2))
    assert polyneck.barrier_constant(3, 0.0) == pytest.approx(0.125)
    assert polyneck.yamabe_constants(5) == pytest.approx((-3 / 16, 7 / 3))


def test_picard_solve():
    r = polyneck.picard_solve(polyneck.make_model(), 0.05)
    assert r["iterations"] <= 30
    assert r["residual"] <= 1e-10
    assert len(r["solution"]) == len(r["coord"])


def test_run_command(tmp_path):
    code, log = polyneck.run("validate-tensors", [], str(tmp_path), 2)
    assert code == 0, log
    summary = json.loads((tmp_path / "run.json").read_text())
    assert summary["command"] == "validate-tensors"
    assert all(c["passed"] for c in summary["checks"])
    assert "sweep" in polyneck.command_names()
