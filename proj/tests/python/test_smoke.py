import json
import os

import pytest

import cofactor_lab as cl

FIXTURES = os.environ.get("COFACTOR_LAB_FIXTURES", os.path.join(os.path.dirname(__file__), "..", "..", "specs"))


def fixture(name):
    return os.path.join(FIXTURES, name)


def test_expression_layer():
    assert cl.eval_expr("c1*x^2/2", {"c1": 3.0, "x": 2.0}) == pytest.approx(6.0)
    assert cl.eval_expr(cl.diff_expr("x^3", "x"), {"x": 2.0}) == pytest.approx(12.0)
    with pytest.raises(cl.ExprError):
        cl.eval_expr("x +", {"x": 1.0})


def test_cofactor_helper():
    a = cl.cofactor([[5.0, -2.0], [-2.0, -8.0]])
    assert a == [[-8.0, 2.0], [2.0, 5.0]]


def test_load_and_verify_fixture():
    spec = cl.load_spec(fixture("henon_heiles_m0b0.json"))
    assert spec.m == 1 and spec.n == 1
    assert spec.adapted()
    out = cl.verify(spec)
    assert out["exit_code"] == 0
    assert out["report"]["pass"] is True
    assert out["report"]["sections"]["sckt"]["residual"]["pass"] is True


def test_pointwise_operations():
    spec = cl.load_spec(fixture("henon_heiles_m0b0.json"))
    assert cl.jbar(spec, [1.0, 2.0])[0][0] == pytest.approx(-8.8, abs=1e-12)
    assert cl.delta_coeffs(spec, [1.0, 2.0]) == pytest.approx([-44.0, 5.0])
    assert cl.eigenfunctions(spec, [1.0, 2.0]) == pytest.approx([-8.8])
    assert cl.nijenhuis_norm(spec, [0.3, 0.7]) <= 1e-12
    r = cl.sckt_residual(spec, [0.5, -1.0])
    assert r["residual"] <= 1e-10


def test_jacobi_endomorphism_matrix():
    spec = cl.load_spec(fixture("linear_2d.json"))
    phi = cl.jacobi_endomorphism(spec, [0.4, -0.9], [0.0, 0.0])
    assert phi == [[-5.0, 4.0], [-1.0, 0.0]]


def test_integrate_and_separate():
    spec = cl.load_spec(fixture("henon_heiles_oscillatory.json"))
    out = cl.integrate(spec, t_end=1.0)
    assert out["exit_code"] == 0
    assert out["csv"].startswith("t,q1,q2,p1,p2,H_1,H_2")

    sep_spec = cl.load_spec(fixture("henon_heiles_m0b0.json"))
    sep = cl.separate(sep_spec, t_end=2.0)
    assert sep["exit_code"] == 0
    assert sep["report"]["sections"]["time_independence"]["max_variation"]["pass"] is True


def test_integral_values_match_report():
    spec = cl.load_spec(fixture("henon_heiles_m0b0.json"))
    h = cl.integral_values(spec, [1.0, 2.0], [0.3, -0.7])
    # H_(2) = p_y^2/2 + c2 y^2/2 with c2 = -1
    assert h[1] == pytest.approx(0.5 * 0.09 - 0.5)
