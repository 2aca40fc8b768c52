import math

import numpy as np
import pytest

from szegolab import dsl


def ev(text, t=(), dim=None):
    if dim is None:
        dim = len(t)
    return dsl.evaluate(dsl.parse(text, max(dim, 1)), t)


def test_arithmetic_and_precedence():
    assert ev("2+3*4") == 14
    assert ev("2*3+4") == 10
    assert ev("2^3^2") == 512  # right-associative
    assert ev("-2^2") == -4    # ^ binds tighter than unary minus
    assert ev("(2+3)*4") == 20
    assert ev("7-4-2") == 1    # left-associative
    assert ev("8/4/2") == 1


def test_constants_and_functions():
    assert ev("sin(pi)") == pytest.approx(0.0, abs=1e-15)
    assert ev("log(e)") == pytest.approx(1.0)
    assert ev("sqrt(4)") == 2
    assert ev("exp(0)") == 1
    assert ev("cos(0)") == 1


def test_variables():
    assert ev("t1^2 + t2", (3.0, 1.0)) == 10
    with pytest.raises(dsl.UnknownVariableError):
        dsl.parse("t3", 2)
    with pytest.raises(dsl.UnknownVariableError):
        dsl.parse("frobnicate", 2)


def test_syntax_error_reports_offset():
    with pytest.raises(dsl.DslSyntaxError) as err:
        dsl.parse("1 + * 2", 1)
    assert err.value.offset == 4
    with pytest.raises(dsl.DslSyntaxError):
        dsl.parse("sin(1", 1)
    with pytest.raises(dsl.DslSyntaxError):
        dsl.parse("1 2", 1)


def test_domain_errors():
    with pytest.raises(dsl.DomainError):
        ev("log(0)")
    with pytest.raises(dsl.DomainError):
        ev("sqrt(0-1)")
    with pytest.raises(dsl.DomainError):
        ev("1/(t1-t1)", (2.0,))


def test_derive_simple_cases():
    e = dsl.parse("t1^2", 1)
    d = dsl.derive(e, 0)
    assert dsl.evaluate(d, (3.0,)) == pytest.approx(6.0)
    e = dsl.parse("exp(-t1^2)", 1)
    d = dsl.derive(e, 0)
    assert dsl.evaluate(d, (1.0,)) == pytest.approx(-2 * math.exp(-1))
    e = dsl.parse("t1", 2)
    assert dsl.evaluate(dsl.derive(e, 1), (1.0, 2.0)) == 0


SMOOTH_EXPRS = [
    "exp(-t1^2)*cos(t2)",
    "sin(t1*t2) + t2^3",
    "sqrt(t1^2 + 1)/(2 + cos(t2))",
    "log(2 + sin(t1)) * exp(t2/4)",
    "t1^t2",
    "bump(t1, -2, 2)",
]


@pytest.mark.parametrize("text", SMOOTH_EXPRS)
def test_derive_matches_finite_differences(text):
    e = dsl.parse(text, 2)
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(5):
        t = rng.uniform(0.3, 1.2, size=2)
        for j in range(2):
            tp, tm = t.copy(), t.copy()
            tp[j] += h
            tm[j] -= h
            fd = (dsl.evaluate(e, tp) - dsl.evaluate(e, tm)) / (2 * h)
            sym = dsl.evaluate(dsl.derive(e, j), t)
            assert sym == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_derive_linearity_and_product_rule():
    rng = np.random.default_rng(5)
    f = dsl.parse("sin(t1)*t1^2", 1)
    g = dsl.parse("exp(t1/3)", 1)
    fg = dsl.parse("(sin(t1)*t1^2) * (exp(t1/3))", 1)
    fplusg = dsl.parse("(sin(t1)*t1^2) + (exp(t1/3))", 1)
    for _ in range(5):
        t = (float(rng.uniform(0.1, 2.0)),)
        df = dsl.evaluate(dsl.derive(f, 0), t)
        dg = dsl.evaluate(dsl.derive(g, 0), t)
        assert dsl.evaluate(dsl.derive(fplusg, 0), t) == pytest.approx(df + dg,
                                                                       rel=1e-9)
        prod = df * dsl.evaluate(g, t) + dsl.evaluate(f, t) * dg
        assert dsl.evaluate(dsl.derive(fg, 0), t) == pytest.approx(prod, rel=1e-9)


def test_bump_properties():
    e = dsl.parse("bump(t1, -1, 1)", 1)
    assert dsl.evaluate(e, (0.0,)) == 1.0
    assert dsl.evaluate(e, (-0.4,)) == 1.0  # inner half
    assert dsl.evaluate(e, (1.0,)) == 0.0
    assert dsl.evaluate(e, (2.0,)) == 0.0
    mid = dsl.evaluate(e, (0.75,))
    assert 0.0 < mid < 1.0


def test_roundtrip_fixed_cases():
    for text in SMOOTH_EXPRS + ["-t1 - -t2", "2^(t1+1)", "1/(2*t2)",
                                "t1 - (t2 - 1)", "-(t1+t2)^2"]:
        e = dsl.parse(text, 2)
        assert dsl.parse(dsl.to_string(e), 2) == e


def _random_expr(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        choice = rng.integers(0, 3)
        if choice == 0:
            return dsl.Num(float(np.round(rng.uniform(0, 5), 3)))
        if choice == 1:
            return dsl.Var(int(rng.integers(0, 2)))
        return dsl.Const("pi" if rng.random() < 0.5 else "e")
    kind = rng.integers(0, 3)
    if kind == 0:
        return dsl.Neg(_random_expr(rng, depth - 1))
    if kind == 1:
        op = "+-*/^"[rng.integers(0, 5)]
        return dsl.BinOp(op, _random_expr(rng, depth - 1),
                         _random_expr(rng, depth - 1))
    fn = ["exp", "log", "sin", "cos", "sqrt"][rng.integers(0, 5)]
    return dsl.Call(fn, (_random_expr(rng, depth - 1),))


def test_roundtrip_random_trees():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        e = _random_expr(rng, 4)
        assert dsl.parse(dsl.to_string(e), 2) == e
