"""Expression layer: parsing, differentiation, evaluation, Taylor data."""

import math

import numpy as np
import pytest

from regsing import expr
from regsing.errors import EvalDomainError, ParseError


def test_parse_eval_basics():
    e = expr.parse("2*t^3 - t + 1")
    assert expr.eval_real(e, 2.0) == 2 * 8 - 2 + 1
    assert expr.eval_real(e, 0.0) == 1.0
    # unary minus and right-associative power
    assert expr.eval_real(expr.parse("-t^2"), 3.0) == -9.0
    assert expr.eval_real(expr.parse("(-t)^2"), 3.0) == 9.0
    assert expr.eval_real(expr.parse("t^-2"), 2.0) == 0.25
    # scientific numbers
    assert expr.eval_real(expr.parse("1.5e-3*t"), 2.0) == pytest.approx(3e-3)


def test_parse_functions():
    e = expr.parse("sin(t)^2 + cos(t)^2")
    for t in (0.0, 0.7, -2.3):
        assert expr.eval_real(e, t) == pytest.approx(1.0, abs=1e-15)
    e2 = expr.parse("exp(log(t))")
    assert expr.eval_real(e2, 3.5) == pytest.approx(3.5)


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as ei:
        expr.parse("t + ")
    assert ei.value.line == 1
    assert ei.value.column == 5
    assert "number" in ei.value.expected[0]

    with pytest.raises(ParseError):
        expr.parse("2 ** t")
    with pytest.raises(ParseError):
        expr.parse("sin 3")        # function needs parentheses
    with pytest.raises(ParseError):
        expr.parse("x + 1")        # unknown identifier
    with pytest.raises(ParseError):
        expr.parse("(t + 1")       # unbalanced
    with pytest.raises(ParseError):
        expr.parse("t^t")          # variable exponent rejected


def test_eval_domain_errors():
    with pytest.raises(EvalDomainError):
        expr.eval_real(expr.parse("log(t)"), -1.0)
    with pytest.raises(EvalDomainError):
        expr.eval_real(expr.parse("sqrt(t)"), -4.0)
    with pytest.raises(EvalDomainError):
        expr.eval_real(expr.parse("1/t"), 0.0)
    with pytest.raises(EvalDomainError):
        expr.eval_real(expr.parse("t^-1"), 0.0)


def test_render_round_trip():
    sources = ["2*t^3 - t + 1", "sin(t)*exp(-t^2)", "1/(1 - t)",
               "t^-2 + tanh(t/2)", "-(t + 1)*(t - 1)"]
    ts = np.linspace(-0.9, 0.9, 7)
    for src in sources:
        e = expr.parse(src)
        e2 = expr.parse(expr.render(e))
        for t in ts:
            assert expr.eval_real(e2, t) == pytest.approx(
                expr.eval_real(e, t), rel=1e-15, abs=1e-15)


def test_differentiate_closed_forms():
    # d/dt exp(sin(t)) = cos(t) exp(sin(t))
    d = expr.differentiate(expr.parse("exp(sin(t))"))
    for t in (0.0, 0.4, 1.3):
        assert expr.eval_real(d, t) == pytest.approx(
            math.cos(t) * math.exp(math.sin(t)), rel=1e-14)
    # d/dt t^-2 = -2 t^-3
    d2 = expr.differentiate(expr.parse("t^-2"))
    assert expr.eval_real(d2, 2.0) == pytest.approx(-2 / 8)
    # constant derivative collapses to zero
    d3 = expr.differentiate(expr.parse("3.5"))
    assert expr.eval_real(d3, 123.0) == 0.0


def random_expr(rng, depth=3):
    """Random expression string, kept safe on [-1.5, 1.5]."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return "t"
        return f"{rng.uniform(-2, 2):.6f}"
    kind = rng.integers(0, 6)
    if kind == 0:
        return f"({random_expr(rng, depth - 1)} + {random_expr(rng, depth - 1)})"
    if kind == 1:
        return f"({random_expr(rng, depth - 1)} - {random_expr(rng, depth - 1)})"
    if kind == 2:
        return f"({random_expr(rng, depth - 1)} * {random_expr(rng, depth - 1)})"
    if kind == 3:
        fn = rng.choice(["sin", "cos", "tanh"])
        return f"{fn}({random_expr(rng, depth - 1)})"
    if kind == 4:
        return f"exp(0.3 * {random_expr(rng, depth - 1)})"
    return f"{random_expr(rng, depth - 1)}^{int(rng.integers(2, 4))}"


def test_derivative_matches_finite_difference():
    rng = np.random.default_rng(42)
    h = 1e-6
    checked = 0
    while checked < 200:
        e = expr.parse(random_expr(rng))
        d = expr.differentiate(e)
        t = float(rng.uniform(-1.5, 1.5))
        fd = (expr.eval_real(e, t + h) - expr.eval_real(e, t - h)) / (2 * h)
        an = expr.eval_real(d, t)
        assert abs(an - fd) <= 1e-6 * (1.0 + abs(an) + abs(fd))
        checked += 1


def test_taylor_maclaurin_exact():
    s = expr.taylor(expr.parse("sin(t)"), 0.0, 10)
    want = np.zeros(11)
    for k in range(1, 11, 2):
        want[k] = (-1.0) ** ((k - 1) // 2) / math.factorial(k)
    np.testing.assert_allclose(s.coeffs, want, rtol=0, atol=1e-15)

    e = expr.taylor(expr.parse("exp(t)"), 0.0, 10)
    np.testing.assert_allclose(
        e.coeffs, [1 / math.factorial(k) for k in range(11)],
        rtol=0, atol=1e-15)

    g = expr.taylor(expr.parse("1/(1 - t)"), 0.0, 10)
    np.testing.assert_allclose(g.coeffs, np.ones(11), rtol=0, atol=1e-15)


def test_taylor_off_center():
    # log t around 1: coefficients 0, 1, -1/2, 1/3, ...
    s = expr.taylor(expr.parse("log(t)"), 1.0, 6)
    want = [0.0] + [(-1.0) ** (k + 1) / k for k in range(1, 7)]
    np.testing.assert_allclose(s.coeffs, want, rtol=1e-14, atol=1e-15)
    assert s.t0 == 1.0


def test_taylor_rejects_pole_at_center():
    from regsing.errors import SeriesError
    with pytest.raises(SeriesError):
        expr.taylor(expr.parse("1/t"), 0.0, 4)
    with pytest.raises(EvalDomainError):
        expr.taylor(expr.parse("log(t)"), 0.0, 4)


def test_eval_complex():
    e = expr.parse("exp(t)")
    assert expr.eval_complex(e, 1j * math.pi) == pytest.approx(-1.0)
    # analytic continuation agrees with the real path on the real axis
    e2 = expr.parse("sin(t)*exp(-t^2)")
    for t in (-1.2, 0.3, 2.0):
        assert expr.eval_complex(e2, complex(t)) == pytest.approx(
            expr.eval_real(e2, t))
