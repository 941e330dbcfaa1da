"""Truncated power series arithmetic.

A :class:`Series` stores coefficients ``c[0..K]`` of a polynomial in
``(t - t0)`` together with the expansion point ``t0``.  Arithmetic is exact
on the retained coefficients and truncates everything beyond order ``K``;
binary operations carry ``K = min(K_a, K_b)`` and require matching
expansion points.

The module also provides the elementary functions (exp, log, sin, ...) on
series via the standard convolution recurrences, so any function written in
terms of these primitives can be evaluated in Taylor mode by passing Series
arguments instead of floats.  All recurrences propagate from the constant
term, i.e. the expansion is around the argument's own base value, not
around zero.
"""

from __future__ import annotations

import math
import cmath
import numbers

import numpy as np

from .errors import SeriesError, EvalDomainError

__all__ = [
    "Series", "constant", "identity", "add", "mul", "reciprocal", "compose",
    "eval_truncated", "exp", "log", "sqrt", "sin", "cos", "tan",
    "sinh", "cosh", "tanh", "powi",
]


def _as_coeff_array(coeffs):
    arr = np.asarray(coeffs)
    if arr.ndim != 1 or arr.size == 0:
        raise SeriesError("coefficients must be a non-empty 1-d sequence")
    if not np.issubdtype(arr.dtype, np.number):
        raise SeriesError("coefficients must be numeric")
    if np.issubdtype(arr.dtype, np.complexfloating):
        return arr.astype(np.complex128)
    return arr.astype(np.float64)


class Series:
    """Truncated power series in ``(t - t0)`` of order ``K = len(coeffs) - 1``.

    Parameters
    ----------
    coeffs : sequence of real or complex
        ``coeffs[k]`` multiplies ``(t - t0)**k``.
    t0 : float
        Expansion point.

    Series objects are immutable; arithmetic returns new instances.
    Operator overloading accepts plain numbers on either side, which makes
    Series usable as a drop-in scalar type for Taylor-mode evaluation.
    """

    __slots__ = ("coeffs", "t0")

    def __init__(self, coeffs, t0: float = 0.0):
        object.__setattr__(self, "coeffs", _as_coeff_array(coeffs))
        object.__setattr__(self, "t0", float(t0))
        self.coeffs.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("Series is immutable")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __repr__(self):
        return f"Series({list(self.coeffs)!r}, t0={self.t0!r})"

    def truncate(self, order: int) -> "Series":
        """Drop coefficients above ``order`` (never extends)."""
        if order >= self.order:
            return self
        return Series(self.coeffs[: order + 1], self.t0)

    def pad(self, order: int) -> "Series":
        """Zero-extend up to ``order``.  Changes the claimed accuracy."""
        if order <= self.order:
            return self.truncate(order)
        c = np.zeros(order + 1, dtype=self.coeffs.dtype)
        c[: len(self.coeffs)] = self.coeffs
        return Series(c, self.t0)

    # -- helpers ----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Series):
            if other.t0 != self.t0:
                raise SeriesError(
                    f"expansion points differ: {self.t0} vs {other.t0}")
            return other
        if isinstance(other, numbers.Number):
            return Series([other], self.t0).pad(self.order)
        return None

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = min(self.order, o.order)
        return Series(self.coeffs[: k + 1] + o.coeffs[: k + 1], self.t0)

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.coeffs, self.t0)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = min(self.order, o.order)
        return Series(self.coeffs[: k + 1] - o.coeffs[: k + 1], self.t0)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return Series(self.coeffs * other, self.t0)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        k = min(self.order, o.order)
        a, b = self.coeffs[: k + 1], o.coeffs[: k + 1]
        # exact Cauchy product, truncated to order k
        return Series(np.convolve(a, b)[: k + 1], self.t0)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Number):
            return Series(self.coeffs / other, self.t0)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * reciprocal(o)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, n):
        if isinstance(n, numbers.Integral):
            return powi(self, int(n))
        if isinstance(n, numbers.Real):
            return exp(log(self) * float(n))
        return NotImplemented

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t: float):
        return eval_truncated(self, t - self.t0).value


def constant(value, order: int, t0: float = 0.0) -> Series:
    c = np.zeros(order + 1, dtype=np.complex128 if isinstance(
        value, complex) else np.float64)
    c[0] = value
    return Series(c, t0)


def identity(order: int, t0: float = 0.0) -> Series:
    """The series of ``t`` itself around ``t0``: ``t0 + (t - t0)``."""
    c = np.zeros(order + 1)
    c[0] = t0
    if order >= 1:
        c[1] = 1.0
    return Series(c, t0)


def add(a: Series, b: Series) -> Series:
    return a + b


def mul(a: Series, b: Series) -> Series:
    return a * b


def reciprocal(a: Series) -> Series:
    """Multiplicative inverse; requires a nonzero constant term."""
    c0 = a.coeffs[0]
    if c0 == 0:
        raise SeriesError("reciprocal of a series with zero constant term")
    k = a.order
    out = np.zeros(k + 1, dtype=np.result_type(a.coeffs.dtype, np.float64))
    out[0] = 1.0 / c0
    for n in range(1, k + 1):
        # c0*out[n] + sum_{j=1..n} a[j]*out[n-j] = 0
        acc = np.dot(a.coeffs[1: n + 1], out[n - 1:: -1][: n])
        out[n] = -acc / c0
    return Series(out, a.t0)


def compose(outer: Series, inner: Series) -> Series:
    """``outer(inner(t))`` as a series in ``(t - inner.t0)``.

    The constant term of ``inner`` must equal the expansion point of
    ``outer`` so that the composition is a formal power series; the result
    carries ``min`` of the two orders.
    """
    if inner.coeffs[0] != outer.t0:
        raise SeriesError(
            "composition mismatch: inner constant term "
            f"{inner.coeffs[0]} != outer expansion point {outer.t0}")
    k = min(outer.order, inner.order)
    u = inner.truncate(k) - inner.coeffs[0]  # zero constant term
    acc = constant(outer.coeffs[k], k, inner.t0)
    if np.issubdtype(outer.coeffs.dtype, np.complexfloating):
        acc = Series(acc.coeffs.astype(np.complex128), inner.t0)
    for j in range(k - 1, -1, -1):
        acc = acc * u + outer.coeffs[j]
    return acc


class SeriesValue:
    """Result of :func:`eval_truncated`: value plus a remainder heuristic."""

    __slots__ = ("value", "remainder")

    def __init__(self, value, remainder):
        self.value = value
        self.remainder = remainder

    def __iter__(self):
        return iter((self.value, self.remainder))

    def __repr__(self):
        return f"SeriesValue(value={self.value!r}, remainder={self.remainder!r})"


def eval_truncated(a: Series, dt) -> SeriesValue:
    """Horner evaluation at offset ``dt`` from the expansion point.

    The remainder estimate ``|c_K| * |dt|**K`` is a heuristic for the first
    omitted contribution, not a bound.
    """
    acc = a.coeffs[-1]
    for c in a.coeffs[-2:: -1]:
        acc = acc * dt + c
    rem = abs(a.coeffs[-1]) * abs(dt) ** a.order
    return SeriesValue(acc, rem)


# -- elementary functions -------------------------------------------------
#
# Each routine accepts a Series or a plain number.  On numbers it defers to
# math/cmath, which keeps user-supplied maps generic over both call modes.

def _is_complex(x) -> bool:
    return isinstance(x, complex) or (
        isinstance(x, np.generic) and np.iscomplexobj(x))


def _lift(fn_real, fn_complex, x):
    if _is_complex(x):
        return fn_complex(x)
    return fn_real(x)


def _dmul_sum(g: np.ndarray, f: np.ndarray, k: int):
    """sum_{j=1..k} j * g[j] * f[k-j], the derivative convolution kernel."""
    j = np.arange(1, k + 1)
    return np.dot(j * g[1: k + 1], f[k - 1:: -1][: k])


def exp(x):
    if not isinstance(x, Series):
        return _lift(math.exp, cmath.exp, x)
    g = x.coeffs
    k = x.order
    e0 = cmath.exp(g[0]) if np.iscomplexobj(g) else math.exp(g[0].real)
    out = np.zeros(k + 1, dtype=np.result_type(g.dtype, type(e0)))
    out[0] = e0
    for n in range(1, k + 1):
        out[n] = _dmul_sum(g, out, n) / n
    return Series(out, x.t0)


def log(x):
    if not isinstance(x, Series):
        if not _is_complex(x):
            if x <= 0:
                raise EvalDomainError(f"log of nonpositive real {x}")
            return math.log(x)
        if x == 0:
            raise EvalDomainError("log of zero")
        return cmath.log(x)
    g = x.coeffs
    if g[0] == 0:
        raise EvalDomainError("log of series with zero constant term")
    if not np.iscomplexobj(g) and g[0].real < 0:
        raise EvalDomainError(f"log of series with negative base {g[0]}")
    k = x.order
    l0 = log(complex(g[0])) if np.iscomplexobj(g) else math.log(g[0].real)
    out = np.zeros(k + 1, dtype=np.result_type(g.dtype, type(l0)))
    out[0] = l0
    for n in range(1, k + 1):
        # n*l[n]*g[0] = n*g[n] - sum_{j=1..n-1} j*l[j]*g[n-j]
        # (_dmul_sum's j=n term vanishes because out[n] is still zero)
        out[n] = (n * g[n] - _dmul_sum(out, g, n)) / (n * g[0])
    return Series(out, x.t0)


def sqrt(x):
    if not isinstance(x, Series):
        if not _is_complex(x):
            if x < 0:
                raise EvalDomainError(f"sqrt of negative real {x}")
            return math.sqrt(x)
        return cmath.sqrt(x)
    g = x.coeffs
    if g[0] == 0:
        raise EvalDomainError("sqrt of series with zero constant term")
    if not np.iscomplexobj(g) and g[0].real < 0:
        raise EvalDomainError(f"sqrt of series with negative base {g[0]}")
    k = x.order
    q0 = sqrt(complex(g[0])) if np.iscomplexobj(g) else math.sqrt(g[0].real)
    out = np.zeros(k + 1, dtype=np.result_type(g.dtype, type(q0)))
    out[0] = q0
    for n in range(1, k + 1):
        acc = np.dot(out[1: n], out[n - 1: 0: -1]) if n >= 2 else 0.0
        out[n] = (g[n] - acc) / (2 * q0)
    return Series(out, x.t0)


def _sin_cos(x: Series):
    g = x.coeffs
    k = x.order
    if np.iscomplexobj(g):
        s0, c0 = cmath.sin(g[0]), cmath.cos(g[0])
    else:
        s0, c0 = math.sin(g[0].real), math.cos(g[0].real)
    dt = np.result_type(g.dtype, type(s0))
    s = np.zeros(k + 1, dtype=dt)
    c = np.zeros(k + 1, dtype=dt)
    s[0], c[0] = s0, c0
    for n in range(1, k + 1):
        s[n] = _dmul_sum(g, c, n) / n
        c[n] = -_dmul_sum(g, s, n) / n
    return Series(s, x.t0), Series(c, x.t0)


def sin(x):
    if not isinstance(x, Series):
        return _lift(math.sin, cmath.sin, x)
    return _sin_cos(x)[0]


def cos(x):
    if not isinstance(x, Series):
        return _lift(math.cos, cmath.cos, x)
    return _sin_cos(x)[1]


def tan(x):
    if not isinstance(x, Series):
        return _lift(math.tan, cmath.tan, x)
    s, c = _sin_cos(x)
    if c.coeffs[0] == 0:
        raise EvalDomainError("tan at a pole of the expansion point")
    return s * reciprocal(c)


def _sinh_cosh(x: Series):
    g = x.coeffs
    k = x.order
    if np.iscomplexobj(g):
        s0, c0 = cmath.sinh(g[0]), cmath.cosh(g[0])
    else:
        s0, c0 = math.sinh(g[0].real), math.cosh(g[0].real)
    dt = np.result_type(g.dtype, type(s0))
    s = np.zeros(k + 1, dtype=dt)
    c = np.zeros(k + 1, dtype=dt)
    s[0], c[0] = s0, c0
    for n in range(1, k + 1):
        s[n] = _dmul_sum(g, c, n) / n
        c[n] = _dmul_sum(g, s, n) / n
    return Series(s, x.t0), Series(c, x.t0)


def sinh(x):
    if not isinstance(x, Series):
        return _lift(math.sinh, cmath.sinh, x)
    return _sinh_cosh(x)[0]


def cosh(x):
    if not isinstance(x, Series):
        return _lift(math.cosh, cmath.cosh, x)
    return _sinh_cosh(x)[1]


def tanh(x):
    if not isinstance(x, Series):
        return _lift(math.tanh, cmath.tanh, x)
    s, c = _sinh_cosh(x)
    return s * reciprocal(c)


def powi(a: Series, n: int) -> Series:
    """Integer power by repeated squaring; negative n via reciprocal."""
    if n == 0:
        return constant(1.0, a.order, a.t0)
    if n < 0:
        return reciprocal(powi(a, -n))
    base = a
    acc = None
    while n:
        if n & 1:
            acc = base if acc is None else acc * base
        base = base * base
        n >>= 1
    return acc
