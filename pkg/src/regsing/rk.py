"""Embedded Dormand-Prince 5(4) integrator with dense output.

Internal engine shared by the linear path integrator and the singular IVP
solver.  Works on 1-d numpy arrays with real or complex entries; the
independent variable is always real and increasing.

Step size is governed by a PI controller: after a step with scaled error
``err`` the factor is ``safety * err**(-0.7/p) * err_prev**(0.4/p)`` with
``p = 5`` and safety 0.9.  Each accepted step stores a quartic Hermite-type
interpolant (endpoint values and slopes plus one extra stage combination),
so trajectories can be sampled and differentiated anywhere.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError

__all__ = ["integrate_adaptive", "IntegrationResult", "DenseSegment"]

# classic Dormand-Prince coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]

# 5th order weights coincide with the last A row (FSAL)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])

# difference between the 5th and embedded 4th order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

# extra stage combination for the quartic interpolant
_D = np.array([
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
])

_ORDER = 5
_SAFETY = 0.9
_EXP1 = 0.7 / _ORDER
_EXP2 = 0.4 / _ORDER
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


class DenseSegment:
    """Quartic interpolant over one accepted step [t0, t1].

    Hermite data (values and slopes at both ends) plus one extra stage
    combination pin a degree-4 polynomial whose value error matches the
    order of the step itself.
    """

    __slots__ = ("t0", "t1", "_c")

    def __init__(self, t0, t1, y0, y1, f0, f1, k):
        self.t0 = float(t0)
        self.t1 = float(t1)
        h = self.t1 - self.t0
        ydiff = y1 - y0
        bspl = h * f0 - ydiff
        self._c = (
            y0.copy(),
            ydiff,
            bspl,
            ydiff - h * f1 - bspl,
            h * (_D @ k),
        )

    def _theta(self, t):
        return (t - self.t0) / (self.t1 - self.t0)

    def value(self, t):
        c0, c1, c2, c3, c4 = self._c
        th = self._theta(t)
        om = 1.0 - th
        return c0 + th * (c1 + om * (c2 + th * (c3 + om * c4)))

    def derivative(self, t):
        c0, c1, c2, c3, c4 = self._c
        th = self._theta(t)
        om = 1.0 - th
        dth = (c1 + (1.0 - 2.0 * th) * c2 + th * (2.0 - 3.0 * th) * c3
               + 2.0 * th * om * (1.0 - 2.0 * th) * c4)
        return dth / (self.t1 - self.t0)


class IntegrationResult:
    """Accepted grid, dense segments and step statistics."""

    def __init__(self, ts, ys, segments, n_accepted, n_rejected, est_error):
        self.ts = np.asarray(ts)
        self.ys = np.asarray(ys)
        self.segments = segments
        self.n_accepted = n_accepted
        self.n_rejected = n_rejected
        self.est_error = est_error

    def _segment_at(self, t):
        if not self.segments:
            raise NumericalError("no dense segments available")
        idx = int(np.searchsorted(self.ts[1:], t, side="left"))
        idx = min(max(idx, 0), len(self.segments) - 1)
        return self.segments[idx]

    def value(self, t):
        return self._segment_at(t).value(t)

    def derivative(self, t):
        return self._segment_at(t).derivative(t)


def _rms_norm(x):
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def _initial_step(f, t0, y0, f0, t1, rtol, atol, max_step):
    # standard two-probe guess, conservative on degenerate data
    sc = atol + rtol * np.abs(y0)
    d0 = _rms_norm(y0 / sc)
    d1 = _rms_norm(f0 / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, abs(t1 - t0))
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _rms_norm((f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / _ORDER)
    return min(100 * h0, h1, max_step, abs(t1 - t0))


def integrate_adaptive(f, t0, y0, t1, rtol, atol, max_step=math.inf,
                       first_step=None, max_steps=200_000):
    """Integrate ``dy/dt = f(t, y)`` from ``t0`` to ``t1 > t0``.

    Parameters
    ----------
    f : callable
        Right-hand side returning an array matching ``y``.
    rtol, atol : float
        Mixed error test: component scale ``atol + rtol*max(|y0|,|y1|)``.

    Raises
    ------
    NumericalError
        On step size underflow or step budget exhaustion; the exception
        message reports the last reachable time.
    """
    t0 = float(t0)
    t1 = float(t1)
    if not t1 > t0:
        raise NumericalError(f"integration span is empty: [{t0}, {t1}]")
    y0 = np.atleast_1d(np.asarray(y0))
    f0 = np.atleast_1d(np.asarray(f(t0, y0)))
    dtype = np.result_type(y0.dtype, f0.dtype, np.float64)
    y = y0.astype(dtype)
    k = np.empty((7, y.size), dtype=dtype)
    k[0] = f0.astype(dtype)

    if first_step is None:
        h = _initial_step(f, t0, y, k[0], t1, rtol, atol, max_step)
    else:
        h = min(float(first_step), max_step, t1 - t0)
    h = max(h, 1e-300)

    t = t0
    ts = [t0]
    ys = [y.copy()]
    segments = []
    n_accepted = 0
    n_rejected = 0
    est_error = 0.0
    err_prev = 1e-4
    rejected_last = False

    for _ in range(max_steps):
        if t >= t1:
            break
        is_last = h >= t1 - t
        if is_last:
            h = t1 - t
        if h < 1e-14 * max(abs(t), 1.0):
            raise NumericalError(
                f"step size underflow at t = {t!r} (h = {h!r}); "
                "problem may be stiff or blowing up")

        for i in range(1, 7):
            yi = y + h * (_A[i] @ k[:i])
            k[i] = f(t + _C[i] * h, yi)
        y_new = yi  # stage 7 argument equals the 5th order solution
        f_new = k[6]

        err_vec = h * (_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore", over="ignore"):
            err = _rms_norm(err_vec / sc)

        if not np.isfinite(err):
            n_rejected += 1
            rejected_last = True
            h *= _MIN_FACTOR
            continue

        if err <= 1.0:
            t_next = t1 if is_last else t + h
            segments.append(DenseSegment(t, t_next, y, y_new, k[0], f_new,
                                         k.copy()))
            t = t_next
            y = y_new.copy()
            k[0] = f_new
            ts.append(t)
            ys.append(y.copy())
            n_accepted += 1
            est_error += _rms_norm(err_vec)

            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_EXP1) * err_prev ** _EXP2
                factor = min(max(factor, _MIN_FACTOR), _MAX_FACTOR)
            if rejected_last:
                factor = min(factor, 1.0)
            rejected_last = False
            err_prev = max(err, 1e-4)
            h = min(h * factor, max_step)
        else:
            n_rejected += 1
            rejected_last = True
            factor = _SAFETY * err ** (-_EXP1) * err_prev ** _EXP2
            h *= min(max(factor, _MIN_FACTOR), 1.0)
    else:
        raise NumericalError(
            f"step budget exhausted after {max_steps} steps at t = {t!r}")

    return IntegrationResult(ts, ys, segments, n_accepted, n_rejected,
                             est_error)
