"""Rotationally reduced harmonic and biharmonic map equations.

A metric family describes ``g = dt^2 + P(t)`` on ``(0, T) x F`` where the
first ``dim_p`` frame directions collapse at ``t = 0`` like ``t`` (sphere
type) and the remaining ``dim_m`` stay finite.  Writing ``D(t) =
diag(t I_p, I_m)``, the family is usable at the origin when ``P = D R D``
with ``R`` analytic and ``R(0)`` positive definite; the entry series of
``R`` are obtained from the entries of ``P`` by dropping ``2 / 1 / 0``
leading coefficients in the pp / pm / mm blocks.

Equivariant maps are profiles ``r(t)`` transplanted along the orbits.  The
harmonic map equation reduces to

    r'' + [drift(t) + weight * alpha'(t)] r' = V(t, r),

with ``drift = Tr(P^-1 P')/2`` and ``V(t, rho) = Tr(P(t)^-1 dP/dt|_rho)/2``;
the optional conformal exponent ``alpha`` models an extra warped factor of
dimension ``weight``.  Biharmonic profiles couple this to the linearized
(Jacobi) equation for the tension ``F`` through the second radial
derivative of ``P``; that path is restricted to diagonal families.

Both reductions have a simple pole at ``t = 0``.  Substituting ``r = t a``
(and ``F = t b``) produces problems in the class handled by
:mod:`regsing.singular`, with singular part ``(0, -(p+2) u)`` and free
initial slope: the assembled maps run on floats and on series jets, so the
bootstrap there is exact.  Metrics whose odd low-order data does not
cancel the order-one residue (for example a conformal factor with
``alpha'(0) != 0``) have no analytic reduction; the series paths raise
StructureError for them while pointwise evaluation away from 0 still
works.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import expr as _expr
from . import series as _series
from .series import Series
from .errors import (ConfigError, NumericalError, StructureError,
                     ValidationError)
from .singular import SingularIVP, solve as _solve_singular

__all__ = [
    "MetricFamily", "MetricReport", "build_metric_family", "validate_metric",
    "trace_drift", "trace_potential", "trace_potential2",
    "assemble_harmonic", "assemble_biharmonic", "recover_r",
    "tension_residual", "biharmonic_residual",
    "HarmonicSolution", "BiharmonicSolution",
    "solve_harmonic", "solve_biharmonic",
]

MAX_METRIC_DIM = 16
_SHIFT_TOL = 1e-9
_STRUCT_TOL = 5e-7
_FLOAT_SERIES_ORDER = 12


def _sderiv(s: Series) -> Series:
    """Coefficientwise derivative, one order lower."""
    if s.order == 0:
        return Series([0.0 * s.coeffs[0]], s.t0)
    k = np.arange(1, s.order + 1)
    return Series(s.coeffs[1:] * k, s.t0)


def _as_series(x, order: int) -> Series:
    if isinstance(x, Series):
        return x.pad(order)
    return _series.constant(float(x), order)


def _time_jet_order(t: Series) -> int:
    c = t.coeffs
    if t.t0 != 0.0 or c[0] != 0.0 or (t.order >= 1 and c[1] != 1.0):
        raise ValidationError(
            "time jets must expand the identity at 0 (coefficients [0, 1])")
    return t.order


class MetricFamily:
    """Symmetric matrix family ``P(t)`` with declared collapsing block.

    Parameters
    ----------
    entries : (n, n) array of Expr
        Entries of ``P`` as expressions in the radial variable.
    dim_p : int
        Number of leading directions collapsing at the origin.
    alpha : Expr or None
        Conformal exponent of an optional extra warped factor.
    weight : int
        Dimension carried by ``alpha`` in the drift term.
    t_validate : float
        Right end of the interval used by :func:`validate_metric`.

    Construction is lenient: pole structure is only enforced when a series
    path is actually used, so families that fail validation can still be
    probed pointwise.
    """

    t_switch = 1e-2

    def __init__(self, entries, dim_p: int, alpha=None, weight: int = 1,
                 t_validate: float = 1.0, t_switch: float | None = None):
        entries = np.asarray(entries, dtype=object)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValidationError("metric entries must form a square matrix")
        n = entries.shape[0]
        if not 1 <= n <= MAX_METRIC_DIM:
            raise ValidationError(f"metric size must be 1..{MAX_METRIC_DIM}")
        if not 1 <= dim_p <= n:
            raise ValidationError(f"dim_p must be in 1..{n}, got {dim_p}")
        self.entries = entries
        self.n = n
        self.dim_p = int(dim_p)
        self.dim_m = n - self.dim_p
        self.alpha = alpha
        self.weight = int(weight)
        self.t_validate = float(t_validate)
        if t_switch is not None:
            self.t_switch = float(t_switch)
        self._dentries = np.array(
            [[_expr.differentiate(entries[i, j]) for j in range(n)]
             for i in range(n)], dtype=object)
        self._ddentries = None
        self._dalpha = None if alpha is None else _expr.differentiate(alpha)
        self._packs: dict = {}
        self.diagonal = all(
            i == j or _is_zero_expr(entries[i, j])
            for i in range(n) for j in range(n))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_diagonal(cls, diag, dim_p: int, **kw) -> "MetricFamily":
        diag = [_parse(e) for e in diag]
        n = len(diag)
        zero = _expr.Num(0.0)
        entries = np.full((n, n), zero, dtype=object)
        for i, e in enumerate(diag):
            entries[i, i] = e
        kw.setdefault("alpha", None)
        if kw["alpha"] is not None:
            kw["alpha"] = _parse(kw["alpha"])
        return cls(entries, dim_p, **kw)

    @classmethod
    def from_entries(cls, rows, dim_p: int, **kw) -> "MetricFamily":
        entries = np.array([[_parse(e) for e in row] for row in rows],
                           dtype=object)
        kw.setdefault("alpha", None)
        if kw["alpha"] is not None:
            kw["alpha"] = _parse(kw["alpha"])
        return cls(entries, dim_p, **kw)

    # -- pointwise evaluation -----------------------------------------------

    def P_at(self, t: float) -> np.ndarray:
        return np.array([[_expr.eval_real(self.entries[i, j], t)
                          for j in range(self.n)] for i in range(self.n)])

    def Pdot_at(self, t: float) -> np.ndarray:
        return np.array([[_expr.eval_real(self._dentries[i, j], t)
                          for j in range(self.n)] for i in range(self.n)])

    def Pddot_at(self, t: float) -> np.ndarray:
        if self._ddentries is None:
            self._ddentries = np.array(
                [[_expr.differentiate(self._dentries[i, j])
                  for j in range(self.n)] for i in range(self.n)],
                dtype=object)
        return np.array([[_expr.eval_real(self._ddentries[i, j], t)
                          for j in range(self.n)] for i in range(self.n)])

    def alpha_dot_at(self, t: float) -> float:
        if self._dalpha is None:
            return 0.0
        return _expr.eval_real(self._dalpha, t)

    # -- series data ---------------------------------------------------------

    def _shift_of(self, i: int, j: int) -> int:
        return (i < self.dim_p) + (j < self.dim_p)

    def pack(self, order: int) -> dict:
        """Cached sandwich series at the origin up to ``order``.

        Raises ValidationError when an entry fails to vanish to the order
        its block position requires.
        """
        if order in self._packs:
            return self._packs[order]
        n = self.n
        R = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                shift = self._shift_of(i, j)
                full = _expr.taylor(self.entries[i, j], 0.0, order + 1 + shift)
                c = full.coeffs
                scale = 1.0 + float(np.abs(c).max())
                for k in range(shift):
                    if abs(c[k]) > _SHIFT_TOL * scale:
                        raise ValidationError(
                            f"entry ({i},{j}) must vanish to order {shift} "
                            f"at 0; found coefficient {c[k]:.3e} at t^{k}")
                R[i, j] = Series(c[shift:], 0.0)   # order + 1
        R0 = np.array([[float(R[i, j].coeffs[0]) for j in range(n)]
                       for i in range(n)])
        try:
            np.linalg.cholesky(0.5 * (R0 + R0.T))
        except np.linalg.LinAlgError as exc:
            raise ValidationError(
                "reduced matrix R(0) is not positive definite") from exc
        pack = {"R": R, "R0": R0}
        pack["Rdot"] = np.array([[_sderiv(R[i, j]) for j in range(n)]
                                 for i in range(n)], dtype=object)
        if self.diagonal:
            pack["recip"] = [
                _series.reciprocal(R[i, i].truncate(order))
                for i in range(n)]
        # analytic drift part: Tr(R^-1 R')/2 (+ weight * alpha')
        drift = _trace_solve(R, pack["Rdot"], order) * 0.5
        if self._dalpha is not None:
            drift = drift + _expr.taylor(self._dalpha, 0.0, order) * \
                float(self.weight)
        pack["drift_analytic"] = drift
        self._packs[order] = pack
        return pack


def _is_zero_expr(e) -> bool:
    return isinstance(e, _expr.Num) and e.value == 0


def _parse(e):
    if isinstance(e, str):
        return _expr.parse(e)
    if isinstance(e, numbers.Number):
        return _expr.Num(float(e))
    return e


# -- matrix series helpers ---------------------------------------------------

def _mat_coeff_stack(M: np.ndarray, order: int) -> np.ndarray:
    n = M.shape[0]
    out = np.zeros((order + 1, n, n))
    for i in range(n):
        for j in range(n):
            s = M[i, j]
            if isinstance(s, Series):
                m = min(order, s.order)
                out[: m + 1, i, j] = s.coeffs[: m + 1].real
            else:
                out[0, i, j] = float(s)
    return out


def _trace_solve(A: np.ndarray, B: np.ndarray, order: int) -> Series:
    """Trace of ``A(t)^-1 B(t)`` as a series, by coefficient recursion."""
    Ac = _mat_coeff_stack(A, order)
    Bc = _mat_coeff_stack(B, order)
    n = Ac.shape[1]
    X = np.zeros_like(Bc)
    for k in range(order + 1):
        rhs = Bc[k].copy()
        for j in range(1, k + 1):
            rhs -= Ac[j] @ X[k - j]
        X[k] = np.linalg.solve(Ac[0], rhs)
    return Series([np.trace(X[k]) for k in range(order + 1)], 0.0)


# -- reduced series of the trace quantities ----------------------------------

def _tdrift_series(fam: MetricFamily, order: int) -> Series:
    """``t * [drift + weight alpha']`` with the exact constant ``dim_p``."""
    pack = fam.pack(order)
    d = pack["drift_analytic"].truncate(order)
    c = np.zeros(order + 1)
    c[0] = fam.dim_p
    c[1:] = d.coeffs[: order]
    return Series(c, 0.0)


def _tpot_series(fam: MetricFamily, a_s: Series, order: int) -> Series:
    """``t * V(t, t a(t))`` as a series; constant term ``dim_p * a(0)``."""
    pack = fam.pack(order)
    t_s = _series.identity(order)
    ta = (t_s * a_s).truncate(order)
    n, p = fam.n, fam.dim_p
    if fam.diagonal:
        acc = _series.constant(0.0, order)
        for i in range(n):
            Ri = pack["R"][i, i]
            Ridot = pack["Rdot"][i, i].truncate(order)
            comp = _series.compose(Ri.truncate(order), ta)
            comp_dot = _series.compose(Ridot, ta)
            if i < p:
                q = 2.0 * a_s * comp + t_s * a_s * a_s * comp_dot
            else:
                q = t_s * comp_dot
            acc = acc + q * pack["recip"][i]
        return 0.5 * acc
    # block family: Qtilde = t * D^-1 P'(ta) D^-1, then Tr(R^-1 Qtilde)
    Q = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            comp = _series.compose(pack["R"][i, j].truncate(order), ta)
            comp_dot = _series.compose(
                pack["Rdot"][i, j].truncate(order), ta)
            npp = (i < p) + (j < p)
            if npp == 2:
                Q[i, j] = 2.0 * a_s * comp + t_s * a_s * a_s * comp_dot
            elif npp == 1:
                Q[i, j] = comp + t_s * a_s * comp_dot
            else:
                Q[i, j] = t_s * comp_dot
    return 0.5 * _trace_solve(pack["R"], Q, order)


def _zpot_series(fam: MetricFamily, a_s: Series, order: int) -> Series:
    """``t^2 * V2(t, t a(t))`` for diagonal families; constant ``dim_p``."""
    if not fam.diagonal:
        raise ValidationError(
            "second radial derivative reduction supports diagonal "
            "families only")
    # one extra order so the second derivative is exact through `order`
    pack = fam.pack(order + 1)
    a_s = a_s.truncate(order)
    t_s = _series.identity(order)
    ta = (t_s * a_s).truncate(order)
    n, p = fam.n, fam.dim_p
    acc = _series.constant(0.0, order)
    for i in range(n):
        Ri = pack["R"][i, i]
        Ridot = pack["Rdot"][i, i]
        Riddot = _sderiv(Ridot).truncate(order)
        comp = _series.compose(Ri.truncate(order), ta)
        comp_d = _series.compose(Ridot.truncate(order), ta)
        comp_dd = _series.compose(Riddot, ta)
        if i < p:
            q = 2.0 * comp + 4.0 * t_s * a_s * comp_d + \
                t_s * t_s * a_s * a_s * comp_dd
        else:
            q = t_s * t_s * comp_dd
        acc = acc + q * pack["recip"][i].truncate(order)
    return 0.5 * acc


def _w_series(fam: MetricFamily, a_s: Series, u_s: Series,
              order: int) -> Series:
    """``t^2 (u' + (p+2) u / t)`` for the harmonic reduction."""
    p = fam.dim_p
    t_s = _series.identity(order)
    tpot = _tpot_series(fam, a_s, order)
    tdrift = _tdrift_series(fam, order)
    return (tpot - float(p) * a_s) - (tdrift - float(p)) * (a_s + t_s * u_s)


def _peel2(w: Series, order: int, where: str) -> Series:
    """Drop two leading coefficients after checking they are residual."""
    scale = 1.0 + float(np.abs(w.coeffs).max())
    if abs(w.coeffs[0]) > _STRUCT_TOL * scale or \
            abs(w.coeffs[1]) > _STRUCT_TOL * scale:
        raise StructureError(
            f"{where}: nonzero residue at the pole "
            f"(c0={w.coeffs[0]:.3e}, c1={w.coeffs[1]:.3e}); odd low-order "
            "metric data does not cancel, no analytic reduction exists")
    return Series(w.coeffs[2:], 0.0)


def _check_structure(fam: MetricFamily, with_z: bool):
    for a0, u0 in ((0.83, 0.41), (-0.37, 0.9)):
        a_s = _series.constant(a0, 8)
        u_s = _series.constant(u0, 8)
        _peel2(_w_series(fam, a_s, u_s, 8), 8, "harmonic reduction")
        if with_z:
            z = _zpot_series(fam, a_s, 8)
            td = _tdrift_series(fam, 8)
            t_s = _series.identity(8)
            wf = (z - float(fam.dim_p)) * a_s - \
                (td - float(fam.dim_p)) * (a_s + t_s * u_s)
            _peel2(wf, 8, "tension linearization")


def check_structure(fam: MetricFamily):
    """Probe the pole cancellations needed by the analytic reductions.

    Raises StructureError when odd low-order metric data leaves a residue
    (the tension-linearization probe runs only for diagonal families, the
    only case where the coupled reduction is offered).
    """
    _check_structure(fam, with_z=fam.diagonal)


# -- pointwise trace quantities ----------------------------------------------

def _resolve_path(fam: MetricFamily, t: float, force_path):
    if force_path not in (None, "direct", "series"):
        raise ValidationError(f"unknown path {force_path!r}")
    if force_path is not None:
        return force_path
    return "direct" if t >= fam.t_switch else "series"


def trace_drift(fam: MetricFamily, t: float,
                force_path: Optional[str] = None) -> float:
    """``Tr(P^-1 P')/2 + weight alpha'`` at ``t > 0``.

    Uses direct linear solves at moderate ``t`` and the pole-peeled series
    below ``t_switch``; ``force_path`` pins one branch for cross-checks.
    """
    if t <= 0:
        raise ValidationError("trace quantities need t > 0")
    path = _resolve_path(fam, t, force_path)
    if path == "direct":
        val = 0.5 * float(np.trace(np.linalg.solve(
            fam.P_at(t), fam.Pdot_at(t))))
        return val + fam.weight * fam.alpha_dot_at(t)
    td = _tdrift_series(fam, _FLOAT_SERIES_ORDER)
    return float(_series.eval_truncated(td, t).value) / t


def trace_potential(fam: MetricFamily, t: float, rho: float,
                    force_path: Optional[str] = None) -> float:
    """``Tr(P(t)^-1 dP/drho)/2`` at radius ``rho``; pole ``dim_p rho/t^2``."""
    if t <= 0:
        raise ValidationError("trace quantities need t > 0")
    path = _resolve_path(fam, t, force_path)
    if path == "direct":
        return 0.5 * float(np.trace(np.linalg.solve(
            fam.P_at(t), fam.Pdot_at(rho))))
    a_s = _series.constant(rho / t, _FLOAT_SERIES_ORDER)
    tp = _tpot_series(fam, a_s, _FLOAT_SERIES_ORDER)
    return float(_series.eval_truncated(tp, t).value) / t


def trace_potential2(fam: MetricFamily, t: float, rho: float,
                     force_path: Optional[str] = None) -> float:
    """``Tr(P(t)^-1 d^2P/drho^2)/2``; diagonal families only."""
    if t <= 0:
        raise ValidationError("trace quantities need t > 0")
    if not fam.diagonal:
        raise ValidationError(
            "second radial derivative reduction supports diagonal "
            "families only")
    path = _resolve_path(fam, t, force_path)
    if path == "direct":
        return 0.5 * float(np.trace(np.linalg.solve(
            fam.P_at(t), fam.Pddot_at(rho))))
    a_s = _series.constant(rho / t, _FLOAT_SERIES_ORDER)
    zp = _zpot_series(fam, a_s, _FLOAT_SERIES_ORDER)
    return float(_series.eval_truncated(zp, t).value) / (t * t)


# -- assembled singular problems ----------------------------------------------

def assemble_harmonic(fam: MetricFamily, v: float,
                      t_end: float) -> SingularIVP:
    """Singular IVP for the profile ``r = t a(t)`` with ``r'(0) = v``.

    State ``(a, u)`` with ``u = a'``; the singular part is ``(0, -(p+2)u)``
    so the slope ``v`` is a free shooting parameter.  Raises StructureError
    when the family has no analytic reduction at the pole.
    """
    p = fam.dim_p
    fam.pack(8)
    _check_structure(fam, with_z=False)

    def m_sing(y):
        y = np.asarray(y).reshape(-1)
        if y.dtype == object:
            return np.array([y[0] * 0.0, -(p + 2.0) * y[1]], dtype=object)
        return np.array([0.0, -(p + 2.0) * float(y[1])])

    def m_reg(t, y):
        if isinstance(t, Series):
            n = _time_jet_order(t)
            m = n + 2
            a_s = _as_series(y[0], m)
            u_s = _as_series(y[1], m)
            w = _w_series(fam, a_s, u_s, m)
            reg_u = _peel2(w, m, "harmonic reduction")
            return np.array([u_s.truncate(n), reg_u], dtype=object)
        a, u = float(y[0]), float(y[1])
        if t >= fam.t_switch:
            V = trace_potential(fam, t, t * a, force_path="direct")
            d = trace_drift(fam, t, force_path="direct") - p / t
            return np.array([u, (V - p * a / t - d * (a + t * u)) / t])
        a_s = _series.constant(a, _FLOAT_SERIES_ORDER)
        u_s = _series.constant(u, _FLOAT_SERIES_ORDER)
        w = _w_series(fam, a_s, u_s, _FLOAT_SERIES_ORDER)
        reg = _peel2(w, _FLOAT_SERIES_ORDER, "harmonic reduction")
        return np.array([u, float(_series.eval_truncated(reg, t).value)])

    meta = {"kind": "harmonic", "family": fam, "v": float(v)}
    return SingularIVP(m_sing, m_reg, [float(v), 0.0], t_end,
                       jet_capable=True, meta=meta)


def assemble_biharmonic(fam: MetricFamily, v: float, w: float,
                        t_end: float) -> SingularIVP:
    """Coupled profile/tension system with ``r'(0) = v``, ``F'(0) = w``.

    State ``(a, u_a, b, u_b)`` for ``r = t a``, ``F = t b``; the tension
    equation is the harmonic one forced by ``F``, and ``F`` satisfies the
    linearization of the potential along the profile.  Diagonal families
    only.
    """
    if not fam.diagonal:
        raise ValidationError(
            "biharmonic reduction supports diagonal families only")
    p = fam.dim_p
    fam.pack(8)
    _check_structure(fam, with_z=True)

    def m_sing(y):
        y = np.asarray(y).reshape(-1)
        if y.dtype == object:
            return np.array([y[0] * 0.0, -(p + 2.0) * y[1],
                             y[2] * 0.0, -(p + 2.0) * y[3]], dtype=object)
        return np.array([0.0, -(p + 2.0) * float(y[1]),
                         0.0, -(p + 2.0) * float(y[3])])

    def wf_series(a_s, b_s, ub_s, order):
        t_s = _series.identity(order)
        z = _zpot_series(fam, a_s, order)
        td = _tdrift_series(fam, order)
        return (z - float(p)) * b_s - (td - float(p)) * (b_s + t_s * ub_s)

    def m_reg(t, y):
        if isinstance(t, Series):
            n = _time_jet_order(t)
            m = n + 2
            a_s = _as_series(y[0], m)
            ua_s = _as_series(y[1], m)
            b_s = _as_series(y[2], m)
            ub_s = _as_series(y[3], m)
            w_a = _w_series(fam, a_s, ua_s, m)
            reg_a = _peel2(w_a, m, "harmonic reduction") + b_s.truncate(n)
            w_b = wf_series(a_s, b_s, ub_s, m)
            reg_b = _peel2(w_b, m, "tension linearization")
            return np.array([ua_s.truncate(n), reg_a,
                             ub_s.truncate(n), reg_b], dtype=object)
        a, ua, b, ub = (float(y[i]) for i in range(4))
        if t >= fam.t_switch:
            V = trace_potential(fam, t, t * a, force_path="direct")
            V2 = trace_potential2(fam, t, t * a, force_path="direct")
            d = trace_drift(fam, t, force_path="direct") - p / t
            reg_a = (V - p * a / t - d * (a + t * ua)) / t + b
            reg_b = ((V2 - p / (t * t)) * t * b - d * (b + t * ub)) / t
            return np.array([ua, reg_a, ub, reg_b])
        a_s = _series.constant(a, _FLOAT_SERIES_ORDER)
        ua_s = _series.constant(ua, _FLOAT_SERIES_ORDER)
        b_s = _series.constant(b, _FLOAT_SERIES_ORDER)
        ub_s = _series.constant(ub, _FLOAT_SERIES_ORDER)
        w_a = _peel2(_w_series(fam, a_s, ua_s, _FLOAT_SERIES_ORDER),
                     _FLOAT_SERIES_ORDER, "harmonic reduction")
        w_b = _peel2(wf_series(a_s, b_s, ub_s, _FLOAT_SERIES_ORDER),
                     _FLOAT_SERIES_ORDER, "tension linearization")
        return np.array([ua, float(_series.eval_truncated(w_a, t).value) + b,
                         ub, float(_series.eval_truncated(w_b, t).value)])

    meta = {"kind": "biharmonic", "family": fam,
            "v": float(v), "w": float(w)}
    return SingularIVP(m_sing, m_reg, [float(v), 0.0, float(w), 0.0], t_end,
                       jet_capable=True, meta=meta)


# -- solutions ----------------------------------------------------------------

def recover_r(traj, t: float) -> float:
    """Profile value ``r(t) = t a(t)`` from a harmonic/biharmonic state."""
    return float(t) * float(traj.value(t)[0])


class HarmonicSolution:
    """Profile wrapper around a solved harmonic reduction trajectory."""

    def __init__(self, fam: MetricFamily, traj):
        self.family = fam
        self.traj = traj
        self.v = traj.problem.meta.get("v")
        self.t_end = traj.problem.t_end

    def r(self, t: float) -> float:
        return float(t) * float(self.traj.value(t)[0])

    def rdot(self, t: float) -> float:
        a, u = self.traj.value(t)
        return float(a + t * u)

    def rddot(self, t: float) -> float:
        y = self.traj.value(t)
        udot = self.traj.problem.rhs(float(t), y)[1]
        return float(2.0 * y[1] + t * udot)

    def residual(self, t: float) -> float:
        return tension_residual(self.family, t, self.r(t), self.rdot(t),
                                self.rddot(t))


class BiharmonicSolution:
    """Profile and tension wrapper for the coupled reduction."""

    def __init__(self, fam: MetricFamily, traj):
        self.family = fam
        self.traj = traj
        self.v = traj.problem.meta.get("v")
        self.w = traj.problem.meta.get("w")
        self.t_end = traj.problem.t_end

    def r(self, t: float) -> float:
        return float(t) * float(self.traj.value(t)[0])

    def rdot(self, t: float) -> float:
        y = self.traj.value(t)
        return float(y[0] + t * y[1])

    def rddot(self, t: float) -> float:
        y = self.traj.value(t)
        dy = self.traj.problem.rhs(float(t), y)
        return float(2.0 * y[1] + t * dy[1])

    def F(self, t: float) -> float:
        return float(t) * float(self.traj.value(t)[2])

    def Fdot(self, t: float) -> float:
        y = self.traj.value(t)
        return float(y[2] + t * y[3])

    def Fddot(self, t: float) -> float:
        y = self.traj.value(t)
        dy = self.traj.problem.rhs(float(t), y)
        return float(2.0 * y[3] + t * dy[3])

    def residuals(self, t: float):
        r, rd, rdd = self.r(t), self.rdot(t), self.rddot(t)
        return biharmonic_residual(self.family, t, r, rd, rdd,
                                   self.F(t), self.Fdot(t), self.Fddot(t))


def solve_harmonic(fam: MetricFamily, v: float, t_end: float, *,
                   tol: float = 1e-10, order: int = 10,
                   t_max: float = 0.1) -> HarmonicSolution:
    p = assemble_harmonic(fam, v, t_end)
    traj = _solve_singular(p, tol=tol, order=order, t_max=t_max)
    return HarmonicSolution(fam, traj)


def solve_biharmonic(fam: MetricFamily, v: float, w: float, t_end: float, *,
                     tol: float = 1e-10, order: int = 10,
                     t_max: float = 0.1) -> BiharmonicSolution:
    p = assemble_biharmonic(fam, v, w, t_end)
    traj = _solve_singular(p, tol=tol, order=order, t_max=t_max)
    return BiharmonicSolution(fam, traj)


# -- residual measurements -----------------------------------------------------

def tension_residual(fam: MetricFamily, t: float, r: float, rdot: float,
                     rddot: float) -> float:
    """``r'' + (drift + weight alpha') r' - V(t, r)``, signed."""
    D = trace_drift(fam, t)
    V = trace_potential(fam, t, r)
    return float(rddot + D * rdot - V)


def biharmonic_residual(fam: MetricFamily, t: float, r: float, rdot: float,
                        rddot: float, F: float, Fdot: float,
                        Fddot: float):
    """Residuals of the forced tension and Jacobi equations, signed pair."""
    D = trace_drift(fam, t)
    V = trace_potential(fam, t, r)
    V2 = trace_potential2(fam, t, r)
    res_r = rddot + D * rdot - V - F
    res_f = Fddot + D * Fdot - V2 * F
    return float(res_r), float(res_f)


# -- validation ----------------------------------------------------------------

@dataclass
class MetricReport:
    """Outcome of the pointwise and pole checks on a family."""

    symmetric_ok: bool
    spd_ok: bool
    spd_failures: list
    pole_ok: bool
    drift_measured: dict
    series_available: bool
    verdict: bool


def validate_metric(fam: MetricFamily, n_points: int = 50) -> MetricReport:
    """Positivity on a log grid plus the pole consistency measurement.

    ``t Tr(P^-1 P')/2`` must approach ``dim_p`` as ``t`` drops; it is
    measured directly at ``1e-3`` and ``1e-4`` and compared within
    ``1e-2``, which catches wrong ``dim_p`` declarations and entries with
    the wrong vanishing order even when no series data exists.
    """
    ts = np.geomspace(1e-3, fam.t_validate, n_points)
    sym_ok = True
    failures = []
    for t in ts:
        P = fam.P_at(float(t))
        if np.abs(P - P.T).max() > 1e-10 * (1.0 + np.abs(P).max()):
            sym_ok = False
        try:
            np.linalg.cholesky(0.5 * (P + P.T))
        except np.linalg.LinAlgError:
            failures.append(float(t))
    spd_ok = not failures
    measured = {}
    pole_ok = True
    for t in (1e-3, 1e-4):
        try:
            val = t * 0.5 * float(np.trace(np.linalg.solve(
                fam.P_at(t), fam.Pdot_at(t))))
        except np.linalg.LinAlgError:
            pole_ok = False
            measured[t] = float("nan")
            continue
        measured[t] = val
        if abs(val - fam.dim_p) > 1e-2:
            pole_ok = False
    try:
        fam.pack(4)
        series_ok = True
    except (ValidationError, NumericalError):
        series_ok = False
    return MetricReport(sym_ok, spd_ok, failures, pole_ok, measured,
                        series_ok, sym_ok and spd_ok and pole_ok)


# -- config construction --------------------------------------------------------

_METRIC_KEYS = {"diagonal", "entries", "dim_p", "alpha", "weight",
                "t_validate", "t_switch", "name"}


def build_metric_family(cfg: dict) -> MetricFamily:
    """Build a family from a plain dict (the JSON config shape).

    Exactly one of ``diagonal`` (list of entry expressions) or ``entries``
    (full nested matrix) is required, together with ``dim_p``.  Unknown
    keys are rejected.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("metric section must be an object")
    unknown = set(cfg) - _METRIC_KEYS
    if unknown:
        raise ConfigError(f"unknown metric keys: {sorted(unknown)}")
    if ("diagonal" in cfg) == ("entries" in cfg):
        raise ConfigError("give exactly one of 'diagonal' or 'entries'")
    if "dim_p" not in cfg:
        raise ConfigError("metric needs 'dim_p'")
    dim_p = cfg["dim_p"]
    if not isinstance(dim_p, int) or isinstance(dim_p, bool):
        raise ConfigError("'dim_p' must be an integer")
    kw = {}
    if "alpha" in cfg and cfg["alpha"] is not None:
        if not isinstance(cfg["alpha"], str):
            raise ConfigError("'alpha' must be an expression string")
        kw["alpha"] = cfg["alpha"]
    if "weight" in cfg:
        if not isinstance(cfg["weight"], int) or isinstance(
                cfg["weight"], bool):
            raise ConfigError("'weight' must be an integer")
        kw["weight"] = cfg["weight"]
    for key in ("t_validate", "t_switch"):
        if key in cfg:
            if not isinstance(cfg[key], (int, float)) or isinstance(
                    cfg[key], bool) or cfg[key] <= 0:
                raise ConfigError(f"'{key}' must be a positive number")
            kw[key] = float(cfg[key])
    try:
        if "diagonal" in cfg:
            if not isinstance(cfg["diagonal"], list) or not cfg["diagonal"]:
                raise ConfigError("'diagonal' must be a non-empty list")
            return MetricFamily.from_diagonal(cfg["diagonal"], dim_p, **kw)
        rows = cfg["entries"]
        if not isinstance(rows, list) or not all(
                isinstance(r, list) and len(r) == len(rows) for r in rows):
            raise ConfigError("'entries' must be a square nested list")
        return MetricFamily.from_entries(rows, dim_p, **kw)
    except (_expr.ParseError,) as exc:
        raise ConfigError(f"bad metric expression: {exc}") from exc
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
