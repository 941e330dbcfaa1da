"""Linear systems with a regular singular point at the origin.

The stored object is the system ``dY/ds + (1/s) A(s) Y = h(s)`` on
``0 < s < rho`` with ``A`` an analytic matrix.  Pulling back along
``s = e^z`` removes the pole: ``dY/dz + A(e^z) Y = e^z h(e^z)`` is regular
on the half-plane ``Re z < log(rho)``, which is where all path integration
happens.  Monodromy matrices are computed by integrating around circles
``s = sigma * e^{i theta}``; at ``sigma = 0`` the circle degenerates and
the monodromy is the exponential ``exp(-2 pi i A(0))``.

Conjugacy invariants are characteristic polynomial coefficients; the
library never asserts conjugacy itself, it only reports the invariants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as _expr
from .errors import RegsingError, ValidationError, NumericalError
from .rk import integrate_adaptive

__all__ = [
    "LinearRSSystem", "MonodromyResult", "fundamental_solution",
    "monodromy_at", "monodromy_generator", "solve_inhomogeneous",
    "conjugacy_invariants", "matrix_exponential",
]

MAX_DIM = 64


def _parse_entry(entry):
    if isinstance(entry, str):
        return _expr.parse(entry)
    if isinstance(entry, _expr.Expr):
        return entry
    if isinstance(entry, (int, float)):
        return _expr.Num(float(entry))
    raise ValidationError(f"matrix entry {entry!r} is not an expression")


@dataclass
class LinearRSSystem:
    """Coefficient data for ``dY/ds + (1/s) A(s) Y = h(s)``.

    Parameters
    ----------
    A : array-like of shape (n, n)
        Entries may be Expr trees, parseable strings, or numbers.  Every
        entry must be analytic at ``s = 0`` (its Taylor expansion there is
        probed at construction).
    h : array-like of shape (n,), optional
        Inhomogeneity; omitted means the zero vector.
    rho : float
        Radius of validity; ``math.inf`` is allowed.
    """

    A: object
    h: object = None
    rho: float = math.inf
    n: int = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=object)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        if not 1 <= n <= MAX_DIM:
            raise ValidationError(
                f"dimension {n} outside supported range 1..{MAX_DIM}")
        self.n = n
        self.A = np.array([[_parse_entry(A[i, j]) for j in range(n)]
                           for i in range(n)], dtype=object)
        if self.h is not None:
            hv = np.asarray(self.h, dtype=object).reshape(-1)
            if hv.shape != (n,):
                raise ValidationError(
                    f"h must have shape ({n},), got {hv.shape}")
            self.h = np.array([_parse_entry(e) for e in hv], dtype=object)
        if not (isinstance(self.rho, (int, float)) and self.rho > 0):
            raise ValidationError(f"rho must be positive, got {self.rho!r}")
        self.rho = float(self.rho)
        # analyticity probe at the origin; rejects hidden poles like 1/t
        for i in range(n):
            for j in range(n):
                try:
                    _expr.taylor(self.A[i, j], 0.0, 4)
                except RegsingError as exc:
                    raise ValidationError(
                        f"A[{i}][{j}] is not analytic at 0: {exc}") from exc

    # -- pointwise evaluation ------------------------------------------------

    def A_at(self, s: complex) -> np.ndarray:
        out = np.empty((self.n, self.n), dtype=complex)
        for i in range(self.n):
            for j in range(self.n):
                out[i, j] = _expr.eval_complex(self.A[i, j], s)
        return out

    def h_at(self, s: complex) -> np.ndarray:
        if self.h is None:
            return np.zeros(self.n, dtype=complex)
        return np.array([_expr.eval_complex(e, s) for e in self.h],
                        dtype=complex)


@dataclass
class MonodromyResult:
    """Monodromy matrix around ``s = sigma`` with diagnostics."""

    sigma: float
    matrix: np.ndarray
    charpoly: np.ndarray
    path_steps: int
    est_error: float


def matrix_exponential(M: np.ndarray) -> np.ndarray:
    """exp(M) by scaling and squaring with a Taylor kernel.

    The argument is scaled until its 1-norm is below 1/2, summed to
    machine precision, then squared back up.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"matrix_exponential needs a square matrix, "
                              f"got shape {M.shape}")
    n = M.shape[0]
    nrm = np.linalg.norm(M, 1)
    if not np.isfinite(nrm):
        raise NumericalError("matrix exponential of non-finite matrix")
    s = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    B = M / (2.0 ** s)
    X = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, 60):
        term = term @ B / k
        X = X + term
        if np.linalg.norm(term, 1) <= 1e-18 * np.linalg.norm(X, 1):
            break
    for _ in range(s):
        X = X @ X
    return X


def monodromy_generator(A0) -> np.ndarray:
    """exp(-2 pi i A0), the monodromy of the frozen-coefficient system."""
    A0 = np.asarray(A0, dtype=complex)
    return matrix_exponential(-2j * math.pi * A0)


def conjugacy_invariants(M) -> np.ndarray:
    """Characteristic polynomial coefficients ``[1, c1, ..., cn]``.

    ``det(x I - M) = x^n + c1 x^(n-1) + ... + cn``, computed by the
    Faddeev-LeVerrier recursion (no eigendecomposition, similarity blind
    by construction).
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got {M.shape}")
    n = M.shape[0]
    if n > MAX_DIM:
        raise ValidationError(f"dimension {n} exceeds cap {MAX_DIM}")
    coeffs = np.empty(n + 1, dtype=complex)
    coeffs[0] = 1.0
    Mk = M.copy()
    eye = np.eye(n)
    for k in range(1, n + 1):
        c = -np.trace(Mk) / k
        coeffs[k] = c
        if k < n:
            Mk = M @ (Mk + c * eye)
    return coeffs


def _check_halfplane(sys: LinearRSSystem, *zs):
    bound = math.log(sys.rho) if math.isfinite(sys.rho) else math.inf
    for z in zs:
        if not complex(z).real < bound:
            raise ValidationError(
                f"path point {z!r} leaves the half-plane Re z < log(rho) "
                f"= {bound!r}")


def fundamental_solution(sys: LinearRSSystem, z0, z1, tol: float = 1e-10
                         ) -> np.ndarray:
    """Fundamental matrix of the log-cover system along a segment.

    Integrates ``dU/dz + A(e^z) U = 0`` with ``U(z0) = I`` along the
    straight segment from ``z0`` to ``z1`` and returns ``U(z1)``.
    """
    z0 = complex(z0)
    z1 = complex(z1)
    _check_halfplane(sys, z0, z1)
    n = sys.n
    if z1 == z0:
        return np.eye(n, dtype=complex)
    dz = z1 - z0

    def rhs(s, u):
        z = z0 + s * dz
        U = u.reshape(n, n)
        return (-dz * (sys.A_at(np.exp(z)) @ U)).ravel()

    y0 = np.eye(n, dtype=complex).ravel()
    res = integrate_adaptive(rhs, 0.0, y0, 1.0, tol, tol)
    return res.ys[-1].reshape(n, n)


def monodromy_at(sys: LinearRSSystem, sigma: float, tol: float = 1e-10
                 ) -> MonodromyResult:
    """Monodromy matrix ``U(sigma, 2 pi)`` of the loop ``s = sigma e^{i th}``.

    For ``sigma = 0`` the loop degenerates and the result is the matrix
    exponential of ``-2 pi i A(0)`` (no integration involved).
    """
    sigma = float(sigma)
    if sigma < 0 or not sigma < sys.rho:
        raise ValidationError(
            f"need 0 <= sigma < rho, got sigma={sigma}, rho={sys.rho}")
    n = sys.n
    if sigma == 0.0:
        M = monodromy_generator(sys.A_at(0.0))
        return MonodromyResult(sigma, M, conjugacy_invariants(M), 0, 0.0)

    def rhs(theta, u):
        U = u.reshape(n, n)
        s = sigma * np.exp(1j * theta)
        return (-1j * (sys.A_at(s) @ U)).ravel()

    y0 = np.eye(n, dtype=complex).ravel()
    res = integrate_adaptive(rhs, 0.0, y0, 2.0 * math.pi, tol, tol)
    M = res.ys[-1].reshape(n, n)
    return MonodromyResult(sigma, M, conjugacy_invariants(M),
                           res.n_accepted, res.est_error)


def solve_inhomogeneous(sys: LinearRSSystem, z0, z1, Y0, tol: float = 1e-10
                        ) -> np.ndarray:
    """Solution of the log-cover inhomogeneous system along a segment.

    Integrates ``dY/dz = -A(e^z) Y + e^z h(e^z)`` from ``Y(z0) = Y0``;
    the quadrature of the source term rides along in the state, no
    fundamental-matrix inversion is performed.
    """
    z0 = complex(z0)
    z1 = complex(z1)
    _check_halfplane(sys, z0, z1)
    Y0 = np.asarray(Y0, dtype=complex).reshape(-1)
    if Y0.shape != (sys.n,):
        raise ValidationError(f"Y0 must have shape ({sys.n},)")
    if z1 == z0:
        return Y0.copy()
    dz = z1 - z0

    def rhs(s, y):
        z = z0 + s * dz
        ez = np.exp(z)
        return dz * (-(sys.A_at(ez) @ y) + ez * sys.h_at(ez))

    res = integrate_adaptive(rhs, 0.0, Y0, 1.0, tol, tol)
    return res.ys[-1]
