"""Tools for ODE systems with a regular singular point.

Subpackages
-----------
expr
    One-variable analytic expressions: parse, differentiate, evaluate,
    Taylor-expand.
series
    Truncated power series arithmetic (the Taylor-mode scalar type).
linear
    Linear systems dY/ds + (1/s) A(s) Y = h(s): fundamental solutions on
    the logarithmic cover, monodromy matrices, conjugacy invariants.
singular
    Nonlinear singular initial value problems dy/dt = M_sing(y)/t + M(t,y):
    admissibility, series bootstrap, adaptive integration, and the
    first-order reduction toolkit.
geometry
    Cohomogeneity-one metric families and the harmonic / biharmonic map
    reductions onto singular initial value problems.
cli
    JSON-config command line front end.
"""

from . import expr, series, linear, singular, geometry, errors
from .errors import (
    RegsingError, ParseError, EvalDomainError, SeriesError,
    AdmissibilityError, NumericalError, StructureError, ValidationError,
    ConfigError,
)

__version__ = "0.1.0"

__all__ = [
    "expr", "series", "linear", "singular", "geometry", "errors",
    "RegsingError", "ParseError", "EvalDomainError", "SeriesError",
    "AdmissibilityError", "NumericalError", "StructureError",
    "ValidationError", "ConfigError",
]
