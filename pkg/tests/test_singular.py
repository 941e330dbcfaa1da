"""Singular initial value problems: admissibility, bootstrap, handoff."""

import math
import warnings

import numpy as np
import pytest

from regsing import singular
from regsing.errors import (AdmissibilityError, NumericalError,
                            ValidationError)
from regsing.series import Series


def linear_forced(forcing, y0=0.0, t_end=2.0):
    # dy/dt = -2y/t + forcing(t); m_sing has Jacobian -2 everywhere
    return singular.SingularIVP(lambda y: -2.0 * y,
                                forcing, np.array([y0]), t_end)


def test_jet_capability_probe():
    p = linear_forced(lambda t, y: y * 0.0 + 1.0)
    assert p.jet_capable

    def blackbox(t, y):
        return np.array([float(t) + float(y[0])])

    q = singular.SingularIVP(lambda y: -2.0 * y, blackbox,
                             np.array([0.0]), 1.0)
    assert not q.jet_capable


def test_validation_of_problem_data():
    with pytest.raises(ValidationError):
        singular.SingularIVP(lambda y: y, lambda t, y: y, [], 1.0)
    with pytest.raises(ValidationError):
        singular.SingularIVP(lambda y: y, lambda t, y: y, [1.0], 0.0)


def test_admissibility_pass():
    rep = singular.check_admissibility(linear_forced(lambda t, y: y * 0.0))
    assert rep.verdict
    assert rep.residual_norm == 0.0
    assert rep.offending_h == []
    assert rep.tail_certified          # |J| = 2 < 10
    np.testing.assert_allclose(rep.jacobian, [[-2.0]])


def test_admissibility_residual_failure():
    p = singular.SingularIVP(lambda y: -2.0 * y + 1.0, lambda t, y: y * 0.0,
                             np.array([0.0]), 1.0)
    rep = singular.check_admissibility(p)
    assert not rep.verdict
    assert rep.residual_norm == pytest.approx(1.0)
    with pytest.raises(AdmissibilityError) as ei:
        singular.solve(p)
    assert ei.value.report.residual_norm == pytest.approx(1.0)


@pytest.mark.parametrize("slope,bad", [(1.0, [1]), (2.0, [2])])
def test_admissibility_resonance(slope, bad):
    # J = slope makes h = slope a resonant index
    p = singular.SingularIVP(lambda y: slope * y, lambda t, y: y * 0.0,
                             np.array([0.0]), 1.0)
    rep = singular.check_admissibility(p)
    assert rep.offending_h == bad
    assert not rep.verdict


def test_tail_not_certified_for_large_jacobian():
    p = singular.SingularIVP(lambda y: -40.0 * y, lambda t, y: y * 0.0,
                             np.array([0.0]), 1.0)
    rep = singular.check_admissibility(p, order=10)
    assert rep.verdict            # no resonance: spectrum is negative
    assert not rep.tail_certified  # |J| = 40 >= 10


def test_bootstrap_linear_exact():
    # y' = -2y/t + 1 has the exact solution y = t/3
    coeffs = singular.bootstrap_series(linear_forced(lambda t, y: y * 0.0 + 1.0),
                                       order=6)
    want = np.zeros((7, 1))
    want[1, 0] = 1.0 / 3.0
    np.testing.assert_allclose(coeffs, want, atol=1e-15)


def test_bootstrap_cosine_forcing():
    # y' = -2y/t + cos t: (h+2) y_h = [t^(h-1)] cos t, so
    # y = t/3 - t^3/10 + t^5/168 - ...
    def forcing(t, y):
        if isinstance(t, Series):
            from regsing import series as _s
            return y * 0.0 + _s.cos(t)
        return y * 0.0 + math.cos(t)

    coeffs = singular.bootstrap_series(linear_forced(forcing), order=5)
    want = np.array([0.0, 1.0 / 3.0, 0.0, -0.1, 0.0, 1.0 / 168.0])
    np.testing.assert_allclose(coeffs[:, 0], want, atol=1e-14)


def test_bootstrap_pure_regular_nonlinear():
    # y' = 2y^2, y(0) = 1 solves to 1/(1 - 2t): coefficients 2^h
    p = singular.SingularIVP(lambda y: 0.0 * y, lambda t, y: 2.0 * y * y,
                             np.array([1.0]), 0.4)
    coeffs = singular.bootstrap_series(p, order=8)
    np.testing.assert_allclose(coeffs[:, 0], 2.0 ** np.arange(9), rtol=1e-13)


def test_bootstrap_blackbox_stencils():
    def forcing(t, y):
        return np.array([math.cos(float(t))])

    p = singular.SingularIVP(lambda y: np.array([-2.0 * float(y[0])]),
                             forcing, np.array([0.0]), 1.0,
                             jet_capable=False)
    coeffs = singular.bootstrap_series(p, order=4)
    want = np.array([0.0, 1.0 / 3.0, 0.0, -0.1, 0.0])
    np.testing.assert_allclose(coeffs[:, 0], want, atol=1e-6)
    with pytest.raises(ValidationError):
        singular.bootstrap_series(p, order=5)


def test_choose_handoff_cases():
    # |y_10| = 1 and tol = 1e-10 puts the switch exactly at 0.1
    coeffs = np.zeros((11, 1))
    coeffs[10, 0] = 1.0
    t0, y = singular.choose_handoff(coeffs, 1e-10, t_max=1.0, t_end=4.0)
    assert t0 == pytest.approx(0.1)
    assert y[0] == pytest.approx(0.1 ** 10)

    # geometric growth 2^h: t0 = (tol / 2^10)^(1/10), value is partial sum
    geo = (2.0 ** np.arange(11))[:, None]
    t0, y = singular.choose_handoff(geo, 1e-10, 1.0, 4.0)
    assert t0 == pytest.approx((1e-10 / 2 ** 10) ** 0.1)
    part = sum((2 * t0) ** h for h in range(11))
    assert y[0] == pytest.approx(part, rel=1e-14)

    # zero top coefficient: cap wins, including the t_end/2 clamp
    flat = np.zeros((11, 1))
    flat[0, 0] = 5.0
    t0, y = singular.choose_handoff(flat, 1e-10, 1.0, 0.4)
    assert t0 == pytest.approx(0.2)
    assert y[0] == pytest.approx(5.0)

    # hopeless tail underflows the floor
    bad = np.zeros((2, 1))
    bad[1, 0] = 1e20
    with pytest.raises(NumericalError):
        singular.choose_handoff(bad, 1e-12, 1.0, 4.0)


def test_integrate_respects_default_step_cap():
    p = linear_forced(lambda t, y: y * 0.0 + 1.0)
    traj = singular.integrate(p, 0.05, [0.05 / 3.0], tol=1e-10)
    # max_step = max((100 tol)^(1/4), 1e-3) = 1e-2 for tol = 1e-10
    assert np.max(np.diff(traj.ts)) <= 1e-2 + 1e-12
    assert traj.value(2.0)[0] == pytest.approx(2.0 / 3.0, abs=1e-9)
    with pytest.raises(ValidationError):
        traj.value(0.01)       # no series part below the handoff
    with pytest.raises(ValidationError):
        singular.integrate(p, 3.0, [1.0])  # t0 beyond t_end


def test_solve_piecewise_trajectory():
    p = linear_forced(lambda t, y: y * 0.0 + 1.0)
    traj = singular.solve(p, tol=1e-10)
    h = traj.diagnostics["handoff"]
    assert 0 < h < p.t_end
    # exact solution y = t/3 on both sides of the handoff
    for t in (h / 7, h / 2, h, 1.3 * h, 0.5, 2.0):
        assert traj.value(t)[0] == pytest.approx(t / 3.0, abs=1e-9)
        assert traj.derivative(t)[0] == pytest.approx(1.0 / 3.0, abs=1e-7)
        assert traj.residual(t) < 1e-7
    d = traj.diagnostics
    assert d["series_order"] == 10
    assert d["admissibility"].verdict
    assert d["steps_accepted"] > 0
    assert d["max_residual"] < 1e-8


def test_solve_explicit_handoff_and_bounds():
    p = linear_forced(lambda t, y: y * 0.0 + 1.0)
    traj = singular.solve(p, handoff=0.03)
    assert traj.diagnostics["handoff"] == pytest.approx(0.03)
    assert traj.value(1.0)[0] == pytest.approx(1.0 / 3.0, abs=1e-9)
    with pytest.raises(ValidationError):
        singular.solve(p, handoff=5.0)


def test_solve_blackbox_order_clamp():
    def m_sing(y):
        return np.array([-2.0 * float(y[0])])

    def m_reg(t, y):
        return np.array([1.0 + float(t)])

    p = singular.SingularIVP(m_sing, m_reg, np.array([0.0]), 1.0,
                             jet_capable=False)
    with pytest.warns(RuntimeWarning, match="capped"):
        traj = singular.solve(p, order=10)
    assert traj.diagnostics["series_order"] == 4
    # y' = -2y/t + 1 + t -> y = t/3 + t^2/4
    assert traj.value(0.8)[0] == pytest.approx(0.8 / 3 + 0.16, abs=1e-7)


def test_affine_maps_shapes_and_endpoint():
    aff = singular.AffineSingularMaps(
        C=[[0.0, 1.0], [0.0, -3.0]],
        S=[["0", "0"], ["t", "0"]],
        g=["0", "sin(t)"])
    p = aff.problem([0.0, 0.0], 1.0)
    assert p.jet_capable
    traj = singular.solve(p, tol=1e-10)
    # frozen from an independent high-accuracy run of the same system
    np.testing.assert_allclose(
        traj.value(1.0),
        [0.097728288237128327, 0.19112968359445531], atol=2e-10)
    with pytest.raises(ValidationError):
        singular.AffineSingularMaps(C=[[0.0, 1.0]])
    with pytest.raises(ValidationError):
        singular.AffineSingularMaps(C=[[0.0]], S=[["t", "1"]])


def test_continuation_limit_check():
    good = singular.continuation_limit_check(
        lambda xi, y: y ** 2 + xi * 0.0, [0.0])
    assert good.passed and good.residual == 0.0
    bad = singular.continuation_limit_check(
        lambda xi, y: y + 1.0, [0.0])
    assert not bad.passed
    assert bad.residual == pytest.approx(1.0)


def test_initial_derivative_scalar():
    # 0 = Y' + (2Y - xi)/xi forces Y(0) = 0 and 3 Y'(0) = 1
    f = lambda xi, y: 2.0 * y - xi
    got = singular.initial_derivative(f, [0.0])
    assert got[0] == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValidationError):
        singular.initial_derivative(f, [1.0])   # f(0, 1) = 2 != 0


def test_initial_derivative_singular_linearization():
    # A0 = -1 makes I + A0 vanish
    with pytest.raises(NumericalError):
        singular.initial_derivative(lambda xi, y: -y + xi * 0.0, [0.0])


def test_normalize_shifts_base_point():
    f = lambda xi, y: y - 3.0 + xi
    g = singular.normalize(f, [3.0])
    np.testing.assert_allclose(g(0.0, np.array([0.0])), [0.0])
    np.testing.assert_allclose(g(0.5, np.array([0.25])), f(0.5, np.array([3.25])))


def riccati(xi, y):
    # 0 = Y' + (Y^2 + xi)/xi; hat series 0 = xi w' + w + 1 + xi w^2
    return y * y + xi


def test_reduce_hat_riccati_jets():
    p = singular.reduce_hat(riccati, [0.0], t_end=0.5)
    assert p.jet_capable
    assert p.y0[0] == pytest.approx(-1.0)
    coeffs = singular.bootstrap_series(p, order=4)
    want = [-1.0, -0.5, -1.0 / 3.0, -11.0 / 48.0, -19.0 / 120.0]
    np.testing.assert_allclose(coeffs[:, 0], want, atol=1e-13)


def test_reduce_hat_riccati_blackbox():
    def opaque(xi, y):
        return np.array([float(y[0]) ** 2 + float(xi)])

    p = singular.reduce_hat(opaque, [0.0], t_end=0.5)
    assert not p.jet_capable
    assert p.y0[0] == pytest.approx(-1.0, abs=1e-8)
    coeffs = singular.bootstrap_series(p, order=4)
    want = [-1.0, -0.5, -1.0 / 3.0, -11.0 / 48.0, -19.0 / 120.0]
    # top coefficient comes from a depth-4 difference stencil; accuracy
    # degrades to ~1e-4 there
    np.testing.assert_allclose(coeffs[:, 0], want, atol=1e-4)

    # both reductions describe the same vector field away from the pole
    pj = singular.reduce_hat(riccati, [0.0], t_end=0.5)
    for t in (0.05, 0.2):
        w = np.array([-1.0 + 0.3 * t])
        np.testing.assert_allclose(p.rhs(t, w), pj.rhs(t, w),
                                   rtol=1e-6, atol=1e-6)


def test_reduce_hat_rejects_bad_base_point():
    with pytest.raises(ValidationError):
        singular.reduce_hat(lambda xi, y: y + 1.0, [0.0])


def test_reduce_hat_solution_satisfies_original():
    # transport the hat solution back and check the unreduced equation
    p = singular.reduce_hat(riccati, [0.0], t_end=0.5)
    traj = singular.solve(p, tol=1e-11)
    for t in (0.05, 0.2, 0.45):
        w = traj.value(t)[0]
        dw = traj.derivative(t)[0]
        Y, dY = t * w, w + t * dw
        assert abs(dY + (Y * Y + t) / t) < 1e-8


def test_weakly_nonlinear_pass():
    rep = singular.check_weakly_nonlinear(lambda xi, y: y + xi * y * y, 1)
    assert rep.passed
    assert rep.witness is None


def test_weakly_nonlinear_witnesses():
    def cross(xi, y):
        return np.array([y[0] + y[0] * y[1], y[1]], dtype=object)

    rep = singular.check_weakly_nonlinear(cross, 2)
    assert not rep.passed
    assert rep.witness == "y1*y2"
    assert rep.component == 0

    def cubic(xi, y):
        return np.array([y[0], y[1] + y[0] ** 3], dtype=object)

    rep = singular.check_weakly_nonlinear(cubic, 2)
    assert not rep.passed
    assert rep.witness == "y1^3"
    assert rep.component == 1


def test_weakly_nonlinear_guards():
    with pytest.raises(ValidationError):
        singular.check_weakly_nonlinear(lambda xi, y: y, 1, order=1)

    def opaque(xi, y):
        return np.array([float(y[0])])

    with pytest.raises(ValidationError):
        singular.check_weakly_nonlinear(opaque, 1)
