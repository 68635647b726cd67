"""Normalized oscillatory system along curves: ODE structure, integration,
limit-vector extraction."""

from __future__ import annotations

import math

import numpy as np
import pytest

from dunkl.asymptotics import (
    AdmissibleCurvePair,
    derivative_residuals,
    estimate_v,
    f_normalized,
    integrate_F,
    ode_matrix_A,
)
from dunkl.kernel import EvalContext
from dunkl.kernel1d import e1_series
from dunkl.rootsys import (
    ConfigError,
    build_root_system,
    element_index,
    weight_w_k,
)

_SQ5 = math.sqrt(5.0)
_B2_DIRS = np.array([[2.0, 1.0], [1.9, 1.2]]) / np.array(
    [[_SQ5], [np.linalg.norm([1.9, 1.2])]])


def _ray(dirs, delta=0.3, t_min=1.0):
    return AdmissibleCurvePair(kind="ray", directions=np.asarray(dirs),
                               rotation_rate=0.0, delta=delta, t_min=t_min)


# -------------------------------------------------------------- curve type


def test_curve_validation():
    good = _ray(_B2_DIRS)
    assert good.kind == "ray"
    with pytest.raises(ConfigError):
        AdmissibleCurvePair(kind="spiral", directions=_B2_DIRS,
                            rotation_rate=0.0, delta=0.3)
    with pytest.raises(ConfigError):
        AdmissibleCurvePair(kind="ray", directions=2.0 * _B2_DIRS,
                            rotation_rate=0.0, delta=0.3)
    with pytest.raises(ConfigError):
        AdmissibleCurvePair(kind="ray", directions=_B2_DIRS,
                            rotation_rate=0.1, delta=0.3)
    with pytest.raises(ConfigError):
        AdmissibleCurvePair(kind="rotating_ray", directions=np.ones((2, 1)),
                            rotation_rate=0.05, delta=0.3)
    with pytest.raises(ConfigError):
        AdmissibleCurvePair(kind="ray", directions=_B2_DIRS,
                            rotation_rate=0.0, delta=0.3, t_min=0.0)


def test_curve_kappa_derivative():
    curve = AdmissibleCurvePair(kind="rotating_ray", directions=_B2_DIRS,
                                rotation_rate=0.07, delta=0.2)
    t, h = 9.0, 1e-6
    for side in (0, 1):
        ahead = curve.kappa(t + h)[side]
        behind = curve.kappa(t - h)[side]
        fd = (ahead - behind) / (2.0 * h)
        np.testing.assert_allclose(curve.kappa_prime(t)[side], fd, atol=1e-8)


def test_curve_cone_validation(b2_ctx):
    near_wall = np.array([1.0, 0.001])
    wallward = np.stack([np.array([2.0, 1.0]) / _SQ5,
                         near_wall / np.linalg.norm(near_wall)])
    with pytest.raises(ConfigError):
        _ray(wallward, delta=0.3).validate_in_cone(b2_ctx.rs)


# ------------------------------------------------------------- normalized F


def test_f_normalized_zero_multiplicity():
    rs = build_root_system("b2", multiplicities=(0.0, 0.0))
    ctx = EvalContext.build(rs)
    f = f_normalized(ctx, np.array([3.0, 1.0]), np.array([2.5, 0.5]))
    np.testing.assert_allclose(f.values, 1.0, atol=1e-10)


def test_f_normalized_weight_bound(b2_ctx):
    x = np.array([4.0, 1.5])
    y = np.array([3.0, 1.0])
    f = f_normalized(b2_ctx, x, y)
    bound = math.sqrt(weight_w_k(b2_ctx.rs, x) * weight_w_k(b2_ctx.rs, y))
    assert np.max(np.abs(f.values)) <= bound * (1.0 + 1e-9)


def test_f_normalized_rank_one_pattern(z21_ctx):
    s = math.sqrt(5.0)
    f = f_normalized(z21_ctx, np.array([s]), np.array([s]))
    assert abs(f.values[0]) == pytest.approx(
        5.0 ** 0.5 * abs(e1_series(5j, 0.5)), rel=1e-10)
    assert f.values[1] == pytest.approx(np.conj(f.values[0]), rel=1e-10)


def test_f_normalized_orbit_relabeling(b2_ctx):
    """Replacing y by h y permutes the components by right translation."""
    ctx = b2_ctx
    x = np.array([2.2, 0.9])
    y = np.array([1.8, 0.7])
    base = f_normalized(ctx, x, y).values
    for h in ctx.group[1:4]:
        moved = f_normalized(ctx, x, h.matrix @ y).values
        rperm = [element_index(ctx.group, g.matrix @ h.matrix)
                 for g in ctx.group]
        np.testing.assert_allclose(moved, base[rperm], rtol=1e-9)


# ------------------------------------------------------------- the matrix A


def test_ode_matrix_zero_multiplicity():
    rs = build_root_system("b2", multiplicities=(0.0, 0.0))
    ctx = EvalContext.build(rs)
    A = ode_matrix_A(ctx, _ray(_B2_DIRS), 10.0)
    assert np.max(np.abs(A)) == 0.0


def test_ode_matrix_sparsity_and_ray_coefficient(b2_ctx):
    """Entries sit exactly on the reflection pairs with magnitude 2k/t."""
    ctx = b2_ctx
    t = 10.0
    A = ode_matrix_A(ctx, _ray(_B2_DIRS), t)
    allowed = np.zeros_like(A, dtype=bool)
    rows = np.arange(ctx.order)
    for r in range(len(ctx.rs.positive_roots)):
        cols = ctx.sigma_perms[r]
        allowed[rows, cols] = True
        np.testing.assert_allclose(np.abs(A[rows, cols]), 2.0 * 1.0 / t,
                                   rtol=1e-12)
    assert np.max(np.abs(A[~allowed])) == 0.0


@pytest.mark.parametrize("kind,rate", [("ray", 0.0), ("rotating_ray", 0.05)])
def test_derivative_matches_matrix(b2_ctx, kind, rate):
    curve = AdmissibleCurvePair(kind=kind, directions=_B2_DIRS,
                                rotation_rate=rate, delta=0.3)
    resid = derivative_residuals(b2_ctx, curve, np.array([10.0, 25.0]))
    assert np.max(resid) <= 1e-5


# ------------------------------------------------------------- integration


def test_integrate_constant_at_zero_multiplicity():
    rs = build_root_system("b2", multiplicities=(0.0, 0.0))
    ctx = EvalContext.build(rs)
    out = integrate_F(ctx, _ray(_B2_DIRS), 2.0, 40.0)
    np.testing.assert_allclose(out.values, 1.0, atol=1e-9)


def test_integrate_endpoint_agrees_with_direct(b2_ctx):
    curve = _ray(_B2_DIRS)
    t1 = 60.0
    got = integrate_F(b2_ctx, curve, 8.0, t1).values
    k1, k2 = curve.kappa(t1)
    want = f_normalized(b2_ctx, k1, k2).values
    rel = np.max(np.abs(got - want)) / np.max(np.abs(want))
    assert rel <= 1e-6


def test_integrate_reversibility(b2_ctx):
    curve = _ray(_B2_DIRS)
    k1, k2 = curve.kappa(8.0)
    start = f_normalized(b2_ctx, k1, k2).values
    up = integrate_F(b2_ctx, curve, 8.0, 300.0).values
    back = integrate_F(b2_ctx, curve, 300.0, 8.0, f_init=up).values
    assert np.max(np.abs(back - start)) <= 1e-6 * np.max(np.abs(start))


def test_integrate_rotating_endpoint(b2_ctx):
    curve = AdmissibleCurvePair(kind="rotating_ray", directions=_B2_DIRS,
                                rotation_rate=0.05, delta=0.3)
    t1 = 100.0
    got = integrate_F(b2_ctx, curve, 8.0, t1).values
    k1, k2 = curve.kappa(t1)
    want = f_normalized(b2_ctx, k1, k2).values
    rel = np.max(np.abs(got - want)) / np.max(np.abs(want))
    assert rel <= 1e-4


def test_integrate_orbit_equivariance(b2_ctx):
    """Rotating the second direction by a group element permutes the
    integrated components by right translation."""
    ctx = b2_ctx
    h = ctx.group[3]
    base = integrate_F(ctx, _ray(_B2_DIRS), 8.0, 40.0).values
    moved_dirs = np.stack([_B2_DIRS[0], h.matrix @ _B2_DIRS[1]])
    moved = integrate_F(ctx, _ray(moved_dirs), 8.0, 40.0).values
    rperm = [element_index(ctx.group, g.matrix @ h.matrix)
             for g in ctx.group]
    np.testing.assert_allclose(moved, base[rperm], rtol=1e-7)


# ------------------------------------------------------------------ limits


def test_estimate_v_zero_multiplicity():
    rs = build_root_system("b2", multiplicities=(0.0, 0.0))
    ctx = EvalContext.build(rs)
    v, diag = estimate_v(ctx, _ray(_B2_DIRS), 1e-2)
    assert diag["converged"]
    np.testing.assert_allclose(v.values, 1.0, atol=1e-10)


def test_estimate_v_rank_one_closed_form(z21_ctx):
    """Stationary-phase limit of the rank-one system:
    v_id = Gamma(k+1/2) 2^k / sqrt(pi) * e^{-i k pi/2}, v_sigma its conjugate."""
    k = 0.5
    ray = AdmissibleCurvePair(kind="ray", directions=np.ones((2, 1)),
                              rotation_rate=0.0, delta=0.1)
    v, diag = estimate_v(z21_ctx, ray, 1e-2)
    assert diag["converged"]
    c = math.gamma(k + 0.5) * 2.0 ** k / math.sqrt(math.pi)
    expected = c * np.exp(-1j * k * math.pi / 2.0)
    assert v.values[0] == pytest.approx(expected, abs=2.5e-2)
    assert v.values[1] == pytest.approx(np.conj(expected), abs=2.5e-2)
    # a second grid over the same ray lands on the same limit
    v2, _ = estimate_v(z21_ctx, ray, 1e-2, t_start=11.0)
    assert np.max(np.abs(v2.values - v.values)) <= 2e-2


def test_estimate_v_diagnostics_shape(z21_ctx):
    ray = AdmissibleCurvePair(kind="ray", directions=np.ones((2, 1)),
                              rotation_rate=0.0, delta=0.1)
    v, diag = estimate_v(z21_ctx, ray, 1e-12, max_doublings=3)
    assert not diag["converged"]
    assert diag["tol"] == 1e-12
    assert len(diag["checkpoints"]) == 4
    assert len(diag["table"]) == 4
    assert all(len(row) == 1 + 2 * 2 for row in diag["table"])
    assert diag["norm"] > 0
