"""Root systems, reflection groups, and chamber bookkeeping."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunkl.rootsys import (
    ConfigError,
    NumericError,
    build_root_system,
    chamber_interior_point,
    conjugation_permutation,
    dual_basis,
    element_index,
    generate_group,
    left_action_permutation,
    orbit_rep_plus,
    reflection_matrix,
    sign_of_root,
    weight_w_k,
)

FAMILY_CASES = [
    (dict(family="z2n", n=1, multiplicities=(0.5,)), 2),
    (dict(family="z2n", n=2, multiplicities=(0.5, 0.7)), 4),
    (dict(family="z2n", n=3, multiplicities=(0.5, 0.5, 0.5)), 8),
    (dict(family="b2", multiplicities=(1.0, 1.0)), 8),
    (dict(family="a2", multiplicities=(0.8,)), 6),
    (dict(family="i2m", m=5, multiplicities=(0.3,)), 10),
    (dict(family="i2m", m=6, multiplicities=(0.3, 0.4)), 12),
]


@pytest.mark.parametrize("spec,order", FAMILY_CASES)
def test_group_order_and_identity_first(spec, order):
    rs = build_root_system(**spec)
    group = generate_group(rs)
    assert len(group) == order
    assert group[0].is_identity()
    # all elements orthogonal and distinct
    for g in group:
        assert np.allclose(g.matrix @ g.matrix.T, np.eye(rs.rank), atol=1e-12)


@pytest.mark.parametrize("spec,gamma", [
    (dict(family="z2n", n=2, multiplicities=(0.5, 0.7)), 1.2),
    (dict(family="z2n", n=3, multiplicities=(0.5, 0.5, 0.5)), 1.5),
    (dict(family="b2", multiplicities=(1.0, 1.0)), 4.0),
    (dict(family="a2", multiplicities=(0.8,)), 2.4),
    (dict(family="i2m", m=5, multiplicities=(0.3,)), 1.5),
    (dict(family="i2m", m=6, multiplicities=(0.3, 0.4)), 2.1),
])
def test_gamma_is_multiplicity_sum(spec, gamma):
    rs = build_root_system(**spec)
    assert rs.gamma_k == pytest.approx(gamma, abs=1e-14)


@pytest.mark.parametrize("spec,_", FAMILY_CASES)
def test_group_stabilizes_root_set(spec, _):
    rs = build_root_system(**spec)
    group = generate_group(rs)
    for g in group:
        for alpha in rs.positive_roots:
            # raises ConfigError if g alpha is not a (signed) root
            assert sign_of_root(rs, g.matrix @ alpha) in (-1, 1)


def test_reflection_matrix_basics():
    R = reflection_matrix(np.array([0.0, 1.0]))
    np.testing.assert_allclose(R, np.diag([1.0, -1.0]), atol=1e-15)
    with pytest.raises(ConfigError):
        reflection_matrix(np.zeros(3))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=4).filter(
    lambda v: float(np.linalg.norm(v)) > 1e-3))
def test_reflection_is_an_involution(alpha):
    a = np.asarray(alpha, dtype=float)
    R = reflection_matrix(a)
    np.testing.assert_allclose(R @ R, np.eye(a.size), atol=1e-12)
    np.testing.assert_allclose(R @ a, -a, atol=1e-10)


def test_dual_basis_b2():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    lam = dual_basis(rs)
    np.testing.assert_allclose(lam, [[1.0, 0.0], [1.0, 1.0]], atol=1e-14)


@pytest.mark.parametrize("spec,_", FAMILY_CASES)
def test_dual_basis_identity(spec, _):
    rs = build_root_system(**spec)
    lam = dual_basis(rs)
    np.testing.assert_allclose(lam @ rs.simple_roots.T, np.eye(rs.rank),
                               atol=1e-12)
    # the chamber midpoint pairs positively with every positive root
    rho = chamber_interior_point(rs)
    assert np.min(rs.positive_roots @ rho) > 0


def test_weight_example_b2():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    assert weight_w_k(rs, np.array([2.0, 1.0])) == pytest.approx(36.0, rel=1e-13)


def test_weight_batch_shape():
    rs = build_root_system("z2n", n=2, multiplicities=(0.5, 0.7))
    X = np.array([[1.0, 2.0], [3.0, 1.0], [0.5, 0.25]])
    w = weight_w_k(rs, X)
    assert w.shape == (3,)
    for row, val in zip(X, w):
        assert weight_w_k(rs, row) == pytest.approx(val, rel=1e-14)


_inv_rng = np.random.default_rng(41)
_INV_SPECS = [dict(family="b2", multiplicities=(1.0, 0.6)),
              dict(family="i2m", m=5, multiplicities=(0.3,)),
              dict(family="z2n", n=3, multiplicities=(0.5, 0.2, 0.9))]


@pytest.mark.parametrize("spec", _INV_SPECS)
def test_weight_group_invariance(spec):
    rs = build_root_system(**spec)
    group = generate_group(rs)
    X = _inv_rng.standard_normal((1000, rs.rank))
    w = weight_w_k(rs, X)
    for g in group:
        wg = weight_w_k(rs, X @ g.matrix.T)
        np.testing.assert_allclose(wg, w, rtol=1e-10)


@pytest.mark.parametrize("spec", _INV_SPECS)
def test_weight_homogeneity(spec):
    rs = build_root_system(**spec)
    x = _inv_rng.standard_normal(rs.rank)
    for s in (0.25, 3.0, 17.5):
        assert weight_w_k(rs, s * x) == pytest.approx(
            s ** (2.0 * rs.gamma_k) * weight_w_k(rs, x), rel=1e-11)


def test_orbit_rep_examples():
    rs = build_root_system("z2n", n=2, multiplicities=(0.5, 0.7))
    group = generate_group(rs)
    np.testing.assert_allclose(
        orbit_rep_plus(rs, group, np.array([-3.0, 2.0])), [3.0, 2.0],
        atol=1e-14)
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    group = generate_group(rs)
    np.testing.assert_allclose(
        orbit_rep_plus(rs, group, np.array([1.0, -4.0])), [4.0, 1.0],
        atol=1e-14)


@pytest.mark.parametrize("spec", _INV_SPECS)
def test_orbit_rep_invariant_and_idempotent(spec):
    rs = build_root_system(**spec)
    group = generate_group(rs)
    X = _inv_rng.standard_normal((200, rs.rank))
    rep = orbit_rep_plus(rs, group, X)
    # in the closed chamber
    assert np.min(rep @ rs.simple_roots.T) >= -1e-12
    # idempotent and constant on orbits
    np.testing.assert_allclose(orbit_rep_plus(rs, group, rep), rep, atol=1e-10)
    for g in group[:4]:
        np.testing.assert_allclose(
            orbit_rep_plus(rs, group, X @ g.matrix.T), rep, atol=1e-10)


def test_sign_of_root_b2():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    sigma = reflection_matrix(np.array([0.0, 1.0]))
    image = sigma @ np.array([1.0, -1.0])
    np.testing.assert_allclose(image, [1.0, 1.0], atol=1e-15)
    assert sign_of_root(rs, image) == 1
    assert sign_of_root(rs, np.array([-1.0, -1.0])) == -1
    with pytest.raises(ConfigError):
        sign_of_root(rs, np.array([2.0, 1.0]))


def test_permutation_bookkeeping(b2_ctx):
    group = b2_ctx.group
    size = len(group)
    ident = left_action_permutation(group, np.eye(2))
    np.testing.assert_array_equal(ident, np.arange(size))
    for g in group:
        perm = left_action_permutation(group, g.matrix)
        conj = conjugation_permutation(group, g.matrix)
        for p in (perm, conj):
            assert sorted(p) == list(range(size))
    with pytest.raises(NumericError):
        element_index(group, 0.5 * np.eye(2))


@pytest.mark.parametrize("bad", [
    dict(family="h3", multiplicities=(1.0,)),
    dict(family="z2n", multiplicities=(1.0,)),              # n missing
    dict(family="z2n", n=5, multiplicities=(1.0,) * 5),     # n out of range
    dict(family="z2n", n=2, multiplicities=(1.0, 1.0, 1.0)),
    dict(family="b2", multiplicities=(1.0,)),
    dict(family="i2m", multiplicities=(0.3,)),               # m missing
    dict(family="i2m", m=1, multiplicities=(0.3,)),
    dict(family="i2m", m=5, multiplicities=(0.3, 0.4)),      # odd m, 2 orbits
    dict(family="b2", multiplicities=(1.0, -0.5)),
])
def test_configuration_errors(bad):
    with pytest.raises(ConfigError):
        build_root_system(**bad)
