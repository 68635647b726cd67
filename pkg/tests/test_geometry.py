"""Chamber geometry, covering cones, and the certified covering search."""

from __future__ import annotations

import math

import numpy as np
import pytest

from dunkl.geometry import (
    ConeSpec,
    Polytope,
    cap_mesh,
    coordinates_in_basis,
    covering_vectors,
    h_constant,
    in_chamber,
    in_cone_delta,
    lemma_covering,
    nesting_coefficient,
    nesting_matrix_exact,
    sample_cap_directions,
    sample_polytope_directions,
    smallest_covering_p,
    x_star,
)
from dunkl.rootsys import (
    ConfigError,
    NumericError,
    build_root_system,
    chamber_interior_point,
    dual_basis,
    generate_group,
)


def test_cone_spec_validation():
    ConeSpec(delta=0.0)
    with pytest.raises(ConfigError):
        ConeSpec(delta=-0.1)
    with pytest.raises(ConfigError):
        ConeSpec(delta=0.1, root_scope="everything")


def test_polytope_validation_and_roundtrip(rng):
    with pytest.raises(ConfigError):
        Polytope(generators=np.array([[1.0, 2.0], [2.0, 4.0]]))
    poly = Polytope(generators=np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(coordinates_in_basis(poly, poly.generators[0]),
                               [1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(
        coordinates_in_basis(poly, poly.generators.sum(axis=0)),
        [1.0, 1.0], atol=1e-14)
    for _ in range(20):
        x = rng.normal(size=2) * 3.0
        c = poly.coordinates(x)
        assert np.linalg.norm(c @ poly.generators - x) <= 1e-10 * np.linalg.norm(x)


def test_chamber_membership_examples():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    assert in_chamber(rs, dual_basis(rs).sum(axis=0))
    # wall point: first simple root pairing vanishes
    wall = np.array([1.0, 1.0])
    assert not in_cone_delta(rs, ConeSpec(delta=0.1), wall)
    # margins for an interior direction, against direct dot products
    x = np.array([1.0, 0.5])
    x = x / np.linalg.norm(x)
    spec = ConeSpec(delta=0.2)
    margins = rs.positive_roots @ x
    assert bool(np.all(margins >= 0.2 - 1e-12)) == bool(
        in_cone_delta(rs, spec, x))


def test_cone_delta_implies_chamber(rng):
    rs = build_root_system("i2m", m=5, multiplicities=(0.3,))
    spec = ConeSpec(delta=0.05)
    X = rng.normal(size=(400, 2))
    inside = in_cone_delta(rs, spec, X)
    chamber = in_chamber(rs, X)
    assert np.all(~inside | chamber)


def test_covering_vectors_shape():
    rs = build_root_system("z2n", n=2, multiplicities=(0.5, 0.7))
    lam = dual_basis(rs)
    v = covering_vectors(rs, 2)
    np.testing.assert_allclose(v, lam + lam.sum(axis=0) / 2.0, atol=1e-14)
    with pytest.raises(ConfigError):
        covering_vectors(rs, 0)


@pytest.mark.parametrize("spec,n", [
    (dict(family="z2n", n=2, multiplicities=(0.5, 0.7)), 2),
    (dict(family="z2n", n=3, multiplicities=(0.5, 0.5, 0.5)), 3),
    (dict(family="b2", multiplicities=(1.0, 1.0)), 2),
])
def test_nesting_coefficients(spec, n):
    """V_p in the V_{p+1} basis is I + c J with c = 1/(p(n+p+1)) >= 0."""
    rs = build_root_system(**spec)
    for p in range(1, 11):
        M = nesting_matrix_exact(rs, p)
        assert np.min(M) >= 0.0
        c = nesting_coefficient(n, p)
        np.testing.assert_allclose(M, np.eye(n) + c * np.ones((n, n)),
                                   atol=1e-12)


def test_smallest_covering_p_matches_membership(rng):
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    center = chamber_interior_point(rs)
    assert smallest_covering_p(rs, center) == 1
    found = 0
    while found < 25:
        x = rng.normal(size=2)
        if not in_chamber(rs, x):
            continue
        found += 1
        p = smallest_covering_p(rs, x)
        assert Polytope(generators=covering_vectors(rs, p)).contains(x)
        if p > 1:
            prev = Polytope(generators=covering_vectors(rs, p - 1))
            assert not prev.contains(x)
    with pytest.raises(NumericError):
        smallest_covering_p(rs, np.array([1.0, -2.0]))


def test_covering_z22_analytic_worst_case():
    rs = build_root_system("z2n", n=2, multiplicities=(0.5, 0.7))
    cov = lemma_covering(rs, 0.5, seed=3)
    assert cov.p0 == 1
    assert cov.margin > 0
    assert cov.details["certified"]
    # worst direction on the arc boundary: (1/2, sqrt(3)/2)
    analytic = (1.0 - math.sqrt(3.0) / 2.0) / 3.0
    assert cov.details["empirical_min"] == pytest.approx(analytic, abs=1e-9)


def test_covering_monotone_in_delta():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    p_values = [lemma_covering(rs, d, min_samples=20000).p0
                for d in (0.3, 0.15, 0.05)]
    assert p_values == sorted(p_values)


def test_covering_rejects_bad_delta():
    rs = build_root_system("z2n", n=2, multiplicities=(0.5, 0.7))
    with pytest.raises(ConfigError):
        lemma_covering(rs, 0.0)
    with pytest.raises(ConfigError):
        lemma_covering(rs, 0.95)  # empty truncated cone


def test_cap_mesh_empty_cone():
    rs = build_root_system("i2m", m=5, multiplicities=(0.3,))
    with pytest.raises(ConfigError):
        cap_mesh(rs, ConeSpec(delta=0.999), (), 1000)


def test_x_star_examples(rng):
    rs = build_root_system("z2n", n=2, multiplicities=(0.5, 0.7))
    poly = Polytope(generators=covering_vectors(rs, 1))
    inside = 0.7 * poly.generators[0] + 1.3 * poly.generators[1]
    np.testing.assert_allclose(x_star(poly, inside), inside, atol=1e-12)
    flipped = -1.0 * poly.generators[0] + 2.0 * poly.generators[1]
    expected = poly.generators[0] + 2.0 * poly.generators[1]
    np.testing.assert_allclose(x_star(poly, flipped), expected, atol=1e-12)
    # with a nonnegative Gram matrix the starred pairing dominates
    assert np.min(poly.generators @ poly.generators.T) >= 0
    for _ in range(50):
        x = rng.normal(size=2) * 2.0
        y = rng.normal(size=2) * 2.0
        assert x_star(poly, x) @ x_star(poly, y) >= x @ y - 1e-12


def test_h_constant_stability():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    poly = lemma_covering(rs, 0.3, min_samples=20000).polytope
    c1 = h_constant(rs, poly, samples=20000, seed=1)
    c2 = h_constant(rs, poly, samples=40000, seed=1)
    assert c1 > 0 and np.isfinite(c1)
    assert c2 / c1 < 1.05
    # scale covariance: both sides homogeneous of degree one
    x = poly.generators.sum(axis=0)
    ratio = np.max(rs.positive_roots @ x)
    coords = poly.coordinates(x)
    assert np.prod(coords) == pytest.approx(1.0, rel=1e-12)
    assert ratio <= c1 * 1.0 + 1e-12


def test_h_constant_wall_rejected():
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    with pytest.raises(NumericError):
        h_constant(rs, Polytope(generators=dual_basis(rs)))


def test_cap_direction_sampling(rng):
    rs = build_root_system("b2", multiplicities=(1.0, 1.0))
    group = generate_group(rs)
    spec = ConeSpec(delta=0.25)
    dirs = sample_cap_directions(rs, group, spec, 300, rng)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    assert np.all(in_cone_delta(rs, spec, dirs))
    rs1 = build_root_system("z2n", n=1, multiplicities=(0.5,))
    np.testing.assert_array_equal(
        sample_cap_directions(rs1, generate_group(rs1), spec, 5, rng),
        np.ones((5, 1)))


def test_polytope_direction_sampling(rng):
    rs = build_root_system("z2n", n=3, multiplicities=(0.5, 0.5, 0.5))
    poly = Polytope(generators=covering_vectors(rs, 2))
    dirs = sample_polytope_directions(poly, 200, rng)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    assert np.all(poly.coordinates(dirs) > 0)
