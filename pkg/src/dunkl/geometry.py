"""Chamber and cone geometry.

Covers the open Weyl chamber, margin-truncated cones, simplicial cones
spanned by independent generators, and the constructive covering family
v_{p,i} = lambda_i + lambda/p built from the dual basis. Certification of
cone inclusions is sampling plus a Lipschitz safety term, not exact convex
optimization; honest at rank <= 4.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import ndtri
from scipy.stats import qmc

from .rootsys import (
    ConfigError,
    GroupElement,
    NumericError,
    RootSystem,
    dual_basis,
    orbit_rep_plus,
)

MEMBERSHIP_TOL = 1e-12
_SCOPES = ("all_positive", "simple_only")


@dataclasses.dataclass(frozen=True)
class ConeSpec:
    """Margin-truncated cone: <x, alpha> >= delta*|x| for roots in scope."""

    delta: float
    root_scope: str = "all_positive"

    def __post_init__(self):
        if self.delta < 0:
            raise ConfigError("cone margin must be nonnegative")
        if self.root_scope not in _SCOPES:
            raise ConfigError("root_scope must be one of %s" % (_SCOPES,))

    def scope_roots(self, rs: RootSystem) -> np.ndarray:
        if self.root_scope == "simple_only":
            return rs.simple_roots
        return rs.positive_roots


@dataclasses.dataclass(frozen=True)
class Polytope:
    """Open simplicial cone of positive combinations of n independent rows."""

    generators: np.ndarray  # (n, n), row i is v_i
    inverse: np.ndarray = dataclasses.field(init=False)

    def __post_init__(self):
        gen = np.asarray(self.generators, dtype=float)
        if gen.ndim != 2 or gen.shape[0] != gen.shape[1]:
            raise ConfigError("polytope needs n generators of dimension n")
        if abs(np.linalg.det(gen)) < 1e-12:
            raise ConfigError("polytope generators are numerically dependent")
        object.__setattr__(self, "generators", gen)
        object.__setattr__(self, "inverse", np.linalg.inv(gen.T))

    @property
    def dim(self) -> int:
        return self.generators.shape[0]

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        """Coefficients c with x = sum_i c_i v_i; batched over leading axes."""
        xa = np.asarray(x, dtype=float)
        return xa @ self.inverse.T

    def contains(self, x: np.ndarray, tol: float = MEMBERSHIP_TOL):
        c = self.coordinates(x)
        return np.all(c > tol * np.linalg.norm(x, axis=-1, keepdims=True), axis=-1)


def coordinates_in_basis(p: Polytope, x: np.ndarray) -> np.ndarray:
    return p.coordinates(x)


def in_chamber(rs: RootSystem, x: np.ndarray, tol: float = 0.0):
    """True where all simple-root pairings exceed tol."""
    xa = np.asarray(x, dtype=float)
    margins = xa @ rs.simple_roots.T
    return np.all(margins > tol, axis=-1)


def in_cone_delta(rs: RootSystem, spec: ConeSpec, x: np.ndarray):
    """True where <x, alpha> >= delta*|x| - 1e-12 for every scoped root."""
    xa = np.asarray(x, dtype=float)
    margins = xa @ spec.scope_roots(rs).T
    norms = np.linalg.norm(xa, axis=-1, keepdims=True)
    return np.all(margins >= spec.delta * norms - MEMBERSHIP_TOL, axis=-1)


def covering_vectors(rs: RootSystem, p: int) -> np.ndarray:
    """Rows v_{p,i} = lambda_i + (sum_j lambda_j)/p."""
    if p < 1:
        raise ConfigError("covering index must be >= 1")
    lam = dual_basis(rs)
    return lam + lam.sum(axis=0) / p


def nesting_coefficient(n: int, p: int) -> float:
    """Expansion weight of sum_j v_{p+1,j} when writing v_{p,i} in the p+1 basis."""
    return 1.0 / (p * (n + p + 1))


def nesting_matrix_exact(rs: RootSystem, p: int) -> np.ndarray:
    """Exact change of basis M with V_p = M V_{p+1}, rows indexed like v_{p,i}."""
    vp = covering_vectors(rs, p)
    vq = covering_vectors(rs, p + 1)
    return vp @ np.linalg.inv(vq)


def smallest_covering_p(rs: RootSystem, x: np.ndarray, p_max: int = 64) -> int:
    """Exact smallest p with x strictly inside the covering cone for p.

    Membership reduces to a_i > (sum_j a_j)/(p + n) for the simple-root
    pairings a_i, so the threshold solves in closed form.
    """
    a = np.asarray(x, dtype=float) @ rs.simple_roots.T
    if np.min(a) <= 0:
        raise NumericError("point is not interior to the chamber")
    n = rs.rank
    need = float(np.sum(a) / np.min(a)) - n
    p = max(1, int(math.floor(need)) + 1)  # strict: p > need
    if p > p_max:
        raise NumericError("covering index exceeds p_max=%d" % p_max)
    return p


def _cap_mesh_rank1() -> tuple[np.ndarray, float]:
    return np.array([[1.0]]), 0.0


def _cap_mesh_rank2(rs: RootSystem, spec: ConeSpec, min_count: int
                    ) -> tuple[np.ndarray, float]:
    """Exact arc of unit directions with margin >= delta, plus its mesh size."""
    from .rootsys import chamber_interior_point

    center = chamber_interior_point(rs)
    theta_c = math.atan2(center[1], center[0])
    lo, hi = -math.pi, math.pi
    for alpha in spec.scope_roots(rs):
        na = float(np.linalg.norm(alpha))
        if spec.delta > na:
            raise ConfigError("cone is empty: margin exceeds root length")
        width = math.acos(min(1.0, spec.delta / na))
        phi = math.atan2(alpha[1], alpha[0])
        off = math.remainder(phi - theta_c, 2.0 * math.pi)
        lo = max(lo, off - width)
        hi = min(hi, off + width)
    if lo > hi:
        raise ConfigError("cone is empty at delta=%g" % spec.delta)
    count = max(min_count, 2)
    theta = theta_c + np.linspace(lo, hi, count)
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    h = (hi - lo) / (count - 1) if hi > lo else 0.0
    return pts, h


def _cap_mesh_highrank(rs: RootSystem, spec: ConeSpec,
                       group: tuple[GroupElement, ...], min_count: int
                       ) -> tuple[np.ndarray, float]:
    """Quasi-uniform points on the spherical cap via folded low-discrepancy
    normals; mesh size estimated from nearest-neighbor spacing."""
    n = rs.rank
    roots = spec.scope_roots(rs)
    sob = qmc.Sobol(d=n, scramble=False)
    sob.fast_forward(1)  # skip the all-zeros point
    kept: list[np.ndarray] = []
    total = 0
    drawn = 0
    while total < min_count and drawn < 2 ** 25:
        block = sob.random(2 ** 16)
        drawn += block.shape[0]
        z = ndtri(np.clip(block, 1e-12, 1 - 1e-12))
        norms = np.linalg.norm(z, axis=1)
        z = z[norms > 1e-9] / norms[norms > 1e-9][:, None]
        z = orbit_rep_plus(rs, group, z)
        good = np.all(z @ roots.T >= spec.delta, axis=1)
        if np.any(good):
            kept.append(z[good])
            total += int(np.count_nonzero(good))
    if total == 0:
        raise ConfigError("cone is empty at delta=%g" % spec.delta)
    pts = np.concatenate(kept, axis=0)
    nn = cKDTree(pts).query(pts, k=2)[0][:, 1]
    h = float(np.max(nn)) * 1.3  # covering-radius estimate, not a certificate
    return pts, h


def cap_mesh(rs: RootSystem, spec: ConeSpec, group: tuple[GroupElement, ...],
             min_count: int = 100000) -> tuple[np.ndarray, float]:
    """Points of the unit-sphere slice of the cone and a mesh-size bound."""
    if rs.rank == 1:
        return _cap_mesh_rank1()
    if rs.rank == 2:
        return _cap_mesh_rank2(rs, spec, min_count)
    return _cap_mesh_highrank(rs, spec, group, min_count)


def _polish_minimum(pts_best: np.ndarray, W: np.ndarray, rs: RootSystem,
                    spec: ConeSpec, seed: int) -> float:
    """Derivative-free projected descent of min_i (W x)_i on the cap."""
    rng = np.random.default_rng(seed)
    roots = spec.scope_roots(rs)
    cur = pts_best / np.linalg.norm(pts_best)
    cur_val = float(np.min(W @ cur))
    radius = 0.05
    for _ in range(40):
        probes = cur + radius * rng.standard_normal((64, rs.rank))
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        ok = np.all(probes @ roots.T >= spec.delta, axis=1)
        if np.any(ok):
            vals = np.min(probes[ok] @ W.T, axis=1)
            j = int(np.argmin(vals))
            if vals[j] < cur_val:
                cur_val = float(vals[j])
                cur = probes[ok][j]
        radius *= 0.75
    return cur_val


@dataclasses.dataclass(frozen=True)
class CoveringResult:
    """Smallest covering index with a certified membership margin."""

    p0: int
    polytope: Polytope
    margin: float
    samples: int
    details: dict

    def __iter__(self):
        return iter((self.p0, self.polytope, self.margin))


def lemma_covering(rs: RootSystem, delta: float, *,
                   root_scope: str = "all_positive", p_max: int = 64,
                   min_samples: int = 100000, seed: int = 2026,
                   group: tuple[GroupElement, ...] | None = None
                   ) -> CoveringResult:
    """Smallest p whose covering cone contains the whole truncated cone.

    The i-th coordinate functional is linear, so its minimum over the cap is
    lower-bounded by a dense quasi-uniform scan, refined by local descent,
    minus the Lipschitz term max_i |row_i| * h for mesh size h.
    """
    if delta <= 0:
        raise ConfigError("covering requires delta > 0")
    spec = ConeSpec(delta=delta, root_scope=root_scope)
    if group is None and rs.rank >= 3:
        from .rootsys import generate_group
        group = generate_group(rs)
    pts, h = cap_mesh(rs, spec, group if group is not None else (), min_samples)
    for p in range(1, p_max + 1):
        poly = Polytope(generators=covering_vectors(rs, p))
        W = poly.inverse
        coords = pts @ W.T
        mins = np.min(coords, axis=1)
        j = int(np.argmin(mins))
        empirical = float(mins[j])
        if empirical <= 0:
            continue
        polished = _polish_minimum(pts[j], W, rs, spec, seed + p)
        empirical = min(empirical, polished)
        lipschitz = float(np.max(np.linalg.norm(W, axis=1))) * h
        margin = empirical - lipschitz
        if margin > 0:
            details = {
                "empirical_min": empirical,
                "lipschitz_term": lipschitz,
                "mesh_size": h,
                "certified": rs.rank <= 2,
            }
            return CoveringResult(p0=p, polytope=poly, margin=margin,
                                  samples=int(pts.shape[0]), details=details)
    raise NumericError("no covering index up to p_max=%d certifies delta=%g"
                       % (p_max, delta))


def x_star(p: Polytope, x: np.ndarray) -> np.ndarray:
    """Reflect all generator coordinates to nonnegative: sum |c_i| v_i."""
    c = np.abs(p.coordinates(x))
    return c @ p.generators


def h_constant(rs: RootSystem, p: Polytope, *, pinch: float = 8.0,
               samples: int = 20000, seed: int = 2026) -> float:
    """Empirical constant c with <x, alpha> <= c (prod x_i)^(1/n) on the cone.

    Finite only on pinched coordinate regions (all pairwise coordinate ratios
    bounded), so coordinates are drawn log-uniform in [1/pinch, pinch].
    """
    margins = p.generators @ rs.simple_roots.T
    if np.min(margins) <= 0:
        raise NumericError("polytope touches a chamber wall; ratio unbounded")
    rng = np.random.default_rng(seed)
    n = rs.rank
    logs = rng.uniform(-math.log(pinch), math.log(pinch), size=(samples, n))
    coords = np.exp(logs)
    X = coords @ p.generators
    pairings = X @ rs.positive_roots.T
    geo = np.exp(np.mean(logs, axis=1))
    ratios = np.max(pairings, axis=1) / geo
    return float(np.max(ratios))


def sample_cap_directions(rs: RootSystem, group: tuple[GroupElement, ...],
                          spec: ConeSpec, count: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Uniform unit directions inside the truncated cone, by chamber folding."""
    if rs.rank == 1:
        return np.ones((count, 1))
    roots = spec.scope_roots(rs)
    out = np.empty((count, rs.rank))
    have = 0
    tries = 0
    while have < count:
        tries += 1
        if tries > 4000:
            raise NumericError("cone sampling stalled; margin too tight")
        block = rng.standard_normal((max(4 * count, 256), rs.rank))
        norms = np.linalg.norm(block, axis=1)
        block = block[norms > 1e-9] / norms[norms > 1e-9][:, None]
        block = orbit_rep_plus(rs, group, block)
        good = block[np.all(block @ roots.T >= spec.delta, axis=1)]
        take = min(count - have, good.shape[0])
        out[have:have + take] = good[:take]
        have += take
    return out


def sample_polytope_directions(p: Polytope, count: int,
                               rng: np.random.Generator) -> np.ndarray:
    """Unit directions in the open cone: simplex-uniform coordinates, scaled."""
    coords = rng.dirichlet(np.ones(p.dim), size=count)
    coords = np.maximum(coords, 1e-12)
    X = coords @ p.generators
    return X / np.linalg.norm(X, axis=1, keepdims=True)
