"""Root systems, reflection groups, and weight functions.

Concrete families: Z2^n (coordinate sign flips), B2, I2(m) dihedral, and A2
as the m=3 dihedral instance. Roots, simple roots, orbit structure and
multiplicities are fixed per family; groups are generated by breadth-first
closure of the simple reflections.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable

import numpy as np

MATRIX_TOL = 1e-10
GROUP_CAP = 1024


class ConfigError(ValueError):
    """Bad family name, multiplicity count, or parameter range."""


class NumericError(ArithmeticError):
    """Evaluation produced NaN/overflow or an integrator gave up."""


@dataclasses.dataclass(frozen=True, eq=False)
class GroupElement:
    """Orthogonal matrix plus the generator word that produced it.

    word is a tuple of simple-root indices; the matrix equals the product
    of the corresponding simple reflections, left factor first. Elements
    constructed directly from a root carry word=None.
    """

    matrix: np.ndarray
    word: tuple[int, ...] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError("group element matrix must be square")
        if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) > 1e-12:
            raise NumericError("group element matrix is not orthogonal")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=self.matrix.dtype if np.isrealobj(x) else complex)

    def is_identity(self, tol: float = MATRIX_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - np.eye(self.dim))) <= tol)


@dataclasses.dataclass(frozen=True)
class RootSystem:
    """Positive roots with orbit labels and per-orbit multiplicities."""

    family: str
    rank: int
    positive_roots: np.ndarray          # (N, rank)
    simple_indices: tuple[int, ...]     # indices into positive_roots
    orbit_index: tuple[int, ...]        # orbit class per positive root
    orbit_names: tuple[str, ...]
    multiplicities: np.ndarray          # one value per orbit

    def __post_init__(self):
        roots = np.asarray(self.positive_roots, dtype=float)
        mult = np.asarray(self.multiplicities, dtype=float)
        object.__setattr__(self, "positive_roots", roots)
        object.__setattr__(self, "multiplicities", mult)
        if roots.ndim != 2 or roots.shape[1] != self.rank:
            raise ConfigError("positive_roots must be (N, rank)")
        if len(self.simple_indices) != self.rank:
            raise ConfigError("need rank simple roots")
        if mult.shape != (len(self.orbit_names),):
            raise ConfigError(
                "expected %d multiplicities, got %d"
                % (len(self.orbit_names), mult.size)
            )
        if np.any(mult < 0):
            raise ConfigError("multiplicities must be nonnegative")
        simple = roots[list(self.simple_indices)]
        if abs(np.linalg.det(simple)) < 1e-12:
            raise ConfigError("simple roots do not span the space")
        # every positive root must be a nonnegative combination of the
        # simple ones; this is what makes the sign test well defined
        coef = np.linalg.solve(simple.T, roots.T).T
        if np.min(coef) < -1e-10:
            raise ConfigError("a positive root has mixed-sign simple coordinates")

    @property
    def simple_roots(self) -> np.ndarray:
        return self.positive_roots[list(self.simple_indices)]

    def root_multiplicities(self) -> np.ndarray:
        """Multiplicity value for each positive root, in root order."""
        return self.multiplicities[list(self.orbit_index)]

    @property
    def gamma_k(self) -> float:
        return float(np.sum(self.root_multiplicities()))


def _z2n_system(n: int, multiplicities: Iterable[float]) -> RootSystem:
    if not 1 <= n <= 4:
        raise ConfigError("z2n supports 1 <= n <= 4")
    mult = np.atleast_1d(np.asarray(multiplicities, dtype=float))
    if mult.size != n:
        raise ConfigError("z2n with n=%d needs %d multiplicities" % (n, n))
    return RootSystem(
        family="z2n",
        rank=n,
        positive_roots=np.eye(n),
        simple_indices=tuple(range(n)),
        orbit_index=tuple(range(n)),
        orbit_names=tuple("e%d" % (i + 1) for i in range(n)),
        multiplicities=mult,
    )


def _b2_system(multiplicities: Iterable[float]) -> RootSystem:
    mult = np.atleast_1d(np.asarray(multiplicities, dtype=float))
    if mult.size != 2:
        raise ConfigError("b2 needs 2 multiplicities (long, short)")
    roots = np.array([[1.0, -1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    return RootSystem(
        family="b2",
        rank=2,
        positive_roots=roots,
        simple_indices=(0, 1),
        orbit_index=(0, 1, 1, 0),
        orbit_names=("long", "short"),
        multiplicities=mult,
    )


def _i2m_system(m: int, multiplicities: Iterable[float], family: str = "i2m") -> RootSystem:
    if not 2 <= m <= 512:
        raise ConfigError("i2m supports 2 <= m <= 512")
    mult = np.atleast_1d(np.asarray(multiplicities, dtype=float))
    angles = np.arange(m) * np.pi / m
    roots = np.column_stack([np.cos(angles), np.sin(angles)])
    if m % 2 == 1:
        if mult.size != 1:
            raise ConfigError("odd dihedral has one root orbit")
        orbit_index = tuple(0 for _ in range(m))
        names = ("all",)
    else:
        if mult.size != 2:
            raise ConfigError("even dihedral has two root orbits")
        orbit_index = tuple(j % 2 for j in range(m))
        names = ("even", "odd")
    return RootSystem(
        family=family,
        rank=2,
        positive_roots=roots,
        simple_indices=(0, m - 1),
        orbit_index=orbit_index,
        orbit_names=names,
        multiplicities=mult,
    )


def build_root_system(family: str, *, n: int | None = None, m: int | None = None,
                      multiplicities: Iterable[float]) -> RootSystem:
    """Instantiate one of the supported families.

    family: "z2n" (needs n), "b2", "a2", or "i2m" (needs m).
    multiplicities: one value per root orbit of the family.
    """
    fam = family.lower()
    if fam == "z2n":
        if n is None:
            raise ConfigError("z2n needs n")
        return _z2n_system(n, multiplicities)
    if fam == "b2":
        return _b2_system(multiplicities)
    if fam == "a2":
        return _i2m_system(3, multiplicities, family="a2")
    if fam == "i2m":
        if m is None:
            raise ConfigError("i2m needs m")
        return _i2m_system(m, multiplicities)
    raise ConfigError("unknown family %r" % family)


def reflection_matrix(alpha: np.ndarray) -> np.ndarray:
    """Matrix of the reflection across the hyperplane orthogonal to alpha."""
    a = np.asarray(alpha, dtype=float)
    nrm2 = float(a @ a)
    if nrm2 == 0.0:
        raise ConfigError("cannot reflect across the zero vector")
    return np.eye(a.size) - 2.0 * np.outer(a, a) / nrm2


def reflection(alpha: np.ndarray) -> GroupElement:
    return GroupElement(reflection_matrix(alpha))


def generate_group(rs: RootSystem, cap: int = GROUP_CAP) -> tuple[GroupElement, ...]:
    """Breadth-first closure of the simple reflections.

    Deterministic: the identity comes first, then words in length-then-index
    order. Deduplication compares matrices entrywise with tolerance.
    """
    gens = [reflection_matrix(a) for a in rs.simple_roots]
    n = rs.rank
    elems: list[GroupElement] = [GroupElement(np.eye(n), word=())]
    mats = np.eye(n)[None, :, :]
    frontier = [0]
    while frontier:
        new_frontier: list[int] = []
        for idx in frontier:
            base = elems[idx]
            for j, gmat in enumerate(gens):
                cand = base.matrix @ gmat
                if np.min(np.max(np.abs(mats - cand[None, :, :]), axis=(1, 2))) <= MATRIX_TOL:
                    continue
                elems.append(GroupElement(cand, word=(base.word or ()) + (j,)))
                mats = np.concatenate([mats, cand[None, :, :]], axis=0)
                new_frontier.append(len(elems) - 1)
                if len(elems) > cap:
                    raise NumericError("group closure exceeded cap %d" % cap)
        frontier = new_frontier
    return tuple(elems)


def element_index(group: tuple[GroupElement, ...], matrix: np.ndarray,
                  tol: float = MATRIX_TOL) -> int:
    mats = np.stack([g.matrix for g in group])
    dev = np.max(np.abs(mats - np.asarray(matrix)[None, :, :]), axis=(1, 2))
    i = int(np.argmin(dev))
    if dev[i] > tol:
        raise NumericError("matrix not found in group (closest deviation %.2e)" % dev[i])
    return i


def left_action_permutation(group: tuple[GroupElement, ...], s: np.ndarray) -> np.ndarray:
    """Permutation p with p[i] = index of s * group[i]."""
    return np.array([element_index(group, s @ g.matrix) for g in group], dtype=int)


def conjugation_permutation(group: tuple[GroupElement, ...], h: np.ndarray) -> np.ndarray:
    """Permutation p with p[i] = index of h^-1 * group[i] * h."""
    hinv = np.asarray(h).T
    return np.array([element_index(group, hinv @ g.matrix @ h) for g in group], dtype=int)


def dual_basis(rs: RootSystem) -> np.ndarray:
    """Rows lambda_i with <lambda_i, alpha_j> = delta_ij for simple alpha_j."""
    lam = np.linalg.inv(rs.simple_roots.T)
    check = lam @ rs.simple_roots.T
    if np.max(np.abs(check - np.eye(rs.rank))) > 1e-12:
        raise NumericError("dual basis failed its defining identity")
    return lam


def chamber_interior_point(rs: RootSystem) -> np.ndarray:
    """Sum of the dual basis, strictly inside the chamber."""
    return dual_basis(rs).sum(axis=0)


def weight_w_k(rs: RootSystem, x: np.ndarray) -> np.ndarray | float:
    """Product over positive roots of |<root, x>|^(2k). Supports batches.

    Homogeneous of degree 2*gamma_k and invariant under the group.
    """
    xa = np.asarray(x, dtype=float)
    margins = np.abs(xa @ rs.positive_roots.T)
    out = np.prod(margins ** (2.0 * rs.root_multiplicities()), axis=-1)
    if xa.ndim == 1:
        return float(out)
    return out


def orbit_rep_plus(rs: RootSystem, group: tuple[GroupElement, ...],
                   x: np.ndarray) -> np.ndarray:
    """Representative of the orbit of x in the closed chamber.

    Accepts a single vector or a batch (..., rank). The representative
    maximizes the pairing with a fixed interior point, so it is unique up
    to wall ties and idempotent.
    """
    xa = np.asarray(x, dtype=float)
    rho = chamber_interior_point(rs)
    mats = np.stack([g.matrix for g in group])
    gx = np.einsum("gij,...j->...gi", mats, xa)
    scores = gx @ rho
    best = np.argmax(scores, axis=-1)
    rep = np.take_along_axis(gx, best[..., None, None], axis=-2)[..., 0, :]
    if xa.ndim == 1:
        return rep.reshape(-1)
    return rep


def sign_of_root(rs: RootSystem, beta: np.ndarray, tol: float = 1e-8) -> int:
    """+1 for a positive root, -1 for a negative one, error otherwise."""
    b = np.asarray(beta, dtype=float)
    dev_pos = np.min(np.max(np.abs(rs.positive_roots - b[None, :]), axis=1))
    dev_neg = np.min(np.max(np.abs(rs.positive_roots + b[None, :]), axis=1))
    if min(dev_pos, dev_neg) > tol:
        raise ConfigError("vector is not a root of this system")
    coef = np.linalg.solve(rs.simple_roots.T, b)
    if np.all(coef >= -tol):
        return 1
    if np.all(coef <= tol):
        return -1
    raise ConfigError("root has mixed-sign simple coordinates")
