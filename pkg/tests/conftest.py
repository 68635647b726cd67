"""Shared fixtures: the small root systems used across the suite.

Contexts are built once per session and cached by configuration, since
group generation and the coupling eigendecomposition dominate setup cost
for the dihedral families.
"""

from __future__ import annotations

import numpy as np
import pytest

from dunkl.kernel import EvalContext
from dunkl.rootsys import build_root_system


@pytest.fixture(scope="session")
def ctx_of():
    """Factory with a session cache: ctx_of(family, n=..., m=..., k=(...))."""
    cache: dict = {}

    def build(family: str, *, n: int | None = None, m: int | None = None,
              k: tuple = ()) -> EvalContext:
        key = (family, n, m, tuple(float(v) for v in k))
        if key not in cache:
            rs = build_root_system(family, n=n, m=m, multiplicities=list(k))
            cache[key] = EvalContext.build(rs)
        return cache[key]

    return build


@pytest.fixture(scope="session")
def z21_ctx(ctx_of):
    return ctx_of("z2n", n=1, k=(0.5,))


@pytest.fixture(scope="session")
def z22_ctx(ctx_of):
    return ctx_of("z2n", n=2, k=(0.5, 0.7))


@pytest.fixture(scope="session")
def b2_ctx(ctx_of):
    return ctx_of("b2", k=(1.0, 1.0))


@pytest.fixture(scope="session")
def a2_ctx(ctx_of):
    return ctx_of("a2", k=(0.8,))


@pytest.fixture(scope="session")
def i25_ctx(ctx_of):
    return ctx_of("i2m", m=5, k=(0.3,))


@pytest.fixture()
def rng():
    return np.random.default_rng(2026)
