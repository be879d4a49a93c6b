"""Shared generators for seeded-random test systems.

All generators are deterministic in the supplied rng.  "Well-conditioned"
means every feedthrough block a transform might invert has condition far
below the library's 1e12 gate, so round-trip tests measure algebra, not
luck.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from passivenet.core import StateSpaceSystem


def random_system(rng: np.random.Generator, n: int, m1: int, m2: int,
                  well_conditioned: bool = True) -> StateSpaceSystem:
    """Generic random system; D built as I + small perturbation when
    well_conditioned so D, D11, D22, D21 (square case) all invert safely."""
    m = m1 + m2
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((m, n))
    if well_conditioned:
        D = np.eye(m) + 0.35 * rng.standard_normal((m, m))
        if m1 == m2 and m1 > 0:
            # keep the off-diagonal D21 block invertible too (chain transform)
            D[m1:, :m1] += np.eye(m1)
        sv = np.linalg.svd(D, compute_uv=False)
        if sv[-1] < 0.15:
            return random_system(rng, n, m1, m2, well_conditioned)
    else:
        D = rng.standard_normal((m, m))
    return StateSpaceSystem(A, B, C, D, split=(m1, m2))


def random_conservative(rng: np.random.Generator, n: int, m1: int, m2: int,
                        skew_d: bool = True) -> StateSpaceSystem:
    """Impedance conservative: A skew, C = B^T, D skew (or zero)."""
    m = m1 + m2
    S = rng.standard_normal((n, n))
    A = S - S.T
    B = rng.standard_normal((n, m))
    Ds = rng.standard_normal((m, m)) if skew_d else np.zeros((m, m))
    D = 0.5 * (Ds - Ds.T)
    return StateSpaceSystem(A, B, B.T.copy(), D, split=(m1, m2))


def random_impedance_passive(rng: np.random.Generator, n: int, m1: int, m2: int,
                             strict: bool = True, proper: bool = True) -> StateSpaceSystem:
    """Certified-passive construction: A = skew - W W^T, C = B^T, D = a I + skew."""
    m = m1 + m2
    S = rng.standard_normal((n, n))
    W = rng.standard_normal((n, n))
    A = (S - S.T) - 0.5 * W @ W.T - (0.1 * np.eye(n) if strict else 0.0)
    B = rng.standard_normal((n, m))
    Ds = rng.standard_normal((m, m))
    D = 0.5 * (Ds - Ds.T)
    if proper:
        D = D + (0.5 + rng.uniform(0.0, 1.0)) * np.eye(m)
    return StateSpaceSystem(A, B, B.T.copy(), D, split=(m1, m2))


def random_resistance(rng: np.random.Generator, m1: int, m2: int):
    from passivenet.transforms import ResistanceMatrix

    def spd(k):
        if k == 0:
            return np.zeros((0, 0))
        Q = rng.standard_normal((k, k))
        return Q @ Q.T + (0.5 + rng.uniform()) * np.eye(k)

    return ResistanceMatrix(spd(m1), spd(m2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
