"""Representation changes between impedance, scattering, hybrid and chain forms.

Flow-inversion family
    full_inversion   FI : swap the whole input and output, G -> G^-1
    top_inversion    TI : swap the top input/output pair
    bottom_inversion BI : swap the bottom pair; BI = TI o FI = FI o TI
    output_flip      OF : exchange the two output rows
    input_flip       IF : exchange the two input columns; IF = FI o OF o FI
    sign_reversal    SR : negate the bottom output row

TI and BI here are the plain partial inversions (no extra sign on the new
input column), which is the unique sign convention making them involutions
and making BI = TI o FI = FI o TI hold exactly; the involution property is
what the rest of the toolkit relies on.

Internal transforms map between continuous and discrete time (Cayley, a.k.a.
Crank-Nicolson / Tustin) or swap low and high frequencies (reciprocal).
External transforms change the port variables: the external Cayley pair
converts impedance to scattering waves against a resistance matrix R, the
hybrid transform partially flow-inverts the bottom port with a sign
reversal, and the chain pair re-partitions a two-port so that cascading
equals Redheffer coupling.

Every inversion is gated on the condition number of the inverted block
(limit 1e12) and reports the block name and condition on failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DiscreteSystem, StateSpaceSystem
from .errors import (
    DimensionMismatch,
    MinusOneEigenvalue,
    NearSpectrum,
    OneEigenvalue,
    SingularBlock,
    SingularFeedthrough,
    SingularGenerator,
    SingularShiftedFeedthrough,
    SplitMismatch,
)

#: Condition-number gate for every block inversion in this module.
COND_LIMIT = 1e12


def _gated_inv(M: np.ndarray, exc_type, name: str) -> np.ndarray:
    """Invert M, raising exc_type with the block name if cond > COND_LIMIT."""
    if M.size == 0:
        return M.reshape(M.shape[1], M.shape[0]).copy()
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > COND_LIMIT:
        cond = np.inf if sv[-1] == 0.0 else sv[0] / sv[-1]
        raise exc_type(f"{name} is numerically singular (condition {cond:.3e})")
    return np.linalg.inv(M)


def _dblocks(sys: StateSpaceSystem):
    m1 = sys.m1
    D = sys.D
    return D[:m1, :m1], D[:m1, m1:], D[m1:, :m1], D[m1:, m1:]


def _bsplit(sys: StateSpaceSystem):
    return sys.B[:, :sys.m1], sys.B[:, sys.m1:]


def _csplit(sys: StateSpaceSystem):
    return sys.C[:sys.m1], sys.C[sys.m1:]


def _require_even_split(sys: StateSpaceSystem, what: str) -> None:
    if sys.m1 != sys.m2:
        raise SplitMismatch(f"{what} needs m1 == m2, got split {sys.split}")


# ---------------------------------------------------------------------------
# flow-inversion family

def full_inversion(sys: StateSpaceSystem) -> StateSpaceSystem:
    """FI: (A - B D^-1 C, B D^-1, -D^-1 C, D^-1); transfer is G(s)^-1."""
    Dinv = _gated_inv(sys.D, SingularFeedthrough, "D")
    return StateSpaceSystem(sys.A - sys.B @ Dinv @ sys.C, sys.B @ Dinv,
                            -Dinv @ sys.C, Dinv, split=sys.split)


def output_flip(sys: StateSpaceSystem) -> StateSpaceSystem:
    """OF: exchange the two output row groups of C and D."""
    _require_even_split(sys, "output flip")
    C1, C2 = _csplit(sys)
    D11, D12, D21, D22 = _dblocks(sys)
    return StateSpaceSystem(sys.A, sys.B, np.vstack([C2, C1]),
                            np.block([[D21, D22], [D11, D12]]), split=sys.split)


def input_flip(sys: StateSpaceSystem) -> StateSpaceSystem:
    """IF: exchange the two input column groups of B and D (= FI o OF o FI)."""
    _require_even_split(sys, "input flip")
    B1, B2 = _bsplit(sys)
    D11, D12, D21, D22 = _dblocks(sys)
    return StateSpaceSystem(sys.A, np.hstack([B2, B1]), sys.C,
                            np.block([[D12, D11], [D22, D21]]), split=sys.split)


def sign_reversal(sys: StateSpaceSystem) -> StateSpaceSystem:
    """SR: negate the bottom output rows of C and D."""
    _require_even_split(sys, "sign reversal")
    C1, C2 = _csplit(sys)
    D11, D12, D21, D22 = _dblocks(sys)
    return StateSpaceSystem(sys.A, sys.B, np.vstack([C1, -C2]),
                            np.block([[D11, D12], [-D21, -D22]]), split=sys.split)


def top_inversion(sys: StateSpaceSystem) -> StateSpaceSystem:
    """TI: exchange the roles of u1 and y1 (partial flow inversion)."""
    D11, D12, D21, D22 = _dblocks(sys)
    X = _gated_inv(D11, SingularBlock, "D11")
    B1, B2 = _bsplit(sys)
    C1, C2 = _csplit(sys)
    A = sys.A - B1 @ X @ C1
    B = np.hstack([B1 @ X, B2 - B1 @ X @ D12])
    C = np.vstack([-X @ C1, C2 - D21 @ X @ C1])
    D = np.block([[X, -X @ D12],
                  [D21 @ X, D22 - D21 @ X @ D12]])
    return StateSpaceSystem(A, B, C, D, split=sys.split)


def bottom_inversion(sys: StateSpaceSystem) -> StateSpaceSystem:
    """BI: exchange the roles of u2 and y2 (= TI o FI = FI o TI)."""
    D11, D12, D21, D22 = _dblocks(sys)
    X = _gated_inv(D22, SingularBlock, "D22")
    B1, B2 = _bsplit(sys)
    C1, C2 = _csplit(sys)
    A = sys.A - B2 @ X @ C2
    B = np.hstack([B1 - B2 @ X @ D21, B2 @ X])
    C = np.vstack([C1 - D12 @ X @ C2, -X @ C2])
    D = np.block([[D11 - D12 @ X @ D21, D12 @ X],
                  [-X @ D21, X]])
    return StateSpaceSystem(A, B, C, D, split=sys.split)


# ---------------------------------------------------------------------------
# internal transforms (time axis)

def internal_cayley(sys: StateSpaceSystem, sigma: float) -> DiscreteSystem:
    """Internal Cayley transform (Crank-Nicolson) with parameter sigma > 0.

    Ad = (sigma + A)(sigma - A)^-1,  Bd = sqrt(2 sigma) (sigma - A)^-1 B,
    Cd = sqrt(2 sigma) C (sigma - A)^-1,  Dd = G(sigma).
    """
    if not sigma > 0:
        raise NearSpectrum(f"sigma must be positive, got {sigma}")
    n = sys.n
    if n == 0:
        return DiscreteSystem(sys.A, sys.B, sys.C, sys.D, sigma=sigma, split=sys.split)
    M = sigma * np.eye(n) - sys.A
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > COND_LIMIT:
        raise NearSpectrum(f"sigma={sigma} is numerically on the spectrum of A")
    root = np.sqrt(2.0 * sigma)
    X = np.linalg.solve(M, np.hstack([sigma * np.eye(n) + sys.A, sys.B]))
    Ad = X[:, :n]
    Bd = root * X[:, n:]
    Cd = root * np.linalg.solve(M.T, sys.C.T).T
    Dd = sys.D + sys.C @ X[:, n:]
    return DiscreteSystem(Ad, Bd, Cd, Dd, sigma=sigma, split=sys.split)


def inverse_internal_cayley(phi: DiscreteSystem) -> StateSpaceSystem:
    """Invert the internal Cayley transform; needs -1 off the spectrum of Ad."""
    n = phi.n
    sigma = phi.sigma
    if n == 0:
        return StateSpaceSystem(phi.Ad, phi.Bd, phi.Cd, phi.Dd, split=phi.split)
    M = np.eye(n) + phi.Ad
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] == 0.0 or sv[0] / sv[-1] > COND_LIMIT:
        raise MinusOneEigenvalue("I + Ad is numerically singular; Cayley inverse undefined")
    root = np.sqrt(2.0 * sigma)
    X = np.linalg.solve(M, np.hstack([np.eye(n) - phi.Ad, phi.Bd]))
    A = -sigma * X[:, :n]
    B = root * X[:, n:]
    C = root * np.linalg.solve(M.T, phi.Cd.T).T
    D = phi.Dd - phi.Cd @ X[:, n:]
    return StateSpaceSystem(A, B, C, D, split=phi.split)


def internal_reciprocal(sys: StateSpaceSystem) -> StateSpaceSystem:
    """Reciprocal system (A^-1, A^-1 B, -C A^-1, G(0)); G_-(s) = G(1/s)."""
    Ainv = _gated_inv(sys.A, SingularGenerator, "A")
    return StateSpaceSystem(Ainv, Ainv @ sys.B, -sys.C @ Ainv,
                            sys.D - sys.C @ Ainv @ sys.B, split=sys.split)


# ---------------------------------------------------------------------------
# external transforms (port variables)

@dataclass(frozen=True)
class ResistanceMatrix:
    """Block-diagonal characteristic resistance diag(R1, R2), each block SPD.

    A zero-width block (empty array) is allowed so one-port loads can sit on
    either side of a coupling.
    """

    R1: np.ndarray
    R2: np.ndarray

    def __post_init__(self):
        for name in ("R1", "R2"):
            M = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if M.size == 0:
                M = M.reshape(0, 0)
            if M.shape[0] != M.shape[1]:
                raise DimensionMismatch(f"{name} must be square, got {M.shape}")
            if M.size:
                if np.linalg.norm(M - M.T, 2) > 1e-12 * (1 + np.linalg.norm(M, 2)):
                    raise DimensionMismatch(f"{name} must be symmetric")
                if np.linalg.eigvalsh(M).min() <= 0:
                    raise DimensionMismatch(f"{name} must be positive definite")
            M = M.copy()
            M.flags.writeable = False
            object.__setattr__(self, name, M)

    @classmethod
    def scalars(cls, r1: float, r2: float | None = None) -> "ResistanceMatrix":
        R2 = np.zeros((0, 0)) if r2 is None else np.array([[float(r2)]])
        return cls(np.array([[float(r1)]]), R2)

    @property
    def split(self) -> tuple[int, int]:
        return self.R1.shape[0], self.R2.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        m = sum(self.split)
        out = np.zeros((m, m))
        m1 = self.split[0]
        out[:m1, :m1] = self.R1
        out[m1:, m1:] = self.R2
        return out

    @property
    def sqrt(self) -> np.ndarray:
        m1 = self.split[0]
        out = np.zeros((sum(self.split),) * 2)
        for sl, blk in ((slice(None, m1), self.R1), (slice(m1, None), self.R2)):
            if blk.size:
                w, V = np.linalg.eigh(blk)
                out[sl, sl] = V @ np.diag(np.sqrt(w)) @ V.T
        return out


def _check_resistance(sys: StateSpaceSystem, R: ResistanceMatrix) -> None:
    if R.split != sys.split:
        raise DimensionMismatch(
            f"resistance split {R.split} does not match system split {sys.split}")


def external_cayley(sys_i: StateSpaceSystem, R: ResistanceMatrix) -> StateSpaceSystem:
    """Impedance system -> scattering system with channel resistance R.

    A = A_i - B_i (D_i + R)^-1 C_i,        B = sqrt(2) B_i (D_i + R)^-1 R^1/2,
    C = sqrt(2) R^1/2 (D_i + R)^-1 C_i,    D = I - 2 R^1/2 (D_i + R)^-1 R^1/2.
    Exists for every impedance passive system and invertible R > 0.
    """
    _check_resistance(sys_i, R)
    X = _gated_inv(sys_i.D + R.matrix, SingularShiftedFeedthrough, "D_i + R")
    Rh = R.sqrt
    A = sys_i.A - sys_i.B @ X @ sys_i.C
    B = np.sqrt(2.0) * sys_i.B @ X @ Rh
    C = np.sqrt(2.0) * Rh @ X @ sys_i.C
    D = np.eye(sys_i.m) - 2.0 * Rh @ X @ Rh
    return StateSpaceSystem(A, B, C, D, split=sys_i.split)


def inverse_external_cayley(sys: StateSpaceSystem, R: ResistanceMatrix) -> StateSpaceSystem:
    """Scattering system -> impedance system; needs I - D invertible."""
    _check_resistance(sys, R)
    X = _gated_inv(np.eye(sys.m) - sys.D, OneEigenvalue, "I - D")
    Rh = R.sqrt
    A = sys.A + sys.B @ X @ sys.C
    B = np.sqrt(2.0) * sys.B @ X @ Rh
    C = np.sqrt(2.0) * Rh @ X @ sys.C
    D = Rh @ X @ (np.eye(sys.m) + sys.D) @ Rh
    return StateSpaceSystem(A, B, C, D, split=sys.split)


def hybrid_transform(sys_i: StateSpaceSystem) -> StateSpaceSystem:
    """Partial flow inversion of the bottom port with a sign reversal.

    The bottom output becomes -u2 (current direction flipped so chained
    circuits satisfy Kirchhoff's laws); needs D_i22 invertible.
    """
    D11, D12, D21, D22 = _dblocks(sys_i)
    X = _gated_inv(D22, SingularBlock, "D22")
    B1, B2 = _bsplit(sys_i)
    C1, C2 = _csplit(sys_i)
    A = sys_i.A - B2 @ X @ C2
    B = np.hstack([B1 - B2 @ X @ D21, B2 @ X])
    C = np.vstack([C1 - D12 @ X @ C2, X @ C2])
    D = np.block([[D11 - D12 @ X @ D21, D12 @ X],
                  [X @ D21, -X]])
    return StateSpaceSystem(A, B, C, D, split=sys_i.split)


def inverse_hybrid(sys_h: StateSpaceSystem) -> StateSpaceSystem:
    """Undo the hybrid transform (derived once by the same algebra backwards).

    Solving the hybrid system's equations for the original (v2 input,
    -i2 output) pair gives a bottom inversion with the matching signs;
    validated by round-trip tests rather than any printed formula.
    """
    D11, D12, D21, D22 = _dblocks(sys_h)
    X = _gated_inv(D22, SingularBlock, "D22")
    B1, B2 = _bsplit(sys_h)
    C1, C2 = _csplit(sys_h)
    A = sys_h.A - B2 @ X @ C2
    B = np.hstack([B1 - B2 @ X @ D21, -B2 @ X])
    C = np.vstack([C1 - D12 @ X @ C2, -X @ C2])
    D = np.block([[D11 - D12 @ X @ D21, -D12 @ X],
                  [-X @ D21, -X]])
    return StateSpaceSystem(A, B, C, D, split=sys_h.split)


def chain_transform(sys: StateSpaceSystem) -> StateSpaceSystem:
    """Chain form: cascading chains equals Redheffer coupling.

    Needs m1 == m2 and D21 invertible:
        A_c = A - B1 D21^-1 C2
        B_c = [B2 - B1 D21^-1 D22,  B1 D21^-1]
        C_c = [C1 - D11 D21^-1 C2; -D21^-1 C2]
        D_c = [[D12 - D11 D21^-1 D22, D11 D21^-1], [-D21^-1 D22, D21^-1]]
    """
    _require_even_split(sys, "chain transform")
    D11, D12, D21, D22 = _dblocks(sys)
    X = _gated_inv(D21, SingularBlock, "D21")
    B1, B2 = _bsplit(sys)
    C1, C2 = _csplit(sys)
    A = sys.A - B1 @ X @ C2
    B = np.hstack([B2 - B1 @ X @ D22, B1 @ X])
    C = np.vstack([C1 - D11 @ X @ C2, -X @ C2])
    D = np.block([[D12 - D11 @ X @ D22, D11 @ X],
                  [-X @ D22, X]])
    return StateSpaceSystem(A, B, C, D, split=sys.split)


def inverse_chain(sys_c: StateSpaceSystem) -> StateSpaceSystem:
    """Undo the chain transform; needs the chain system's D22 invertible."""
    _require_even_split(sys_c, "inverse chain transform")
    D11, D12, D21, D22 = _dblocks(sys_c)
    X = _gated_inv(D22, SingularBlock, "D22")
    B1, B2 = _bsplit(sys_c)
    C1, C2 = _csplit(sys_c)
    A = sys_c.A - B2 @ X @ C2
    B = np.hstack([B2 @ X, B1 - B2 @ X @ D21])
    C = np.vstack([C1 - D12 @ X @ C2, -X @ C2])
    D = np.block([[D12 @ X, D11 - D12 @ X @ D21],
                  [X, -X @ D21]])
    return StateSpaceSystem(A, B, C, D, split=sys_c.split)
