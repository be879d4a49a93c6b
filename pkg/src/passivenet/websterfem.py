"""Cubic Hermite FEM for the Webster horn equation on [0, L].

The weak form of  (A(x)/c^2) phi_tt = (A(x) phi_x)_x  with volume-velocity
inputs at both ends produces M w'' + K w = F [i1; i2] on the coefficient
vector of the Hermite space.  The global basis follows the 2n-dimensional
choice: value and derivative degrees of freedom at every interior node plus
a value-only function at each endpoint (no endpoint derivative DOFs), so a
tube split into n elements yields 2n coefficients and a 4n-dimensional
first-order state.

DOF numbering: 0..n are nodal values (0 and n are the endpoint functions),
n+1..2n-1 are the derivative DOFs of interior nodes 1..n-1.  The input
matrix F selects the endpoint values, i.e. rows 0 and n.

The mesh is equidistant.  Geometry arrives as a piecewise-linear area
function sampled at its own nodes, independent of the FEM subdivision;
integrals use 5-point Gauss-Legendre per element (exact for polynomial
degree <= 9, which covers the mass integrand with piecewise-linear area).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .core import StateSpaceSystem
from .errors import BadGeometry, MonotonicityError, OutOfElement, ParseError
from .secondorder import SecondOrderSystem, first_order_realization


@dataclass(frozen=True)
class AreaFunction:
    """Piecewise-linear cross-section area A(x) on strictly increasing nodes."""

    nodes: np.ndarray
    areas: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1)
        areas = np.asarray(self.areas, dtype=float).reshape(-1)
        if nodes.size < 2 or nodes.size != areas.size:
            raise BadGeometry("need at least two (node, area) samples of equal count")
        if nodes[0] != 0.0:
            raise BadGeometry(f"first node must be 0, got {nodes[0]}")
        if np.any(np.diff(nodes) <= 0):
            raise MonotonicityError("area nodes must be strictly increasing")
        if np.any(areas <= 0) or not np.all(np.isfinite(areas)):
            raise BadGeometry("areas must be positive and finite")
        for name, arr in (("nodes", nodes), ("areas", areas)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def length(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.nodes, self.areas)


@dataclass(frozen=True)
class WaveguideModel:
    """Assembled FEM waveguide: conservative two-port plus its matrices."""

    system: StateSpaceSystem
    mass: np.ndarray
    stiffness: np.ndarray
    n_elements: int
    c: float
    rho: float


def hermite_basis_eval(element: tuple[float, float], kind: int, x: float) -> tuple[float, float]:
    """Value and x-derivative of the local cubic Hermite function phi^kind.

    kind 1, 2 are the value functions of the left/right node; kind 3, 4 the
    derivative functions (scaled by the element width h so the DOF is the
    physical slope).
    """
    xl, xr = float(element[0]), float(element[1])
    h = xr - xl
    if h <= 0:
        raise BadGeometry(f"element {element} has nonpositive width")
    tol = 1e-12 * max(1.0, abs(xl), abs(xr))
    if x < xl - tol or x > xr + tol:
        raise OutOfElement(f"x={x} outside element [{xl}, {xr}]")
    l = (x - xl) / h
    if kind == 1:
        return 2 * l**3 - 3 * l**2 + 1, (6 * l**2 - 6 * l) / h
    if kind == 2:
        return -2 * l**3 + 3 * l**2, (-6 * l**2 + 6 * l) / h
    if kind == 3:
        return (l**3 - 2 * l**2 + l) * h, 3 * l**2 - 4 * l + 1
    if kind == 4:
        return (l**3 - l**2) * h, 3 * l**2 - 2 * l
    raise ValueError(f"kind must be 1..4, got {kind}")


def _element_dofs(e: int, n: int) -> list[int]:
    """Global DOF of local (phi1, phi2, phi3, phi4) in element e (1-based); -1 = dropped."""
    left, right = e - 1, e
    d3 = n + left if 1 <= left <= n - 1 else -1
    d4 = n + right if 1 <= right <= n - 1 else -1
    return [left, right, d3, d4]


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


def assemble(area: AreaFunction, n: int, c: float, rho: float) -> WaveguideModel:
    """Assemble the 2n-DOF mass/stiffness pair and its conservative two-port.

    The first-order system uses the singular-stiffness realisation path (K
    always has the constants in its kernel) with the medium density split as
    sqrt(rho) between the input and output maps, which makes B = C^T and the
    system exactly impedance conservative.
    """
    if n < 2:
        raise BadGeometry(f"need at least 2 elements, got {n}")
    if c <= 0 or rho <= 0:
        raise BadGeometry("c and rho must be positive")
    L = area.length
    h = L / n
    ndof = 2 * n
    M = np.zeros((ndof, ndof))
    K = np.zeros((ndof, ndof))
    for e in range(1, n + 1):
        xl, xr = (e - 1) * h, e * h
        gdof = _element_dofs(e, n)
        xq = xl + 0.5 * (_GAUSS_X + 1.0) * h
        wq = 0.5 * h * _GAUSS_W
        a_q = area(xq)
        vals = np.zeros((4, xq.size))
        ders = np.zeros((4, xq.size))
        for kloc in range(4):
            for iq, x in enumerate(xq):
                vals[kloc, iq], ders[kloc, iq] = hermite_basis_eval((xl, xr), kloc + 1, x)
        k1 = a_q / c**2
        k2 = a_q
        for i in range(4):
            gi = gdof[i]
            if gi < 0:
                continue
            for j in range(4):
                gj = gdof[j]
                if gj < 0:
                    continue
                M[gi, gj] += np.sum(wq * k1 * vals[i] * vals[j])
                K[gi, gj] += np.sum(wq * k2 * ders[i] * ders[j])
    M = 0.5 * (M + M.T)
    K = 0.5 * (K + K.T)
    F = np.zeros((ndof, 2))
    F[0, 0] = 1.0
    F[n, 1] = 1.0
    so = SecondOrderSystem(M, np.zeros_like(M), K, F)
    sys0 = first_order_realization(so, method="colocated", split=(1, 1))
    root_rho = np.sqrt(rho)
    system = sys0.replace(B=root_rho * sys0.B, C=root_rho * sys0.C)
    return WaveguideModel(system, M, K, n, float(c), float(rho))


# ---------------------------------------------------------------------------
# geometry file I/O

_HEADER = "chi_m,area_m2"


def load_area_csv(path_or_file) -> AreaFunction:
    """Read an area CSV: header 'chi_m,area_m2', '#' comments ignored."""
    if hasattr(path_or_file, "read"):
        lines = path_or_file.read().splitlines()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    nodes, areas = [], []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line.replace(" ", "") != _HEADER:
                raise ParseError(f"line {lineno}: expected header '{_HEADER}', got {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected two comma-separated fields")
        try:
            nodes.append(float(parts[0]))
            areas.append(float(parts[1]))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if not header_seen:
        raise ParseError("line 1: missing header")
    return AreaFunction(np.array(nodes), np.array(areas))


def save_area_csv(path_or_file, area: AreaFunction) -> None:
    """Write an area CSV that load_area_csv reads back bit-identically."""
    buf = io.StringIO()
    buf.write(_HEADER + "\n")
    for x, a in zip(area.nodes, area.areas):
        buf.write(f"{float(x)!r},{float(a)!r}\n")
    text = buf.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)
