"""End-to-end applications: Butterworth pi-ladder and terminated waveguide.

Butterworth
-----------
Two lossless LC pi-circuits (shunt C1, series L, shunt C2) are coupled back
to back through shift-and-invert regularised external Cayley transforms and
the Redheffer star product, giving a 6-state scattering model whose
generator splits as A_eps = A(eps) + A'/eps with a rank-one symmetric A'.
Assembling that matrix directly in floating point buries the slow dynamics
under the 1/eps entries (relative damage ~ eps_machine / eps), so the
pipeline also builds the product analytically in the basis that
diagonalises A': the fast 1/eps mode then occupies a single diagonal entry
and every other entry is O(1).  The analytic form doubles as the derivation
of the minimal 5-state realisation: dropping the fast row and column at the
eps -> 0 entry limits is exactly the printed minimal system, with the two
coupled C2 capacitors merging into C3 = 2 C2.

Waveguide
---------
A Webster-FEM tube (impedance conservative, 4n states) is terminated at the
mouth by the piston radiation impedance, rationally approximated through
the Loewner framework at order k.  The load is regularised by
eps = epsilon_factor * Z0 (acting as an acoustic series resistance at the
mouth), both systems are externally Cayley transformed at the shared
channel resistance, star-coupled, and mapped back to a one-port impedance
of dimension 4n + k.  The interpolation points include a high-frequency
anchor track along the imaginary axis covering the tube's full spectral
band; without it the order-k load model is unconstrained above the sampling
square and its junk modes can destabilise the otherwise lossless tube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import loewner, simulate, transforms, websterfem
from .core import DiscreteSystem, StateSpaceSystem, transfer_function
from .errors import DimensionMismatch, NotWellPosed
from .feedback import star_of_impedance_pair, star_product
from .loewner import InterpolationScheme, PistonParams
from .transforms import ResistanceMatrix, external_cayley, inverse_external_cayley
from .websterfem import AreaFunction, WaveguideModel


# ---------------------------------------------------------------------------
# Butterworth


@dataclass(frozen=True)
class ButterworthConfig:
    """Component values of one pi section plus port resistance and shift."""

    c1: float = 2.2e-9
    c2: float = 3.4e-9
    l1: float = 14e-6
    r0: float = 50.0
    epsilon: float = 1e-9

    def __post_init__(self):
        if min(self.c1, self.c2, self.l1, self.r0) <= 0 or self.epsilon < 0:
            raise DimensionMismatch("component values must be positive, epsilon >= 0")

    @property
    def c3(self) -> float:
        """Middle capacitor of the coupled ladder: the two C2 in parallel."""
        return 2.0 * self.c2


def pi_circuit_system(c1: float, c2: float, l1: float) -> StateSpaceSystem:
    """Impedance-conservative 3-state two-port of the lossless pi circuit.

    Skew generator on energy coordinates with co-located ports:
    A = [[0, w1, 0], [-w1, 0, w2], [0, -w2, 0]], B = diag-ish columns
    [1/sqrt(C1), 0, 0] and [0, 0, 1/sqrt(C2)], C = B^T, D = 0.  Equals the
    inverse external Cayley transform of the scattering form for any R.
    """
    w1 = 1.0 / math.sqrt(l1 * c1)
    w2 = 1.0 / math.sqrt(l1 * c2)
    A = np.array([[0.0, w1, 0.0], [-w1, 0.0, w2], [0.0, -w2, 0.0]])
    B = np.array([[1.0 / math.sqrt(c1), 0.0], [0.0, 0.0], [0.0, 1.0 / math.sqrt(c2)]])
    return StateSpaceSystem(A, B, B.T.copy(), np.zeros((2, 2)), split=(1, 1))


def pi_scattering_system(c1: float, c2: float, l1: float, r1: float, r2: float,
                         epsilon: float = 0.0) -> StateSpaceSystem:
    """Regularised scattering form of the pi circuit at resistances (r1, r2).

    Exactly the external Cayley transform of the impedance form with the
    shifted feedthrough eps*I, hence B = sqrt(2 r / C) / (r + eps) columns;
    at eps = 0 this reduces to sqrt(2 / (r C)).
    """
    w1 = 1.0 / math.sqrt(l1 * c1)
    w2 = 1.0 / math.sqrt(l1 * c2)
    g1 = 1.0 / (c1 * (r1 + epsilon))
    g2 = 1.0 / (c2 * (r2 + epsilon))
    A = np.array([[-g1, w1, 0.0], [-w1, 0.0, w2], [0.0, -w2, -g2]])
    B = np.array([[math.sqrt(2.0 * r1 / c1) / (r1 + epsilon), 0.0],
                  [0.0, 0.0],
                  [0.0, math.sqrt(2.0 * r2 / c2) / (r2 + epsilon)]])
    D = np.diag([1.0 - 2.0 * r1 / (r1 + epsilon), 1.0 - 2.0 * r2 / (r2 + epsilon)])
    return StateSpaceSystem(A, B, B.T.copy(), D, split=(1, 1))


def _rotated_product(cfg: ButterworthConfig, epsilon: float,
                     limit: bool = False) -> StateSpaceSystem:
    """Exact star product of the two regularised pi sections, rotated basis.

    State order (p1, p2, s, q2, q3, f): s and f are the symmetric and
    antisymmetric combinations of the two coupled C2 node states.  All the
    1/epsilon content sits in the single fast diagonal A[5, 5]; the slow
    5x5 block carries the physical ladder with 1/sqrt(L C3) couplings.
    ``limit=True`` evaluates every entry at its epsilon -> 0 limit (the
    extirpation source for the minimal realisation).
    """
    c1, c2, l1, r0 = cfg.c1, cfg.c2, cfg.l1, cfg.r0
    w1 = 1.0 / math.sqrt(l1 * c1)
    w3 = 1.0 / math.sqrt(l1 * cfg.c3)  # = (1/sqrt(L C2)) / sqrt(2)
    if limit:
        g1 = 1.0 / (r0 * c1)
        slow_d = 0.0
        fast_d = 0.0  # the fast mode is removed at the limit, value unused
        b1 = math.sqrt(2.0 / (r0 * c1))
        d = -1.0
    else:
        if epsilon <= 0:
            raise DimensionMismatch("rotated product needs epsilon > 0")
        g1 = 1.0 / (c1 * (r0 + epsilon))
        # exact coupled-corner algebra: the star coupling adds
        # vhat [[d, 1], [1, d]] with vhat = b2^2 / Delta1 = 1/(2 C2 eps)
        # on top of the diagonal -1/(C2 (R0+eps)); the symmetric (slow)
        # combination cancels exactly and the antisymmetric (fast) one
        # carries the whole -1/(C2 eps)
        slow_d = 0.0
        fast_d = -1.0 / (c2 * epsilon)
        b1 = math.sqrt(2.0 * r0 / c1) / (r0 + epsilon)
        d = (epsilon - r0) / (epsilon + r0)
    A = np.array([
        [-g1, w1, 0.0, 0.0, 0.0, 0.0],
        [-w1, 0.0, w3, 0.0, 0.0, w3],
        [0.0, -w3, slow_d, w3, 0.0, 0.0],
        [0.0, 0.0, -w3, 0.0, w1, w3],
        [0.0, 0.0, 0.0, -w1, -g1, 0.0],
        [0.0, -w3, 0.0, -w3, 0.0, fast_d]])
    B = np.zeros((6, 2))
    B[0, 0] = b1
    B[4, 1] = b1
    D = np.diag([d, d])
    if limit:
        keep = np.arange(5)
        return StateSpaceSystem(A[np.ix_(keep, keep)], B[keep], B[keep].T.copy(),
                                D, split=(1, 1))
    return StateSpaceSystem(A, B, B.T.copy(), D, split=(1, 1))


def minimal_butterworth(cfg: ButterworthConfig) -> StateSpaceSystem:
    """The 5-state minimal scattering realisation of the coupled ladder."""
    return _rotated_product(cfg, cfg.epsilon, limit=True)


@dataclass(frozen=True)
class ButterworthModel:
    """All realisations the Butterworth pipeline produces."""

    regularized: StateSpaceSystem        # star product, printed state basis
    regularized_rotated: StateSpaceSystem  # same transfer, fast mode isolated
    impedance: StateSpaceSystem          # impedance form of the coupled ladder
    minimal: StateSpaceSystem            # 5-state limit realisation


def _unrotate(cfg: ButterworthConfig, rotated: StateSpaceSystem) -> StateSpaceSystem:
    """Map the rotated product back to the printed state ordering.

    The exact Givens pair (s, f) -> (p3, q1) = ((s+f)/sqrt2, (s-f)/sqrt2)
    reconstitutes the +-1/(2 C2 eps) coupled corner without cancellation.
    """
    s2 = 1.0 / math.sqrt(2.0)
    # columns of Q are the rotated basis vectors in printed coordinates
    # printed order (p1, p2, p3, q1, q2, q3); rotated order (p1, p2, s, q2, q3, f)
    Q = np.zeros((6, 6))
    Q[0, 0] = 1.0
    Q[1, 1] = 1.0
    Q[2, 2] = s2   # p3 <- s
    Q[3, 2] = s2   # q1 <- s
    Q[2, 5] = s2   # p3 <- f
    Q[3, 5] = -s2  # q1 <- f
    Q[4, 3] = 1.0  # q2
    Q[5, 4] = 1.0  # q3
    return StateSpaceSystem(Q @ rotated.A @ Q.T, Q @ rotated.B,
                            rotated.C @ Q.T, rotated.D, split=rotated.split)


def butterworth_compose(cfg: ButterworthConfig) -> ButterworthModel:
    """Couple the two regularised pi sections; see the module docstring.

    ``regularized`` is the star product in the printed state basis.  It
    comes from the generic star-product machinery whenever the regularised
    loop passes the well-posedness gate; below that (eps under ~1e-11 R0,
    where a double-precision Delta solve is meaningless anyway) it falls
    back to the exact analytic assembly mapped into the same basis.
    ``regularized_rotated`` is always the analytic form with the fast mode
    isolated, and feeds the impedance recovery.
    """
    if cfg.epsilon <= 0:
        # the unregularised loop has D = -I against D = -I: not well-posed
        p = external_cayley(pi_circuit_system(cfg.c1, cfg.c2, cfg.l1),
                            ResistanceMatrix.scalars(cfg.r0, cfg.r0))
        q = external_cayley(pi_circuit_system(cfg.c2, cfg.c1, cfg.l1),
                            ResistanceMatrix.scalars(cfg.r0, cfg.r0))
        star_product(p, q)  # raises NotWellPosed
    R = ResistanceMatrix.scalars(cfg.r0, cfg.r0)
    p_i = pi_circuit_system(cfg.c1, cfg.c2, cfg.l1)
    q_i = pi_circuit_system(cfg.c2, cfg.c1, cfg.l1)
    rotated = _rotated_product(cfg, cfg.epsilon)
    try:
        prod = star_of_impedance_pair(p_i, q_i, R, R,
                                      epsilon_p=cfg.epsilon, epsilon_q=cfg.epsilon)
    except NotWellPosed:
        prod = _unrotate(cfg, rotated)
    impedance = inverse_external_cayley(rotated, R)
    return ButterworthModel(prod, rotated, impedance, minimal_butterworth(cfg))


def ladder_impedance_closed_form(cfg: ButterworthConfig, s: complex) -> np.ndarray:
    """Closed-form 2x2 impedance of the lossless C1-L-C3-L-C1 ladder."""
    c1, c3, l1 = cfg.c1, cfg.c3, cfg.l1
    num = l1**2 * c1 * c3 * s**4 + l1 * (2 * c1 + c3) * s**2 + 1.0
    den = s * (l1 * c1 * s**2 + 1.0) * (l1 * c1 * c3 * s**2 + 2 * c1 + c3)
    return np.array([[num, 1.0], [1.0, num]]) / den


@dataclass(frozen=True)
class SParams:
    frequencies: np.ndarray
    s11: np.ndarray
    s21: np.ndarray


def butterworth_sparams(cfg: ButterworthConfig, grid_hz) -> SParams:
    """Reflection s11 and transmission s21 of the coupled ladder at R0 ports."""
    sys = _rotated_product(cfg, cfg.epsilon) if cfg.epsilon > 0 \
        else minimal_butterworth(cfg)
    freqs = np.asarray(grid_hz, dtype=float).reshape(-1)
    s11 = np.empty(freqs.size, dtype=complex)
    s21 = np.empty(freqs.size, dtype=complex)
    for i, f in enumerate(freqs):
        G = transfer_function(sys, 2j * np.pi * f)
        s11[i] = G[0, 0]
        s21[i] = G[1, 0]
    return SParams(freqs, s11, s21)


# ---------------------------------------------------------------------------
# waveguide


def uniform_tube(length: float = 0.175, area: float = 1e-4) -> AreaFunction:
    """Constant cross-section tube geometry."""
    return AreaFunction(np.array([0.0, length]), np.array([area, area]))


def two_segment_tube(length: float = 0.175, back_area: float = 2.6e-4,
                     front_area: float = 0.65e-4, junction: float = 0.5,
                     taper: float = 0.05) -> AreaFunction:
    """Wide back cavity, narrow front segment (vowel-[i]-like) with a short taper."""
    xj = junction * length
    dx = 0.5 * taper * length
    nodes = np.array([0.0, xj - dx, xj + dx, length])
    areas = np.array([back_area, back_area, front_area, front_area])
    return AreaFunction(nodes, areas)


@dataclass(frozen=True)
class WaveguideConfig:
    """Everything the terminated-waveguide pipeline needs."""

    area: AreaFunction = field(default_factory=uniform_tube)
    n: int = 99
    c: float = 343.0
    rho: float = 1.225
    r1: float = 1.1e6
    r2: float = 1.1e6
    epsilon_factor: float = 0.194     # in units of the piston Z0
    k: int = 16
    sigma: float = 88200.0
    seed: int = 2024
    sample_points: int = 150          # points per family; 2m = 300 total
    square: float = 3e5               # half-width of the sampling square, rad/s

    def __post_init__(self):
        if min(self.n, self.k) < 1 or min(self.c, self.rho, self.r1, self.r2,
                                          self.sigma, self.square) <= 0:
            raise DimensionMismatch("waveguide configuration values must be positive")
        if self.epsilon_factor < 0:
            raise DimensionMismatch("epsilon_factor must be nonnegative")

    @property
    def piston(self) -> PistonParams:
        """Load parameters; the aperture matches the mouth area A(L)."""
        return PistonParams.from_mouth_area(float(self.area.areas[-1]),
                                            self.rho, self.c)

    @property
    def epsilon(self) -> float:
        return self.epsilon_factor * self.piston.Z0


@dataclass(frozen=True)
class WaveguideComposite:
    """Assembled terminated waveguide and the pieces it was built from."""

    tube: WaveguideModel
    piston: PistonParams
    scheme: InterpolationScheme
    interpolant: loewner.DescriptorInterpolant
    load: StateSpaceSystem
    composite_impedance: StateSpaceSystem
    discrete: DiscreteSystem
    mouth_row: np.ndarray
    epsilon: float


def waveguide_compose(cfg: WaveguideConfig) -> WaveguideComposite:
    """FEM tube + Loewner piston load -> one-port impedance and its Cayley form.

    Steps: assemble the tube; sample and reduce the piston impedance;
    regularise the load by eps = epsilon_factor * Z0; external Cayley both
    at R1 = R2; star product; inverse external Cayley at R1; internal Cayley
    at sigma.  State dimension is 4n + k with the tube states first, so the
    mouth pressure stays readable as the tube's second output row.
    """
    tube = websterfem.assemble(cfg.area, cfg.n, cfg.c, cfg.rho)
    piston = cfg.piston
    # anchor the load model across the tube's spectral band (capped inside
    # the special-function envelope) so it stays resistive where the tube
    # still has undamped modes
    tube_top = float(np.abs(np.linalg.eigvals(tube.system.A)).max())
    envelope_cap = 0.8 * loewner.ENVELOPE_RADIUS * cfg.c / (2.0 * piston.a)
    anchor_hi = min(1.25 * tube_top, envelope_cap)
    anchor = (1.05 * cfg.square, anchor_hi) if anchor_hi > 1.1 * cfg.square else None
    scheme = loewner.default_scheme(piston, m=cfg.sample_points, seed=cfg.seed,
                                    square=cfg.square, anchor_band=anchor)
    vm, vl = loewner.sample_function(scheme, lambda s: loewner.piston_impedance(s, piston))
    interp = loewner.reduce_order(loewner.realify(
        loewner.loewner_matrices(scheme, vm, vl)), cfg.k)
    load = interp.reduced
    Rp = ResistanceMatrix(np.array([[cfg.r1]]), np.array([[cfg.r2]]))
    Rq = ResistanceMatrix(np.array([[cfg.r2]]), np.zeros((0, 0)))
    prod = star_of_impedance_pair(tube.system, load, Rp, Rq,
                                  epsilon_p=0.0, epsilon_q=cfg.epsilon)
    composite = inverse_external_cayley(
        prod, ResistanceMatrix(np.array([[cfg.r1]]), np.zeros((0, 0))))
    discrete = transforms.internal_cayley(composite, cfg.sigma)
    mouth_row = np.concatenate([tube.system.C[1], np.zeros(cfg.k)])
    return WaveguideComposite(tube, piston, scheme, interp, load,
                              composite, discrete, mouth_row, cfg.epsilon)


@dataclass(frozen=True)
class WaveguideReport:
    """Resonances, frequency response and an excited time-domain run."""

    resonances: simulate.ResonanceList
    response: simulate.FrequencyResponse
    time: np.ndarray
    flow: np.ndarray
    pressure_folds: np.ndarray
    pressure_mouth: np.ndarray


def waveguide_report(composite: WaveguideComposite,
                     excitation: Optional[simulate.ExcitationSpec] = None,
                     response_grid_hz=None) -> WaveguideReport:
    """Run the standard diagnostics on a composed waveguide.

    The time series drives the discrete system with the excitation as the
    glottal flow; the folds pressure is the port output and the mouth
    pressure is read from the state through the tube's second output row
    (exact, the tube has no feedthrough).
    """
    sys = composite.composite_impedance
    if excitation is None:
        fs = composite.discrete.sigma / 2.0
        excitation = simulate.ExcitationSpec("LFPulseTrain", f0=120.0,
                                             duration=0.05, sample_rate=fs)
    if response_grid_hz is None:
        response_grid_hz = np.geomspace(30.0, 10000.0, 300)
    res = simulate.resonances(sys)
    resp = simulate.frequency_response(sys, response_grid_hz)
    flow = simulate.excitation_signal(excitation)
    u = flow.reshape(-1, 1)
    y, _, states = simulate.step_response(composite.discrete, u, record_energy=True)
    t = np.arange(flow.size) / excitation.sample_rate
    p_folds = y[:, 0]
    p_mouth = states @ composite.mouth_row
    return WaveguideReport(res, resp, t, flow, p_folds, p_mouth)
