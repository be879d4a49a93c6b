"""Time stepping, excitation signals, resonance lists and frequency sweeps.

Stepping uses the precomputed discrete quadruple of the internal Cayley
transform; for conservative systems the per-step impedance balance

    |x_{j+1}|^2 - |x_j|^2 = 2 <u_j, y_j>

holds as an identity and can be recorded alongside the outputs.

Frequency sweeps evaluate G(2 pi i f) pointwise; points that land on the
spectrum are flagged rather than fatal.  Grid evaluation parallelises over
a thread pool capped by the PASSIVE_NET_THREADS environment variable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .core import DiscreteSystem, StateSpaceSystem, transfer_function
from .errors import DimensionMismatch, NearSpectrum, NonPositive


def _worker_count() -> int:
    raw = os.environ.get("PASSIVE_NET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# stepping


def step_response(phi: DiscreteSystem, inputs: np.ndarray,
                  x0: Optional[np.ndarray] = None,
                  record_energy=False):
    """Run the exact recursion x_{j+1} = Ad x_j + Bd u_j, y_j = Cd x_j + Dd u_j.

    ``inputs`` has one row per step.  ``record_energy`` selects a per-step
    balance to record: "impedance" (or True) stores the defect
    |x_{j+1}|^2 - |x_j|^2 - 2 <u_j, y_j>, "scattering" stores
    |x_{j+1}|^2 - |x_j|^2 - (|u_j|^2 - |y_j|^2); either is <= 0 for a
    passive system of that type and zero for a conservative one up to
    roundoff.  The recorded return value is (outputs, balance, states).
    """
    if record_energy is True:
        record_energy = "impedance"
    if record_energy not in (False, "impedance", "scattering"):
        raise DimensionMismatch(f"unknown energy mode {record_energy!r}")
    U = np.atleast_2d(np.asarray(inputs, dtype=float))
    if U.shape[1] != phi.m:
        raise DimensionMismatch(f"inputs have width {U.shape[1]}, system has m={phi.m}")
    nsteps = U.shape[0]
    x = np.zeros(phi.n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (phi.n,):
        raise DimensionMismatch(f"x0 has shape {x.shape}, expected ({phi.n},)")
    Y = np.empty((nsteps, phi.m))
    balance = np.empty(nsteps) if record_energy else None
    states = np.empty((nsteps, phi.n)) if record_energy else None
    for j in range(nsteps):
        u = U[j]
        y = phi.Cd @ x + phi.Dd @ u
        x_next = phi.Ad @ x + phi.Bd @ u
        Y[j] = y
        if record_energy:
            states[j] = x
            gain = x_next @ x_next - x @ x
            supply = 2.0 * (u @ y) if record_energy == "impedance" \
                else (u @ u - y @ y)
            balance[j] = float(gain - supply)
        x = x_next
    if record_energy:
        return Y, balance, states
    return Y


# ---------------------------------------------------------------------------
# excitations


@dataclass(frozen=True)
class ExcitationSpec:
    """Excitation request: LF pulse train, logarithmic sweep or unit impulse.

    ``f0`` is the pulse rate (LF) or sweep start; ``f1`` the sweep end
    (defaults to 0.45 * sample_rate).  ``lf_shape`` is (open quotient,
    asymmetry, return-phase quotient), each in (0, 1); the defaults are a
    generic modal-voice shape.
    """

    kind: str
    f0: float
    duration: float
    sample_rate: float
    lf_shape: tuple[float, float, float] = (0.6, 0.7, 0.1)
    f1: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("LFPulseTrain", "LogSweep", "Impulse"):
            raise DimensionMismatch(f"unknown excitation kind {self.kind!r}")
        if not (self.sample_rate > 0 and self.duration > 0 and self.f0 > 0):
            raise DimensionMismatch("sample_rate, duration and f0 must be positive")
        if not all(0.0 < v < 1.0 for v in self.lf_shape):
            raise DimensionMismatch("LF shape parameters must lie in (0, 1)")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


@dataclass(frozen=True)
class _LFWaveform:
    """Solved LF pulse: flow derivative parameters for one period T0."""

    T0: float
    Te: float
    Tp: float
    Ta: float
    alpha: float
    eps: float
    omega_g: float

    def flow(self, t: np.ndarray) -> np.ndarray:
        """Glottal flow U(t) = integral of the LF flow derivative, one period."""
        t = np.asarray(t, dtype=float)
        w, a = self.omega_g, self.alpha
        den = a * a + w * w
        U = np.empty_like(t)
        rising = t <= self.Te
        tr = t[rising]
        U[rising] = (np.exp(a * tr) * (a * np.sin(w * tr) - w * np.cos(w * tr)) + w) / den
        Ue = (math.exp(a * self.Te) * (a * math.sin(w * self.Te)
                                       - w * math.cos(w * self.Te)) + w) / den
        Ee = -math.exp(a * self.Te) * math.sin(w * self.Te)
        Td = self.T0 - self.Te
        tq = t[~rising] - self.Te
        decay = (1.0 - np.exp(-self.eps * tq)) / self.eps - tq * math.exp(-self.eps * Td)
        U[~rising] = Ue - (Ee / (self.eps * self.Ta)) * decay
        return U


def _solve_lf(f0: float, shape: tuple[float, float, float]) -> _LFWaveform:
    oq, am, qa = shape
    T0 = 1.0 / f0
    Te = oq * T0
    Tp = am * Te
    Ta = qa * (T0 - Te)
    omega_g = math.pi / Tp
    Td = T0 - Te
    # eps solves eps*Ta = 1 - exp(-eps*Td)
    eps = brentq(lambda e: e * Ta - 1.0 + math.exp(-e * Td), 1e-9 / Ta, 1e3 / Ta)

    def net_flow(a: float) -> float:
        # closed-form integral of E over [0, T0]; zero net flow closes the pulse
        den = a * a + omega_g * omega_g
        area1 = (omega_g - math.exp(a * Te) * (omega_g * math.cos(omega_g * Te)
                                               - a * math.sin(omega_g * Te))) / den
        Ee = -math.exp(a * Te) * math.sin(omega_g * Te)
        area2 = -(Ee / (eps * Ta)) * ((1.0 - math.exp(-eps * Td)) / eps
                                      - Td * math.exp(-eps * Td))
        return area1 + area2

    lo, hi = -5.0 / Te, 20.0 / Te
    flo, fhi = net_flow(lo), net_flow(hi)
    while flo * fhi > 0 and hi < 1e4 / Te:
        hi *= 2
        fhi = net_flow(hi)
    alpha = brentq(net_flow, lo, hi)
    return _LFWaveform(T0, Te, Tp, Ta, alpha, eps, omega_g)


def lf_pulse_train(spec: ExcitationSpec) -> np.ndarray:
    """Liljencrants-Fant glottal flow pulses, peak-normalised, >= 0.

    Sampled by evaluating the continuous one-period flow at t mod T0, so a
    fractional period (e.g. 367.5 samples at 120 Hz / 44.1 kHz) accumulates
    exactly instead of drifting.
    """
    wf = _solve_lf(spec.f0, spec.lf_shape)
    t = np.arange(spec.n_samples) / spec.sample_rate
    flow = wf.flow(np.mod(t, wf.T0))
    peak = flow.max()
    if peak <= 0:
        raise DimensionMismatch("LF solve produced a non-positive pulse")
    flow = flow / peak
    # the closure balance leaves O(roundoff) negatives at the period seam
    return np.clip(flow, 0.0, None)


def log_sweep(spec: ExcitationSpec) -> np.ndarray:
    """Constant-amplitude logarithmic sweep from f0 to f1."""
    f1 = spec.f1 if spec.f1 is not None else 0.45 * spec.sample_rate
    if f1 <= spec.f0:
        raise DimensionMismatch(f"sweep end {f1} must exceed start {spec.f0}")
    t = np.arange(spec.n_samples) / spec.sample_rate
    T = spec.duration
    r = math.log(f1 / spec.f0)
    phase = 2.0 * np.pi * spec.f0 * T / r * (np.exp(t * r / T) - 1.0)
    return np.sin(phase)


def sweep_instant_frequency(spec: ExcitationSpec, t: np.ndarray) -> np.ndarray:
    """Instantaneous frequency of the log sweep at times t."""
    f1 = spec.f1 if spec.f1 is not None else 0.45 * spec.sample_rate
    r = math.log(f1 / spec.f0)
    return spec.f0 * np.exp(np.asarray(t) * r / spec.duration)


def impulse(spec: ExcitationSpec) -> np.ndarray:
    out = np.zeros(spec.n_samples)
    out[0] = 1.0
    return out


def excitation_signal(spec: ExcitationSpec) -> np.ndarray:
    if spec.kind == "LFPulseTrain":
        return lf_pulse_train(spec)
    if spec.kind == "LogSweep":
        return log_sweep(spec)
    return impulse(spec)


# ---------------------------------------------------------------------------
# resonances and frequency responses


@dataclass(frozen=True)
class ResonanceList:
    """(frequency Hz, decay rate 1/s) per Im > 0 eigenvalue, sorted by frequency."""

    frequencies: np.ndarray
    decay_rates: np.ndarray

    def __len__(self) -> int:
        return self.frequencies.size

    def __iter__(self):
        return iter(zip(self.frequencies, self.decay_rates))


def resonances(sys: StateSpaceSystem) -> ResonanceList:
    """Resonances f = Im(lambda)/2pi with decay -Re(lambda), Im(lambda) > 0 only.

    Real eigenvalues (including the negative-real-axis spurious modes of
    interpolated loads) carry no oscillation and are excluded.
    """
    if sys.n == 0:
        return ResonanceList(np.empty(0), np.empty(0))
    lam = np.linalg.eigvals(sys.A)
    sel = lam.imag > 0.0
    order = np.argsort(lam.imag[sel])
    freqs = lam.imag[sel][order] / (2.0 * np.pi)
    decays = -lam.real[sel][order]
    return ResonanceList(freqs, decays)


@dataclass(frozen=True)
class FrequencyResponse:
    """G(2 pi i f) on a grid; ``ok[i]`` is False where the solve was gated."""

    frequencies: np.ndarray
    values: np.ndarray
    ok: np.ndarray

    def magnitude(self, row: int = 0, col: int = 0) -> np.ndarray:
        return np.abs(self.values[:, row, col])


def frequency_response(sys: StateSpaceSystem, frequencies_hz) -> FrequencyResponse:
    """Evaluate the transfer function along the imaginary axis."""
    freqs = np.asarray(frequencies_hz, dtype=float).reshape(-1)
    values = np.empty((freqs.size, sys.m, sys.m), dtype=complex)
    ok = np.ones(freqs.size, dtype=bool)

    def eval_one(i: int) -> None:
        try:
            values[i] = transfer_function(sys, 2j * np.pi * freqs[i])
        except NearSpectrum:
            values[i] = np.nan
            ok[i] = False

    workers = _worker_count()
    if workers > 1 and freqs.size > 8:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(eval_one, range(freqs.size)))
    else:
        for i in range(freqs.size):
            eval_one(i)
    return FrequencyResponse(freqs, values, ok)


def semitone_discrepancy(f_model: float, f_target: float) -> float:
    """12 log2(f_model / f_target); both frequencies must be positive."""
    if not (f_model > 0 and f_target > 0):
        raise NonPositive(f"frequencies must be positive, got {f_model}, {f_target}")
    return 12.0 * math.log2(f_model / f_target)


# ---------------------------------------------------------------------------
# CSV output (17 significant digits so doubles round-trip exactly)


def write_timeseries_csv(path, t: np.ndarray, columns: dict[str, np.ndarray]) -> None:
    names = ",".join(columns.keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"t_s,{names}\n")
        cols = list(columns.values())
        for i, ti in enumerate(t):
            row = ",".join(f"{c[i]:.17g}" for c in cols)
            fh.write(f"{ti:.17g},{row}\n")


def write_response_csv(path, resp: FrequencyResponse) -> None:
    m = resp.values.shape[1]
    heads = [f"{p}_{i+1}{j+1}" for i in range(m) for j in range(m) for p in ("re", "im")]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("f_hz," + ",".join(heads) + "\n")
        for idx, f in enumerate(resp.frequencies):
            cells = []
            for i in range(m):
                for j in range(m):
                    v = resp.values[idx, i, j]
                    cells += [f"{v.real:.17g}", f"{v.imag:.17g}"]
            fh.write(f"{f:.17g}," + ",".join(cells) + "\n")
