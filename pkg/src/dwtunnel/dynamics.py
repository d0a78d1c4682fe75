"""Wave packets, two-state evolution and tunneling visibility.

The evolution is analytic: a superposition of eigenstates is advanced by
phase factors, so P_r(t) for two states is exactly A + B cos(dE t).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .eigensolver import Spectrum, overlap
from .errors import ConvergenceError, DegenerateError, DomainError
from .potentials import WellAnalysis, analyze_wells
from .wkb import DoubletSolution

__all__ = [
    "GaussianPacket",
    "Projection",
    "TunnelingTrace",
    "QuenchResult",
    "BasisIncompleteWarning",
    "project",
    "evolve_two_state",
    "measure_visibility",
    "tls_trace",
    "superposition",
    "superposition_trace",
    "sudden_quench",
    "write_trace",
]

SUPPORT_GATE = 1e-8
COMPLETENESS_GATE = 0.999


class BasisIncompleteWarning(UserWarning):
    """The truncated eigenbasis misses a noticeable part of the state."""


@dataclass(frozen=True)
class GaussianPacket:
    """exp(-(x-c)^2 / 2 (f l)^2) / (pi (f l)^2)^(1/4); ``width`` is l, ``f`` the fitting factor."""

    center: float
    width: float
    f: float = 1.0

    def __post_init__(self):
        if self.f <= 0 or self.width <= 0:
            raise DomainError("packet width and fitting factor must be positive")

    @property
    def sigma(self) -> float:
        return self.f * self.width

    @classmethod
    def at_right_minimum(cls, w: WellAnalysis, f: float = 1.0) -> "GaussianPacket":
        return cls(w.right_min, w.l_r, f)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        sig = self.sigma
        return np.exp(-((x - self.center) ** 2) / (2 * sig * sig)) / (math.pi * sig * sig) ** 0.25

    def mass_outside(self, lo: float, hi: float) -> float:
        # |phi|^2 is a normal density with standard deviation sigma/sqrt(2)
        return 0.5 * (erfc((self.center - lo) / self.sigma) + erfc((hi - self.center) / self.sigma))


@dataclass(frozen=True)
class Projection:
    amplitudes: np.ndarray
    probabilities: np.ndarray
    residual: float


def project(packet: GaussianPacket, s: Spectrum) -> Projection:
    """P_i = |<packet|phi_i>|^2 for the states held in ``s``."""
    lo, hi = s.window
    leak = packet.mass_outside(lo, hi)
    if leak > SUPPORT_GATE:
        raise DomainError(f"packet mass {leak:.2e} lies outside the grid window")
    g = packet(s.x)
    amps = np.array([overlap(g, s.vectors[i], s.x) for i in range(s.n_states)])
    probs = amps**2
    return Projection(amps, probs, float(1.0 - probs.sum()))


@dataclass(frozen=True)
class TunnelingTrace:
    """P_r(t) samples with the closed form P_r = mean + amplitude cos(2 pi t / period)."""

    times: np.ndarray
    p_right: np.ndarray
    mean: float
    amplitude: float
    period: float
    x_c: float
    weights: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def p_max(self) -> float:
        return self.mean + abs(self.amplitude)

    @property
    def p_min(self) -> float:
        return self.mean - abs(self.amplitude)

    @property
    def visibility(self) -> float:
        return measure_visibility(self)


def measure_visibility(trace: TunnelingTrace) -> float:
    """(P_max - P_min)/(P_max + P_min) from the closed-form extremes."""
    if trace.times.size and trace.times[-1] - trace.times[0] < trace.period * (1 - 1e-12):
        raise DomainError("trace must span at least one full period")
    total = trace.p_max + trace.p_min
    if total <= 0:
        return 0.0
    return min(1.0, max(0.0, (trace.p_max - trace.p_min) / total))


def _right_index(x, x_c):
    return int(np.argmin(np.abs(x - x_c)))


def _right_probability(x, density, k):
    return np.trapezoid(density[..., k:], x[k:], axis=-1)


def evolve_two_state(s: Spectrum, i: int, j: int, weights, t_samples: int = 201,
                     x_c: float | None = None) -> TunnelingTrace:
    """Evolve sqrt(P_i) phi_i e^{-i E_i t} + sqrt(P_j) phi_j e^{-i E_j t} over one beat period.

    The superposition is left unnormalized.  x_c defaults to the barrier top
    of the spectrum's potential.
    """
    if not i < j:
        raise DomainError("need i < j")
    p_i, p_j = (float(v) for v in weights)
    if p_i < 0 or p_j < 0:
        raise DomainError("weights must be non-negative")
    gap = s.energies[j] - s.energies[i]
    if gap < 1e-12:
        raise DegenerateError(f"E_{j} - E_{i} = {gap:.2e} is too small")
    if x_c is None:
        x_c = analyze_wells(s.potential).barrier_top
    period = 2.0 * math.pi / gap
    times = np.linspace(0.0, period, t_samples)
    k = _right_index(s.x, x_c)
    phi_i, phi_j = s.vectors[i], s.vectors[j]

    a_ii = _right_probability(s.x, phi_i * phi_i, k)
    a_jj = _right_probability(s.x, phi_j * phi_j, k)
    a_ij = _right_probability(s.x, phi_i * phi_j, k)
    mean = p_i * a_ii + p_j * a_jj
    amp = 2.0 * math.sqrt(p_i * p_j) * a_ij

    psi = (
        math.sqrt(p_i) * phi_i[None, :] * np.exp(-1j * s.energies[i] * times)[:, None]
        + math.sqrt(p_j) * phi_j[None, :] * np.exp(-1j * s.energies[j] * times)[:, None]
    )
    p_r = _right_probability(s.x, np.abs(psi) ** 2, k)
    closed = mean + amp * np.cos(gap * times)
    if np.max(np.abs(p_r - closed)) > 1e-10:
        raise ConvergenceError("sampled P_r(t) departs from the two-state closed form")
    return TunnelingTrace(times, p_r, float(mean), float(amp), period, float(x_c), (p_i, p_j),
                          {"states": [i, j], "energies": [float(s.energies[i]), float(s.energies[j])]})


def tls_trace(d: DoubletSolution, t_samples: int = 201) -> TunnelingTrace:
    """Weight of the right oscillator state over time when psi_n(a) is released in the doublet.

    The two oscillator functions are treated as orthonormal, so P_r(t) is
    |<psi_n|psi(t)>|^2.
    """
    w_minus, w_plus = d.coeff_minus[1] ** 2, d.coeff_plus[1] ** 2
    gap = d.splitting
    if gap <= 0:
        raise DegenerateError("doublet splitting vanishes")
    period = 2.0 * math.pi / gap
    times = np.linspace(0.0, period, t_samples)
    amp_t = w_minus * np.exp(-1j * d.energies[0] * times) + w_plus * np.exp(-1j * d.energies[1] * times)
    mean = w_minus**2 + w_plus**2
    amp = 2.0 * w_minus * w_plus
    return TunnelingTrace(times, np.abs(amp_t) ** 2, mean, amp, period, float("nan"), (w_minus, w_plus),
                          {"m": d.m, "n": d.n})


def superposition(s: Spectrum, coeffs, t: float = 0.0) -> np.ndarray:
    """sum_i c_i phi_i e^{-i E_i t} on the spectrum grid."""
    c = np.asarray(coeffs, dtype=complex)
    phases = np.exp(-1j * s.energies[: c.size] * t)
    return (c * phases) @ s.vectors[: c.size]


def superposition_trace(s: Spectrum, coeffs, times, x_c: float | None = None) -> TunnelingTrace:
    """P_r(t) of a general superposition; extremes are taken from the samples.

    For more than two components P_r is quasi-periodic, so ``period`` is
    set to the sampled span and the visibility describes that window.
    """
    if x_c is None:
        x_c = analyze_wells(s.potential).barrier_top
    times = np.asarray(times, dtype=float)
    k = _right_index(s.x, x_c)
    psi = np.array([superposition(s, coeffs, t) for t in times])
    p_r = _right_probability(s.x, np.abs(psi) ** 2, k)
    hi, lo = float(p_r.max()), float(p_r.min())
    return TunnelingTrace(times, p_r, 0.5 * (hi + lo), 0.5 * (hi - lo), float(times[-1] - times[0]), float(x_c),
                          tuple(np.abs(np.asarray(coeffs)) ** 2))


@dataclass(frozen=True)
class QuenchResult:
    coefficients: np.ndarray
    populations: np.ndarray
    norm_before: float

    @property
    def captured(self) -> float:
        return float(self.populations.sum())


def sudden_quench(state, s_new: Spectrum) -> QuenchResult:
    """Expand a frozen grid state in the eigenbasis of the new potential."""
    state = np.asarray(state)
    if state.shape != s_new.x.shape:
        raise DomainError("state and spectrum must share the grid")
    norm = float(np.real(overlap(state, state, s_new.x)))
    coeffs = np.array([overlap(s_new.vectors[i], state, s_new.x) for i in range(s_new.n_states)])
    pops = np.abs(coeffs) ** 2
    if pops.sum() < COMPLETENESS_GATE * norm:
        warnings.warn(
            f"eigenbasis captures only {pops.sum() / norm:.6f} of the state; add states",
            BasisIncompleteWarning,
            stacklevel=2,
        )
    return QuenchResult(coeffs, pops, norm)


def write_trace(trace: TunnelingTrace, out_dir, stem: str = "trace", descriptor: dict | None = None):
    """CSV (t, P_r) plus a JSON header with the visibility, period and weights."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    u = (descriptor or {}).get("units", {})
    units = f"# units: time hbar/{u.get('energy', 'E')}, length {u.get('length', '?')}\n"
    np.savetxt(csv_path, np.column_stack([trace.times, trace.p_right]), delimiter=",",
               header=units + "t,P_r", comments="", fmt="%.12e")
    meta = {
        "visibility": trace.visibility,
        "period": trace.period,
        "p_max": trace.p_max,
        "p_min": trace.p_min,
        "weights": [float(v) for v in trace.weights],
        "x_c": trace.x_c if math.isfinite(trace.x_c) else None,
        "potential": descriptor or {},
    }
    json_path = out / f"{stem}.json"
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path
