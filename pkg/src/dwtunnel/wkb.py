"""WKB theory of an asymmetric double well.

Turning points and barrier actions, the tunneling coupling delta_a, the
two-level (doublet) reduction with its visibility, the coefficient ratios
C_L/C_R of the localized regimes and the energy estimate from an
approximate localized eigenfunction (ALE).

Energies are absolute values of the potential.  The dimensionless
quantities follow the convention in which the left bottom sits at zero and
the right bottom at epsilon*hbar*omega_r, so every formula is written in
terms of ``E - v_left``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateError, RegimeError
from .potentials import Potential, WellAnalysis
from .specfun import OscillatorEigenfunction, cospi, gamma, oscillator_eval, rgamma

__all__ = [
    "BarrierAction",
    "DoubletSolution",
    "ALEApproximation",
    "barrier_action",
    "delta_a",
    "delta_epsilon",
    "nearest_pair",
    "doublet",
    "visibility",
    "coefficient_ratio_right",
    "coefficient_ratio_left",
    "ale_energy_correction",
    "ale_approximation",
    "check_localized",
]

NEAR_INTEGER = 1e-2
ALE_GATE = 10.0
JOIN_FRACTION = 0.01
JOIN_TURNING_FACTOR = 1.5
TRUNCATE = 1e-8


@dataclass(frozen=True)
class BarrierAction:
    """Forbidden region at energy E: turning points and half-actions (hbar = 1)."""

    energy: float
    left_turn: float
    right_turn: float
    barrier_top: float
    s_left: float
    s_right: float

    @property
    def total(self) -> float:
        return self.s_left + self.s_right


def _momentum(p: Potential, mass: float, energy: float, x):
    return np.sqrt(np.maximum(2.0 * mass * (p(x) - energy), 0.0))


def _half_action(p, mass, energy, turn, top):
    # y = turn + s u^2 removes the square-root zero of p at the turning point
    s = 1.0 if top > turn else -1.0
    span = abs(top - turn)

    def f(u):
        return 2.0 * u * float(_momentum(p, mass, energy, turn + s * u * u))

    val, _ = integrate.quad(f, 0.0, math.sqrt(span), epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def _turning_point(p, energy, lo, hi):
    return optimize.brentq(lambda x: float(p(x)) - energy, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def barrier_action(p: Potential, w: WellAnalysis, energy: float) -> BarrierAction:
    """Turning points -b_mu < x_c < a_nu at ``energy`` and the actions on each side of x_c."""
    if energy >= w.v_barrier:
        raise RegimeError(f"energy {energy:.6g} is not below the barrier top {w.v_barrier:.6g}")
    if energy <= max(w.v_left, w.v_right):
        raise RegimeError(f"energy {energy:.6g} is below the bottom of a well")
    m = w.mass
    left = _turning_point(p, energy, w.left_min, w.barrier_top)
    right = _turning_point(p, energy, w.barrier_top, w.right_min)
    return BarrierAction(
        energy=float(energy),
        left_turn=left,
        right_turn=right,
        barrier_top=w.barrier_top,
        s_left=_half_action(p, m, energy, left, w.barrier_top),
        s_right=_half_action(p, m, energy, right, w.barrier_top),
    )


def delta_epsilon(w: WellAnalysis, m: int, n: int) -> float:
    return w.epsilon + n - (w.omega_l / w.omega_r) * m


def _level_right(w, n):
    return w.v_right + w.omega_r * (n + 0.5)


def _level_left(w, m):
    return w.v_left + w.omega_l * (m + 0.5)


def nearest_pair(w: WellAnalysis) -> tuple[int, int]:
    """(m, n) minimising |delta_eps| over oscillator levels below the barrier; ties go to smaller n."""
    best = None
    n = 0
    while _level_right(w, n) < w.v_barrier:
        m = 0
        while _level_left(w, m) < w.v_barrier:
            # rounding makes equal detunings tie despite float noise in eps
            key = (round(abs(delta_epsilon(w, m, n)), 9), n, m)
            if best is None or key < best:
                best = key
            m += 1
        n += 1
    if best is None:
        raise RegimeError("no pair of oscillator levels lies below the barrier")
    return best[2], best[1]


def _log_stirling(k: float) -> float:
    # log of ((k + 1/2)/e)^((2k+1)/4)
    return 0.25 * (2.0 * k + 1.0) * (math.log(k + 0.5) - 1.0)


def delta_a(p: Potential, w: WellAnalysis, m: int, n: int, action: BarrierAction | None = None) -> float:
    """Tunneling coupling between left level m and right level n.

    The action defaults to the turning points at E = hbar w_r (n + eps + 1/2);
    pass ``action`` to use a different convention.
    """
    if m < 0 or n < 0:
        raise RegimeError("level indices must be non-negative")
    if action is None:
        action = barrier_action(p, w, _level_right(w, n))
    log_pref = (
        0.5 * math.log(w.omega_l / w.omega_r)
        - 0.5 * math.log(2.0 * math.pi)
        - 0.5 * (math.lgamma(n + 1) + math.lgamma(m + 1))
        + _log_stirling(n)
        + _log_stirling(m)
    )
    return math.exp(log_pref - action.total)


def _roots(d_eps: float, d_a: float) -> tuple[float, float]:
    # roots of d^2 + d_eps d - d_a^2 = 0, computed without cancellation
    disc = math.sqrt(d_eps * d_eps + 4.0 * d_a * d_a)
    if d_eps >= 0:
        minus = -0.5 * (d_eps + disc)
        plus = -d_a * d_a / minus if minus != 0 else 0.0
    else:
        plus = 0.5 * (-d_eps + disc)
        minus = -d_a * d_a / plus
    return minus, plus


def visibility(d_eps: float, d_a: float) -> float:
    """1 / (1 + (d_eps/d_a)^2 / 2)."""
    if d_a == 0.0:
        if d_eps == 0.0:
            raise DegenerateError("visibility undefined for d_eps = d_a = 0")
        return 0.0
    return 2.0 * d_a * d_a / (2.0 * d_a * d_a + d_eps * d_eps)


@dataclass(frozen=True)
class DoubletSolution:
    """Two-level reduction of the pair (left level m, right level n).

    ``coeff_minus`` and ``coeff_plus`` hold the (left, right) amplitudes of
    psi^- and psi^+ on the oscillator functions psi_m(-b; l_l) and
    psi_n(a; l_r).  ``energies`` are (E^-, E^+) in the potential's units.
    """

    m: int
    n: int
    delta_eps: float
    delta_a: float
    delta_minus: float
    delta_plus: float
    omega_r: float
    energies: tuple[float, float]
    coeff_minus: tuple[float, float]
    coeff_plus: tuple[float, float]
    visibility: float
    p_max: float
    p_min: float

    @property
    def splitting(self) -> float:
        # from the roots, not E+ - E-, which loses digits to the base energy
        return self.omega_r * (self.delta_plus - self.delta_minus)

    @classmethod
    def from_deltas(cls, d_eps, d_a, m=0, n=0, omega_r=1.0, base_energy=None):
        """Build the doublet; ``base_energy`` is hbar w_r (n + eps + 1/2) (default: n + 1/2)."""
        if d_a < 0:
            raise RegimeError("delta_a must be non-negative")
        minus, plus = _roots(d_eps, d_a)
        norm = math.hypot(d_a, plus)
        if norm == 0.0:
            raise DegenerateError("doublet amplitudes vanish (delta_a = delta_+ = 0)")
        sign = -1.0 if n % 2 else 1.0
        c_minus = (sign * d_a / norm, plus / norm)
        c_plus = (-sign * plus / norm, d_a / norm)
        # weights of psi_n on psi^- and psi^+
        w_minus, w_plus = c_minus[1] ** 2, c_plus[1] ** 2
        p_min = (w_minus - w_plus) ** 2
        base = omega_r * (n + 0.5) if base_energy is None else base_energy
        return cls(
            m=m,
            n=n,
            delta_eps=d_eps,
            delta_a=d_a,
            delta_minus=minus,
            delta_plus=plus,
            omega_r=omega_r,
            energies=(base + omega_r * minus, base + omega_r * plus),
            coeff_minus=c_minus,
            coeff_plus=c_plus,
            visibility=visibility(d_eps, d_a),
            p_max=1.0,
            p_min=p_min,
        )


def doublet(p: Potential, w: WellAnalysis, m: int | None = None, n: int | None = None,
            action: BarrierAction | None = None) -> DoubletSolution:
    """Doublet of left level m and right level n (nearest pair when omitted)."""
    if m is None or n is None:
        m, n = nearest_pair(w)
    if _level_right(w, n) >= w.v_barrier or _level_left(w, m) >= w.v_barrier:
        raise RegimeError(f"levels (m={m}, n={n}) are not below the barrier")
    d_a = delta_a(p, w, m, n, action)
    return DoubletSolution.from_deltas(
        delta_epsilon(w, m, n), d_a, m, n, w.omega_r, base_energy=_level_right(w, n)
    )


def _near_integer(x: float) -> bool:
    return abs(x - round(x)) <= NEAR_INTEGER


def coefficient_ratio_right(p: Potential, w: WellAnalysis, nu: float, mu: float) -> float:
    """C_L/C_R for an eigenvalue near the right level n = round(nu).

    Turning points are taken at E = hbar w_r (nu + eps + 1/2).
    """
    if not (_near_integer(nu) and round(nu) >= 0):
        raise RegimeError(f"nu = {nu} is not near a non-negative integer")
    if _near_integer(mu):
        raise RegimeError(f"mu = {mu} is too close to an integer")
    act = barrier_action(p, w, w.v_right + w.omega_r * (nu + 0.5))
    return (
        math.sqrt(w.l_l / w.l_r)
        * cospi(nu)
        * gamma(-mu)
        / math.sqrt(2.0 * math.pi)
        * math.exp(_log_stirling(nu) + _log_stirling(mu) - act.total)
    )


def coefficient_ratio_left(p: Potential, w: WellAnalysis, nu: float, mu: float) -> float:
    """C_L/C_R for an eigenvalue near the left level m = round(mu).

    Turning points are taken at E = hbar w_l (mu + 1/2).
    """
    if not (_near_integer(mu) and round(mu) >= 0):
        raise RegimeError(f"mu = {mu} is not near a non-negative integer")
    if _near_integer(nu):
        raise RegimeError(f"nu = {nu} is too close to an integer")
    act = barrier_action(p, w, w.v_left + w.omega_l * (mu + 0.5))
    return (
        math.sqrt(w.l_l / w.l_r)
        * math.sqrt(2.0 * math.pi)
        * rgamma(-nu)
        / cospi(mu)
        * math.exp(act.total - _log_stirling(nu) - _log_stirling(mu))
    )


@dataclass(frozen=True)
class ALEApproximation:
    """Piecewise approximate localized eigenfunction and the energy it implies.

    ``x`` and ``psi`` sample psi^app; ``join`` is where the oscillator piece
    hands over to the WKB barrier piece, ``truncation`` where the WKB piece
    stops.  ``derivative_mismatch`` is the relative jump of psi'/psi at the
    join and ``matching_ratio`` compares the continuity-fixed WKB amplitude
    with the asymptotic matching formula (1 when both agree).
    """

    side: str
    level: int
    correction: float
    energy: float
    join: float
    truncation: float
    derivative_mismatch: float
    matching_ratio: float
    x: np.ndarray
    psi: np.ndarray


def _join_distance(p, center, omega, mass, v_bottom, direction, depth, limit, level):
    """Distance from the minimum (toward the barrier) where the WKB piece takes over.

    Edge of the region where V stays within 1% of the well depth of its
    quadratic approximation, but no closer than 1.5 classical turning
    distances, and never past the barrier top.
    """
    d = np.linspace(0.0, limit, 4001)[1:]
    quad = v_bottom + 0.5 * mass * omega**2 * d * d
    bad = np.flatnonzero(np.abs(p(center + direction * d) - quad) > JOIN_FRACTION * depth)
    edge = d[bad[0]] if bad.size else limit
    turning = math.sqrt(2 * level + 1) / math.sqrt(mass * omega)
    return min(limit, max(edge, JOIN_TURNING_FACTOR * turning))


def ale_approximation(p: Potential, w: WellAnalysis, n: int, side: str = "right",
                      check_regime: bool = True, n_grid: int = 8001) -> ALEApproximation:
    """Approximate localized eigenfunction for level ``n`` of one well.

    The oscillator eigenfunction is used from the outer side of the well up
    to the join point, then the WKB branch that grows toward the well
    carries it through the barrier.  The energy estimate follows from the
    harmonic identity with psi^app in place of the exact eigenfunction.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    mass = w.mass
    right = side == "right"
    if right:
        center, omega, v_bottom, direction = w.right_min, w.omega_r, w.v_right, -1.0
        energy = _level_right(w, n)
    else:
        center, omega, v_bottom, direction = w.left_min, w.omega_l, w.v_left, 1.0
        energy = _level_left(w, n)
    if check_regime:
        check_localized(p, w, n, right)
    act = barrier_action(p, w, energy)
    near_turn = act.right_turn if right else act.left_turn
    far_turn = act.left_turn if right else act.right_turn
    length = 1.0 / math.sqrt(mass * omega)
    ho = OscillatorEigenfunction(center, length, n)

    dist = _join_distance(p, center, omega, mass, v_bottom, direction,
                          w.v_barrier - v_bottom, abs(center - w.barrier_top), n)
    join = center + direction * dist
    if direction * (join - near_turn) <= 0:
        raise RegimeError("the join point is not inside the forbidden region")

    # WKB branch on [far_turn, join] sampled in u, x = far_turn + s u^2
    s = 1.0 if join > far_turn else -1.0
    u = np.linspace(0.0, math.sqrt(abs(join - far_turn)), n_grid)
    xw = far_turn + s * u * u
    pw = _momentum(p, mass, energy, xw)
    jac = 2.0 * u
    cum = integrate.cumulative_simpson(pw * jac, x=u, initial=0.0)
    phase = cum[-1] - cum  # integral of p between x and the join
    p_join = float(pw[-1])
    ho_join = float(oscillator_eval(ho, join))
    with np.errstate(divide="ignore"):
        rel = np.where(pw > 0, np.exp(-phase) * np.sqrt(p_join / pw), np.inf)
    wkb = np.where(np.isfinite(rel), ho_join * rel, 0.0)
    # walk out from the join; stop at the turning point or below the cutoff
    stop = np.flatnonzero(~(np.isfinite(rel) & (rel >= TRUNCATE)))
    first = int(stop[-1]) + 1 if stop.size else 0
    first = min(first, n_grid - 3)
    truncation = float(xw[first])

    # log-derivative mismatch at the join
    h = 1e-6 * length
    dv = float(p.derivative(join - direction * h))
    wkb_logder = -direction * p_join - mass * dv / (2.0 * p_join**2)
    ho_der = (float(oscillator_eval(ho, join + h)) - float(oscillator_eval(ho, join - h))) / (2 * h)
    ho_logder = ho_der / ho_join
    mismatch = abs(wkb_logder - ho_logder) / abs(ho_logder)

    # amplitude of the WKB branch referred to the barrier top, against the matching formula
    n_cont = ho_join * math.sqrt(p_join) * math.exp(-_half_action_between(p, mass, energy, join, w.barrier_top))
    s_near = act.s_right if right else act.s_left
    n_formula = (
        (1.0 if right else cospi(n))
        * cospi(n)
        / math.sqrt(math.sqrt(math.pi) * length * math.factorial(n))
        * 2.0**-0.25
        / math.sqrt(length)
        * math.exp(_log_stirling(n) - s_near)
    )
    matching_ratio = n_cont / n_formula

    # harmonic identity: both wells' quadratics are measured from the left bottom
    sl = slice(first, None)
    v_ho = w.v_left + 0.5 * mass * omega**2 * (xw[sl] - center) ** 2
    ho_w = oscillator_eval(ho, xw[sl])
    num_w = integrate.simpson((p(xw[sl]) - v_ho) * wkb[sl] * ho_w * jac[sl], x=u[sl])
    den_w = integrate.simpson(wkb[sl] * ho_w * jac[sl], x=u[sl])

    lo_dom, hi_dom = p.domain
    outer = center - direction * (math.sqrt(2 * n + 1) + 12.0) * length
    outer = min(max(outer, lo_dom), hi_dom)
    lo, hi = sorted((join, outer))

    def num_f(x):
        return (float(p(x)) - w.v_left - 0.5 * mass * omega**2 * (x - center) ** 2) * float(oscillator_eval(ho, x)) ** 2

    def den_f(x):
        return float(oscillator_eval(ho, x)) ** 2

    opts = dict(points=[center], epsabs=1e-15, epsrel=1e-12, limit=400)
    num_h, _ = integrate.quad(num_f, lo, hi, **opts)
    den_h, _ = integrate.quad(den_f, lo, hi, **opts)
    ratio = (num_h + num_w) / (den_h + den_w)

    order = np.argsort(xw[sl])
    return ALEApproximation(
        side=side,
        level=n,
        correction=ratio / omega,
        energy=w.v_left + omega * (n + 0.5) + ratio,
        join=float(join),
        truncation=truncation,
        derivative_mismatch=mismatch,
        matching_ratio=matching_ratio,
        x=xw[sl][order],
        psi=wkb[sl][order],
    )


def check_localized(p, w, n, right):
    """Raise RegimeError when a level of the other well lies within 10 delta_a of level n."""
    pairs = []
    k = 0
    while (_level_left(w, k) if right else _level_right(w, k)) < w.v_barrier:
        mm, nn = (k, n) if right else (n, k)
        pairs.append((abs(delta_epsilon(w, mm, nn)), mm, nn))
        k += 1
    if not pairs:
        return
    d_eps, mm, nn = min(pairs)
    d_a = delta_a(p, w, mm, nn)
    if d_eps < ALE_GATE * d_a:
        raise RegimeError(f"not localized: |delta_eps| = {d_eps:.3e} < {ALE_GATE:g} delta_a = {ALE_GATE * d_a:.3e}")


def _half_action_between(p, mass, energy, x0, x1):
    if x0 == x1:
        return 0.0
    val, _ = integrate.quad(
        lambda y: float(_momentum(p, mass, energy, y)), min(x0, x1), max(x0, x1), epsabs=0.0, epsrel=1e-12, limit=200
    )
    return val


def ale_energy_correction(p: Potential, w: WellAnalysis, n: int, side: str = "right",
                          check_regime: bool = True) -> float:
    """nu - n + eps (right) or mu - m (left) from the approximate localized eigenfunction."""
    return ale_approximation(p, w, n, side, check_regime).correction
