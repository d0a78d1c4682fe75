"""Exact eigenstates of the asymmetric double oscillator.

For x < 0 the eigenfunction is D_mu(-sqrt2 (x + b')), for x >= 0 it is
D_nu(sqrt2 (x - a)), with mu = E - 1/2, nu = E - eps - 1/2 and
b' = sqrt(a^2 + 2 eps) (oscillator units).  Eigenvalues are the energies at
which the two branches join smoothly at x = 0.

Root search works with the Pruefer angles theta = atan2(psi', psi) of the
two branches at x = 0.  theta_R grows and theta_L falls monotonically with
E, so Phi = theta_R - theta_L is monotone and every eigenvalue is a
crossing of Phi with a multiple of pi.  This separates doublets whose
splitting is far below any practical scan step.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.integrate import simpson
from scipy.linalg import eigvalsh_tridiagonal

from .errors import ConvergenceError, DomainError, RegimeError
from .potentials import DoubleOscillator, analyze_wells
from .specfun import pcf_d_array, pcf_d_pair
from .wkb import DoubletSolution, check_localized, ale_approximation, barrier_action, delta_a

__all__ = [
    "MatchingEigenpair",
    "matching_determinant",
    "solve_exact",
    "compare_estimates",
    "node_aligned_window",
    "write_comparison",
    "SCAN_STEP",
]

SQRT2 = math.sqrt(2.0)
SCAN_STEP = 0.02
SCAN_START = 0.1
MAX_STATES = 8
NEAR_DEGENERATE = 1e-9


def _check(eps: float, a_sep: float):
    if eps < 0:
        raise DomainError("eps must be non-negative (mirror the potential instead)")
    if a_sep < 0:
        raise DomainError("a_sep must be non-negative")


def _branches(eps, a_sep, energy):
    """(psi_L, psi_L', psi_R, psi_R') at x = 0, derivatives in x."""
    bp = math.sqrt(a_sep * a_sep + 2.0 * eps)
    mu = energy - 0.5
    nu = energy - eps - 0.5
    dl, dlp = pcf_d_pair(mu, -SQRT2 * bp)
    dr, drp = pcf_d_pair(nu, -SQRT2 * a_sep)
    return dl, -SQRT2 * dlp, dr, SQRT2 * drp


def matching_determinant(eps: float, a_sep: float, energy: float) -> float:
    """psi_L psi_R' - psi_L' psi_R at x = 0, each branch scaled to unit (psi, psi') norm.

    Equals sin(theta_R - theta_L), so it lies in [-1, 1] whatever the size
    of the parabolic cylinder functions.
    """
    _check(eps, a_sep)
    if energy <= 0:
        raise DomainError("energy must be positive")
    l0, l1, r0, r1 = _branches(eps, a_sep, energy)
    return (l0 * r1 - l1 * r0) / (math.hypot(l0, l1) * math.hypot(r0, r1))


def _angles(eps, a_sep, energy):
    l0, l1, r0, r1 = _branches(eps, a_sep, energy)
    return math.atan2(r1, r0), math.atan2(l1, l0)


@dataclass
class MatchingEigenpair:
    """One exact eigenstate.  ``c_left``/``c_right`` multiply the D_mu and D_nu branches."""

    energy: float
    eps: float
    a_sep: float
    c_left: float
    c_right: float
    residual: float
    near_degenerate: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def b_prime(self) -> float:
        return math.sqrt(self.a_sep**2 + 2.0 * self.eps)

    @property
    def nu(self) -> float:
        return self.energy - self.eps - 0.5

    @property
    def mu(self) -> float:
        return self.energy - 0.5

    @property
    def amplitude_ratio(self) -> float:
        """C_L / C_R: ratio of the branch coefficients."""
        return self.c_left / self.c_right

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        left = x < 0
        if left.any():
            out[left] = self.c_left * pcf_d_array(self.mu, -SQRT2 * (x[left] + self.b_prime))[0]
        if (~left).any():
            out[~left] = self.c_right * pcf_d_array(self.nu, SQRT2 * (x[~left] - self.a_sep))[0]
        return out

    def derivative_at_zero(self) -> tuple[float, float]:
        l0, l1, r0, r1 = _branches(self.eps, self.a_sep, self.energy)
        return self.c_left * l1, self.c_right * r1

    def value_at_zero(self) -> tuple[float, float]:
        l0, l1, r0, r1 = _branches(self.eps, self.a_sep, self.energy)
        return self.c_left * l0, self.c_right * r0


def _normalize(eps, a_sep, energy, ratio, reach=14.0, n=4001):
    bp = math.sqrt(a_sep * a_sep + 2.0 * eps)
    xl = np.linspace(-bp - reach, 0.0, n)
    xr = np.linspace(0.0, a_sep + reach, n)
    dl = pcf_d_array(energy - 0.5, -SQRT2 * (xl + bp))[0]
    dr = pcf_d_array(energy - eps - 0.5, SQRT2 * (xr - a_sep))[0]
    norm2 = ratio * ratio * simpson(dl * dl, x=xl) + simpson(dr * dr, x=xr)
    return 1.0 / math.sqrt(norm2)


def _eigenpair(eps, a_sep, energy, near):
    l0, l1, r0, r1 = _branches(eps, a_sep, energy)
    ratio = (r0 * l0 + r1 * l1) / (l0 * l0 + l1 * l1)  # c_L / c_R
    c_right = _normalize(eps, a_sep, energy, ratio)
    c_left = ratio * c_right
    resid = (l0 * r1 - l1 * r0) / (math.hypot(l0, l1) * math.hypot(r0, r1))
    pair = MatchingEigenpair(energy, eps, a_sep, c_left, c_right, resid, near)
    # sign: positive at the first extremum from the left, i.e. on the left branch tail
    probe = pair(np.array([-pair.b_prime - 6.0]))[0]
    if probe < 0 or (probe == 0 and c_right < 0):
        pair.c_left, pair.c_right = -pair.c_left, -pair.c_right
    return pair


def _sturm_count(eps, a_sep, e_max, n=6000):
    p = DoubleOscillator(eps, a_sep)
    lo, hi = p.window
    h = (hi - lo) / (n + 1)
    x = lo + h * np.arange(1, n + 1)
    d = 1.0 / h**2 + p(x)
    e = np.full(n - 1, -0.5 / h**2)
    return eigvalsh_tridiagonal(d, e, select="v", select_range=(-1.0, e_max)).size


def solve_exact(eps: float, a_sep: float, n_states: int = 4, check_count: bool = True) -> list[MatchingEigenpair]:
    """Lowest ``n_states`` eigenpairs by Pruefer-angle bracketing and Brent refinement."""
    _check(eps, a_sep)
    if not 1 <= n_states <= MAX_STATES:
        raise DomainError(f"n_states must be in 1..{MAX_STATES}")
    e_hi = n_states + 1.5 + eps
    grid = np.arange(SCAN_START, e_hi + SCAN_STEP, SCAN_STEP)
    raw = np.array([_angles(eps, a_sep, e) for e in grid])
    two_pi = 2.0 * math.pi
    # directed unwrapping: theta_R only increases, theta_L only decreases
    th_r = raw[0, 0] + np.concatenate(([0.0], np.cumsum(np.mod(np.diff(raw[:, 0]), two_pi))))
    th_l = raw[0, 1] - np.concatenate(([0.0], np.cumsum(np.mod(-np.diff(raw[:, 1]), two_pi))))
    phi = th_r - th_l

    roots = []
    for k in range(grid.size - 1):
        j_lo = math.floor(phi[k] / math.pi)
        j_hi = math.floor(phi[k + 1] / math.pi)
        if j_hi == j_lo:
            continue

        def f(e, k=k):
            r, l = _angles(eps, a_sep, e)
            tr = th_r[k] + (r - raw[k, 0]) % two_pi
            tl = th_l[k] - (raw[k, 1] - l) % two_pi
            return tr - tl

        for j in range(j_lo + 1, j_hi + 1):
            target = j * math.pi
            root = optimize.brentq(lambda e: f(e) - target, grid[k], grid[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=300)
            roots.append(root)
        if len(roots) >= n_states + 1:
            break
    if len(roots) < n_states:
        raise ConvergenceError(f"found {len(roots)} eigenvalues below {e_hi:.2f}, expected {n_states}")
    roots = sorted(roots)
    if check_count and len(roots) > n_states and roots[n_states] - roots[n_states - 1] > 1e-3:
        e_cut = 0.5 * (roots[n_states - 1] + roots[n_states])
        count = _sturm_count(eps, a_sep, e_cut)
        if count != n_states:
            raise ConvergenceError(f"Sturm count {count} below E = {e_cut:.4f} disagrees with {n_states} roots")
    out = []
    for i in range(n_states):
        gaps = [abs(roots[i] - roots[j]) for j in (i - 1, i + 1) if 0 <= j < len(roots)]
        out.append(_eigenpair(eps, a_sep, roots[i], min(gaps) < NEAR_DEGENERATE))
    return out


def _assignments(eps, n_states):
    """Localized character of each state in the large-separation limit: (side, level)."""
    levels = []
    for k in range(n_states):
        levels.append((k + 0.5, 0, "left", k))
        levels.append((k + eps + 0.5, 1, "right", k))
    levels.sort()
    return [(side, k) for _, _, side, k in levels[:n_states]]


def node_aligned_window(p: DoubleOscillator, grid_points: int = 2000) -> tuple[float, float]:
    """Window whose coarsest grid (and so every nested grid) has a node at the kink x = 0.

    The upper edge moves outward by less than one grid step.  With the
    kink between nodes the Richardson error stalls near 1e-7.
    """
    lo, hi = p.window
    k = math.floor(-lo * (grid_points + 1) / (hi - lo))
    h = -lo / k
    return lo, lo + h * (grid_points + 1)


def compare_estimates(eps: float, a_values, n_states: int = 4, grid: bool = False) -> list[dict]:
    """Exact, ALE and TLS eigenvalues along a scan of the separation a.

    ALE: each state is treated as localized in the well given by the
    large-separation ordering, with turning points at that oscillator
    level.  TLS: consecutive states (2k, 2k+1) form the doublet of left
    level k and right level k with turning points of the symmetric
    potential at (k + 1/2).  Entries that cannot be formed are None; the
    ``*_valid`` flags record the ALE localization gate and the TLS
    below-barrier condition.
    """
    from .eigensolver import solve_spectrum

    rows = []
    assign = _assignments(eps, n_states)
    for a in a_values:
        a = float(a)
        row = {"a": a, "eps": eps}
        exact = solve_exact(eps, a, n_states)
        row["exact"] = [s.energy for s in exact]
        row["ratio"] = 2.0 * eps / (exact[1].energy - exact[0].energy)
        if grid:
            q = DoubleOscillator(eps, a)
            row["grid"] = list(solve_spectrum(q, n_states, window=node_aligned_window(q)).energies)
        p = DoubleOscillator(eps, a)
        w = analyze_wells(p) if a > 0 else None
        ale, ale_ok = [], []
        for side, k in assign:
            val, ok = None, False
            if w is not None:
                try:
                    val = ale_approximation(p, w, k, side, check_regime=False).energy
                except (RegimeError, ValueError):
                    val = None
                if val is not None:
                    try:
                        check_localized(p, w, k, side == "right")
                        ok = True
                    except RegimeError:
                        ok = False
            ale.append(val)
            ale_ok.append(ok)
        row["ale"], row["ale_valid"] = ale, ale_ok

        tls, tls_ok = [None] * n_states, [False] * n_states
        if w is not None:
            sym = DoubleOscillator(0.0, a)
            w0 = analyze_wells(sym)
            for k in range(n_states // 2):
                try:
                    act = barrier_action(sym, w0, k + 0.5)
                    d = DoubletSolution.from_deltas(eps, delta_a(p, w, k, k, act), k, k, 1.0, base_energy=k + eps + 0.5)
                except RegimeError:
                    continue
                tls[2 * k], tls[2 * k + 1] = d.energies
                tls_ok[2 * k] = tls_ok[2 * k + 1] = True
        row["tls"], row["tls_valid"] = tls, tls_ok
        rows.append(row)
    return rows


def write_comparison(rows: list[dict], path, n_states: int = 4) -> Path:
    """CSV with columns a, E_i, ALE_i, TLS_i, ratio (one row per separation)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["a"] + [f"E_{i}" for i in range(n_states)] + [f"ALE_{i}" for i in range(n_states)]
    header += [f"TLS_{i}" for i in range(n_states)] + ["ratio_2eps_gap"]

    def fmt(v):
        return "" if v is None else f"{v:.12g}"

    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["# units: length l_ho, energy hbar*omega"])
        wr.writerow(header)
        for r in rows:
            wr.writerow([fmt(r["a"])] + [fmt(v) for v in r["exact"]] + [fmt(v) for v in r["ale"]]
                        + [fmt(v) for v in r["tls"]] + [fmt(r["ratio"])])
    return path
