"""Reference grid solver for -(hbar^2/2m) psi'' + V psi = E psi.

Second-order finite differences on three nested uniform grids (spacing h,
h/2, h/4) with Dirichlet walls.  The lowest eigenvalues of each symmetric
tridiagonal matrix come from LAPACK bisection (stebz); eigenvectors on the
finest grid from inverse iteration (stein).  Two levels of Richardson
extrapolation remove the h^2 and h^4 error terms.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DegenerateError, DomainError
from .potentials import Potential, WellAnalysis
from .specfun import OscillatorEigenfunction, oscillator_eval

__all__ = [
    "Spectrum",
    "solve_spectrum",
    "sine_basis_spectrum",
    "overlap",
    "energy_identity_check",
    "identity_residual",
    "sign_changes",
    "write_spectrum",
]

MAX_STATES = 12
MIN_GRID = 500
BOUNDARY_GATE = 1e-6


@dataclass
class Spectrum:
    """Lowest eigenpairs on a uniform grid (walls included, where psi = 0)."""

    x: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray  # shape (n_states, len(x))
    error_estimate: np.ndarray
    window: tuple[float, float]
    potential: Potential | None = None

    @property
    def units(self) -> dict:
        if self.potential is None:
            return {}
        return {"length": self.potential.units.length, "energy": self.potential.units.energy}

    @property
    def n_states(self) -> int:
        return len(self.energies)

    @property
    def grid_points(self) -> int:
        """Interior nodes of the coarsest of the three nested grids."""
        return (self.x.size - 5) // 4

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def state(self, i: int) -> np.ndarray:
        return self.vectors[i]


def _trapz(y, x):
    return np.trapezoid(y, x)


def overlap(phi, psi, x) -> float | complex:
    """Trapezoid-rule <phi|psi> on the shared grid ``x``."""
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    if phi.shape != psi.shape or phi.shape[-1] != len(x):
        raise DomainError("overlap needs vectors on the same grid")
    val = _trapz(np.conj(phi) * psi, x)
    return complex(val) if np.iscomplexobj(val) else float(val)


def sign_changes(v, rel: float = 1e-7) -> int:
    """Number of sign changes of ``v``, ignoring entries below rel*max|v|."""
    v = np.asarray(v)
    big = v[np.abs(v) > rel * np.max(np.abs(v))]
    return int(np.count_nonzero(np.signbit(big[1:]) != np.signbit(big[:-1])))


def _tridiagonal(p: Potential, lo: float, hi: float, n: int):
    h = (hi - lo) / (n + 1)
    x = lo + h * np.arange(1, n + 1)
    k = p.units.kinetic
    diag = 2.0 * k / h**2 + p(x)
    off = np.full(n - 1, -k / h**2)
    return x, h, diag, off


def _lowest(p, lo, hi, n, n_states, vectors=False):
    x, h, d, e = _tridiagonal(p, lo, hi, n)
    # tiny abstol asks stebz for full bisection accuracy instead of eps * |T|
    res = eigh_tridiagonal(
        d, e, eigvals_only=not vectors, select="i", select_range=(0, n_states - 1), lapack_driver="stebz",
        tol=2 * np.finfo(float).tiny,
    )
    return (x, h, res) if vectors else res


def _fix_sign(v):
    big = np.flatnonzero(np.abs(v) > 1e-3 * np.max(np.abs(v)))
    return -v if v[big[0]] < 0 else v


def _boundary_leak(vectors, frac=0.02):
    n = vectors.shape[1]
    edge = max(2, int(frac * n))
    peak = np.max(np.abs(vectors), axis=1)
    left = np.max(np.abs(vectors[:, :edge]), axis=1)
    right = np.max(np.abs(vectors[:, -edge:]), axis=1)
    return float(np.max(np.maximum(left, right) / peak))


def solve_spectrum(
    p: Potential,
    n_states: int = 4,
    grid_points: int = 2000,
    tol: float = 1e-6,
    window: tuple[float, float] | None = None,
    max_extensions: int = 4,
) -> Spectrum:
    """Lowest ``n_states`` eigenpairs of ``p`` with Dirichlet walls.

    ``grid_points`` is the number of interior nodes on the coarsest grid.
    For potentials without physical walls the window is widened until the
    eigenfunctions are below 1e-6 of their peak in the outer 2% on each
    side; ``DomainError`` is raised when that cannot be achieved.
    ``ConvergenceError`` is raised when the extrapolation error estimate
    exceeds ``tol`` (in the potential's energy units).
    """
    if not 1 <= n_states <= MAX_STATES:
        raise DomainError(f"n_states must be in 1..{MAX_STATES}")
    if grid_points < MIN_GRID:
        raise DomainError(f"grid_points must be >= {MIN_GRID}")
    lo, hi = window or p.window
    n = grid_points
    for attempt in range(max_extensions + 1):
        n1, n2, n3 = n, 2 * n + 1, 4 * n + 3
        e1 = _lowest(p, lo, hi, n1, n_states)
        e2 = _lowest(p, lo, hi, n2, n_states)
        x3, h3, (e3, vec) = _lowest(p, lo, hi, n3, n_states, vectors=True)
        leak = _boundary_leak(vec.T)
        if leak <= BOUNDARY_GATE or p.hard_walls:
            break
        if attempt == max_extensions or np.isfinite(p.domain[0]) or np.isfinite(p.domain[1]):
            raise DomainError(f"eigenfunctions reach the window edge (relative amplitude {leak:.2e})")
        width = hi - lo
        lo, hi = lo - 0.25 * width, hi + 0.25 * width
        n = int(math.ceil(1.5 * n))

    r1 = (4.0 * e2 - e1) / 3.0
    r2 = (4.0 * e3 - e2) / 3.0
    energies = r2 + (r2 - r1) / 15.0
    # truncation part plus the rounding floor of the finest matrix (weights 64, -20, 1 over 45)
    t_norm = float(np.max(np.abs(p(x3)))) + 4.0 * p.units.kinetic / h3**2
    err = np.abs(r2 - r1) / 15.0 + 2.0 * np.finfo(float).eps * t_norm
    if np.any(err > tol):
        raise ConvergenceError(f"extrapolation error estimate {err.max():.2e} exceeds tolerance {tol:.1e}")

    x = np.concatenate(([lo], x3, [hi]))
    vectors = np.zeros((n_states, x.size))
    for i in range(n_states):
        v = _fix_sign(vec[:, i])
        v = v / math.sqrt(h3 * np.sum(v * v))
        vectors[i, 1:-1] = v
    return Spectrum(
        x=x,
        energies=energies,
        vectors=vectors,
        error_estimate=err,
        window=(lo, hi),
        potential=p,
    )


def sine_basis_spectrum(p: Potential, n_states: int, n_basis: int = 300, window=None, n_quad: int = 6000):
    """Eigenvalues in a particle-in-a-box sine basis (independent check)."""
    lo, hi = window or p.window
    length = hi - lo
    # Gauss-Legendre nodes for the potential matrix elements
    t, w = special.roots_legendre(n_quad)
    xq = lo + 0.5 * length * (t + 1.0)
    wq = 0.5 * length * w
    k = np.arange(1, n_basis + 1)
    basis = math.sqrt(2.0 / length) * np.sin(np.outer(xq - lo, k) * math.pi / length)
    vmat = basis.T @ (basis * (wq * p(xq))[:, None])
    h = vmat + np.diag(p.units.kinetic * (k * math.pi / length) ** 2)
    return np.linalg.eigvalsh(h)[:n_states]


def _wall_slopes(phi, h):
    """One-sided fourth-order phi' at both walls (phi vanishes there)."""
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    return float(c @ phi[:5]), float(-(c @ phi[::-1][:5]))


def _identity_terms(s: Spectrum, well: WellAnalysis, i: int, n: int):
    x = s.x
    ho = oscillator_eval(OscillatorEigenfunction(well.right_min, well.l_r, n), x)
    phi = s.vectors[i]
    overlap_ = _trapz(phi * ho, x)
    v_quad = 0.5 * well.mass * well.omega_r**2 * (x - well.right_min) ** 2
    coupling = _trapz((s.potential(x) - v_quad) * phi * ho, x)
    # -k [psi_n phi']: nonzero when psi_n has not decayed at a wall
    d_lo, d_hi = _wall_slopes(phi, s.dx)
    wall = -s.potential.units.kinetic * (ho[-1] * d_hi - ho[0] * d_lo)
    return overlap_, coupling + wall, well.omega_r * (n + 0.5)


def energy_identity_check(s: Spectrum, well: WellAnalysis, i: int, n: int, min_overlap: float = 1e-6) -> float:
    """Eigenvalue estimate hbar w_r (n + 1/2) + <psi_n|V - V_ho|phi_i> / <psi_n|phi_i>.

    ``psi_n`` is the oscillator eigenfunction centred on the right minimum
    with the right-well width; ``V_ho`` is the pure right-well quadratic.
    The identity is exact for an exact eigenfunction, so the returned value
    differs from ``s.energies[i]`` only by discretisation error, divided by
    the overlap.  With hard walls the surface term -k psi_n phi' is included.
    """
    ov, num, level = _identity_terms(s, well, i, n)
    if abs(ov) < min_overlap:
        raise DegenerateError(f"<psi_{n}|phi_{i}> = {ov:.2e} is below the overlap gate")
    return level + num / ov


def identity_residual(s: Spectrum, well: WellAnalysis, i: int, n: int) -> float:
    """(E_i - hbar w_r (n + 1/2)) <psi_n|phi_i> - <psi_n|V - V_ho|phi_i>, without the overlap division."""
    ov, num, level = _identity_terms(s, well, i, n)
    return (s.energies[i] - level) * ov - num


def write_spectrum(s: Spectrum, out_dir, stem: str = "spectrum") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (x, phi_0..phi_k) and ``<stem>.json`` (header)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    cols = ["x"] + [f"phi_{i}" for i in range(s.n_states)]
    data = np.column_stack([s.x, s.vectors.T])
    u = s.units
    units = f"# units: length {u.get('length', '?')}, energy {u.get('energy', '?')}\n"
    np.savetxt(csv_path, data, delimiter=",", header=units + ",".join(cols), comments="", fmt="%.12e")
    header = {
        "eigenvalues": [float(e) for e in s.energies],
        "error_estimate": [float(e) for e in s.error_estimate],
        "units": s.units,
        "grid": {"points": int(s.x.size), "window": list(s.window), "dx": s.dx},
        "potential": s.potential.descriptor() if s.potential is not None else {},
    }
    json_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path
