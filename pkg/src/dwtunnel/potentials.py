"""Double-well potentials and extraction of their well geometry.

Internal units have hbar = 1.  Quartic and double-oscillator potentials use
oscillator units (length l_ho, energy hbar*omega, mass 1); lattice
potentials use recoil units (length 1/k, energy E_R, mass 1/2).  The
``Units.kinetic`` field holds hbar^2/2m in the potential's own units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants, optimize
from scipy.interpolate import CubicSpline

from .errors import DomainError, StructureError

__all__ = [
    "Units",
    "OSCILLATOR_UNITS",
    "LATTICE_UNITS",
    "Potential",
    "Quartic",
    "QUARTIC_TILT",
    "Lattice",
    "DoubleOscillator",
    "Tabulated",
    "WellAnalysis",
    "evaluate",
    "analyze_wells",
    "gravity_tilt_ratio",
    "CESIUM_133_MASS",
    "RUBIDIUM_87_MASS",
]

ATOMIC_MASS = constants.physical_constants["atomic mass constant"][0]
CESIUM_133_MASS = 132.905 * ATOMIC_MASS
RUBIDIUM_87_MASS = 86.909 * ATOMIC_MASS


@dataclass(frozen=True)
class Units:
    length: str
    energy: str
    kinetic: float

    @property
    def mass(self) -> float:
        return 1.0 / (2.0 * self.kinetic)


OSCILLATOR_UNITS = Units("l_ho", "hbar*omega", 0.5)
LATTICE_UNITS = Units("1/k", "E_R", 1.0)


class Potential:
    """Base class: a real potential on ``domain`` with a default solve window.

    Subclasses implement ``_value``, ``_d1`` and ``_d2`` on numpy arrays.
    ``hard_walls`` marks potentials whose window edges are physical
    Dirichlet walls (the eigensolver never moves them).
    """

    units: Units = OSCILLATOR_UNITS
    domain: tuple[float, float] = (-math.inf, math.inf)
    window: tuple[float, float] = (-8.0, 8.0)
    hard_walls: bool = False
    kind: str = "abstract"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(x < lo) or np.any(x > hi):
            raise DomainError(f"x outside the {self.kind} domain [{lo}, {hi}]")
        out = self._value(x)
        return float(out) if out.ndim == 0 else out

    def derivative(self, x, order: int = 1):
        x = np.asarray(x, dtype=float)
        out = self._d1(x) if order == 1 else self._d2(x)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def mass(self) -> float:
        return self.units.mass

    def params(self) -> dict:
        return {}

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            **self.params(),
            "units": {"length": self.units.length, "energy": self.units.energy},
            "window": list(self.window),
        }

    # closed-form kinds override these when stationary points are analytic
    def stationary_points(self):
        return None

    def _value(self, x):
        raise NotImplementedError

    def _d1(self, x):
        raise NotImplementedError

    def _d2(self, x):
        raise NotImplementedError


QUARTIC_TILT = 1.0 / (4.0 * math.sqrt(3.0))


class Quartic(Potential):
    """hbar w [-x^2/4 + x^4/96 + t alpha x + C(alpha)], x in l_ho.

    ``C(alpha)`` shifts the global minimum to zero.  The tilt coefficient
    ``t`` defaults to 1/(4 sqrt 3), which places the minimum of E_2 - E_1
    (right-well ground level meeting the left-well first excited level) at
    alpha = 1.00; half that coefficient moves the same crossing to
    alpha = 2.00.
    """

    kind = "quartic"

    def __init__(self, alpha: float = 0.0, window=(-8.0, 8.0), tilt_coefficient: float = QUARTIC_TILT):
        self.alpha = float(alpha)
        self.tilt_coefficient = float(tilt_coefficient)
        self.window = tuple(float(w) for w in window)
        self.offset = -min(self._raw(r) for r in self._critical_points())

    def _critical_points(self):
        # x^3 - 12 x + 24 t alpha = 0
        roots = np.roots([1.0, 0.0, -12.0, 24.0 * self.tilt_coefficient * self.alpha])
        real = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
        return [optimize.newton(self._d1, r, fprime=self._d2, tol=1e-15, maxiter=50) for r in real]

    def _raw(self, x):
        return -x * x / 4.0 + x**4 / 96.0 + self.tilt_coefficient * self.alpha * x

    def _value(self, x):
        return self._raw(x) + self.offset

    def _d1(self, x):
        return -x / 2.0 + x**3 / 24.0 + self.tilt_coefficient * self.alpha

    def _d2(self, x):
        return -0.5 + x * x / 8.0

    def stationary_points(self):
        return self._critical_points()

    def params(self):
        return {"alpha": self.alpha, "tilt_coefficient": self.tilt_coefficient}


class Lattice(Potential):
    """C E_R [cos^2 u + xi cos^2(u/2) - xi/2 + xi^2/16] + tilt * u, u = kx.

    The solve window is the single cell [0, 2 pi] with hard walls.
    ``tilt`` is the linear term in E_R per unit of kx.
    """

    kind = "lattice"
    units = LATTICE_UNITS
    hard_walls = True

    def __init__(self, depth: float = 10.0, xi: float = 0.5, tilt: float = 0.0):
        self.depth = float(depth)
        self.xi = float(xi)
        self.tilt = float(tilt)
        self.domain = (0.0, 2.0 * math.pi)
        self.window = self.domain

    @classmethod
    def with_gravity(cls, depth, xi, mass, wavelength, g=9.80, beta=1.0) -> "Lattice":
        """Lattice tilted by m beta g x for a species of ``mass`` (kg)."""
        ratio = gravity_tilt_ratio(mass, wavelength, g)
        # (m g lambda / 2) / E_R is the tilt across kx = pi
        return cls(depth, xi, beta * ratio / math.pi)

    def _value(self, u):
        c, xi = self.depth, self.xi
        return c * (np.cos(u) ** 2 + xi * np.cos(u / 2) ** 2 - xi / 2 + xi * xi / 16) + self.tilt * u

    def _d1(self, u):
        return self.depth * (-np.sin(2 * u) - 0.5 * self.xi * np.sin(u)) + self.tilt

    def _d2(self, u):
        return self.depth * (-2.0 * np.cos(2 * u) - 0.5 * self.xi * np.cos(u))

    def params(self):
        return {"depth": self.depth, "xi": self.xi, "tilt": self.tilt}


class DoubleOscillator(Potential):
    """Two half-parabolas of frequency omega joined at x = 0.

    Left: (x + b')^2 / 2, right: (x - a)^2 / 2 + eps, with
    b' = sqrt(a^2 + 2 eps) so that V is continuous at 0.
    """

    kind = "double_oscillator"

    def __init__(self, eps: float = 0.0, a_sep: float = 3.0, margin: float = 9.0):
        if eps < 0:
            raise DomainError("negative eps: mirror the potential instead")
        if a_sep < 0:
            raise DomainError("a_sep must be non-negative")
        self.eps = float(eps)
        self.a_sep = float(a_sep)
        self.b_prime = math.sqrt(self.a_sep**2 + 2.0 * self.eps)
        self.window = (-self.b_prime - margin, self.a_sep + margin)

    def _value(self, x):
        return np.where(x < 0, 0.5 * (x + self.b_prime) ** 2, 0.5 * (x - self.a_sep) ** 2 + self.eps)

    def _d1(self, x):
        return np.where(x < 0, x + self.b_prime, x - self.a_sep)

    def _d2(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def params(self):
        return {"eps": self.eps, "a_sep": self.a_sep}


class Tabulated(Potential):
    """Cubic-spline interpolant of sampled (x, V) values."""

    kind = "tabulated"

    def __init__(self, x, v, units: Units = OSCILLATOR_UNITS):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise StructureError("x and V samples must be 1D arrays of equal length")
        if x.size < 200:
            raise StructureError(f"tabulated potential needs >= 200 samples, got {x.size}")
        if np.any(np.diff(x) <= 0):
            raise StructureError("tabulated abscissae must be strictly increasing")
        self.x = x
        self.v = v
        self.units = units
        self.domain = (float(x[0]), float(x[-1]))
        self.window = self.domain
        self._spline = CubicSpline(x, v)
        self._h = float(np.min(np.diff(x)))

    @classmethod
    def from_potential(cls, p: Potential, n: int = 2001, window=None) -> "Tabulated":
        lo, hi = window or p.window
        x = np.linspace(lo, hi, n)
        return cls(x, p(x), p.units)

    def _value(self, x):
        return self._spline(x)

    def _d1(self, x):
        return self._spline(x, 1)

    def _d2(self, x):
        # 5-point stencil on the interpolant
        h = self._h
        f = self._spline
        return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)

    def stationary_points(self):
        return list(self._spline.derivative().roots(extrapolate=False))

    def params(self):
        return {"n_samples": int(self.x.size)}


def evaluate(p: Potential, x):
    """V(x) in the potential's energy units."""
    return p(x)


@dataclass(frozen=True)
class WellAnalysis:
    """Geometry of a double well: minima, barrier top, frequencies, offset.

    Positions are absolute coordinates; ``a`` and ``b`` are the distances of
    the right and left minima from the barrier top.  ``epsilon`` is the
    right-bottom offset in units of hbar*omega_r.
    """

    left_min: float
    right_min: float
    barrier_top: float
    omega_l: float
    omega_r: float
    v_left: float
    v_right: float
    v_barrier: float
    mass: float = 1.0
    epsilon: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "epsilon", (self.v_right - self.v_left) / self.omega_r)

    @property
    def a(self) -> float:
        return self.right_min - self.barrier_top

    @property
    def b(self) -> float:
        return self.barrier_top - self.left_min

    @property
    def l_l(self) -> float:
        return 1.0 / math.sqrt(self.mass * self.omega_l)

    @property
    def l_r(self) -> float:
        return 1.0 / math.sqrt(self.mass * self.omega_r)

    @property
    def barrier_height_left(self) -> float:
        return self.v_barrier - self.v_left

    @property
    def barrier_height_right(self) -> float:
        return self.v_barrier - self.v_right

    def harmonic_right(self, x):
        """Right-well quadratic m w_r^2 (x-a)^2 / 2 measured from the left bottom."""
        return self.v_left + 0.5 * self.mass * self.omega_r**2 * (np.asarray(x) - self.right_min) ** 2

    def harmonic_left(self, x):
        return self.v_left + 0.5 * self.mass * self.omega_l**2 * (np.asarray(x) - self.left_min) ** 2


def _bracketed_stationary_points(p: Potential, n_scan: int = 4001):
    lo, hi = p.window
    xs = np.linspace(lo, hi, n_scan)
    d = p.derivative(xs)
    pts = []
    for i in range(n_scan - 1):
        if d[i] == 0.0:
            pts.append(xs[i])
        elif d[i] * d[i + 1] < 0:
            r = optimize.brentq(p.derivative, xs[i], xs[i + 1], xtol=1e-15)
            pts.append(r)
    return pts


def _polish(p: Potential, x: float) -> float:
    # safeguarded Newton: keep the step only if it lowers |V'|
    for _ in range(20):
        d1 = p.derivative(x)
        if abs(d1) <= 1e-13:
            break
        d2 = p.derivative(x, 2)
        if d2 == 0:
            break
        trial = x - d1 / d2
        if abs(p.derivative(trial)) >= abs(d1):
            break
        x = trial
    return float(x)


def analyze_wells(p: Potential) -> WellAnalysis:
    """Locate the two minima and the barrier top between them.

    Stationary points outside the pair of minima are ignored; anything
    other than two minima with exactly one maximum between them raises
    :class:`StructureError`.
    """
    if isinstance(p, DoubleOscillator):
        # piecewise quadratic: the barrier top is the cusp at x = 0
        return WellAnalysis(
            left_min=-p.b_prime,
            right_min=p.a_sep,
            barrier_top=0.0,
            omega_l=1.0,
            omega_r=1.0,
            v_left=0.0,
            v_right=p.eps,
            v_barrier=float(p(0.0)),
            mass=p.mass,
        )
    pts = p.stationary_points()
    if pts is None:
        pts = _bracketed_stationary_points(p)
    lo, hi = p.window
    pts = sorted(_polish(p, x) for x in pts if lo < x < hi)
    curv = [p.derivative(x, 2) for x in pts]
    minima = [x for x, c in zip(pts, curv) if c > 0]
    if len(minima) != 2:
        raise StructureError(f"expected two local minima, found {len(minima)}")
    left, right = minima
    maxima = [x for x, c in zip(pts, curv) if c < 0 and left < x < right]
    if len(maxima) != 1:
        raise StructureError(f"expected one barrier maximum between the wells, found {len(maxima)}")
    top = maxima[0]
    m = p.mass
    return WellAnalysis(
        left_min=left,
        right_min=right,
        barrier_top=top,
        omega_l=math.sqrt(p.derivative(left, 2) / m),
        omega_r=math.sqrt(p.derivative(right, 2) / m),
        v_left=float(p(left)),
        v_right=float(p(right)),
        v_barrier=float(p(top)),
        mass=m,
    )


def gravity_tilt_ratio(mass: float, wavelength: float, g: float) -> float:
    """(m g lambda / 2) / E_R with E_R = (hbar k)^2 / 2m, k = 2 pi / lambda.

    SI inputs: kg, m, m/s^2.
    """
    if mass <= 0 or wavelength <= 0 or g <= 0:
        raise DomainError("mass, wavelength and g must be positive")
    k = 2.0 * math.pi / wavelength
    e_recoil = (constants.hbar * k) ** 2 / (2.0 * mass)
    return mass * g * wavelength / 2.0 / e_recoil
