"""End-to-end reproduction pipelines behind ``dwtunnel reproduce``.

Each pipeline returns a :class:`Report` holding named checks with their
tolerances, and writes its curves as CSV into an output directory when
one is given.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from .config import ConfigError
from .doubleosc import compare_estimates
from .dynamics import GaussianPacket, evolve_two_state, project, superposition
from .eigensolver import overlap, solve_spectrum
from .errors import DWTunnelError
from .potentials import (
    CESIUM_133_MASS,
    DoubleOscillator,
    Lattice,
    Quartic,
    analyze_wells,
    gravity_tilt_ratio,
)
from .wkb import barrier_action, delta_a, visibility

__all__ = ["Check", "Report", "reproduce", "TARGETS", "worker_count", "ordered_map"]

WORKERS_ENV = "DWTUNNEL_WORKERS"
ALPHA_0 = 0.985
CESIUM_WAVELENGTH = 811e-9
CESIUM_G = 9.80
FIG3_EPS = (0.01, 0.3, 0.5)
RESOLVABLE = 1e-12


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn, items, workers: int | None = None) -> list:
    """map() over a process pool; results come back in input order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class Check:
    name: str
    value: float
    expected: float | None
    tolerance: str
    passed: bool

    def line(self) -> str:
        exp = "" if self.expected is None else f" (expected {self.expected:g}, {self.tolerance})"
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.6g}{exp}"


@dataclass
class Report:
    target: str
    checks: list[Check] = field(default_factory=list)
    values: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, expected=None, rel=None, abs_=None, ok=None):
        if ok is None:
            if rel is not None:
                ok = abs(value - expected) <= rel * abs(expected)
                tol = f"+-{rel:.0%}" if rel >= 0.01 else f"rel {rel:g}"
            else:
                ok = abs(value - expected) <= abs_
                tol = f"+-{abs_:g}"
        else:
            tol = "see notes" if expected is None else "criterion"
        self.checks.append(Check(name, float(value), expected, tol, bool(ok)))

    def to_json(self) -> dict:
        return {
            "target": self.target,
            "passed": self.passed,
            "checks": [c.__dict__ for c in self.checks],
            "values": self.values,
            "notes": self.notes,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{self.target}_report.json"
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True, default=float) + "\n")
        return path


def _write_csv(path: Path, header, rows, units: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# units: {units}\n")
        wr = csv.writer(fh)
        wr.writerow(header)
        for r in rows:
            wr.writerow(["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v) for v in r])


# lattice --------------------------------------------------------------------

def lattice(out_dir=None) -> Report:
    rep = Report("lattice")
    t0 = time.perf_counter()
    s = solve_spectrum(Lattice(10.0, 0.5, 0.0), 3)
    elapsed = time.perf_counter() - t0
    e0, e1, e2 = s.energies
    rep.add("E1-E0 [E_R]", e1 - e0, 0.122, rel=0.02)
    rep.add("E1+E0 [E_R]", e1 + e0, 5.70, rel=0.01)
    rep.add("E2 [E_R]", e2, 7.27, rel=0.01)
    rep.add("runtime [s]", elapsed, 10.0, ok=elapsed < 10.0)
    rep.values = {"energies": [float(e) for e in s.energies], "error_estimate": [float(e) for e in s.error_estimate]}
    if out_dir is not None:
        _write_csv(Path(out_dir) / "lattice_eigenvalues.csv", ["i", "E_i"], [(i, float(e)) for i, e in enumerate(s.energies)],
                   "energy E_R")
    return rep


# cesium ---------------------------------------------------------------------

def cesium_overlaps(width_scale: float = 1.0, factors=(0.759, 1.00)):
    p = Lattice.with_gravity(10.0, 0.5, CESIUM_133_MASS, CESIUM_WAVELENGTH, CESIUM_G, beta=1.0)
    w = analyze_wells(p)
    s = solve_spectrum(p, 3)
    phi1 = s.vectors[1]
    out = []
    for f in factors:
        g = GaussianPacket(w.right_min, w.l_r * width_scale, f)(s.x)
        out.append(overlap(g, phi1, s.x) ** 2)
    return out, w, s


def cesium(out_dir=None) -> Report:
    rep = Report("cesium")
    ratio = gravity_tilt_ratio(CESIUM_133_MASS, CESIUM_WAVELENGTH, CESIUM_G)
    flat = solve_spectrum(Lattice(10.0, 0.5, 0.0), 2)
    split = flat.energies[1] - flat.energies[0]
    rep.add("m g lambda/2 / E_R", ratio, 0.580, abs_=0.002)
    rep.add("ratio to E1-E0", ratio / split, 4.75, rel=0.02)
    (o1, o2), w, s = cesium_overlaps()
    rep.add("|<phi(0.759)|phi_1>|^2", o1, 0.980, abs_=0.005)
    rep.add("|<phi(1.00)|phi_1>|^2", o2, 0.945, abs_=0.005)

    # diagnostic: width scale c (l_r -> c l_r) that reproduces both overlaps
    def miss(c):
        a, b = cesium_overlaps(c)[0]
        return (a - 0.980) ** 2 + (b - 0.945) ** 2

    fit = optimize.minimize_scalar(miss, bounds=(0.8, 2.0), method="bounded", options={"xatol": 1e-4})
    best = cesium_overlaps(fit.x)[0]
    rep.values = {
        "tilt_ratio": ratio,
        "untilted_splitting": float(split),
        "overlaps": [o1, o2],
        "right_min": w.right_min,
        "l_r": w.l_r,
        "width_scale_fit": float(fit.x),
        "overlaps_at_fit": best,
        "energies": [float(e) for e in s.energies],
    }
    rep.notes.append(
        f"packet width f*l_r with l_r^-4 = m V''(x_r)/hbar^2; a width scale of {fit.x:.3f} on l_r "
        f"gives overlaps {best[0]:.4f}, {best[1]:.4f}"
    )
    if out_dir is not None:
        fs = np.round(np.arange(0.5, 1.6001, 0.01), 4)
        vals, _, _ = cesium_overlaps(1.0, fs)
        _write_csv(Path(out_dir) / "cesium_overlaps.csv", ["f", "overlap_sq"], [(float(f), float(v)) for f, v in zip(fs, vals)],
                   "length 1/k, energy E_R")
    return rep


# fig 1 ----------------------------------------------------------------------

def _gap21(alpha):
    e = solve_spectrum(Quartic(alpha), 3).energies
    return float(e[2] - e[1])


def find_alpha_1(lo=0.9, hi=1.1) -> tuple[float, float]:
    """Location and value of the minimum of E_2 - E_1 over [lo, hi]."""
    grid = np.linspace(lo, hi, 21)
    gaps = [_gap21(a) for a in grid]
    k = int(np.argmin(gaps))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = optimize.minimize_scalar(_gap21, bounds=(a, b), method="bounded", options={"xatol": 1e-6})
    return float(res.x), float(res.fun)


def _fig1_point(args):
    alpha, e01_sym, alpha1, v_alpha1, gap1 = args
    try:
        p = Quartic(alpha)
        s = solve_spectrum(p, 4)
        w = analyze_wells(p)
        probs = project(GaussianPacket.at_right_minimum(w), s).probabilities
        v_right = float(p(w.right_min))
        vis_c = evolve_two_state(s, 0, 1, probs[:2], x_c=w.barrier_top).visibility
        vis_d = evolve_two_state(s, 1, 2, probs[1:3], x_c=w.barrier_top).visibility
        est_c = visibility(2.0 * v_right / e01_sym, 1.0)
        est_d = visibility(2.0 * (v_right - v_alpha1) / gap1, 1.0)
        return [alpha, *map(float, s.energies), *map(float, probs[:3]), vis_c, est_c, vis_d, est_d, ""]
    except (DWTunnelError, ValueError) as exc:
        return [alpha] + [None] * 11 + [type(exc).__name__]


FIG1_HEADER = ["alpha", "E0", "E1", "E2", "E3", "P0", "P1", "P2", "vis_01", "est_c", "vis_12", "est_d", "flag"]


def fig1(out_dir=None, alphas=None) -> Report:
    rep = Report("fig1")
    q0 = Quartic(0.0)
    w0 = analyze_wells(q0)
    rep.add("barrier height V_Q(0;0) [hbar w]", w0.v_barrier - w0.v_left, 1.5, abs_=1e-8)
    rep.add("bottom frequency [w]", w0.omega_r, 1.0, abs_=1e-8)

    alpha1, gap1 = find_alpha_1()
    rep.add("alpha_1 (min of E2-E1 on [0.9, 1.1])", alpha1, 1.00, abs_=0.01)

    sym = solve_spectrum(q0, 2).energies
    e01 = float(sym[1] - sym[0])
    q1 = Quartic(alpha1)
    v_alpha1 = float(q1(analyze_wells(q1).right_min))
    if alphas is None:
        alphas = np.round(np.arange(0.0, 1.2 + 1e-9, 0.01), 4)
    rows = ordered_map(_fig1_point, [(float(a), e01, alpha1, v_alpha1, gap1) for a in alphas])

    # alpha_0 panel values
    p = Quartic(ALPHA_0)
    w = analyze_wells(p)
    s = solve_spectrum(p, 4)
    probs = project(GaussianPacket.at_right_minimum(w), s).probabilities
    tr = evolve_two_state(s, 1, 2, probs[1:3], x_c=w.barrier_top)
    rep.values = {
        "alpha_1": alpha1,
        "gap_at_alpha_1": gap1,
        "E1(0)-E0(0)": e01,
        "alpha_0": ALPHA_0,
        "alpha_0_energies": [float(e) for e in s.energies[:3]],
        "alpha_0_geometry": {"a": w.right_min, "-b": w.left_min, "x_c": w.barrier_top},
        "alpha_0_weights": [float(v) for v in probs[1:3]],
        "alpha_0_visibility": tr.visibility,
        "alpha_0_estimate": visibility(2.0 * (float(p(w.right_min)) - v_alpha1) / gap1, 1.0),
    }
    rep.notes.append("density panels (b) are reproduced qualitatively only: fig1_densities.csv holds the curves")
    if out_dir is not None:
        out = Path(out_dir)
        _write_csv(out / "fig1_visibility.csv", FIG1_HEADER, rows, "length l_ho, energy hbar*omega")
        g = GaussianPacket.at_right_minimum(w)(s.x)
        c = np.zeros(4)
        c[1:3] = np.sqrt(probs[1:3])
        half = math.pi / (s.energies[2] - s.energies[1])
        d0 = np.abs(superposition(s, c, 0.0)) ** 2
        d1 = np.abs(superposition(s, c, half)) ** 2
        _write_csv(out / "fig1_densities.csv", ["x", "phi_G_sq", "psi_t0_sq", "psi_half_sq"],
                   [(float(a), float(b), float(c_), float(d)) for a, b, c_, d in zip(s.x[::4], g[::4] ** 2, d0[::4], d1[::4])],
                   "length l_ho, energy hbar*omega")
    return rep


# fig 3 ----------------------------------------------------------------------

def _fig3_point(args):
    eps, a = args
    return compare_estimates(eps, [a], grid=True)[0]


def ale_vs_tls(rows) -> tuple[int, int]:
    """(ALE wins, comparisons) over states where both estimates are valid and resolvable."""
    wins = total = 0
    for r in rows:
        for i, e in enumerate(r["exact"]):
            if not (r["ale_valid"][i] and r["tls_valid"][i]) or r["ale"][i] is None or r["tls"][i] is None:
                continue
            ea, et = abs(r["ale"][i] - e), abs(r["tls"][i] - e)
            if max(ea, et) <= RESOLVABLE:
                continue
            total += 1
            wins += ea < et
    return wins, total


def wkb_splitting_ratios(a_values):
    from .doubleosc import solve_exact

    out = []
    for a in a_values:
        p = DoubleOscillator(0.0, a)
        w = analyze_wells(p)
        ex = solve_exact(0.0, a, 2)
        out.append((float(a), 2.0 * delta_a(p, w, 0, 0, barrier_action(p, w, 0.5)) / (ex[1].energy - ex[0].energy)))
    return out


def fig3(out_dir=None, a_values=None) -> Report:
    rep = Report("fig3")
    if a_values is None:
        a_values = np.round(np.arange(0.0, 6.0 + 1e-9, 0.25), 4)
    tasks = [(eps, float(a)) for eps in FIG3_EPS for a in a_values]
    results = ordered_map(_fig3_point, tasks)
    by_eps = {eps: [r for (e, _), r in zip(tasks, results) if e == eps] for eps in FIG3_EPS}

    worst = max(max(abs(x - g) for x, g in zip(r["exact"], r["grid"])) for r in results)
    rep.add("max |exact - grid| [hbar w]", worst, 1e-6, ok=worst <= 1e-6)

    far = 0.0
    for r in results:
        if r["a"] < 4.0:
            continue
        for e in r["exact"]:
            n = round(e - 0.5)
            m = round(e - r["eps"] - 0.5)
            far = max(far, min(abs(e - n - 0.5), abs(e - m - r["eps"] - 0.5)))
    rep.add("max distance to oscillator levels, a >= 4 [hbar w]", far, 0.02, ok=far <= 0.02)

    wins, total = ale_vs_tls(by_eps[0.3])
    frac = wins / total if total else 0.0
    rep.add("eps=0.3 fraction ALE better than TLS", frac, 0.8, ok=total > 0 and frac >= 0.8)

    ratios = wkb_splitting_ratios(np.arange(3.0, 5.0 + 1e-9, 0.25))
    worst_r = max(abs(r - 1.0) for _, r in ratios)
    rep.add("symmetric a in [3,5]: max |2 delta_a / (E1-E0) - 1|", worst_r, 0.10, ok=worst_r <= 0.10)
    rep.values = {"ale_vs_tls": {"wins": wins, "compared": total}, "wkb_splitting_ratio": ratios}
    rep.notes.append(f"ALE/TLS comparison skips states where both errors are below {RESOLVABLE:g} hbar w")
    if out_dir is not None:
        from .doubleosc import write_comparison

        for eps, rows in by_eps.items():
            write_comparison(rows, Path(out_dir) / f"fig3_eps{eps:g}.csv")
    return rep


TARGETS = {"lattice": lattice, "cesium": cesium, "fig1": fig1, "fig3": fig3}


def reproduce(target: str, out_dir=None) -> Report:
    if target not in TARGETS:
        raise KeyError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
    try:
        rep = TARGETS[target](out_dir)
    except DWTunnelError as exc:
        raise type(exc)(f"reproduce {target}: {exc}") from exc
    if out_dir is not None:
        rep.write(out_dir)
    return rep
