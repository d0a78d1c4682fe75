"""``dwtunnel`` command line: solve, wkb, visibility, sweep, double-osc, reproduce.

Exit status: 0 success, 1 a reproduction check missed its tolerance,
2 bad configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, build_potential, load_definition, load_potential, parse_range, parse_tol
from .doubleosc import compare_estimates, write_comparison
from .dynamics import GaussianPacket, evolve_two_state, project, write_trace
from .eigensolver import solve_spectrum, write_spectrum
from .errors import DomainError, DWTunnelError, StructureError
from .potentials import analyze_wells
from .reproduce import TARGETS, ordered_map, reproduce
from .wkb import delta_epsilon, doublet

EXIT_OK, EXIT_TOL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _out_dir(args) -> Path | None:
    return Path(args.out) if args.out else None


def _dump(obj, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _right_partner(w, n: int) -> int:
    """Left level closest in energy to right level n."""
    best, m = None, 0
    while w.omega_l * (m + 0.5) < w.v_barrier - w.v_left:
        key = abs(delta_epsilon(w, m, n))
        if best is None or key < best[0]:
            best = (key, m)
        m += 1
    if best is None:
        raise DomainError("no left level lies below the barrier")
    return best[1]


def _dominant_pair(probs) -> tuple[int, int]:
    i, j = sorted(int(k) for k in np.argsort(probs)[::-1][:2])
    return i, j


# subcommands ----------------------------------------------------------------

def cmd_solve(args) -> int:
    p = load_potential(args.potential)
    tol = parse_tol(args.tol)
    s = solve_spectrum(p, args.states, args.grid, tol["eig"])
    u = p.units
    print(f"# units: length {u.length}, energy {u.energy}")
    print(f"{'i':>3}  {'E_i':>18}  {'error':>10}")
    for i, (e, err) in enumerate(zip(s.energies, s.error_estimate)):
        print(f"{i:>3}  {e:18.10f}  {err:10.2e}")
    if s.n_states >= 2:
        print(f"E1-E0 = {s.energies[1] - s.energies[0]:.10f}")
    if args.out:
        write_spectrum(s, args.out)
    return EXIT_OK


def cmd_wkb(args) -> int:
    p = load_potential(args.potential)
    w = analyze_wells(p)
    m, n = args.pair if args.pair else (None, None)
    d = doublet(p, w, m, n)
    report = {
        "potential": p.descriptor(),
        "wells": {"left_min": w.left_min, "right_min": w.right_min, "barrier_top": w.barrier_top,
                  "omega_l": w.omega_l, "omega_r": w.omega_r, "eps": w.epsilon},
        "m": d.m,
        "n": d.n,
        "delta_eps": d.delta_eps,
        "delta_a": d.delta_a,
        "delta_minus": d.delta_minus,
        "delta_plus": d.delta_plus,
        "energies": list(d.energies),
        "splitting": d.splitting,
        "visibility": d.visibility,
        "p_min": d.p_min,
    }
    for key in ("m", "n", "delta_eps", "delta_a", "splitting", "visibility"):
        val = report[key]
        print(f"{key:>10} = {val}" if isinstance(val, int) else f"{key:>10} = {val:.10g}")
    if args.out:
        _dump(report, Path(args.out) / "wkb.json")
    return EXIT_OK


def cmd_visibility(args) -> int:
    p = load_potential(args.potential)
    tol = parse_tol(args.tol)
    w = analyze_wells(p)
    s = solve_spectrum(p, args.states, args.grid, tol["eig"])
    probs = project(GaussianPacket.at_right_minimum(w, args.f), s).probabilities
    i, j = args.pair if args.pair else _dominant_pair(probs)
    if not (0 <= i < j < s.n_states):
        raise ConfigError(f"pair ({i}, {j}) must satisfy 0 <= i < j < --states")
    tr = evolve_two_state(s, i, j, (probs[i], probs[j]), x_c=w.barrier_top)
    print(f"states ({i}, {j})  P = ({probs[i]:.6f}, {probs[j]:.6f})")
    print(f"period = {tr.period:.10g}  P_max = {tr.p_max:.10f}  P_min = {tr.p_min:.10f}")
    print(f"visibility = {tr.visibility:.10f}")
    if args.out:
        write_trace(tr, args.out, "visibility", p.descriptor())
    return EXIT_OK


SWEEP_FIELDS = ["delta_eps", "delta_a", "vis_predicted", "pair_i", "pair_j", "vis_measured", "flag"]


def _sweep_point(task):
    doc, names, values, n_states, grid, eig_tol, level = task
    doc = copy.deepcopy(doc)
    doc["parameters"].update(dict(zip(names, values)))
    row = list(values)
    try:
        p = build_potential(doc)
        s = solve_spectrum(p, n_states, grid, eig_tol)
        w = analyze_wells(p)
        m = _right_partner(w, level)
        d = doublet(p, w, m, level)
        probs = project(GaussianPacket.at_right_minimum(w), s).probabilities
        i, j = _dominant_pair(probs)
        tr = evolve_two_state(s, i, j, (probs[i], probs[j]), x_c=w.barrier_top)
        return row + list(map(float, s.energies)) + [d.delta_eps, d.delta_a, d.visibility, i, j, tr.visibility, ""]
    except ConfigError:
        raise
    except (DWTunnelError, ValueError, ArithmeticError) as exc:
        return row + [None] * (n_states + len(SWEEP_FIELDS) - 1) + [f"{type(exc).__name__}: {exc}"]


def cmd_sweep(args) -> int:
    if Path(args.potential).suffix.lower() == ".csv":
        raise ConfigError("sweep needs a TOML definition; tabulated potentials have no parameters")
    doc = load_definition(args.potential)
    build_potential(doc)
    tol = parse_tol(args.tol)
    if not 1 <= len(args.vary) <= 2:
        raise ConfigError("give one or two --vary ranges")
    ranges = [parse_range(r) for r in args.vary]
    names = [n for n, _ in ranges]
    if len(set(names)) != len(names):
        raise ConfigError("--vary names must differ")
    for n in names:
        if n not in doc["parameters"] or isinstance(doc["parameters"][n], dict):
            raise ConfigError(f"{n!r} is not a numeric parameter of this definition")
    if len(ranges) == 1:
        points = [(float(v),) for v in ranges[0][1]]
    else:
        points = [(float(a), float(b)) for a in ranges[0][1] for b in ranges[1][1]]
    tasks = [(doc, names, pt, args.states, args.grid, tol["eig"], args.level) for pt in points]
    rows = ordered_map(_sweep_point, tasks)
    header = names + [f"E_{i}" for i in range(args.states)] + SWEEP_FIELDS
    kind = doc["kind"]
    units = "length 1/k, energy E_R" if kind == "lattice" else "length l_ho, energy hbar*omega"

    def fmt(v):
        if v is None:
            return ""
        return f"{v:.12g}" if isinstance(v, float) else str(v)

    out = Path(args.out) if args.out else None
    fh = sys.stdout if out is None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        fh = (out / "sweep.csv").open("w", newline="")
    try:
        fh.write(f"# units: {units}; visibility pair from the packet at the right minimum, prediction for right level {args.level}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([fmt(v) for v in r])
    finally:
        if out is not None:
            fh.close()
    flagged = sum(1 for r in rows if r[-1])
    if out is not None:
        print(f"{len(rows)} points, {flagged} flagged -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_double_osc(args) -> int:
    name, a_values = parse_range(f"a={args.a}")
    if args.eps < 0:
        raise ConfigError("--eps must be non-negative")
    rows = ordered_map(_double_osc_point, [(args.eps, float(a), args.states, args.grid_check) for a in a_values])
    for r in rows:
        ex = "  ".join(f"{e:.8f}" for e in r["exact"])
        print(f"a = {r['a']:5.2f}  {ex}")
    if args.out:
        write_comparison(rows, Path(args.out) / f"double_osc_eps{args.eps:g}.csv", args.states)
    return EXIT_OK


def _double_osc_point(task):
    eps, a, n_states, grid = task
    return compare_estimates(eps, [a], n_states, grid=grid)[0]


def cmd_reproduce(args) -> int:
    rep = reproduce(args.target, _out_dir(args))
    for c in rep.checks:
        print(c.line())
    for note in rep.notes:
        print(f"note: {note}")
    print(f"{args.target}: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_TOL


# parser ---------------------------------------------------------------------

def _pair(text):
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("pair must be two integers like 1,2") from None
    return i, j


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dwtunnel", description="Double-well tunneling: grid spectra, WKB doublets, visibility.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, states=4, potential=True):
        if potential:
            sp.add_argument("--potential", required=True, help="TOML definition or CSV table (x,V)")
        sp.add_argument("--states", type=_positive_int, default=states)
        sp.add_argument("--grid", type=_positive_int, default=2000, help="interior nodes of the coarsest grid")
        sp.add_argument("--tol", default=None, help="eigenvalue tolerance: 1e-6 or eig=1e-6")
        sp.add_argument("--out", default=None, help="output directory")

    sp = sub.add_parser("solve", help="lowest eigenpairs on a grid")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("wkb", help="WKB doublet of a left and a right level")
    sp.add_argument("--potential", required=True)
    sp.add_argument("--pair", type=_pair, default=None, help="m,n (left, right); nearest pair if omitted")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_wkb)

    sp = sub.add_parser("visibility", help="tunneling visibility of a Gaussian released at the right minimum")
    common(sp)
    sp.add_argument("--pair", type=_pair, default=None, help="i,j grid states; the two largest projections if omitted")
    sp.add_argument("--f", type=float, default=1.0, help="packet width factor")
    sp.set_defaults(func=cmd_visibility)

    sp = sub.add_parser("sweep", help="scan one or two potential parameters")
    common(sp)
    sp.add_argument("--vary", action="append", default=[], required=True, metavar="NAME=START:STOP:STEP")
    sp.add_argument("--level", type=int, default=0, help="right level used for the WKB prediction")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("double-osc", help="exact, ALE and TLS levels of the double oscillator")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--a", default="0:6:0.25", metavar="START:STOP:STEP")
    sp.add_argument("--states", type=_positive_int, default=4)
    sp.add_argument("--grid-check", action="store_true", help="also solve each point on a grid")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_double_osc)

    sp = sub.add_parser("reproduce", help="run a reproduction pipeline and check its tolerances")
    sp.add_argument("target", choices=sorted(TARGETS))
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, StructureError) as exc:
        print(f"dwtunnel: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DWTunnelError as exc:
        print(f"dwtunnel: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"dwtunnel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
