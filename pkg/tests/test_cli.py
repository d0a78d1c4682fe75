import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from dwtunnel import Quartic, solve_spectrum
from dwtunnel.cli import main
from dwtunnel.config import ConfigError, build_potential, load_potential, parse_range, parse_tol
from dwtunnel.potentials import Lattice
from dwtunnel.reproduce import ordered_map, worker_count

ROOT = Path(__file__).resolve().parents[1]
POT = ROOT / "potentials"


def run(*argv):
    return subprocess.run([sys.executable, "-m", "dwtunnel.cli", *map(str, argv)], capture_output=True, text=True,
                          cwd=ROOT, env={**os.environ, "DWTUNNEL_WORKERS": "1"})


class TestSchema:
    def test_shipped_files_load(self):
        for f in POT.glob("*.toml"):
            load_potential(f)

    @pytest.mark.parametrize("doc", [
        {"kind": "quartic", "units": "oscillator", "parameters": {"alpha": 1.0}, "colour": "red"},
        {"kind": "quartic", "units": "oscillator", "parameters": {"alpha": 1.0, "beta": 2}},
        {"kind": "quartic", "units": "oscillator", "parameters": {}},
        {"kind": "lattice", "units": "lattice", "parameters": {"depth": 10, "xi": 0.5, "tilt": 0.1,
                                                               "gravity": {"species": "cs133", "wavelength_nm": 811}}},
        {"kind": "lattice", "units": "lattice", "parameters": {"depth": 10, "xi": 0.5,
                                                               "gravity": {"species": "na23", "wavelength_nm": 811}}},
        {"kind": "double_oscillator", "units": "oscillator", "parameters": {"eps": 0.1, "a_sep": "3"}},
        {"kind": "morse", "units": "oscillator", "parameters": {}},
        {"kind": "quartic", "units": "oscillator", "parameters": {"alpha": 1.0}, "domain": {"window": [4, -4]}},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ConfigError):
            build_potential(doc)

    def test_gravity_in_natural_units(self):
        p = build_potential({"kind": "lattice", "units": "lattice", "parameters": {
            "depth": 10.0, "xi": 0.5, "gravity": {"species": "cs133", "wavelength_nm": 811.0, "g": 9.80}}})
        assert isinstance(p, Lattice)
        assert p.tilt == pytest.approx(load_potential(POT / "lattice_cesium.toml").tilt)
        assert p.tilt > 0

    def test_tabulated_round_trip(self, tmp_path):
        q = Quartic(0.0)
        direct = solve_spectrum(q, 2)
        x = np.linspace(*direct.window, 4001)
        f = tmp_path / "q.csv"
        f.write_text("# units: oscillator\nx,V\n" + "\n".join(f"{a:.17g},{b:.17g}" for a, b in zip(x, q(x))))
        t = load_potential(f)
        e = solve_spectrum(t, 2).energies
        assert e == pytest.approx(direct.energies, abs=1e-4)

    def test_tabulated_bad_rows(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("x,V\n0,1,2\n")
        with pytest.raises(ConfigError):
            load_potential(f)
        f.write_text("# units: furlongs\nx,V\n0,1\n")
        with pytest.raises(ConfigError):
            load_potential(f)


class TestParsing:
    def test_tol(self):
        assert parse_tol(None) == {"eig": 1e-6}
        assert parse_tol("1e-8") == {"eig": 1e-8}
        assert parse_tol("eig=2e-7") == {"eig": 2e-7}
        for bad in ("vis=1e-3", "eig=abc", "eig=-1"):
            with pytest.raises(ConfigError):
                parse_tol(bad)

    def test_range(self):
        name, v = parse_range("alpha=0.9:1.1:0.05")
        assert name == "alpha"
        assert v == pytest.approx([0.9, 0.95, 1.0, 1.05, 1.1])
        assert parse_range("alpha=1:0:0.1")[1].size == 0
        for bad in ("alpha", "alpha=1:2", "alpha=1:2:0", "=1:2:1", "alpha=a:2:1"):
            with pytest.raises(ConfigError):
                parse_range(bad)


class TestWorkers:
    def test_count(self, monkeypatch):
        monkeypatch.setenv("DWTUNNEL_WORKERS", "3")
        assert worker_count() == 3
        for bad in ("0", "many", "-2"):
            monkeypatch.setenv("DWTUNNEL_WORKERS", bad)
            with pytest.raises(ConfigError):
                worker_count()

    def test_ordered(self):
        items = list(range(12))
        assert ordered_map(abs, items, 1) == ordered_map(abs, items, 3) == items


class TestExitCodes:
    def test_solve_lattice(self, capsys):
        assert main(["solve", "--potential", str(POT / "lattice.toml")]) == 0
        out = capsys.readouterr().out
        assert out.startswith("# units:")
        assert "E1-E0 = 0.12224" in out

    def test_config_error(self, capsys):
        assert main(["solve", "--potential", str(POT / "lattice.toml"), "--tol", "vis=1"]) == 2
        assert main(["solve", "--potential", "missing.toml"]) == 2
        assert main(["solve", "--potential", str(POT / "quartic.toml"), "--grid", "5"]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_numeric_failure(self, capsys):
        assert main(["solve", "--potential", str(POT / "quartic.toml"), "--tol", "1e-16"]) == 3
        assert main(["wkb", "--potential", str(POT / "lattice.toml"), "--pair", "5,5"]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_reproduce_codes(self, tmp_path, capsys):
        assert main(["reproduce", "lattice", "--out", str(tmp_path)]) == 0
        assert main(["reproduce", "cesium", "--out", str(tmp_path)]) == 1
        out = capsys.readouterr().out
        assert "lattice: PASS" in out and "cesium: FAIL" in out
        rep = json.loads((tmp_path / "lattice_report.json").read_text())
        assert rep["passed"] is True

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["solve"])
        assert exc.value.code == 2


class TestCommands:
    def test_wkb_and_visibility(self, capsys):
        assert main(["wkb", "--potential", str(POT / "quartic.toml")]) == 0
        assert "delta_a" in capsys.readouterr().out
        assert main(["visibility", "--potential", str(POT / "quartic.toml")]) == 0
        out = capsys.readouterr().out
        assert "states (1, 2)" in out and "visibility = 0.48149" in out

    def test_sweep_empty_range(self, capsys):
        assert main(["sweep", "--potential", str(POT / "quartic.toml"), "--vary", "alpha=1:0:0.1"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 2 and lines[1].startswith("alpha,E_0")

    def test_sweep_rejects(self):
        assert main(["sweep", "--potential", str(POT / "quartic.toml"), "--vary", "beta=0:1:0.5"]) == 2
        assert main(["sweep", "--potential", str(POT / "lattice_cesium.toml"), "--vary", "gravity=0:1:0.5"]) == 2

    def test_sweep_file(self, tmp_path):
        assert main(["sweep", "--potential", str(POT / "quartic.toml"), "--vary", "alpha=0.98:0.99:0.01",
                     "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("# units:") and len(lines) == 4
        assert all(not r.endswith(",") or r.count(",") == lines[1].count(",") for r in lines[2:])

    def test_double_osc(self, tmp_path, capsys):
        assert main(["double-osc", "--eps", "0.3", "--a", "3:3:1", "--grid-check", "--out", str(tmp_path)]) == 0
        assert "a =  3.00" in capsys.readouterr().out
        assert (tmp_path / "double_osc_eps0.3.csv").is_file()
        assert main(["double-osc", "--eps", "-1", "--a", "3:3:1"]) == 2


def test_deterministic_output(tmp_path):
    args = ["sweep", "--potential", POT / "quartic.toml", "--vary", "alpha=0.9:1.0:0.05"]
    a, b = run(*args), run(*args)
    assert a.returncode == 0, a.stderr
    assert a.stdout == b.stdout
    env = {**os.environ, "DWTUNNEL_WORKERS": "2"}
    c = subprocess.run([sys.executable, "-m", "dwtunnel.cli", *map(str, args)], capture_output=True, text=True, env=env)
    assert c.stdout == a.stdout
    bad = subprocess.run([sys.executable, "-m", "dwtunnel.cli", *map(str, args)], capture_output=True, text=True,
                         env={**os.environ, "DWTUNNEL_WORKERS": "zero"})
    assert bad.returncode == 2
