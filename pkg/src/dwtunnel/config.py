"""Potential definition files and command-line value parsing.

A definition is a TOML table checked against ``data/potential.schema.json``;
a CSV file with columns ``x,V`` is read as a tabulated potential.  SI inputs
(gravity) are converted to the natural units here and nowhere else.
"""
from __future__ import annotations

import csv
import json
import sys
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .potentials import (
    CESIUM_133_MASS,
    LATTICE_UNITS,
    RUBIDIUM_87_MASS,
    OSCILLATOR_UNITS,
    DoubleOscillator,
    Lattice,
    Potential,
    Quartic,
    Tabulated,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "load_definition", "load_potential", "build_potential", "potential_schema", "parse_tol", "parse_range",
           "TOL_KEYS", "DEFAULT_TOL"]

SPECIES = {"cs133": CESIUM_133_MASS, "rb87": RUBIDIUM_87_MASS}
UNIT_SYSTEMS = {"oscillator": OSCILLATOR_UNITS, "lattice": LATTICE_UNITS}
TOL_KEYS = ("eig",)
DEFAULT_TOL = {"eig": 1e-6}


class ConfigError(ValueError):
    """Invalid run configuration; reported with exit status 2."""


@lru_cache(maxsize=1)
def potential_schema() -> dict:
    text = resources.files("dwtunnel").joinpath("data/potential.schema.json").read_text()
    return json.loads(text)


def build_potential(doc: dict) -> Potential:
    """Validate a parsed definition and construct the potential."""
    try:
        jsonschema.validate(doc, potential_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"potential definition invalid at {where}: {exc.message}") from None
    kind = doc["kind"]
    par = dict(doc["parameters"])
    dom = doc.get("domain", {})
    if kind == "quartic":
        kw = {}
        if "window" in dom:
            lo, hi = dom["window"]
            if not lo < hi:
                raise ConfigError("domain.window must be increasing")
            kw["window"] = (float(lo), float(hi))
        if "tilt_coefficient" in par:
            kw["tilt_coefficient"] = par["tilt_coefficient"]
        return Quartic(par["alpha"], **kw)
    if kind == "lattice":
        grav = par.pop("gravity", None)
        if grav is None:
            return Lattice(par["depth"], par["xi"], par.get("tilt", 0.0))
        return Lattice.with_gravity(
            par["depth"],
            par["xi"],
            SPECIES[grav["species"]],
            grav["wavelength_nm"] * 1e-9,
            grav.get("g", 9.80),
            grav.get("beta", 1.0),
        )
    kw = {"margin": dom["margin"]} if "margin" in dom else {}
    return DoubleOscillator(par["eps"], par["a_sep"], **kw)


def _read_tabulated(path: Path) -> Tabulated:
    units = OSCILLATOR_UNITS
    rows = []
    with path.open(newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or not rec[0].strip():
                continue
            head = rec[0].strip()
            if head.startswith("#"):
                body = ",".join(rec).lstrip("#").strip()
                if body.startswith("units:"):
                    name = body.split(":", 1)[1].strip()
                    if name not in UNIT_SYSTEMS:
                        raise ConfigError(f"unknown unit system {name!r} in {path}")
                    units = UNIT_SYSTEMS[name]
                continue
            if head.lower() == "x":
                continue
            if len(rec) != 2:
                raise ConfigError(f"{path}: expected two columns x,V")
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                raise ConfigError(f"{path}: non-numeric row {rec}") from None
    if not rows:
        raise ConfigError(f"{path}: no samples")
    arr = np.array(rows)
    return Tabulated(arr[:, 0], arr[:, 1], units)


def load_definition(path) -> dict:
    """Parsed TOML definition, not yet validated."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"potential file not found: {path}")
    try:
        return tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_potential(path) -> Potential:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if not path.is_file():
            raise ConfigError(f"potential file not found: {path}")
        return _read_tabulated(path)
    return build_potential(load_definition(path))


def parse_tol(text: str | None) -> dict:
    """'1e-6' or 'eig=1e-6[,...]'; unknown keys are rejected."""
    tol = dict(DEFAULT_TOL)
    if text is None:
        return tol
    for part in filter(None, (s.strip() for s in text.split(","))):
        key, sep, val = part.partition("=")
        if not sep:
            key, val = "eig", key
        key = key.strip()
        if key not in TOL_KEYS:
            raise ConfigError(f"unknown tolerance key {key!r}; known: {', '.join(TOL_KEYS)}")
        try:
            x = float(val)
        except ValueError:
            raise ConfigError(f"tolerance {part!r} is not a number") from None
        if not x > 0:
            raise ConfigError(f"tolerance {part!r} must be positive")
        tol[key] = x
    return tol


def parse_range(text: str) -> tuple[str, np.ndarray]:
    """'name=start:stop:step' (stop inclusive) to (name, values).  stop < start gives no values."""
    name, sep, rng = text.partition("=")
    bits = rng.split(":")
    if not sep or not name.strip() or len(bits) != 3:
        raise ConfigError(f"range {text!r} must look like name=start:stop:step")
    try:
        start, stop, step = (float(b) for b in bits)
    except ValueError:
        raise ConfigError(f"range {text!r} has a non-numeric bound") from None
    if step <= 0:
        raise ConfigError(f"range {text!r} needs a positive step")
    if stop < start:
        return name.strip(), np.empty(0)
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return name.strip(), np.round(start + step * np.arange(n), 12)
