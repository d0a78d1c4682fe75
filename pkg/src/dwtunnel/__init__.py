"""Tunneling in asymmetric double wells: grid spectra, WKB doublets and visibility."""

from .dynamics import GaussianPacket, evolve_two_state, project
from .eigensolver import Spectrum, solve_spectrum
from .potentials import DoubleOscillator, Lattice, Quartic, Tabulated, analyze_wells
from .wkb import ale_approximation, delta_a, doublet, visibility

__version__ = "0.1.0"

__all__ = [
    "GaussianPacket",
    "evolve_two_state",
    "project",
    "Spectrum",
    "solve_spectrum",
    "DoubleOscillator",
    "Lattice",
    "Quartic",
    "Tabulated",
    "analyze_wells",
    "ale_approximation",
    "delta_a",
    "doublet",
    "visibility",
    "__version__",
]
