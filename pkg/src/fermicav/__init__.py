"""Polarized Fermi gas in a pumped optical cavity: couplings, steady states, dynamics."""

__version__ = "0.1.0"

from .model import (LatticeCoefficients, PhysicalParams, SystemParams,  # noqa: E402
                    gaussian_coefficients, rescale)
from .fermisea import FermiSeaSummary, MomentumGrid, build_fermi_sea, fermi_sea_summary  # noqa: E402
from .steadystate import SteadyStateBranch, Stability, find_branches, classify_stability  # noqa: E402
from .dynamics import FieldState, FieldTrajectory, integrate, basin_scan  # noqa: E402

__all__ = [
    "LatticeCoefficients", "PhysicalParams", "SystemParams", "gaussian_coefficients", "rescale",
    "FermiSeaSummary", "MomentumGrid", "build_fermi_sea", "fermi_sea_summary",
    "SteadyStateBranch", "Stability", "find_branches", "classify_stability",
    "FieldState", "FieldTrajectory", "integrate", "basin_scan",
]
