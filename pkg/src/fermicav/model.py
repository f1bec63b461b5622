"""System parameters, unit rescaling and the Gaussian-Wannier lattice couplings."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import constants

from . import kernels
from ._accel import python_impl

_coefficients_y = python_impl(kernels.coefficients_y)
_slopes_y = python_impl(kernels.coefficient_slopes_y)

#: mass of a 40K atom in kg
POTASSIUM_40_MASS = 39.96399848 * constants.atomic_mass


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless control parameters (energies and rates in recoil units).

    ``s`` is the sign of the atomic detuning.  It is kept separate from ``u0``
    so the couplings can be evaluated for either sign, but a nonzero ``u0``
    must carry the same sign.
    """

    u0: float
    delta_c: float
    eta: float
    kappa: float
    n_atoms: int
    n_sites: int
    s: int = 1
    y_max: float = 0.5

    def __post_init__(self):
        for name in ("u0", "delta_c", "eta", "kappa", "y_max"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.kappa <= 0:
            raise ValueError("kappa must be > 0")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if not 0 <= self.n_atoms <= self.n_sites:
            raise ValueError(
                f"n_atoms={self.n_atoms} must lie in [0, n_sites={self.n_sites}] "
                "(one polarized fermion per site at most)"
            )
        if self.s not in (1, -1):
            raise ValueError("s must be +1 or -1")
        if self.u0 != 0 and (self.u0 > 0) != (self.s > 0):
            raise ValueError("sign(u0) must equal s")
        if self.y_max <= 0:
            raise ValueError("y_max must be > 0")

    def replace(self, **changes) -> "SystemParams":
        data = asdict(self)
        data.update(changes)
        return SystemParams(**data)

    def photons_to_y(self, n_photons):
        return photons_to_y(n_photons, self.u0)

    def y_to_photons(self, y):
        return y_to_photons(y, self.u0)

    @property
    def photon_ceiling(self) -> float:
        """Largest photon number any steady state can reach, eta^2 / kappa^2."""
        return self.eta**2 / self.kappa**2


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters; rates are angular frequencies in rad/s."""

    mass: float
    wavelength: float
    g0: float
    delta_a: float
    delta_c: float
    eta: float
    kappa: float


@dataclass(frozen=True)
class LatticeCoefficients:
    """Couplings at one photon number and their derivatives with respect to it."""

    n_photons: float
    y: float
    e_onsite: float
    j_onsite: float
    e_hop: float
    j_hop: float
    d_e: float
    d_j: float
    d_e_hop: float
    d_j_hop: float


def recoil_frequency(mass: float, wavelength: float) -> float:
    """Recoil frequency hbar q^2 / 2m in rad/s, with q = 2 pi / wavelength."""
    if mass <= 0 or wavelength <= 0:
        raise ValueError("mass and wavelength must be > 0")
    q = 2.0 * math.pi / wavelength
    return constants.hbar * q * q / (2.0 * mass)


def rescale(physical: PhysicalParams, *, n_atoms: int = 0, n_sites: int = 1,
            y_max: float = 0.5) -> SystemParams:
    """Convert laboratory parameters to recoil units."""
    rates = (physical.g0, physical.delta_a, physical.delta_c, physical.eta, physical.kappa)
    if not all(math.isfinite(r) for r in rates):
        raise ValueError("physical rates must be finite")
    if physical.delta_a == 0:
        raise ValueError("delta_a = 0: dispersive light shift g0^2/delta_a is undefined")
    omega_r = recoil_frequency(physical.mass, physical.wavelength)
    s = 1 if physical.delta_a > 0 else -1
    return SystemParams(
        u0=physical.g0**2 / physical.delta_a / omega_r,
        delta_c=physical.delta_c / omega_r,
        eta=physical.eta / omega_r,
        kappa=physical.kappa / omega_r,
        n_atoms=n_atoms,
        n_sites=n_sites,
        s=s,
        y_max=y_max,
    )


def photons_to_y(n_photons, u0):
    """Squared Gaussian width y = (|u0| n)^(-1/2)."""
    return 1.0 / np.sqrt(abs(u0) * np.asarray(n_photons, dtype=float))


def y_to_photons(y, u0):
    y = np.asarray(y, dtype=float)
    return 1.0 / (abs(u0) * y * y)


def coefficients_at_y(y, s):
    """(E, J, E1, J1) at squared width ``y``; accepts scalars or arrays."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("y must be > 0")
    if s not in (1, -1):
        raise ValueError("s must be +1 or -1")
    return _coefficients_y(y, s)


def gaussian_coefficients(n_photons: float, params: SystemParams) -> LatticeCoefficients:
    """Closed-form couplings for modified Gaussian Wannier functions at photon number n.

    Photon-number derivatives use the chain rule through dy/dn = -y / (2n).
    """
    if params.u0 == 0:
        raise ValueError("u0 = 0: no lattice, couplings undefined")
    if not n_photons > 0:
        raise ValueError(f"n_photons must be > 0, got {n_photons}")
    n = float(n_photons)
    y = float(photons_to_y(n, params.u0))
    e, j, e1, j1 = _coefficients_y(y, params.s)
    de, dj, de1, dj1 = _slopes_y(y, params.s)
    dy_dn = -y / (2.0 * n)
    return LatticeCoefficients(
        n_photons=n, y=y,
        e_onsite=float(e), j_onsite=float(j), e_hop=float(e1), j_hop=float(j1),
        d_e=float(de * dy_dn), d_j=float(dj * dy_dn),
        d_e_hop=float(de1 * dy_dn), d_j_hop=float(dj1 * dy_dn),
    )


_VALUE_FIELDS = ("e_onsite", "j_onsite", "e_hop", "j_hop")
_DERIV_FIELDS = ("d_e", "d_j", "d_e_hop", "d_j_hop")


def coefficient_derivatives_check(n_photons: float, params: SystemParams, h: float) -> float:
    """Max relative gap between analytic derivatives and central differences of step h."""
    if params.u0 == 0:
        raise ValueError("u0 = 0: no coefficients to differentiate")
    centre = gaussian_coefficients(n_photons, params)
    up = gaussian_coefficients(n_photons + h, params)
    down = gaussian_coefficients(n_photons - h, params)
    worst = 0.0
    for value, deriv in zip(_VALUE_FIELDS, _DERIV_FIELDS):
        fd = (getattr(up, value) - getattr(down, value)) / (2.0 * h)
        exact = getattr(centre, deriv)
        scale = max(abs(exact), np.finfo(float).tiny)
        worst = max(worst, abs(fd - exact) / scale)
    return worst


def neighbour_suppression(ell: int, y: float) -> float:
    """|J_ell / J_1| = exp[-(ell^2 - 1) pi^2 / (4y)] for Gaussian orbitals."""
    if y <= 0:
        raise ValueError("y must be > 0")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return math.exp(-(ell * ell - 1) * math.pi**2 / (4.0 * y))
