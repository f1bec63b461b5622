"""Polarized fermions on the periodic quasi-momentum grid of the cavity lattice."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .model import LatticeCoefficients, SystemParams


@dataclass(frozen=True)
class MomentumGrid:
    """K quasi-momenta k_j = -1 + 2j/K (units of the zone edge), j = 0..K-1."""

    n_sites: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")

    @cached_property
    def k_values(self) -> np.ndarray:
        return (2.0 * np.arange(self.n_sites) - self.n_sites) / self.n_sites

    @cached_property
    def band(self) -> np.ndarray:
        """Hopping weights 2 cos(k pi) per grid point."""
        return 2.0 * np.cos(np.pi * self.k_values)

    @cached_property
    def filling_order(self) -> np.ndarray:
        # integer key |2j - K| avoids float ties; -k before +k
        m = 2 * np.arange(self.n_sites) - self.n_sites
        return np.lexsort((m, np.abs(m)))


@dataclass(frozen=True)
class OccupationState:
    occupied: frozenset
    n_sites: int

    def __post_init__(self):
        bad = [i for i in self.occupied if not 0 <= i < self.n_sites]
        if bad:
            raise ValueError(f"indices {sorted(bad)} outside grid of {self.n_sites} sites")

    @property
    def n_atoms(self) -> int:
        return len(self.occupied)

    def indices(self) -> np.ndarray:
        return np.array(sorted(self.occupied), dtype=int)


@dataclass(frozen=True)
class FermiSeaSummary:
    b_tilde: float
    n_atoms: int

    @property
    def hopping_total(self) -> float:
        """<B> = N * b_tilde."""
        return self.n_atoms * self.b_tilde


def build_fermi_sea(n_atoms: int, grid: MomentumGrid) -> OccupationState:
    """Fill the n_atoms grid points of smallest |k|."""
    if n_atoms < 0:
        raise ValueError("n_atoms must be >= 0")
    if n_atoms > grid.n_sites:
        raise ValueError(
            f"cannot place {n_atoms} fermions on {grid.n_sites} sites (Pauli exclusion)"
        )
    chosen = grid.filling_order[:n_atoms]
    return OccupationState(frozenset(int(i) for i in chosen), grid.n_sites)


def hopping_expectation(state: OccupationState, grid: MomentumGrid) -> FermiSeaSummary:
    """Per-atom hopping mean (2/N) sum_i cos(k_i pi); zero for an empty gas."""
    if state.n_sites != grid.n_sites:
        raise ValueError("state and grid disagree on the number of sites")
    n = state.n_atoms
    if n == 0:
        return FermiSeaSummary(0.0, 0)
    total = float(np.sum(grid.band[state.indices()]))
    return FermiSeaSummary(total / n, n)


def fermi_sea_summary(n_atoms: int, n_sites: int) -> FermiSeaSummary:
    grid = MomentumGrid(n_sites)
    return hopping_expectation(build_fermi_sea(n_atoms, grid), grid)


def h1_h2_expectations(summary: FermiSeaSummary, coeffs: LatticeCoefficients,
                       params: SystemParams) -> tuple[float, float]:
    """Scalar values of the atomic Hamiltonians for the given occupation.

    The caller chooses the photon number at which ``coeffs`` were evaluated.
    """
    n = summary.n_atoms
    nb = summary.hopping_total
    h1 = coeffs.e_onsite * n + coeffs.e_hop * nb
    h2 = params.u0 * (coeffs.j_onsite * n + coeffs.j_hop * nb)
    return h1, h2


def _zeta(n_atoms: int, coeffs: LatticeCoefficients, params: SystemParams) -> float:
    return params.delta_c - params.u0 * coeffs.j_onsite * n_atoms


def hopping_prefactor(n_atoms: int, coeffs: LatticeCoefficients, params: SystemParams) -> float:
    """Coefficient of B in the effective atomic Hamiltonian at fixed N."""
    zeta = _zeta(n_atoms, coeffs, params)
    return coeffs.e_hop + params.u0 * params.eta**2 * coeffs.j_hop / (params.kappa**2 + zeta**2)


def effective_energy(state: OccupationState, coeffs: LatticeCoefficients,
                     params: SystemParams, grid: MomentumGrid | None = None) -> float:
    """Energy of an occupation under the cavity-eliminated atomic Hamiltonian."""
    grid = grid or MomentumGrid(state.n_sites)
    summary = hopping_expectation(state, grid)
    n = summary.n_atoms
    zeta = _zeta(n, coeffs, params)
    f = params.eta**2 / params.kappa * math.atan(zeta / params.kappa)
    return coeffs.e_onsite * n + f + hopping_prefactor(n, coeffs, params) * summary.hopping_total


def energy_difference(state: OccupationState, reference: OccupationState,
                      coeffs: LatticeCoefficients, params: SystemParams,
                      grid: MomentumGrid | None = None) -> float:
    """effective_energy(state) - effective_energy(reference).

    For equal particle numbers only the hopping term differs; it is evaluated
    directly so sub-ulp differences are not lost to cancellation.
    """
    grid = grid or MomentumGrid(state.n_sites)
    if state.n_atoms != reference.n_atoms:
        return (effective_energy(state, coeffs, params, grid)
                - effective_energy(reference, coeffs, params, grid))
    added = state.occupied - reference.occupied
    removed = reference.occupied - state.occupied
    d_band = float(np.sum(grid.band[sorted(added)]) - np.sum(grid.band[sorted(removed)]))
    return hopping_prefactor(state.n_atoms, coeffs, params) * d_band


@dataclass(frozen=True)
class StabilityReport:
    trials: int
    n_lower: int
    min_delta: float
    reference_energy: float


def variational_stability_check(state: OccupationState, coeffs: LatticeCoefficients,
                                params: SystemParams, trials: int,
                                seed: int) -> StabilityReport:
    """Move one random fermion to a random empty state, ``trials`` times.

    Trial i draws from SeedSequence(seed).spawn()[i], so the result does not
    depend on evaluation order.  ``min_delta`` is the lowest energy change
    seen (negative means a perturbed state beat the reference).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = MomentumGrid(state.n_sites)
    reference_energy = effective_energy(state, coeffs, params, grid)
    occupied = state.indices()
    empty = np.array(sorted(set(range(state.n_sites)) - state.occupied), dtype=int)
    if occupied.size == 0 or empty.size == 0:
        return StabilityReport(0, 0, math.nan, reference_energy)
    prefactor = hopping_prefactor(state.n_atoms, coeffs, params)
    deltas = np.empty(trials)
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        out = occupied[rng.integers(occupied.size)]
        into = empty[rng.integers(empty.size)]
        deltas[i] = prefactor * (grid.band[into] - grid.band[out])
    # + 0.0 folds a signed zero from degenerate moves
    return StabilityReport(trials, int(np.sum(deltas < 0)), float(deltas.min()) + 0.0,
                           reference_energy)
