"""Self-consistent steady states of the intracavity photon number.

The photon number satisfies n = eta^2 / (kappa^2 + (delta_c - xi(n))^2), with
xi the atom-induced resonance shift.  Writing n = 1 / (|u0| y^2) turns this
into a scalar equation R(y) = 0 whose sign changes are bracketed on a log
grid and refined by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import dynamics, kernels
from ._accel import python_impl
from .fermisea import FermiSeaSummary, fermi_sea_summary
from .model import SystemParams, y_to_photons

_xi_derivative = python_impl(kernels.xi_derivative)
_xi_exact = python_impl(kernels.xi_exact)
_coefficients_y = python_impl(kernels.coefficients_y)

PI2 = math.pi**2


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class SteadyStateBranch:
    n_bar: float
    y: float
    xi: float
    valid_tb: bool
    stability: Stability = Stability.UNDETERMINED
    commutator: str = "derivative"


@dataclass(frozen=True)
class ShiftFunctions:
    f1: np.ndarray | float
    f2: np.ndarray | float


def shift_functions(y, s: int) -> ShiftFunctions:
    """On-site (f1) and hopping (f2) parts of the resonance shift in units of u0 N / 2.

    f2 carries the factor s on its E1-derivative part as well, which follows
    from d|u0|/du0 = s; for s = +1 this is the textbook expression.
    """
    y = np.asarray(y, dtype=float)
    ey = np.exp(-y)
    f1 = 1.0 + s * y - s * ey * (1.0 + y / 2.0)
    f2 = s * ey * (1.0 + y / 2.0 - PI2 / (8.0 * y)) + s * (PI2 * PI2 / (8.0 * y) - 6.0 * PI2 / 8.0 - y)
    return ShiftFunctions(f1, f2)


def xi_of_y(y, summary: FermiSeaSummary, params: SystemParams):
    """Resonance shift (derivative route) expressed through y."""
    if summary.n_atoms == 0:
        return np.zeros_like(np.asarray(y, dtype=float))
    sf = shift_functions(y, params.s)
    return (params.u0 * summary.n_atoms / 2.0) * (
        sf.f1 + summary.b_tilde * np.exp(-PI2 / (4.0 * np.asarray(y))) * sf.f2)


def xi_shift(n_bar, summary: FermiSeaSummary, params: SystemParams, *,
             derivatives: bool = True, commutator: str = "derivative"):
    """Atom-induced shift of the cavity resonance at photon number ``n_bar``.

    ``commutator="derivative"`` replaces photon-number differences by
    derivatives (the closed steady-state equation); ``"exact"`` keeps the
    differences as the time evolution does and needs n_bar > 2.
    ``derivatives=False`` keeps only the direct dispersive term.
    """
    n = np.asarray(n_bar, dtype=float)
    if np.any(n <= 0):
        raise ValueError("n_bar must be > 0")
    if summary.n_atoms == 0:
        return 0.0 * n
    if params.u0 == 0:
        raise ValueError("u0 = 0: no lattice")
    args = (params.u0, params.s, summary.n_atoms, summary.b_tilde)
    if not derivatives:
        y = 1.0 / np.sqrt(abs(params.u0) * n)
        _, j, _, j1 = _coefficients_y(y, params.s)
        return params.u0 * summary.n_atoms * (j + j1 * summary.b_tilde)
    if commutator == "derivative":
        return _xi_derivative(n, *args)
    if commutator == "exact":
        if np.any(n <= 2):
            raise ValueError("exact differences need n_bar > 2")
        return _xi_exact(n, *args)
    raise ValueError(f"unknown commutator {commutator!r}")


def lorentzian(xi, params: SystemParams):
    return params.eta**2 / (params.kappa**2 + (params.delta_c - xi) ** 2)


def fixed_point_residual(n_bar, summary: FermiSeaSummary, params: SystemParams,
                         commutator: str = "derivative"):
    """Relative residual (n - eta^2/(kappa^2 + (delta_c - xi(n))^2)) / n."""
    n = np.asarray(n_bar, dtype=float)
    return (n - lorentzian(xi_shift(n, summary, params, commutator=commutator), params)) / n


def residual_y(y, summary: FermiSeaSummary, params: SystemParams,
               commutator: str = "derivative"):
    """R(y) = |u0| eta^2 y^2 - kappa^2 - (delta_c - xi)^2; roots are steady states."""
    if params.u0 == 0:
        raise ValueError("u0 = 0: no lattice")
    y = np.asarray(y, dtype=float)
    if commutator == "derivative":
        xi = xi_of_y(y, summary, params)
    elif commutator == "exact":
        if summary.n_atoms == 0:
            xi = np.zeros_like(y)
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                xi = _xi_exact(y_to_photons(y, params.u0), params.u0, params.s,
                               summary.n_atoms, summary.b_tilde)
    else:
        raise ValueError(f"unknown commutator {commutator!r}")
    return abs(params.u0) * params.eta**2 * y * y - params.kappa**2 - (params.delta_c - xi) ** 2


def _bisect(fn, a, b, fa):
    # run to floating-point resolution; at least |dy|/y <= 1e-10 in practice
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = fn(m)
        if fm == 0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def find_branches(summary: FermiSeaSummary, params: SystemParams,
                  y_lo: float | None = None, y_hi: float = 1.0, n_scan: int = 4000,
                  commutator: str = "derivative") -> list[SteadyStateBranch]:
    """All roots of R(y) on [y_lo, y_hi], ascending in n_bar.

    The default ``y_lo`` is the width at the photon ceiling eta^2/kappa^2,
    below which no steady state can exist.
    """
    if n_scan < 100:
        raise ValueError("n_scan must be >= 100")
    if params.u0 == 0:
        raise ValueError("u0 = 0: no lattice")
    if params.eta == 0:
        return []
    abs_u0 = abs(params.u0)
    floor_y = params.kappa / (params.eta * math.sqrt(abs_u0))
    y_lo = floor_y if y_lo is None else max(y_lo, floor_y)
    if commutator == "exact" and summary.n_atoms:
        y_hi = min(y_hi, (1.0 - 1e-12) / math.sqrt(dynamics.EXACT_FLOOR * abs_u0))
    if not 0 < y_lo < y_hi:
        return []

    def r(y):
        return float(residual_y(y, summary, params, commutator))

    grid = np.geomspace(y_lo, y_hi, n_scan)
    vals = residual_y(grid, summary, params, commutator)
    roots = []
    for i in range(n_scan - 1):
        fa, fb = vals[i], vals[i + 1]
        if not (np.isfinite(fa) and np.isfinite(fb)):
            continue
        if fa == 0:
            roots.append(grid[i])
        elif fa * fb < 0:
            roots.append(_bisect(r, grid[i], grid[i + 1], fa))
    if vals[-1] == 0:
        roots.append(grid[-1])

    unique = []
    for y in sorted(roots):
        if not unique or abs(y - unique[-1]) > 1e-8 * y:
            unique.append(y)
    branches = []
    for y in sorted(unique, reverse=True):
        n = float(y_to_photons(y, params.u0))
        xi = float(xi_shift(n, summary, params, commutator=commutator))
        branches.append(SteadyStateBranch(n_bar=n, y=float(y), xi=xi,
                                          valid_tb=bool(y <= params.y_max),
                                          commutator=commutator))
    return branches


def classify_stability(branch: SteadyStateBranch, summary: FermiSeaSummary,
                       params: SystemParams, epsilon: float = 1e-2,
                       t_max: float | None = None, band: float = 1e-2,
                       dt: float = dynamics.DEFAULT_DT) -> SteadyStateBranch:
    """Label a branch by integrating from n_bar (1 +/- epsilon).

    Both runs start on the stationary field phase so only the photon number
    is perturbed.  The dynamics use the same commutator treatment as the
    branch, so the branch is an exact fixed point of the integrated flow.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    t_max = 50.0 / params.kappa if t_max is None else t_max
    alpha_ss = dynamics.steady_alpha(branch.n_bar, branch.xi, params)
    outcomes = []
    for sign in (-1.0, 1.0):
        scale = 1.0 + sign * epsilon
        traj = None
        try:
            traj = dynamics.integrate(branch.n_bar * scale, summary, params, dt, t_max,
                                      alpha0=alpha_ss * math.sqrt(scale),
                                      commutator=branch.commutator)
        except dynamics.IntegrationError:
            outcomes.append("ambiguous")
            continue
        end = traj.n_bar[-1]
        near = abs(end - branch.n_bar) <= band * branch.n_bar
        if traj.status == "left_domain":
            outcomes.append("departed")
        elif near:
            outcomes.append("returned")
        elif traj.converged:
            outcomes.append("departed")
        else:
            outcomes.append("ambiguous")
    if "departed" in outcomes:
        label = Stability.UNSTABLE
    elif all(o == "returned" for o in outcomes):
        label = Stability.STABLE
    else:
        label = Stability.UNDETERMINED
    return replace(branch, stability=label)


@dataclass(frozen=True)
class SweepRow:
    value: float
    branches: list
    status: str = "ok"


def _sweep_point(params, *, y_lo, y_hi, n_scan, classify, commutator, stability_kw):
    summary = fermi_sea_summary(params.n_atoms, params.n_sites)
    branches = find_branches(summary, params, y_lo, y_hi, n_scan, commutator)
    if classify:
        branches = [classify_stability(b, summary, params, **stability_kw) for b in branches]
    return branches


def _sweep(values, make_params, *, y_lo=None, y_hi=1.0, n_scan=4000, classify=True,
           commutator="derivative", stability_kw=None):
    values = list(values)
    if not values:
        raise ValueError("sweep list must be nonempty")
    rows = []
    for v in values:
        try:
            p = make_params(v)
            branches = _sweep_point(p, y_lo=y_lo, y_hi=y_hi, n_scan=n_scan, classify=classify,
                                    commutator=commutator, stability_kw=stability_kw or {})
            rows.append(SweepRow(v, branches, "ok" if branches else "no_roots"))
        except (ValueError, ArithmeticError) as exc:
            rows.append(SweepRow(v, [], f"error: {exc}"))
    return rows


def sweep_atoms(params: SystemParams, n_list, **kwargs) -> list[SweepRow]:
    """Branches for each atom number, rebuilding the Fermi sea every time."""
    return _sweep(n_list, lambda n: params.replace(n_atoms=int(n)), **kwargs)


def sweep_pump(params: SystemParams, eta_list, **kwargs) -> list[SweepRow]:
    """Branches for each pump amplitude at fixed atom number."""
    return _sweep(eta_list, lambda eta: params.replace(eta=float(eta)), **kwargs)
