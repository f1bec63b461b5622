"""c-number Heisenberg dynamics of the pumped cavity field."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._accel import python_impl
from .fermisea import FermiSeaSummary
from .model import SystemParams

DEFAULT_DT = 1e-3
DEFAULT_T_MAX = 200.0
DEFAULT_STRIDE = 100
DEFAULT_RTOL = 1e-3
DEFAULT_WINDOW = 10.0

#: below this photon number the exact route would need couplings at n - 2 <= 0
EXACT_FLOOR = 2.05
DERIVATIVE_FLOOR = 1e-9

COMMUTATORS = ("exact", "derivative")

_STATUS = {
    kernels.RUNNING: "t_max",
    kernels.CONVERGED: "converged",
    kernels.LEFT_DOMAIN: "left_domain",
    kernels.NONFINITE: "nonfinite",
}


class IntegrationError(RuntimeError):
    """Non-finite state during integration; retry with ``retry_dt``."""

    def __init__(self, message, last_state, retry_dt):
        super().__init__(message)
        self.last_state = last_state
        self.retry_dt = retry_dt


@dataclass(frozen=True)
class FieldState:
    alpha: complex
    alpha_conj: complex
    n_bar: float
    t: float = 0.0

    @classmethod
    def initial(cls, n0: float, alpha0: complex | None = None) -> "FieldState":
        """Start at n0 with alpha = alpha* = sqrt(n0) unless alpha0 is given."""
        if not n0 > 0:
            raise ValueError("n0 must be > 0")
        if alpha0 is None:
            a = complex(math.sqrt(n0))
            return cls(a, a, float(n0), 0.0)
        a = complex(alpha0)
        return cls(a, a.conjugate(), float(n0), 0.0)


@dataclass
class FieldTrajectory:
    times: np.ndarray
    alpha: np.ndarray
    alpha_conj: np.ndarray
    n_bar: np.ndarray
    status: str
    commutator: str
    converged: bool = False
    attractor: float | None = None
    steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def states(self) -> list[FieldState]:
        return [FieldState(complex(a), complex(c), float(n), float(t))
                for t, a, c, n in zip(self.times, self.alpha, self.alpha_conj, self.n_bar)]

    @property
    def final_state(self) -> FieldState:
        return FieldState(complex(self.alpha[-1]), complex(self.alpha_conj[-1]),
                          float(self.n_bar[-1]), float(self.times[-1]))

    @property
    def truncation_gap(self) -> np.ndarray:
        """|n_bar - |alpha|^2| / n_bar along the trajectory."""
        return np.abs(self.n_bar - np.abs(self.alpha) ** 2) / np.abs(self.n_bar)


def _check_commutator(commutator):
    if commutator not in COMMUTATORS:
        raise ValueError(f"commutator must be one of {COMMUTATORS}, got {commutator!r}")


def default_floor(commutator: str) -> float:
    return EXACT_FLOOR if commutator == "exact" else DERIVATIVE_FLOOR


def drift(state: FieldState, summary: FermiSeaSummary, params: SystemParams,
          commutator: str = "exact") -> tuple[complex, complex, float]:
    """Right-hand side (d alpha/dt, d alpha*/dt, d n/dt) at ``state``."""
    _check_commutator(commutator)
    if summary.n_atoms and params.u0 == 0:
        raise ValueError("u0 = 0 with atoms present: no lattice")
    with np.errstate(invalid="ignore", divide="ignore"):
        da, dac, dn, ok = python_impl(kernels.drift)(
            complex(state.alpha), complex(state.alpha_conj), float(state.n_bar),
            params.u0, params.s, params.delta_c, params.eta, params.kappa,
            summary.n_atoms, summary.b_tilde, commutator == "exact")
    if summary.n_atoms and not ok:
        raise ValueError(
            f"n_bar={state.n_bar} outside the coupling domain of the {commutator} route")
    return complex(da), complex(dac), float(dn)


def integrate(n0: float | None, summary: FermiSeaSummary, params: SystemParams,
              dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX, *,
              alpha0: complex | None = None, start: FieldState | None = None,
              stride: int = DEFAULT_STRIDE, commutator: str = "exact",
              n_floor: float | None = None, rtol: float = DEFAULT_RTOL,
              window: float = DEFAULT_WINDOW,
              detect_convergence: bool = True) -> FieldTrajectory:
    """Fixed-step RK4 integration of the three truncated field equations.

    ``t_max`` is the duration of this call; pass ``start`` to continue an
    earlier trajectory.  Convergence is declared once the spread of n_bar
    over the trailing ``window`` (time units) drops below ``rtol`` times its
    mean.  Falling under ``n_floor`` ends the run with status "left_domain".
    """
    _check_commutator(commutator)
    if dt <= 0 or t_max <= dt:
        raise ValueError("need dt > 0 and t_max > dt")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if summary.n_atoms and params.u0 == 0:
        raise ValueError("u0 = 0 with atoms present: no lattice")
    state = start if start is not None else FieldState.initial(n0, alpha0)
    floor = default_floor(commutator) if n_floor is None else n_floor
    n_steps = int(round(t_max / dt))
    window_samples = max(2, int(round(window / (stride * dt))) + 1)

    # the status code reports domain exits and overflow; silence NumPy's warnings
    # for them on the uncompiled path
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ts, aa, acs, ns, a, ac, n, steps, code = kernels.rk4_kernel(
            complex(state.alpha), complex(state.alpha_conj), float(state.n_bar),
            float(state.t), float(dt), n_steps, int(stride),
            float(params.u0), int(params.s), float(params.delta_c), float(params.eta),
            float(params.kappa), int(summary.n_atoms), float(summary.b_tilde),
            commutator == "exact", float(floor), window_samples, float(rtol),
            bool(detect_convergence))

    status = _STATUS[code]
    if status == "nonfinite":
        last = FieldState(complex(a), complex(ac), float(n), float(state.t + steps * dt))
        raise IntegrationError(
            f"non-finite state after t={last.t:.6g}; retry with dt={dt / 2:g}", last, dt / 2)
    converged = status == "converged"
    return FieldTrajectory(
        times=ts, alpha=aa, alpha_conj=acs, n_bar=ns, status=status,
        commutator=commutator, converged=converged,
        attractor=float(ns[-1]) if converged else None, steps=int(steps),
        meta={"dt": dt, "stride": stride, "n_floor": floor, "rtol": rtol, "window": window},
    )


def steady_alpha(n_bar: float, xi: float, params: SystemParams) -> complex:
    """Stationary amplitude eta / (kappa - i(delta_c - xi)) for a given shift."""
    return params.eta / complex(params.kappa, -(params.delta_c - xi))


@dataclass(frozen=True)
class BasinRow:
    n0: float
    attractor: float | None
    converged: bool
    status: str
    cluster: int


@dataclass(frozen=True)
class BasinScan:
    rows: list
    attractors: list  # cluster representatives, ascending

    @property
    def outcomes(self) -> list:
        """Distinct end states: attractor values, then "left_domain" if reached."""
        out = list(self.attractors)
        if any(r.status == "left_domain" for r in self.rows):
            out.append("left_domain")
        return out


def cluster_values(values, rtol: float = 1e-2) -> list[float]:
    """Greedy 1-D clustering of ascending values; returns cluster means."""
    clusters: list[list[float]] = []
    for v in sorted(values):
        if clusters and abs(v - clusters[-1][0]) <= rtol * abs(clusters[-1][0]):
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [float(np.mean(c)) for c in clusters]


def basin_scan(n0_list, summary: FermiSeaSummary, params: SystemParams,
               dt: float = DEFAULT_DT, t_max: float = DEFAULT_T_MAX, *,
               merge_rtol: float = 1e-2, **kwargs) -> BasinScan:
    """Integrate from each initial photon number and group the attractors."""
    n0_list = list(n0_list)
    if not n0_list:
        raise ValueError("n0_list must be nonempty")
    results = []
    for n0 in n0_list:
        try:
            traj = integrate(n0, summary, params, dt, t_max, **kwargs)
            results.append((n0, traj.attractor, traj.converged, traj.status))
        except (IntegrationError, ValueError) as exc:
            results.append((n0, None, False, f"error: {exc}"))
    reps = cluster_values([r[1] for r in results if r[2]], merge_rtol)
    rows = []
    for n0, att, conv, status in results:
        cluster = -1
        if conv:
            cluster = int(np.argmin([abs(att - c) for c in reps]))
        rows.append(BasinRow(float(n0), att, conv, status, cluster))
    return BasinScan(rows, reps)


@dataclass(frozen=True)
class FollowPoint:
    eta: float
    n_bar: float
    converged: bool
    status: str


def follow_attractor(eta_values, n_start: float, summary: FermiSeaSummary,
                     params: SystemParams, dt: float = DEFAULT_DT,
                     t_max: float = DEFAULT_T_MAX, **kwargs) -> list[FollowPoint]:
    """Adiabatic pump sweep: each eta starts from the previous end state.

    Sweeping eta up and then down exposes hysteresis as jumps of n_bar at
    different pump strengths.
    """
    points = []
    state = FieldState.initial(n_start)
    for eta in eta_values:
        p = params.replace(eta=float(eta))
        traj = integrate(None, summary, p, dt, t_max, start=FieldState(
            state.alpha, state.alpha_conj, state.n_bar, 0.0), **kwargs)
        state = traj.final_state
        points.append(FollowPoint(float(eta), state.n_bar, traj.converged, traj.status))
        if traj.status == "left_domain":
            break
    return points
