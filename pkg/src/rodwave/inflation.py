"""Norm-inflation machinery: the moving-interval steepness functional.

A(p, t) is the integral of (-u_x)^p over the interval transported from
the initial plateau [q^2 - q, q - q^2] by the flow map.  Its analytic
floor combines the closed-form plateau integral with the comparison
envelope growth factor, and its scaling in amplitude and half-width is
what drives the inflation sweep: initial norms shrink while the peak
Sobolev norm grows as the family index n increases.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evolution import SolverControls, Trajectory, energy, simulate
from .flow_map import ParticleSet
from .grid import Field, make_grid, restricted_lp_norm, sobolev_norm, \
    spectral_derivative
from .initial_data import RodParams, build_initial_field, \
    plateau_lp_integral, required_points, select_inflation_params
from .riccati import LifespanWindow, c_gamma, lifespan_bounds, slope_envelopes

__all__ = [
    "InflationRecord",
    "InflationCase",
    "ResolutionError",
    "SandwichViolation",
    "steepness_integral",
    "steepness_floor",
    "steepness_scaling",
    "plan_resolution",
    "run_inflation_case",
    "run_inflation_sweep",
]

DEFAULT_FLOOR_SLACK = 10.0


class ResolutionError(RuntimeError):
    """No admissible mollification width fits the grid budget."""


class SandwichViolation(RuntimeError):
    """The slope failed to stay negative on the transported interval."""


@dataclass
class InflationRecord:
    """One sweep entry: initial and peak norms plus the steepness check."""

    n: int
    s: float
    p_s: float
    params: RodParams | None
    norm_u0_hs: float
    peak_norm_hs: float
    peak_norm_w1p: float
    a_measured: float
    a_lower_bound: float
    probe_time: float
    resolution_note: str
    detected_time: float | None = None
    t1_min: float | None = None
    t1_max: float | None = None
    skipped: bool = False

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "s": self.s,
            "p_s": self.p_s,
            "norm_u0_hs": self.norm_u0_hs,
            "peak_norm_hs": self.peak_norm_hs,
            "peak_norm_w1p": self.peak_norm_w1p,
            "a_measured": self.a_measured,
            "a_lower_bound": self.a_lower_bound,
            "probe_time": self.probe_time,
            "resolution_note": self.resolution_note,
            "detected_time": self.detected_time,
            "t1_min": self.t1_min,
            "t1_max": self.t1_max,
            "skipped": self.skipped,
        }
        if self.params is not None:
            d["amplitude"] = self.params.amplitude
            d["half_width"] = self.params.half_width
            d["moll_width"] = self.params.moll_width
            d["gamma"] = self.params.gamma
        return d


@dataclass
class InflationCase:
    """Full output of one inflation run (record plus raw objects)."""

    record: InflationRecord
    trajectory: Trajectory
    window: LifespanWindow
    params: RodParams
    initial_field: Field


def steepness_integral(traj: Trajectory, pset: ParticleSet, p: float,
                       t: float, labels: tuple[float, float] | None = None
                       ) -> float:
    """A(p, t): integral of (-u_x)^p over the transported plateau interval.

    The interval endpoints are the particles started from the given labels
    (defaults: the leftmost and rightmost tracked labels).  Raises
    SandwichViolation if the slope is not negative throughout, since the
    integrand sign is then ambiguous and the run is under-resolved.
    """
    snap = traj.snapshot_at(t)
    k = int(np.argmin(np.abs(pset.times - t)))
    if abs(pset.times[k] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"particle log does not contain time {t}")
    if labels is None:
        labels = (float(np.min(pset.labels)), float(np.max(pset.labels)))
    a = pset.paths[k, pset.particle_index(labels[0])]
    b = pset.paths[k, pset.particle_index(labels[1])]
    if not a < b:
        raise SandwichViolation("transported interval collapsed or flipped")
    ux = spectral_derivative(snap)
    g = snap.grid
    inside = (g.x >= a) & (g.x <= b)
    if not np.all(ux.values[inside] < 0.0):
        raise SandwichViolation(
            "slope is not negative on the transported interval"
        )
    return restricted_lp_norm(ux, p, float(a), float(b)) ** p


def steepness_floor(params: RodParams, norm_h1: float, p: float, t: float,
                    slack: float = DEFAULT_FLOOR_SLACK) -> float:
    """Analytic lower bound for A(p, t) on t <= t1_min.

    (2/3) * (1 + (gamma/2) M(0) t)^{-(p-2)} * (A0 - slack * A^2 q t),
    where A0 is the closed-form plateau integral and M(0) the upper slope
    envelope at time zero.  The slack constant absorbs the non-explicit
    source bound; it is configurable and recorded by callers.
    """
    gamma = params.gamma
    slope0 = -params.amplitude * math.exp(-params.half_width)
    cg = c_gamma(gamma)
    m0 = slope0 + cg * norm_h1
    if m0 >= 0:
        raise ValueError("floor undefined: plateau does not trigger "
                         "the breaking criterion")
    t1_min = -2.0 / (gamma * (slope0 - cg * norm_h1))
    if t > t1_min * (1 + 1e-9):
        raise ValueError(f"floor valid only up to t1_min = {t1_min}, got {t}")
    growth = (1.0 + 0.5 * gamma * m0 * t) ** (-(p - 2.0))
    a0 = plateau_lp_integral(params, p)
    drift = slack * params.amplitude**2 * params.half_width * t
    return (2.0 / 3.0) * growth * (a0 - drift)


def steepness_scaling(params: RodParams, p: float) -> float:
    """The bare scaling A^p q^{2 - p/2} entering the floor at t1_min."""
    return params.amplitude**p * params.half_width ** (2.0 - 0.5 * p)


def plan_resolution(half_width: float, domain_half_length: float,
                    budget_log2: int) -> tuple[int, float, str]:
    """Pick (n_points, moll_width, note) fitting the grid budget.

    Prefers the standard width q^2; falls back to q/8, then to the
    coarsest admissible width 8*dx at the budget, each clearly labeled.
    """
    q = half_width
    for eps, note in ((q * q, "standard-eps"), (q / 8.0, "modified-eps")):
        n = required_points(domain_half_length, eps)
        if n <= 2**budget_log2:
            return n, eps, note
    n = 2**budget_log2
    eps = 16.0 * domain_half_length / n
    if eps <= 0.75 * q:
        return n, eps, "modified-eps-coarse"
    raise ResolutionError(
        f"budget 2^{budget_log2} cannot resolve any admissible mollifier "
        f"for half_width {q:g} on [-{domain_half_length}, "
        f"{domain_half_length})"
    )


def _start_points(domain_half_length: float, eps: float, q: float,
                  n_build: int) -> int:
    """Coarsest simulation level that still sees the mollified transitions."""
    dx_needed = min(0.4 * eps, q / 8.0)
    n = 2 ** math.ceil(math.log2(2.0 * domain_half_length / dx_needed))
    return int(min(max(n, 2**12), n_build))


def run_inflation_case(params: RodParams, *, domain_half_length: float = 30.0,
                       budget_log2: int = 18, n_index: int = 0,
                       floor_slack: float = DEFAULT_FLOOR_SLACK,
                       capture_fractions=(0.5, 0.75, 0.9, 1.0),
                       extra_labels=(), log_every: int = 0) -> InflationCase:
    """Run one configuration and measure A at the probe time.

    The probe is min(t1_min, 0.9 * detected_time): the floor is valid up
    to t1_min and the measurement must stay inside the resolved window.
    Fields are captured at several fractions of t1_min so the probe can
    fall back to an earlier capture when detection comes unusually early.
    """
    gamma = params.gamma
    s = params.sobolev_s
    p_s = params.lp_exponent
    n_build, eps, note = plan_resolution(params.half_width,
                                         domain_half_length, budget_log2)
    params = params.with_moll_width(eps)
    grid = make_grid(domain_half_length, n_build)
    u0 = build_initial_field(params, grid)
    norm_h1 = math.sqrt(energy(u0))
    window = lifespan_bounds(u0, params)
    t1 = window.t1_min
    captures = [f * t1 for f in capture_fractions]
    q = params.half_width
    labels = sorted(set(
        [q * q - q, 0.0, q - q * q] + [float(x) for x in extra_labels]
    ))
    controls = SolverControls(
        t_max=max(min(1.1 * window.t1_max, 1.25 * window.coarse_hi),
                  1.02 * t1),
        n_start=_start_points(domain_half_length, eps, q, n_build),
        n_max=2**budget_log2,
        norm_probes=(s, p_s),
        log_every=log_every,
    )
    traj = simulate(u0, gamma, controls, particle_labels=labels,
                    capture_times=captures)
    t_det = traj.detected_time
    probe = t1 if t_det is None else min(t1, 0.9 * t_det)
    stored = [ts for ts in traj.snapshot_times if ts <= probe * (1 + 1e-12)]
    if not stored:
        raise RuntimeError("no snapshot available at or before the probe time")
    snap_t = stored[-1]
    a_measured = steepness_integral(
        traj, traj.particles, p_s, snap_t,
        labels=(q * q - q, q - q * q),
    )
    a_floor = steepness_floor(params, norm_h1, p_s, snap_t, slack=floor_slack)
    sel = traj.norm_times <= probe * (1 + 1e-12)
    peak_hs = float(np.max(traj.norm_hs[sel]))
    peak_w1p = float(np.max(traj.norm_w1p[sel]))
    record = InflationRecord(
        n=n_index,
        s=s,
        p_s=p_s,
        params=params,
        norm_u0_hs=sobolev_norm(u0, s),
        peak_norm_hs=peak_hs,
        peak_norm_w1p=peak_w1p,
        a_measured=a_measured,
        a_lower_bound=a_floor,
        probe_time=snap_t,
        resolution_note=note,
        detected_time=t_det,
        t1_min=window.t1_min,
        t1_max=window.t1_max,
    )
    return InflationCase(record=record, trajectory=traj, window=window,
                         params=params, initial_field=u0)


def _sweep_worker(args) -> InflationRecord:
    n, s, gamma, budget_log2, domain_half_length = args
    try:
        params = select_inflation_params(n, s, gamma)
        case = run_inflation_case(
            params, domain_half_length=domain_half_length,
            budget_log2=budget_log2, n_index=n,
        )
        return case.record
    except ResolutionError as err:
        return InflationRecord(
            n=n, s=s, p_s=1.0 / (1.5 - s), params=None,
            norm_u0_hs=math.nan, peak_norm_hs=math.nan,
            peak_norm_w1p=math.nan, a_measured=math.nan,
            a_lower_bound=math.nan, probe_time=math.nan,
            resolution_note=f"skipped: {err}", skipped=True,
        )


def run_inflation_sweep(ns, s: float, gamma: float, budget_log2: int = 19,
                        domain_half_length: float = 30.0,
                        jobs: int = 1) -> list[InflationRecord]:
    """The n-sweep: shrinking initial norms, growing peak norms.

    Entries whose mollification cannot fit the budget are returned as
    skipped records.  With jobs > 1 the cases run in separate processes
    and are merged in index order, so output is deterministic either way.
    """
    tasks = [(int(n), s, gamma, budget_log2, domain_half_length) for n in ns]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_sweep_worker, tasks))
    else:
        records = [_sweep_worker(t) for t in tasks]
    return sorted(records, key=lambda r: r.n)
