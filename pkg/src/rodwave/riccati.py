"""Closed-form Riccati comparison bounds, breaking criterion, lifespan window.

Along characteristics the slope f = d/dx u satisfies

    d/dt (gamma f) <= -(1/2) (gamma f)^2 + gamma (3+gamma)/2 ||u0||_{H1}^2,

so once gamma u0'(x0) dips below -sqrt(gamma(3+gamma)) ||u0||_{H1} the
comparison ODE forces breakdown in finite time, bracketed by explicit
window endpoints.  ||u0||_{H1} here always means the energy norm
sqrt(integral u^2 + u_x^2), the quantity the solver conserves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolution import BlowupReport, Trajectory, energy, fit_breakdown_time
from .grid import Field, spectral_derivative
from .initial_data import RodParams

__all__ = [
    "CriterionNotTriggered",
    "LifespanWindow",
    "riccati_upper_bound",
    "blowup_criterion",
    "lifespan_bounds",
    "lifespan_window_from_scalars",
    "slope_envelopes",
    "make_blowup_report",
    "tightness_halfwidth_threshold",
    "c_gamma",
]


class CriterionNotTriggered(ValueError):
    """The breaking criterion does not hold; derived quantities undefined."""


def c_gamma(gamma: float) -> float:
    """The criterion constant: sqrt(1 + 3/gamma) for gamma > 0, mirrored
    to sqrt(1 - 3/gamma) for gamma < 0."""
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    return math.sqrt(1.0 + 3.0 / gamma) if gamma > 0 \
        else math.sqrt(1.0 - 3.0 / gamma)


def riccati_upper_bound(a: float, b: float, c: float, f0: float,
                        t: float) -> float:
    """Upper solution of f' <= -a f^2 + b c^2 with f(0) = f0 < -lambda.

    lambda = sqrt(b/a) c.  The bound (a t + 1/(f0 + lambda))^{-1} - lambda
    is tight at t = 0 and reaches -infinity at t = -1/(a (f0 + lambda)).
    """
    if a <= 0:
        raise ValueError(f"a must be positive, got {a}")
    if b < 0 or c < 0:
        raise ValueError("b and c must be nonnegative")
    lam = math.sqrt(b / a) * c
    if not f0 < -lam:
        raise ValueError(
            f"hypothesis violated: f0 = {f0} must be below -lambda = {-lam}"
        )
    t_vanish = -1.0 / (a * (f0 + lam))
    if t >= t_vanish:
        raise ValueError(
            f"t = {t} is at or beyond the bound's vanishing time {t_vanish}"
        )
    return 1.0 / (a * t + 1.0 / (f0 + lam)) - lam


def blowup_criterion(u0: Field, gamma: float):
    """Scan for a slope extreme value that forces finite-time breaking.

    Returns (triggered, t_upper, witness_x).  For gamma > 0 the witness
    minimizes u0'; breaking is guaranteed when u0'(x0) < -C ||u0||_{H1}
    with C = c_gamma(gamma), and then

        t_upper = -2 / (gamma u0'(x0) + sqrt(gamma(3+gamma)) ||u0||_{H1}).

    gamma < 0 is handled through the mirror u -> -u, gamma -> -gamma.
    """
    if gamma == 0:
        raise ValueError("gamma = 0 has globally existing solutions; "
                         "the criterion is void")
    u0.check_finite()
    norm = math.sqrt(energy(u0))
    ux = spectral_derivative(u0).values
    cg = c_gamma(gamma)
    if gamma > 0:
        j = int(np.argmin(ux))
        slope = float(ux[j])
        triggered = slope < -cg * norm
        t_upper = (
            -2.0 / (gamma * slope + math.sqrt(gamma * (3 + gamma)) * norm)
            if triggered else None
        )
    else:
        j = int(np.argmax(ux))
        slope = float(ux[j])
        triggered = slope > cg * norm
        gt = -gamma
        t_upper = (
            2.0 / (gt * slope - math.sqrt(gt * (3 + gt)) * norm)
            if triggered else None
        )
    return triggered, t_upper, float(u0.grid.x[j])


@dataclass(frozen=True)
class LifespanWindow:
    """Bracketing times for the breakdown of plateau initial data."""

    t1_min: float
    t1_max: float
    coarse_lo: float  # 1/(gamma * amplitude)
    coarse_hi: float  # 3/(gamma * amplitude)
    c_gamma: float
    tight: bool  # coarse_lo <= t1_min and t1_max <= coarse_hi

    def contains(self, t: float, rel_tol: float = 0.05) -> bool:
        return (1 - rel_tol) * self.t1_min <= t <= (1 + rel_tol) * self.t1_max


def lifespan_window_from_scalars(slope0: float, norm_h1: float, gamma: float,
                                 amplitude: float) -> LifespanWindow:
    """Window endpoints from the plateau slope and the energy norm.

    t1_max = -2 / (gamma (slope0 + C n)),  t1_min = -2 / (gamma (slope0 - C n)),
    valid when slope0 + C n < 0 (the plateau triggers the criterion).
    """
    if gamma <= 0:
        raise ValueError("the window formulas assume gamma > 0; evolve the "
                         "mirrored data for gamma < 0")
    cg = c_gamma(gamma)
    hi_den = slope0 + cg * norm_h1
    lo_den = slope0 - cg * norm_h1
    if hi_den >= 0:
        raise CriterionNotTriggered(
            f"plateau slope {slope0} does not clear the criterion margin "
            f"{cg * norm_h1}"
        )
    t1_max = -2.0 / (gamma * hi_den)
    t1_min = -2.0 / (gamma * lo_den)
    coarse_lo = 1.0 / (gamma * amplitude) if amplitude > 0 else 0.0
    coarse_hi = 3.0 / (gamma * amplitude) if amplitude > 0 else math.inf
    tight = coarse_lo <= t1_min and t1_max <= coarse_hi
    return LifespanWindow(t1_min=t1_min, t1_max=t1_max, coarse_lo=coarse_lo,
                          coarse_hi=coarse_hi, c_gamma=cg, tight=tight)


def lifespan_bounds(u0: Field, params: RodParams) -> LifespanWindow:
    """Window for a concrete initial field; the plateau slope is read off
    the x = 0 node and the norm is the measured energy norm."""
    slope0 = float(
        spectral_derivative(u0).values[u0.grid.n_points // 2]
    )
    norm = math.sqrt(energy(u0))
    return lifespan_window_from_scalars(slope0, norm, params.gamma,
                                        params.amplitude)


def slope_envelopes(params: RodParams, norm_h1: float, gamma: float,
                    t: float) -> tuple[float, float]:
    """The comparison envelopes (m(t), M(t)) for the plateau slope.

    m(t) = 1 / ((gamma/2) t + 1/(slope0 - C n)) diverges at t1_min;
    past that instant the lower comparison solution no longer exists and
    m is reported as -inf (the lower bound becomes vacuous).  M(t) is
    defined up to t1_max, beyond which a ValueError is raised.
    """
    if gamma <= 0:
        raise ValueError("envelopes assume gamma > 0")
    slope0 = -params.amplitude * math.exp(-params.half_width)
    cg = c_gamma(gamma)
    hi_den = slope0 + cg * norm_h1
    if hi_den >= 0:
        raise CriterionNotTriggered("plateau does not trigger the criterion")
    t1_max = -2.0 / (gamma * hi_den)
    t1_min = -2.0 / (gamma * (slope0 - cg * norm_h1))
    if t >= t1_max:
        raise ValueError(f"t = {t} is beyond the envelope lifetime {t1_max}")
    m_den = 0.5 * gamma * t + 1.0 / (slope0 - cg * norm_h1)
    m = 1.0 / m_den if t < t1_min else -math.inf
    big_m = 1.0 / (0.5 * gamma * t + 1.0 / hi_den)
    return m, big_m


def make_blowup_report(traj: Trajectory, window: LifespanWindow,
                       rel_tol: float = 0.05) -> BlowupReport:
    """Combine a finished run with its analytic window into a verdict."""
    t_fit = None
    try:
        t_fit, _ = fit_breakdown_time(traj)
    except ValueError:
        pass
    if traj.detected_time is None:
        verdict = "no_blowup"
    elif window.contains(traj.detected_time, rel_tol):
        verdict = "within_window"
    else:
        verdict = "outside_window"
    return BlowupReport(
        detected_time=traj.detected_time,
        extrapolated_time=t_fit,
        window_lo=window.t1_min,
        window_hi=window.t1_max,
        threshold_used=traj.threshold_abs,
        verdict=verdict,
    )


def tightness_halfwidth_threshold(gamma: float) -> float:
    """Largest half-width q for which the window nests in the coarse one.

    Uses the closed-form energy norm of the rough profile, for which the
    amplitude cancels: the window is tight iff

        c_gamma * sqrt(2q + 2q^2 + (2/3) q^3) <= 1 - (2/3) e^q.

    Found by bisection and logged by the scan command.
    """
    if gamma <= 0:
        raise ValueError("tightness threshold defined for gamma > 0")
    cg = c_gamma(gamma)

    def gap(q: float) -> float:
        r = cg * math.sqrt(2 * q + 2 * q * q + (2.0 / 3.0) * q**3)
        return r - (1.0 - (2.0 / 3.0) * math.exp(q))

    lo, hi = 1e-12, 0.25
    if gap(hi) < 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
