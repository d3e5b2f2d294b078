"""Time integration of the weak-form rod equation.

The solved equation is the nonlocal transport form

    u_t + gamma u u_x = -d/dx (1 - d^2/dx^2)^{-1} [ (3-gamma)/2 u^2
                                                    + gamma/2 (u_x)^2 ],

advanced with classical RK4 on the pseudo-spectral semidiscretization.
Quadratic terms are formed pointwise in physical space with the 2/3
dealiasing rule; the state is kept as the (masked) half spectrum, so one
RK4 stage costs four real transforms.

Resolution follows the steepening solution: the run starts on a coarse
power-of-two grid and doubles it (spectral zero-padding) whenever the
largest slope approaches the representable limit sqrt(E0 / (c * dx)),
up to a configured budget.  Runs that need more resolution than the
budget stop early and are marked underresolved rather than being allowed
to alias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as _fft

from .flow_map import FlowMapError, ParticleSet, cubic_interp
from .grid import Field, Grid, PoisonedFieldError, spectral_derivative

__all__ = [
    "SolverControls",
    "Trajectory",
    "BlowupReport",
    "reduce_material_params",
    "rhs",
    "step",
    "simulate",
    "energy",
    "cubic_invariant",
    "mirror_transform",
    "fit_breakdown_time",
]

_TINY = 1e-300


def reduce_material_params(sigma1: float, sigma2: float, sigma3: float):
    """Collapse the three material constants to (gamma, t_scale, x_scale).

    gamma = 3*s3/(s1*s2); the time and space rescalings are
    3*sqrt(-s2)/s1 and sqrt(-s2).
    """
    if sigma1 == 0:
        raise ValueError("sigma1 must be nonzero")
    if sigma2 >= 0:
        raise ValueError(f"sigma2 must be negative, got {sigma2}")
    if sigma3 > 0:
        raise ValueError(f"sigma3 must be <= 0, got {sigma3}")
    gamma = 3.0 * sigma3 / (sigma1 * sigma2)
    t_scale = 3.0 * math.sqrt(-sigma2) / sigma1
    x_scale = math.sqrt(-sigma2)
    return gamma, t_scale, x_scale


@dataclass
class SolverControls:
    """Stepping, detection, logging and resolution controls."""

    t_max: float
    dt_init: float = 1e-2
    cfl_safety: float = 0.3
    ux_blowup_threshold: float = 20.0  # in units of |gamma| * max|u0'|
    dealias: bool = True
    log_every: int = 0  # snapshot stride; 0 stores only requested captures
    n_start: int | None = None
    n_max: int | None = None
    refine_margin: float = 5.0  # refine when max|ux|^2 * (margin*dx) > E0
    norm_probes: tuple[float, float] | None = None  # (s, p) to log Hs, W1p
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.ux_blowup_threshold <= 0:
            raise ValueError("ux_blowup_threshold must be positive")
        if self.dt_init <= 0:
            raise ValueError("dt_init must be positive")


@dataclass
class Trajectory:
    """Per-step scalar logs, stored fields, and the run outcome."""

    gamma: float
    times: np.ndarray
    energy_log: np.ndarray
    invariant_log: np.ndarray
    min_gamma_ux: np.ndarray
    max_abs_u: np.ndarray
    max_abs_ux: np.ndarray
    dt_log: np.ndarray
    status: str  # completed | blowup_detected | poisoned | underresolved
    threshold_abs: float
    detected_time: float | None = None
    snapshots: list = dc_field(default_factory=list)
    snapshot_times: list = dc_field(default_factory=list)
    final_state: Field | None = None
    particles: ParticleSet | None = None
    norm_times: np.ndarray | None = None
    norm_hs: np.ndarray | None = None
    norm_w1p: np.ndarray | None = None
    refine_history: list = dc_field(default_factory=list)  # (t, n_points)

    def snapshot_at(self, t: float) -> Field:
        if not self.snapshots:
            raise ValueError("trajectory has no stored snapshots")
        k = int(np.argmin(np.abs(np.asarray(self.snapshot_times) - t)))
        if abs(self.snapshot_times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(
                f"no snapshot near t={t}; stored times {self.snapshot_times}"
            )
        return self.snapshots[k]


@dataclass
class BlowupReport:
    """Detected breakdown versus the analytic lifespan window."""

    detected_time: float | None
    extrapolated_time: float | None
    window_lo: float
    window_hi: float
    threshold_used: float
    verdict: str  # within_window | outside_window | no_blowup

    def __post_init__(self):
        if self.window_lo > self.window_hi:
            raise ValueError("window_lo must not exceed window_hi")


class _Level:
    """Cached spectral operators for one resolution."""

    def __init__(self, half_length: float, n: int, dealias: bool):
        self.grid = Grid(half_length, n)
        xi = self.grid._xi_r
        mask = self.grid._dealias_mask if dealias else np.ones_like(xi)
        ixi = 1j * xi
        ixi[-1] = 0.0
        self.ixi = ixi
        self.neg_ixi_mask = -ixi * mask
        self.helm = 1.0 / (1.0 + xi * xi)
        self.mask = mask


def _stage(level: _Level, uhat: np.ndarray, gamma: float, alpha: float,
           beta: float):
    """One RK4 stage: spectral tendency plus the physical stage fields."""
    n = level.grid.n_points
    u = _fft.irfft(uhat, n)
    ux = _fft.irfft(uhat * level.ixi, n)
    s2 = _fft.rfft(u * u)
    x2 = _fft.rfft(ux * ux)
    khat = level.neg_ixi_mask * (
        0.5 * gamma * s2 + (alpha * s2 + beta * x2) * level.helm
    )
    return khat, u, ux


def _nonlocal_coefficients(gamma: float, modified_nonlocal: bool):
    # the mirrored problem v = -u, gamma -> -gamma satisfies the same
    # equation with the u^2 coefficient flipped to -(3+gamma)/2
    alpha = -(3.0 + gamma) / 2.0 if modified_nonlocal else (3.0 - gamma) / 2.0
    return alpha, gamma / 2.0


def rhs(u: Field, gamma: float, dealias: bool = True,
        modified_nonlocal: bool = False) -> Field:
    """Tendency of the weak-form equation at a single state."""
    u.check_finite()
    level = _Level(u.grid.half_length, u.grid.n_points, dealias)
    alpha, beta = _nonlocal_coefficients(gamma, modified_nonlocal)
    uhat = _fft.rfft(u.values) * level.mask
    khat, _, _ = _stage(level, uhat, gamma, alpha, beta)
    return Field(u.grid, _fft.irfft(khat, u.grid.n_points))


def step(u: Field, gamma: float, dt: float, dealias: bool = True,
         modified_nonlocal: bool = False) -> Field:
    """One classical RK4 step of size dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    u.check_finite()
    level = _Level(u.grid.half_length, u.grid.n_points, dealias)
    alpha, beta = _nonlocal_coefficients(gamma, modified_nonlocal)
    uhat = _fft.rfft(u.values) * level.mask
    k1, _, _ = _stage(level, uhat, gamma, alpha, beta)
    k2, _, _ = _stage(level, uhat + 0.5 * dt * k1, gamma, alpha, beta)
    k3, _, _ = _stage(level, uhat + 0.5 * dt * k2, gamma, alpha, beta)
    k4, _, _ = _stage(level, uhat + dt * k3, gamma, alpha, beta)
    out = _fft.irfft(uhat + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4),
                     u.grid.n_points)
    if not np.all(np.isfinite(out)):
        raise PoisonedFieldError("step produced non-finite values")
    return Field(u.grid, out)


def energy(u: Field) -> float:
    """The quadratic invariant: integral of u^2 + (u_x)^2."""
    u.check_finite()
    ux = spectral_derivative(u)
    return float(np.sum(u.values**2 + ux.values**2) * u.grid.dx)


def cubic_invariant(u: Field, gamma: float) -> float:
    """The cubic invariant: integral of u^3 + gamma u (u_x)^2."""
    u.check_finite()
    ux = spectral_derivative(u)
    return float(
        np.sum(u.values**3 + gamma * u.values * ux.values**2) * u.grid.dx
    )


def mirror_transform(u: Field, gamma: float) -> tuple[Field, float]:
    """The involution (u, gamma) -> (-u, -gamma)."""
    return Field(u.grid, -u.values), -gamma


def _resample_hat(uhat: np.ndarray, n_old: int, n_new: int) -> np.ndarray:
    """Spectral resampling of a raw rfft half-spectrum between grid sizes."""
    if n_new == n_old:
        return uhat
    out = np.zeros(n_new // 2 + 1, dtype=complex)
    scale = n_new / n_old
    if n_new > n_old:
        out[: n_old // 2 + 1] = uhat * scale
    else:
        out[:] = uhat[: n_new // 2 + 1] * scale
        out[-1] = out[-1].real  # Nyquist of the coarser grid must be real
    return out


def _hs_seminorm_weights(level: _Level, s: float) -> np.ndarray:
    g = level.grid
    w = np.full(g.n_points // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w * g._xi_r ** (2.0 * s) * g.dx**2 / (2.0 * g.half_length)


def simulate(u0: Field, gamma: float, controls: SolverControls,
             particle_labels=None, capture_times=()) -> Trajectory:
    """Adaptive RK4 run with conservation logs and breakdown detection.

    The run stops at t_max, at the blow-up indicator
    inf_x gamma*u_x < -threshold (threshold = ux_blowup_threshold times
    |gamma|*max|u0'|), when the state goes non-finite, or when keeping
    the front resolved would exceed the grid budget.  dt follows
    cfl_safety * min(dx / max|gamma u|, 1 / max|u_x|) and lands exactly
    on requested capture times, where fields are stored.
    """
    u0.check_finite()
    L = u0.grid.half_length
    n0 = u0.grid.n_points
    n_start = controls.n_start or n0
    n_max = controls.n_max or max(n0, n_start)
    if n_start > n_max:
        raise ValueError("n_start exceeds n_max")

    alpha, beta = _nonlocal_coefficients(gamma, False)
    level = _Level(L, n_start, controls.dealias)
    uhat = _resample_hat(_fft.rfft(u0.values), n0, n_start) * level.mask

    ux0 = spectral_derivative(u0)
    thr_ref = abs(gamma) * float(np.max(np.abs(ux0.values)))
    thr_abs = controls.ux_blowup_threshold * thr_ref if thr_ref > 0 else np.inf

    captures = sorted(set(float(t) for t in capture_times))
    ci = 0

    track = particle_labels is not None
    if track:
        phi = np.asarray(particle_labels, dtype=float).copy()
        if np.any(np.abs(phi) >= L):
            raise FlowMapError("particle labels must lie inside (-L, L)")
        labels = phi.copy()
        phi_rows, uxa_rows = [], []

    probes = controls.norm_probes
    if probes is not None:
        s_probe, p_probe = probes
        hs_w = _hs_seminorm_weights(level, s_probe)
        norm_stride = max(1, controls.log_every or 5)
        norm_t, norm_hs, norm_w1p = [], [], []

    times, e_log, f_log, gux_log, umax_log, uxmax_log, dts = \
        [], [], [], [], [], [], []
    snaps, snap_ts = [], []
    refine_history = [(0.0, n_start)]

    t = 0.0
    steps = 0
    e0 = None
    status = None
    detected_time = None
    u1 = None

    while True:
        k1, u1, u1x = _stage(level, uhat, gamma, alpha, beta)
        dx = level.grid.dx
        umax = float(np.max(np.abs(u1)))
        uxmax = float(np.max(np.abs(u1x)))
        if not (math.isfinite(umax) and math.isfinite(uxmax)):
            status = "poisoned"
            break
        if e0 is None:
            e0 = float(np.sum(u1 * u1 + u1x * u1x) * dx)

        # keep the steepening front representable: refine once the slope
        # nears the energy-limited capacity of the current grid
        if e0 > 0 and uxmax * uxmax * (controls.refine_margin * dx) > e0:
            if level.grid.n_points < n_max:
                new_n = level.grid.n_points * 2
                uhat = _resample_hat(uhat, level.grid.n_points, new_n)
                level = _Level(L, new_n, controls.dealias)
                uhat = uhat * level.mask
                if probes is not None:
                    hs_w = _hs_seminorm_weights(level, s_probe)
                refine_history.append((t, new_n))
                continue  # recompute the stage on the refined grid
            if ci >= len(captures):
                status = "underresolved"
                break
            # budget exhausted but captures pending: press on at n_max

        e_now = float(np.sum(u1 * u1 + u1x * u1x) * dx)
        f_now = float(np.sum(u1**3 + gamma * u1 * u1x**2) * dx)
        gux_min = gamma * float(np.min(u1x)) if gamma >= 0 \
            else gamma * float(np.max(u1x))

        times.append(t)
        e_log.append(e_now)
        f_log.append(f_now)
        gux_log.append(gux_min)
        umax_log.append(umax)
        uxmax_log.append(uxmax)
        if track:
            phi_rows.append(phi.copy())
            uxa_rows.append(cubic_interp(u1x, L, phi))
        if probes is not None and steps % norm_stride == 0:
            hdot = math.sqrt(float(np.sum(hs_w * np.abs(uhat) ** 2)))
            l2 = math.sqrt(float(np.sum(u1 * u1) * dx))
            lp_u = float(np.sum(np.abs(u1) ** p_probe) * dx) ** (1 / p_probe)
            lp_ux = float(np.sum(np.abs(u1x) ** p_probe) * dx) ** (1 / p_probe)
            norm_t.append(t)
            norm_hs.append(l2 + hdot)
            norm_w1p.append(lp_u + lp_ux)

        store = False
        if ci < len(captures) and t == captures[ci]:
            store = True
            ci += 1
        if controls.log_every and steps % controls.log_every == 0:
            store = True
        if store:
            snaps.append(Field(level.grid, u1.copy()))
            snap_ts.append(t)

        if gux_min < -thr_abs:
            status = "blowup_detected"
            detected_time = t
            break
        if t >= controls.t_max * (1.0 - 1e-12):
            status = "completed"
            break
        if steps >= controls.max_steps:
            status = "underresolved"
            break

        dt = min(
            controls.dt_init,
            controls.cfl_safety * dx / max(abs(gamma) * umax, _TINY),
            controls.cfl_safety / max(uxmax, _TINY),
        )
        next_event = controls.t_max
        if ci < len(captures):
            next_event = min(next_event, captures[ci])
        land = next_event - t <= dt
        if land:
            dt = next_event - t
        if dt <= 0 or not math.isfinite(dt):
            status = "poisoned"
            break
        dts.append(dt)

        k2, u2, _ = _stage(level, uhat + 0.5 * dt * k1, gamma, alpha, beta)
        k3, u3, _ = _stage(level, uhat + 0.5 * dt * k2, gamma, alpha, beta)
        k4, u4, _ = _stage(level, uhat + dt * k3, gamma, alpha, beta)
        uhat = uhat + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if track:
            l1 = gamma * cubic_interp(u1, L, phi)
            l2v = gamma * cubic_interp(u2, L, phi + 0.5 * dt * l1)
            l3v = gamma * cubic_interp(u3, L, phi + 0.5 * dt * l2v)
            l4v = gamma * cubic_interp(u4, L, phi + dt * l3v)
            phi = phi + dt / 6.0 * (l1 + 2.0 * l2v + 2.0 * l3v + l4v)
            if np.any(np.abs(phi) >= L):
                raise FlowMapError("particle reached the domain boundary")
        t = next_event if land else t + dt
        steps += 1

    n_logged = len(times)
    dts = dts[: max(n_logged - 1, 0)]
    traj = Trajectory(
        gamma=gamma,
        times=np.asarray(times),
        energy_log=np.asarray(e_log),
        invariant_log=np.asarray(f_log),
        min_gamma_ux=np.asarray(gux_log),
        max_abs_u=np.asarray(umax_log),
        max_abs_ux=np.asarray(uxmax_log),
        dt_log=np.asarray(dts + [0.0]) if n_logged else np.zeros(0),
        status=status,
        threshold_abs=thr_abs,
        detected_time=detected_time,
        snapshots=snaps,
        snapshot_times=snap_ts,
        refine_history=refine_history,
    )
    if u1 is not None and status != "poisoned":
        traj.final_state = Field(level.grid, u1.copy())
    if track:
        traj.particles = ParticleSet(
            labels=labels,
            times=np.asarray(times),
            paths=np.asarray(phi_rows),
            ux_along=np.asarray(uxa_rows),
        )
    if probes is not None:
        traj.norm_times = np.asarray(norm_t)
        traj.norm_hs = np.asarray(norm_hs)
        traj.norm_w1p = np.asarray(norm_w1p)
    return traj


def fit_breakdown_time(traj: Trajectory, tail_factor: float = 4.0):
    """Extrapolated breakdown time from the reciprocal-slope tail.

    Near breakdown -1/(inf gamma*u_x) decays linearly to zero with rate
    gamma/2, so a least-squares line through the logged tail gives the
    apparent singularity time as its root.  Returns (t_fit, slope).
    """
    g = traj.min_gamma_ux
    t = traj.times
    if g.size < 8 or g[0] >= 0:
        raise ValueError("trajectory lacks a negative-slope tail to fit")
    for factor in (tail_factor, 2.5, 1.5):
        sel = g <= factor * g[0]
        if np.count_nonzero(sel) >= 6:
            break
    else:
        raise ValueError("too few tail points for a breakdown fit")
    y = -1.0 / g[sel]
    slope, intercept = np.polyfit(t[sel], y, 1)
    if slope >= 0:
        raise ValueError("reciprocal slope is not decaying; no breakdown")
    return float(-intercept / slope), float(slope)
