"""Pseudo-spectral simulator and verification harness for the rod equation."""

from .grid import (
    Field,
    Grid,
    PoisonedFieldError,
    helmholtz_inverse,
    lp_norm,
    make_grid,
    restricted_lp_norm,
    sobolev_norm,
    spectral_derivative,
    w1p_norm,
)
from .initial_data import (
    RodParams,
    build_initial_field,
    mollifier,
    peakon_antipeakon,
    peakon_antipeakon_slope,
    plateau_lp_integral,
    profile_spectrum,
    select_inflation_params,
)
from .evolution import (
    BlowupReport,
    SolverControls,
    Trajectory,
    cubic_invariant,
    energy,
    fit_breakdown_time,
    mirror_transform,
    reduce_material_params,
    rhs,
    simulate,
    step,
)
from .flow_map import ParticleSet, interpolate, track_particles, ux_along_flow
from .riccati import (
    LifespanWindow,
    blowup_criterion,
    c_gamma,
    lifespan_bounds,
    make_blowup_report,
    riccati_upper_bound,
    slope_envelopes,
)
from .inflation import (
    InflationRecord,
    plan_resolution,
    run_inflation_case,
    run_inflation_sweep,
    steepness_floor,
    steepness_integral,
)

__version__ = "0.1.0"
