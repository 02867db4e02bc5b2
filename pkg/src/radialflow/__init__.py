"""Numerical laboratory for the conformal flow on radial asymptotically flat manifolds."""
from .kernels import BACKEND
from .profiles import (
    BackgroundMetric,
    RadialGrid,
    RadialProfile,
    RampFlux,
    Scenario,
    adm_mass,
    make_flat,
    make_from_flux,
    make_grid,
    make_schwarzschild,
    make_tabulated,
    mean_curvature,
    scalar_curvature,
    sphere_area,
    unit_ball_volume,
)
from .harmonic import HarmonicSolution, capacity, potential, resistance_integral

from .enclosure import Enclosure, outermost_min_enclosure, verify_outer_minimizing
from .flow import FlowState, FlowTrace, extrapolate, mass_ode_residual, mass_series, run, step, vanishing_mass_checks
from .normalize import NormalizedState, blow_down, convergence_metrics, horizon_mass_relation
from .masscap import (YamabeResult, conformal_barrier, doubled_compactified_mass, mass_yamabe_check,
                      penrose_gap, yamabe_dirichlet, yamabe_neumann)
from .config import RunConfig, parse_config
from .suite import run_suite

__version__ = "0.1.0"
