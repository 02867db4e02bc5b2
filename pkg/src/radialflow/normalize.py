"""Blow-down of the flow and its convergence to a Schwarzschild exterior.

The flowing metric is pulled back by the radial dilation ``x -> x s`` with
``s = u_inf^{-2/(n-2)}`` and its factors are divided by ``u_inf``, the
discrete stand-in for ``exp(-t)``.  With these choices the normalized
metric is isometric to the flowing one and tends to one at infinity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .flow import FlowState
from .profiles import BackgroundMetric, RadialGrid, RadialProfile, unit_ball_volume


@dataclass(frozen=True, eq=False)
class NormalizedState:
    t: float
    U_t: RadialProfile
    V_t: RadialProfile
    W_t: RadialProfile
    rho_star: float
    M_limit: float | None
    scale: float


def blow_down(state: FlowState, metric: BackgroundMetric, M_limit: float | None = None) -> NormalizedState:
    """Normalized total factors on the dilated grid ``x = r / s``; nodal values are exact."""
    n = metric.n
    k = n - 2
    f = state.factor
    a = f.u_inf
    if not a > 0:
        raise DomainError("flow asymptote must be positive")
    s = a ** (-2.0 / k)
    r = metric.grid.nodes
    grid = RadialGrid(n, r / s)
    v = state.v_current
    Ur, dUr = metric.U.values, np.asarray(metric.U.derivative(r))
    vr, dvr = v.profile.values, np.asarray(v.derivative(r))
    phi, dphi = np.asarray(f.values), np.asarray(f.derivative(r))
    # d/dx of g(x s)/a is s g'(x s)/a; r^-k tails pick up s^-k
    sk = s ** (-k)
    U_t = RadialProfile(grid, phi / a, 1.0, f.tail_coeff * sk / a, dphi * s / a)
    v_tail = metric.U.tail_coeff * v.asymptote + v.capacity_coeff
    V_t = RadialProfile(grid, Ur * vr / a, v.asymptote / a, v_tail * sk / a,
                        (dUr * vr + Ur * dvr) * s / a)
    W_t = RadialProfile(grid, 0.5 * (U_t.values - V_t.values), 0.5 * (1.0 - V_t.tail_value),
                        0.5 * (U_t.tail_coeff - V_t.tail_coeff), 0.5 * (U_t.slopes - V_t.slopes))
    return NormalizedState(state.t, U_t, V_t, W_t, state.rho / s, M_limit, s)


def convergence_metrics(normalized: NormalizedState, M: float, r_max: float | None = None) -> dict:
    """Sup-gaps against the limiting Schwarzschild profiles on ``x >= 4 r_max``."""
    if not M > 0:
        raise DomainError("mass estimate must be positive")
    U = normalized.U_t
    n = U.n
    k = n - 2
    x = U.grid.nodes
    r_max = r_max if r_max and r_max > 0 else normalized.rho_star
    sel = x >= 4.0 * r_max
    if not sel.any():
        sel = x >= x[-1]
    z = 0.5 * M * x[sel] ** (-k)
    horizon = (0.5 * M) ** (1.0 / k)
    return {
        "U_gap": float(np.max(np.abs(U.values[sel] - (1.0 + z)))),
        "V_gap": float(np.max(np.abs(normalized.V_t.values[sel] - (-1.0 + z)))),
        "W_gap": float(np.max(np.abs(normalized.W_t.values[sel] - 1.0))),
        "rho_gap": float(abs(normalized.rho_star - horizon)),
        "horizon_radius": horizon,
        "region_start": float(4.0 * r_max),
    }


def horizon_mass_relation(area: float, n: int) -> float:
    """Mass of the Schwarzschild exterior whose horizon has the given area."""
    if not area > 0:
        raise DomainError("area must be positive")
    return 0.5 * (area / (n * unit_ball_volume(n))) ** ((n - 2) / (n - 1))
