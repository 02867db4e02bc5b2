"""Static mass-capacity diagnostics of a radial background metric.

Yamabe-type problems are linear radial ODEs.  In ``t = log r`` with
``p = r^(n-1) U^2 u'`` the Euler-Lagrange equation ``-a_n Lap u + R u = 0``
becomes ``y' = p r^(2-n) / U^2``, ``p' = U (dF/dt) y``; a single shot from
the sphere plus rescaling gives the solution with ``u -> 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, solve_ivp

from .enclosure import verify_outer_minimizing
from .errors import DomainError, NumericalError, PreconditionError, TailFitError
from .harmonic import capacity, potential
from .normalize import horizon_mass_relation
from .profiles import (BackgroundMetric, RadialProfile, adm_mass, conformal_exponent, fit_tail,
                       mean_curvature, scalar_curvature_of_factor, sphere_area, unit_ball_volume)

ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
MINIMAL_HTOL = 1e-6
YAMABE_RTOL = 1e-5


@dataclass(frozen=True, eq=False)
class YamabeResult:
    value: float
    minimizer: RadialProfile
    boundary_condition: str
    residual: float
    asymptote: tuple = (1.0, 0.0)
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class BarrierResult:
    factor: RadialProfile
    mean_curvature: float
    min_scalar_curvature: float


def conformal_barrier(metric: BackgroundMetric, eps: float) -> BarrierResult:
    """Total factor ``U (1 + eps v)/(1 - eps)``, ``v`` zero on the boundary and ``-1`` at infinity.

    ``mean_curvature`` is reported with the normal pointing to the end.
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    U = metric.U
    v = potential(U, metric.rho0, 0.0, -1.0)
    w = (1.0 + eps * v.profile.values) / (1.0 - eps)
    dw = eps * v.profile.slopes / (1.0 - eps)
    vals = U.values * w
    slopes = U.slopes * w + U.values * dw if U.slopes is not None else None
    coeff = U.tail_coeff + eps * v.capacity_coeff / (1.0 - eps)
    prof = RadialProfile(metric.grid, vals, 1.0, coeff, slopes)
    H = mean_curvature(prof, metric.rho0, "toward-end")
    r = metric.grid.nodes
    sel = r > metric.rho0 * math.exp(3 * metric.grid.h)  # stencils clear of the kink
    R = scalar_curvature_of_factor(prof)[sel]
    return BarrierResult(prof, float(H), float(R.min()) if R.size else 0.0)


def doubled_compactified_mass(metric: BackgroundMetric, rho: float, rtol: float = 1e-4) -> dict:
    """ADM mass of ``U (1 + phi)/2`` with ``phi`` zero on ``r = rho`` and one at infinity.

    The tail-fit value is compared with ``adm_mass - capacity``.
    """
    if rho < metric.rho0 * (1 - 1e-12):
        raise DomainError("rho must not lie inside the boundary")
    U = metric.U
    phi = potential(U, rho, 0.0, 1.0)
    vals = 0.5 * U.values * (1.0 + phi.profile.values)
    a, c, _, resid = fit_tail(metric.grid, vals, r_floor=max(rho, metric.harmonic_radius))
    if resid > 1e-6:
        raise TailFitError(f"compactified factor is not harmonic in the tail (residual {resid:.2e})")
    m_fit = 2.0 * a * c
    m = adm_mass(metric)
    cap = capacity(U, rho)
    formula = m - cap
    if abs(m_fit - formula) > rtol * max(1.0, abs(m)):
        raise NumericalError(f"compactified mass {m_fit!r} differs from m - c = {formula!r}")
    return {"mtilde": m_fit, "mass": m, "capacity": cap, "residual": m_fit - formula}


# ---------------------------------------------------------------- Yamabe


def _shoot(metric: BackgroundMetric, rho: float, y0: float, p0: float):
    n = metric.n
    k = n - 2
    U, flux = metric.U, metric.flux
    t0, t1 = math.log(rho), metric.grid.log_nodes[-1]

    def rhs(t, z):
        r = math.exp(t)
        Ur = U(r)
        return [z[1] * r ** (2 - n) / (Ur * Ur), Ur * r * flux.derivative(r) * z[0]]

    sol = solve_ivp(rhs, (t0, t1), [y0, p0], method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL,
                    dense_output=True)
    if not sol.success:
        raise NumericalError(f"shooting failed: {sol.message}")
    y1, p1 = sol.y[:, -1]
    r1 = math.exp(t1)
    F1 = flux(r1)
    U1 = U(r1)
    B = (F1 * y1 - p1 / U1) / k
    A = U1 * y1 - B * r1 ** (-k)
    if not np.isfinite(A) or A <= 0:
        raise NumericalError("shooting did not produce a positive asymptote")
    return sol, A, B


def _assemble(metric: BackgroundMetric, rho: float, sol, A: float, B: float, bc: str,
              boundary_term: float) -> YamabeResult:
    n = metric.n
    k = n - 2
    an = conformal_exponent(n)
    area_n = n * unit_ball_volume(n)
    U, flux = metric.U, metric.flux
    # quadrature of the energy on a fine log grid from the sphere outward
    t0, t1 = math.log(rho), metric.grid.log_nodes[-1]
    count = 2 * max(1024, int((t1 - t0) / metric.grid.h)) + 1
    t = np.linspace(t0, t1, count)
    y, p = sol.sol(t) / A
    r = np.exp(t)
    Ur = np.asarray(U(r))
    dy = p * r ** (2 - n) / Ur ** 2
    dF = r * np.asarray(flux.derivative(r))
    bulk = simpson(p * dy + Ur * dF * y * y, x=t)
    tail = p[-1] * (1.0 - y[-1])
    value = an * area_n * (bulk + tail) + boundary_term * y[0] ** 2
    b = B / A
    nodes = metric.grid.nodes
    inside = nodes < rho
    tn = np.log(np.maximum(nodes, rho))
    yn, pn = sol.sol(np.minimum(tn, t1)) / A
    yn = np.where(inside, y[0], yn)
    slopes = np.where(inside, 0.0, pn * nodes ** (1 - n) / np.asarray(U(nodes)) ** 2)
    prof = RadialProfile(metric.grid, yn, 1.0, b - U.tail_coeff, slopes)
    ref = np.abs(np.asarray(U(r)) * y - (1.0 + b * r ** (-k)))
    residual = float(ref.max())
    return YamabeResult(float(value), prof, bc, residual, (1.0, b),
                        {"bulk": float(an * area_n * bulk), "tail": float(an * area_n * tail),
                         "boundary": float(boundary_term * y[0] ** 2)})


def yamabe_dirichlet(metric: BackgroundMetric, rho: float | None = None) -> YamabeResult:
    """Minimizer vanishing on ``r = rho`` and tending to one; value of the energy."""
    rho = metric.rho0 if rho is None else rho
    sol, A, B = _shoot(metric, rho, 0.0, 1.0)
    res = _assemble(metric, rho, sol, A, B, "dirichlet", 0.0)
    n = metric.n
    d = dict(res.diagnostics)
    if _scalar_flat(metric, rho):
        cap = capacity(metric.U, rho)
        target = 4 * n * (n - 1) * unit_ball_volume(n) * cap
        d["capacity_identity"] = target
        if abs(res.value - target) > YAMABE_RTOL * abs(res.value):
            raise NumericalError(f"Dirichlet energy {res.value!r} differs from {target!r}")
    return YamabeResult(res.value, res.minimizer, res.boundary_condition, res.residual,
                        res.asymptote, d)


def _scalar_flat(metric: BackgroundMetric, rho: float) -> bool:
    r = metric.grid.nodes
    dF = np.abs(np.asarray(metric.flux.derivative(r[r >= rho])))
    return bool(dF.max(initial=0.0) == 0.0)


def _boundary_data(metric: BackgroundMetric, rho: float):
    n = metric.n
    k = n - 2
    H = mean_curvature(metric.U, rho, "toward-end")
    area = float(sphere_area(metric.U, rho, n=n))
    return H, area, 2.0 * H * area


def yamabe_neumann(metric: BackgroundMetric, rho: float | None = None,
                   unit_trial: bool = False) -> YamabeResult:
    """Robin problem ``a_n du/dnu = 2 H u`` on ``r = rho`` with ``u -> 1``.

    With ``unit_trial`` the functional is evaluated at ``u = 1`` instead,
    giving the total scalar curvature plus twice the total mean curvature.
    """
    rho = metric.rho0 if rho is None else rho
    n = metric.n
    k = n - 2
    an = conformal_exponent(n)
    H, area, bterm = _boundary_data(metric, rho)
    if unit_trial:
        t0, t1 = math.log(rho), metric.grid.log_nodes[-1]
        t = np.linspace(t0, t1, 2 * max(1024, int((t1 - t0) / metric.grid.h)) + 1)
        r = np.exp(t)
        integrand = np.asarray(metric.U(r)) * r * np.asarray(metric.flux.derivative(r))
        total_R = an * n * unit_ball_volume(n) * simpson(integrand, x=t)
        ones = np.ones(metric.grid.size)
        prof = RadialProfile(metric.grid, ones, 1.0, 0.0, np.zeros(metric.grid.size))
        return YamabeResult(float(total_R + bterm), prof, "neumann-robin", 0.0, (1.0, 0.0),
                            {"scalar_curvature": float(total_R), "boundary": float(bterm)})
    Ur = metric.U(rho)
    du = 2.0 * H * Ur ** (2.0 / k) / an
    p0 = rho ** (n - 1) * Ur * Ur * du
    sol, A, B = _shoot(metric, rho, 1.0, p0)
    res = _assemble(metric, rho, sol, A, B, "neumann-robin", bterm)
    if np.any(res.minimizer.values[metric.grid.nodes >= rho] <= 0):
        raise NumericalError("Robin minimizer is not positive")
    return res


def mass_yamabe_check(metric: BackgroundMetric, rho: float | None = None) -> dict:
    """``m - (Y_N + Y_D) / (4 n (n-1) omega_n)`` and the mass-drop identity."""
    rho = metric.rho0 if rho is None else rho
    n = metric.n
    k = n - 2
    w = unit_ball_volume(n)
    yn = yamabe_neumann(metric, rho)
    yd = yamabe_dirichlet(metric, rho)
    m = adm_mass(metric)
    resid = m - (yn.value + yd.value) / (4 * n * (n - 1) * w)
    total = metric.U.values * yn.minimizer.values
    a, c, _, _ = fit_tail(metric.grid, total, r_floor=max(rho, metric.harmonic_radius))
    m_hat = 2.0 * a * c
    drop = (m - m_hat) - yn.value / (2 * n * (n - 1) * w)
    return {"residual": float(resid), "Y_N": yn.value, "Y_D": yd.value, "mass": m,
            "mass_hat": float(m_hat), "mass_drop_residual": float(drop)}


def penrose_gap(metric: BackgroundMetric, htol: float = MINIMAL_HTOL) -> float:
    """``m - (A/(n omega_n))^((n-2)/(n-1)) / 2`` for a minimal, outer-minimizing boundary."""
    n = metric.n
    rho = metric.rho0
    H = mean_curvature(metric.U, rho, "toward-end")
    if abs(H) > htol * (n - 1) / rho:
        raise PreconditionError(f"boundary is not minimal (H = {H:.3e})")
    area = float(sphere_area(metric.U, rho, n=n))
    worst = verify_outer_minimizing(metric.U, rho)
    if worst < -1e-10 * area:
        raise PreconditionError("boundary is not outer-minimizing")
    return adm_mass(metric) - horizon_mass_relation(area, n)
