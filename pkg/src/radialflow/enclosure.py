"""Outermost minimizing enclosures among centered spheres.

In rotational symmetry competitors are taken to be coordinate spheres, so
the enclosure problem reduces to minimizing the sphere area

    A(rho) = n omega_n rho^{n-1} phi(rho)^{2(n-1)/(n-2)}

over ``rho >= rho_lower`` and keeping the largest minimizer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import EnclosureWindowError, DomainError
from .profiles import mean_curvature, sphere_area

INV_PHI = (math.sqrt(5) - 1) / 2
DEFAULT_SAMPLES = 2048
TIE_RTOL = 1e-10
MAX_BASINS = 64


@dataclass(frozen=True)
class Enclosure:
    rho: float
    area: float
    outermost_witness: dict = field(default_factory=dict)
    minimality_residual: float = 0.0


def area_functional(phi_total, rho):
    return sphere_area(phi_total, rho)


def golden_section(f, a, b, tol=1e-13, max_iter=200):
    """Minimize a unimodal ``f`` on ``[a, b]``; returns ``(x, f(x))``."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _log_area(phi, n):
    # log A up to an additive constant; smoother to minimize than A itself
    k = n - 2

    def g(s):
        rho = math.exp(s)
        return (n - 1) * s + 2.0 * (n - 1) / k * math.log(phi(rho))

    return g


def _refine(phi, n, s_lo, s_hi, s_min):
    g = _log_area(phi, n)
    s, _ = golden_section(g, s_lo, s_hi)
    # polish with the zero of the mean curvature when it is bracketed
    H = lambda x: mean_curvature(phi, math.exp(x), n=n)
    try:
        h_lo, h_hi = H(s_lo), H(s_hi)
        if s_lo <= s_min and h_lo >= 0:
            return s_min
        if h_lo < 0 < h_hi:
            s = brentq(H, s_lo, s_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    except DomainError:
        pass
    s = min(max(s, s_min), s_hi)
    return s


def outermost_min_enclosure(phi_total, rho_lower: float, rho_upper: float | None = None,
                            samples: int = DEFAULT_SAMPLES, tie_rtol: float = TIE_RTOL) -> Enclosure:
    """Largest minimizer of the sphere area on ``[rho_lower, rho_upper]``.

    A coarse log-spaced scan locates every near-minimal basin; each is
    refined by golden-section search and the rightmost basin whose refined
    area is within ``tie_rtol`` (relative) of the best is returned.
    Raises :class:`EnclosureWindowError` if that minimizer sits at the
    upper end of the window.
    """
    n = phi_total.n
    grid = phi_total.grid
    if rho_lower < grid.r_min * (1 - 1e-13):
        raise DomainError("rho_lower lies below the grid")
    rho_upper = grid.r_out if rho_upper is None else min(rho_upper, grid.r_out)
    if rho_upper <= rho_lower:
        raise DomainError("empty search window")
    s = np.linspace(math.log(rho_lower), math.log(rho_upper), samples)
    rhos = np.exp(s)
    rhos[0] = rho_lower
    areas = np.asarray(sphere_area(phi_total, rhos, n=n))
    # every sampled basin is refined: sampling alone cannot resolve near-ties
    cands = [int(i) for i in kernels.local_minima(areas)]
    if len(cands) > MAX_BASINS:
        cands = sorted(sorted(cands, key=lambda i: areas[i])[:MAX_BASINS])
    refined = []
    for i in cands:
        lo = s[max(i - 1, 0)]
        hi = s[min(i + 1, samples - 1)]
        if i + 1 < samples and areas[i + 1] == areas[i]:
            sr = s[i]  # right end of a flat basin
        else:
            sr = _refine(phi_total, n, lo, hi, s[0])
        rho = rho_lower if sr <= s[0] else math.exp(sr)
        refined.append((rho, float(sphere_area(phi_total, rho, n=n)), i))
    a_best = min(a for _, a, _ in refined)
    tie_tol = tie_rtol * a_best
    rho, area, idx = max((x for x in refined if x[1] <= a_best + tie_tol), key=lambda x: x[0])
    if idx == samples - 1 or rho >= rho_upper * (1 - 1e-12):
        raise EnclosureWindowError(
            f"area minimizer at the window edge rho_upper={rho_upper:g}; widen the window")
    witness = {"samples": samples, "tie_tol": tie_tol, "basins": len(cands),
               "bracket": (float(rhos[max(idx - 1, 0)]), float(rhos[min(idx + 1, samples - 1)]))}
    resid = abs(mean_curvature(phi_total, rho, n=n))
    return Enclosure(float(rho), area, witness, float(resid))


def verify_outer_minimizing(phi_total, rho: float, samples: int = DEFAULT_SAMPLES) -> float:
    """``min over rho' >= rho of A(rho') - A(rho)``; zero certifies outer-minimizing."""
    n = phi_total.n
    grid = phi_total.grid
    s = np.linspace(math.log(rho), math.log(grid.r_out), samples)
    rhos = np.exp(s)
    rhos[0] = rho
    areas = np.asarray(sphere_area(phi_total, rhos, n=n))
    a0 = areas[0]
    i = int(np.argmin(areas))
    worst = float(areas[i] - a0)
    if 0 < i < samples - 1:
        sr = _refine(phi_total, n, s[i - 1], s[i + 1], s[0])
        worst = min(worst, float(sphere_area(phi_total, math.exp(sr), n=n) - a0))
    return min(worst, 0.0)
