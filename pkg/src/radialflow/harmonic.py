"""Radial exterior Dirichlet problems and capacities by quadrature.

For ``g = phi^{4/(n-2)} delta`` a radial g-harmonic function satisfies
``(r^{n-1} phi^2 w')' = 0``, so every exterior solution is an affine
function of the resistance integral

    I(r) = int_r^inf s^{1-n} phi(s)^{-2} ds.

Integrals are done in ``t = log r`` with a fourth-order composite rule and
closed off by the exact integral of the harmonic tail ``a + c r^{2-n}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DomainError, NumericalError
from .profiles import RadialProfile

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
CAPACITY_RTOL = 1e-6


class Quadrature(NamedTuple):
    value: float
    error: float


def tail_resistance(n: int, tail_value: float, tail_coeff: float, r):
    """Exact ``int_r^inf s^{1-n} (a + c s^{2-n})^{-2} ds``."""
    k = n - 2
    z = np.asarray(r, dtype=float) ** (-k)
    a, c = tail_value, tail_coeff
    return z / (k * a * (a + c * z))


def _integrand_t(phi, r, n):
    vals = np.asarray(phi(r), dtype=float)
    if np.any(vals <= 0):
        raise DomainError("conformal factor must be positive")
    return r ** (2 - n) / (vals * vals)


def _check_tail(phi):
    a, c = phi.tail_value, phi.tail_coeff
    if a <= 0:
        raise DomainError("conformal factor must have a positive limit")
    z = phi.grid.r_out ** (2 - phi.n)
    if a + c * z <= 0:
        raise DomainError("conformal factor tail is nonpositive")


def _fresh_grid(phi, rho, odd=True):
    grid = phi.grid
    t0, t1 = math.log(rho), grid.log_nodes[-1]
    count = max(17, int(math.ceil((t1 - t0) / grid.h)) + 1)
    if odd and count % 2 == 0:
        count += 1
    return np.linspace(t0, t1, count)


def resistance_integral(phi, rho: float) -> Quadrature:
    """``I(rho)`` with a grid-halving error estimate.

    The quadrature runs on a log grid that starts exactly at ``rho`` so no
    stencil straddles a kink of ``phi`` inside the sphere.
    """
    n = phi.n
    grid = phi.grid
    if rho > grid.r_out:
        raise DomainError("rho lies beyond the tail cut")
    if rho < grid.r_min * (1 - 1e-13):
        raise DomainError("rho lies below the grid")
    _check_tail(phi)
    t = _fresh_grid(phi, rho)
    if t[-1] - t[0] <= 0:
        tail = float(tail_resistance(n, phi.tail_value, phi.tail_coeff, rho))
        return Quadrature(tail, 0.0)
    r = np.exp(t)
    f = _integrand_t(phi, r, n)
    h = t[1] - t[0]
    fine = kernels.reverse_cumulative_quad(f, h)[0]
    coarse = kernels.reverse_cumulative_quad(f[::2], 2 * h)[0]
    tail = float(tail_resistance(n, phi.tail_value, phi.tail_coeff, grid.r_out))
    return Quadrature(float(fine + tail), float(abs(fine - coarse) / 15.0))


def _energy_capacity(phi, rho: float) -> float:
    """Normalized Dirichlet energy of the unit capacitary potential.

    Derivatives of the sampled potential are taken by fourth-order finite
    differences, independently of the closed-form flux constant.
    """
    n = phi.n
    k = n - 2
    t = _fresh_grid(phi, rho)
    r = np.exp(t)
    h = t[1] - t[0]
    f = _integrand_t(phi, r, n)
    tail = float(tail_resistance(n, phi.tail_value, phi.tail_coeff, phi.grid.r_out))
    I = kernels.reverse_cumulative_quad(f, h) + tail
    w = I / I[0]
    dw = _fd4(w, h)
    phi2 = np.asarray(phi(r)) ** 2
    energy = r ** (n - 2) * phi2 * dw * dw
    bulk = kernels.reverse_cumulative_quad(energy, h)[0]
    p_out = r[-1] ** (n - 2) * phi2[-1] * dw[-1]
    return float((bulk - p_out * w[-1]) / k)


def _fd4(y, h):
    """Fourth-order first derivative on a uniform grid."""
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h)
    d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h)
    d[-1] = (25 * y[-1] - 48 * y[-2] + 36 * y[-3] - 16 * y[-4] + 3 * y[-5]) / (12 * h)
    d[-2] = (3 * y[-1] + 10 * y[-2] - 18 * y[-3] + 6 * y[-4] - y[-5]) / (12 * h)
    return d


def capacity(phi, rho: float, cross_check: bool = True, rtol: float = CAPACITY_RTOL) -> float:
    """Capacity of the sphere ``r = rho``: ``1 / ((n-2) I(rho))``.

    With ``cross_check`` the value is compared against the Dirichlet-energy
    route and a :class:`NumericalError` is raised if they differ by more
    than ``rtol``.
    """
    k = phi.n - 2
    c = 1.0 / (k * resistance_integral(phi, rho).value)
    if cross_check:
        ce = _energy_capacity(phi, rho)
        if abs(ce - c) > rtol * c:
            raise NumericalError(f"capacity routes disagree: {c!r} vs {ce!r}")
    return c


class ResistanceTable:
    """``I(r)`` for one conformal factor, tabulated on its grid nodes.

    Off-node values add an 8-point Gauss-Legendre integral up to the next
    node, which keeps ``I`` strictly decreasing to round-off.
    """

    def __init__(self, phi):
        _check_tail(phi)
        self.phi = phi
        self.n = phi.n
        grid = phi.grid
        self.grid = grid
        f = _integrand_t(phi, grid.nodes, self.n)
        tail = float(tail_resistance(self.n, phi.tail_value, phi.tail_coeff, grid.r_out))
        self.nodes = kernels.reverse_cumulative_quad(f, grid.h) + tail
        self.nodes.setflags(write=False)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        grid = self.grid
        if np.any(r < grid.r_min * (1 - 1e-13)):
            raise DomainError("radius below grid support")
        out = np.empty_like(r)
        beyond = r >= grid.r_out
        phi = self.phi
        out[beyond] = tail_resistance(self.n, phi.tail_value, phi.tail_coeff, r[beyond])
        sel = ~beyond
        if np.any(sel):
            rs = np.maximum(r[sel], grid.r_min)
            j = np.searchsorted(grid.nodes, rs, side="left")
            j = np.clip(j, 0, grid.size - 1)
            upper = grid.nodes[j]
            t_lo, t_hi = np.log(rs), np.log(upper)
            half = 0.5 * (t_hi - t_lo)
            mid = 0.5 * (t_hi + t_lo)
            tt = mid[:, None] + half[:, None] * _GL_X[None, :]
            ss = np.exp(tt)
            f = _integrand_t(phi, ss.ravel(), self.n).reshape(ss.shape)
            out[sel] = self.nodes[j] + (f * _GL_W[None, :]).sum(axis=1) * half
        return float(out[0]) if scalar else out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        return -r ** (1 - self.n) / np.asarray(self.phi(r)) ** 2


def resistance_table(phi) -> ResistanceTable:
    """Cached :class:`ResistanceTable`, stored on the (immutable) profile."""
    table = getattr(phi, "_resistance_table", None)
    if table is None:
        table = ResistanceTable(phi)
        object.__setattr__(phi, "_resistance_table", table)
    return table


@dataclass(frozen=True, eq=False)
class HarmonicSolution:
    """Radial solution of ``Delta_g w = 0`` outside ``r = rho``.

    ``w = asymptote + (boundary_value - asymptote) I(r)/I(rho)`` outside and
    ``boundary_value`` inside.
    """

    profile: RadialProfile
    boundary_radius: float
    boundary_value: float
    asymptote: float
    quadrature_constant: float
    capacity_coeff: float
    resistance_rho: float
    table: ResistanceTable

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.boundary_value, self.asymptote
        ratio = np.minimum(self.table(r) / self.resistance_rho, 1.0)
        out = np.where(r >= self.boundary_radius, b + (a - b) * ratio, a)
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.boundary_value, self.asymptote
        out = np.where(r >= self.boundary_radius,
                       (a - b) * self.table.derivative(r) / self.resistance_rho, 0.0)
        return out if out.ndim else float(out)

    @property
    def n(self):
        return self.profile.n

    @property
    def grid(self):
        return self.profile.grid


def potential(phi, rho: float, boundary_value: float, asymptote: float) -> HarmonicSolution:
    """g-harmonic function equal to ``boundary_value`` on and inside ``r = rho``.

    The off-node resistance ``I(rho)`` comes from the same table as the
    nodal values, so the maximum principle holds node-wise exactly.
    """
    grid = phi.grid
    if rho > grid.r_out:
        raise DomainError("rho lies beyond the tail cut")
    table = resistance_table(phi)
    I_rho = float(table(rho))
    a, b = float(boundary_value), float(asymptote)
    n = phi.n
    k = n - 2
    r = grid.nodes
    ratio = table.nodes / I_rho
    outside = r >= rho
    vals = np.where(outside, b + (a - b) * np.minimum(ratio, 1.0), a)
    slopes = np.where(r >= rho, (a - b) * table.derivative(r) / I_rho, 0.0)
    coeff = (a - b) / (k * I_rho)
    alpha = phi.tail_value
    prof = RadialProfile(grid, vals, b, coeff / (alpha * alpha), slopes)
    return HarmonicSolution(
        profile=prof,
        boundary_radius=float(rho),
        boundary_value=a,
        asymptote=b,
        quadrature_constant=-(a - b) / I_rho,
        capacity_coeff=coeff,
        resistance_rho=I_rho,
        table=table,
    )
