"""Rotationally symmetric, conformally flat, asymptotically flat metrics.

A metric is ``g = U(r)**(4/(n-2)) * delta`` on the exterior of a coordinate
sphere.  Everything radial is stored on a log-spaced grid; beyond the last
node a profile is continued by its harmonic tail ``a + c * r**(2-n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import DomainError, PreconditionError, TailFitError

DEFAULT_POINTS = 4096
DEFAULT_R_OUT_FACTOR = 1e6


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n via omega_n = 2*pi/n * omega_{n-2}."""
    if n < 0:
        raise DomainError("dimension must be nonnegative")
    w = 1.0 if n % 2 == 0 else 2.0
    for j in range(2 if n % 2 == 0 else 3, n + 1, 2):
        w *= 2.0 * math.pi / j
    return w


def conformal_exponent(n: int) -> float:
    """a_n = 4(n-1)/(n-2), the coefficient of the conformal Laplacian."""
    return 4.0 * (n - 1) / (n - 2)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    n: int
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if self.n < 3:
            raise DomainError("dimension must be at least 3")
        if nodes.ndim != 1 or nodes.size < 16:
            raise DomainError("grid needs at least 16 nodes")
        if not np.all(np.diff(nodes) > 0) or nodes[0] <= 0:
            raise DomainError("grid nodes must be positive and strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "log_nodes", np.log(nodes))

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    @property
    def r_out(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def h(self) -> float:
        """Uniform spacing in log r."""
        return float((self.log_nodes[-1] - self.log_nodes[0]) / (self.size - 1))


def make_grid(n: int, r_min: float, r_out: float, points: int = DEFAULT_POINTS) -> RadialGrid:
    if not 0 < r_min < r_out:
        raise DomainError("need 0 < r_min < r_out")
    t = np.linspace(math.log(r_min), math.log(r_out), points)
    nodes = np.exp(t)
    nodes[0], nodes[-1] = r_min, r_out
    return RadialGrid(n, nodes)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Scalar function of radius on a :class:`RadialGrid`.

    ``slopes`` are d/dr values at the nodes.  When they are supplied the
    interpolant is the cubic Hermite spline through values and slopes;
    otherwise values use a monotone (PCHIP) interpolant and slopes come
    from centered differences in log r.
    """

    grid: RadialGrid
    values: np.ndarray
    tail_value: float
    tail_coeff: float
    slopes: np.ndarray | None = None
    tail_order: float | None = None
    _interp: object = field(init=False, repr=False)
    _dinterp: object = field(init=False, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != self.grid.nodes.shape:
            raise DomainError("values must match the grid")
        if not np.all(np.isfinite(vals)):
            raise DomainError("profile values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        t = self.grid.log_nodes
        r = self.grid.nodes
        if self.slopes is not None:
            sl = np.array(self.slopes, dtype=float)
            sl.setflags(write=False)
            object.__setattr__(self, "slopes", sl)
            interp = CubicHermiteSpline(t, vals, sl * r)
            dinterp = interp.derivative()
        else:
            interp = PchipInterpolator(t, vals)
            dt = np.gradient(vals, t, edge_order=2)
            dinterp = PchipInterpolator(t, dt)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", dinterp)

    @property
    def n(self) -> int:
        return self.grid.n

    def _split(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.grid.r_min * (1 - 1e-13)):
            raise DomainError(f"radius below grid support r_min={self.grid.r_min:g}")
        inside = r <= self.grid.r_out
        return r, inside

    def __call__(self, r):
        r, inside = self._split(r)
        k = self.n - 2
        rc = np.maximum(r, self.grid.r_min)
        out = np.where(
            inside,
            self._interp(np.log(np.minimum(rc, self.grid.r_out))),
            self.tail_value + self.tail_coeff * rc ** (-k),
        )
        return out if out.ndim else float(out)

    def derivative(self, r):
        """d/dr of the profile."""
        r, inside = self._split(r)
        k = self.n - 2
        rc = np.maximum(r, self.grid.r_min)
        dt = self._dinterp(np.log(np.minimum(rc, self.grid.r_out)))
        out = np.where(inside, dt / rc, -k * self.tail_coeff * rc ** (-k - 1))
        return out if out.ndim else float(out)

    def scaled(self, lam: float) -> "RadialProfile":
        sl = None if self.slopes is None else lam * self.slopes
        return RadialProfile(self.grid, lam * self.values, lam * self.tail_value,
                             lam * self.tail_coeff, sl, self.tail_order)


def fit_tail(grid: RadialGrid, values, tail_value: float | None = None,
             r_floor: float | None = None, signal_floor: float = 1e-7):
    """Least-squares fit of ``values ~ a + c r^(2-n)`` over one decade.

    The decade is the outermost one in which the ``r^(2-n)`` term is still
    resolvable against round-off (its relative size at least
    ``signal_floor``), never reaching inside ``r_floor``.  Returns
    ``(a, c, tail_order, residual)``; ``tail_order`` is the fitted decay
    exponent of the remainder, or None when the remainder is at round-off.
    """
    k = grid.n - 2
    r = grid.nodes
    y_all = np.asarray(values, dtype=float)
    ref = tail_value if tail_value is not None else y_all[-1]
    dev = np.abs(y_all - ref) / max(abs(ref), 1e-300)
    ok = np.nonzero(dev >= signal_floor)[0]
    r_hi = r[-1] if ok.size == 0 else r[min(ok[-1], r.size - 1)]
    lo = r_hi / 10.0
    if r_floor is not None:
        lo = max(lo, r_floor)
        r_hi = max(r_hi, min(10.0 * lo, r[-1]))
    sel = (r >= lo * (1 - 1e-12)) & (r <= r_hi * (1 + 1e-12))
    if sel.sum() < 4:
        idx = np.nonzero(r >= lo * (1 - 1e-12))[0][:4]
        if idx.size < 4:
            idx = np.arange(r.size - 4, r.size)
        sel = np.zeros(r.size, dtype=bool)
        sel[idx] = True
    z = r[sel] ** (-k)
    y = y_all[sel]
    if tail_value is None:
        A = np.column_stack([np.ones_like(z), z / z.max()])
        (a, c), *_ = np.linalg.lstsq(A, y, rcond=None)
        c = c / z.max()
    else:
        a = float(tail_value)
        c = float(np.dot(z, y - a) / np.dot(z, z))
    res = y - a - c * z
    scale = max(abs(a), abs(c) * z.max(), 1e-300)
    resid = float(np.max(np.abs(res)) / scale)
    order = None
    big = np.abs(res) > 1e-11 * scale
    if big.sum() >= 4:
        slope = np.polyfit(np.log(r[sel][big]), np.log(np.abs(res[big])), 1)[0]
        order = float(-slope)
    return float(a), float(c), order, resid


@dataclass(frozen=True, eq=False)
class BackgroundMetric:
    """Conformal factor ``U`` with flux ``F = -r^(n-1) U'`` and boundary ``rho0``."""

    n: int
    U: RadialProfile
    flux: RadialProfile
    rho0: float
    label: str = ""

    def __post_init__(self):
        if self.rho0 < self.U.grid.r_min * (1 - 1e-13):
            raise DomainError("rho0 lies below the grid")
        if np.any(self.U.values <= 0):
            raise DomainError("conformal factor must be positive")
        if abs(self.U.tail_value - 1.0) > 1e-8:
            raise DomainError("conformal factor must tend to 1 at infinity")

    @property
    def grid(self) -> RadialGrid:
        return self.U.grid

    @property
    def omega_n(self) -> float:
        return unit_ball_volume(self.n)

    @property
    def harmonic_radius(self) -> float:
        """Smallest node beyond which the flux is constant, so ``U`` is exactly harmonic."""
        F = self.flux.values
        moving = np.nonzero(np.abs(F - F[-1]) > 1e-12 * max(abs(F[-1]), 1e-300))[0]
        if moving.size == 0:
            return self.grid.r_min
        return float(self.grid.nodes[min(moving[-1] + 1, self.grid.size - 1)])

    def with_boundary(self, rho0: float) -> "BackgroundMetric":
        return BackgroundMetric(self.n, self.U, self.flux, rho0, self.label)


# ---------------------------------------------------------------- ramp fluxes


def _smootherstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0)


def _smootherstep_prime(x):
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * xc * xc * (xc - 1.0) ** 2, 0.0)


@dataclass(frozen=True)
class RampFlux:
    """Nondecreasing flux ``F(r) = base + sum of smooth steps in log r``.

    Each step ``(r_start, r_end, rise)`` climbs by ``rise`` between the two
    radii with a C^2 quintic profile; F is constant outside all ramps, so
    the metric is exactly Schwarzschild beyond the last ramp.
    """

    base: float
    steps: tuple = ()

    def __post_init__(self):
        if self.base < 0:
            raise DomainError("flux must be nonnegative")
        for a, b, rise in self.steps:
            if not (0 < a < b) or rise < 0:
                raise DomainError("flux steps need 0 < r_start < r_end and rise >= 0")

    @property
    def limit(self) -> float:
        return self.base + sum(s[2] for s in self.steps)

    @property
    def support_end(self) -> float:
        return max((s[1] for s in self.steps), default=0.0)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, self.base)
        for a, b, rise in self.steps:
            out = out + rise * _smootherstep(np.log(r / a) / math.log(b / a))
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for a, b, rise in self.steps:
            L = math.log(b / a)
            out = out + rise * _smootherstep_prime(np.log(r / a) / L) / (L * r)
        return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _ramp_integral(flux: RampFlux, grid: RadialGrid) -> np.ndarray:
    """``J(r_i) = int_{r_i}^inf F'(s) s^(2-n) ds`` on the nodes."""
    k = grid.n - 2
    t = grid.log_nodes
    lo, hi = t[:-1], t[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    tt = mid[:, None] + half[:, None] * _GL_X[None, :]
    s = np.exp(tt)
    integrand = flux.derivative(s) * s ** (1 - k)
    seg = (integrand * _GL_W[None, :]).sum(axis=1) * half
    out = np.zeros(grid.size)
    out[:-1] = np.cumsum(seg[::-1])[::-1]
    return out


# ---------------------------------------------------------------- builders


def make_flat(n: int, r_min: float = 1.0, r_out: float | None = None,
              points: int = DEFAULT_POINTS) -> BackgroundMetric:
    """Euclidean exterior of the sphere ``r = r_min`` (a negative control)."""
    r_out = r_out or DEFAULT_R_OUT_FACTOR * r_min
    grid = make_grid(n, r_min, r_out, points)
    ones, zeros = np.ones(grid.size), np.zeros(grid.size)
    U = RadialProfile(grid, ones, 1.0, 0.0, zeros)
    F = RadialProfile(grid, zeros, 0.0, 0.0, zeros)
    return BackgroundMetric(n, U, F, r_min, "flat")


def make_schwarzschild(n: int, m: float, points: int = DEFAULT_POINTS,
                       r_out_factor: float = DEFAULT_R_OUT_FACTOR) -> BackgroundMetric:
    """Riemannian Schwarzschild exterior ``U = 1 + (m/2) r^(2-n)`` from its horizon."""
    if n < 3:
        raise DomainError("dimension must be at least 3")
    if not m > 0:
        raise DomainError("Schwarzschild mass must be positive")
    k = n - 2
    rho0 = (m / 2.0) ** (1.0 / k)
    grid = make_grid(n, rho0, r_out_factor * rho0, points)
    r = grid.nodes
    c = m / 2.0
    U = RadialProfile(grid, 1.0 + c * r ** (-k), 1.0, c, -k * c * r ** (-k - 1))
    F = RadialProfile(grid, np.full(grid.size, k * c), k * c, 0.0, np.zeros(grid.size))
    return BackgroundMetric(n, U, F, rho0, f"schwarzschild(n={n}, m={m:g})")


def _minimality_function(metric_n, U, flux_fn, r):
    k = metric_n - 2
    return 0.5 * k * r ** k * U(r) - flux_fn(r)


def make_from_flux(n: int, flux: RampFlux, r_min: float, r_out: float,
                   points: int = DEFAULT_POINTS, minimal: bool = True,
                   rho0: float | None = None, label: str = "") -> BackgroundMetric:
    """Metric with ``U(r) = 1 + int_r^inf F(s) s^(1-n) ds`` for a nondecreasing flux.

    With ``minimal=True`` the boundary is placed at the outermost minimal
    sphere, and the sphere is checked to be outer-minimizing among spheres.
    """
    k = n - 2
    if flux.support_end >= r_out:
        raise DomainError("flux ramps must end inside the grid")
    grid = make_grid(n, r_min, r_out, points)
    r = grid.nodes
    Fv = flux(r)
    U_vals = 1.0 + (Fv * r ** (-k) + _ramp_integral(flux, grid)) / k
    U = RadialProfile(grid, U_vals, 1.0, flux.limit / k, -Fv * r ** (1 - n))
    F = RadialProfile(grid, Fv, flux.limit, 0.0, flux.derivative(r))
    if minimal:
        G = _minimality_function(n, U, flux, r)
        if G[-1] <= 0:
            raise PreconditionError("minimal-sphere function is not positive at r_out")
        neg = np.nonzero(G <= 0)[0]
        if neg.size == 0:
            raise PreconditionError("no minimal sphere in the grid range")
        i = int(neg[-1])
        lo, hi = r[i], r[i + 1]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _minimality_function(n, U, flux, mid) <= 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * hi:
                break
        rho0 = 0.5 * (lo + hi)
        beyond = r > rho0
        if np.any(G[beyond] < -1e-12 * np.abs(Fv[beyond]).max()):
            raise PreconditionError("minimal sphere is not outer-minimizing among spheres")
    elif rho0 is None:
        raise DomainError("rho0 is required when minimal=False")
    return BackgroundMetric(n, U, F, float(rho0), label or "flux_family")


def make_tabulated(path: str | Path, n: int, rho0: float,
                   points: int = DEFAULT_POINTS) -> BackgroundMetric:
    """Metric from a two-column (radius, U) text file with '#' comments."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read tabulated profile {path}: {exc}") from None
    if data.shape[1] != 2:
        raise DomainError("tabulated file must have exactly two columns")
    rr, uu = data[:, 0], data[:, 1]
    if not np.all(np.diff(rr) > 0):
        raise DomainError("tabulated radii must be strictly ascending")
    return metric_from_samples(n, rr, uu, rho0, points, label=f"tabulated({Path(path).name})")


def metric_from_samples(n, radii, values, rho0, points=DEFAULT_POINTS, label="tabulated"):
    grid = make_grid(n, float(radii[0]), float(radii[-1]), points)
    src = PchipInterpolator(np.log(radii), values)
    U_vals = src(grid.log_nodes)
    a, c, order, _ = fit_tail(grid, U_vals)
    dU = np.gradient(U_vals, grid.log_nodes, edge_order=2) / grid.nodes
    Fv = -grid.nodes ** (n - 1) * dU
    U = RadialProfile(grid, U_vals, 1.0, c, None, order)
    F = RadialProfile(grid, Fv, (n - 2) * c, 0.0)
    return BackgroundMetric(n, U, F, float(rho0), label)


@dataclass(frozen=True)
class Scenario:
    """Declarative recipe for initial data.

    kind: ``schwarzschild`` (params: mass), ``flux_family`` (params: base,
    steps, optional r_min) or ``tabulated`` (params: path, rho0).
    """

    kind: str
    n: int
    params: dict = field(default_factory=dict)
    points: int = DEFAULT_POINTS
    r_out_factor: float = DEFAULT_R_OUT_FACTOR

    def build(self) -> BackgroundMetric:
        p = self.params
        if self.kind == "schwarzschild":
            return make_schwarzschild(self.n, float(p["mass"]), self.points, self.r_out_factor)
        if self.kind == "flux_family":
            flux = RampFlux(float(p["base"]), tuple(tuple(map(float, s)) for s in p.get("steps", ())))
            k = self.n - 2
            guess = (max(flux.base, 1e-12) / k) ** (1.0 / k)
            r_min = float(p.get("r_min", 0.25 * guess))
            r_out = self.r_out_factor * guess
            return make_from_flux(self.n, flux, r_min, r_out, self.points,
                                  label=p.get("label", "flux_family"))
        if self.kind == "tabulated":
            return make_tabulated(p["path"], self.n, float(p["rho0"]), self.points)
        raise DomainError(f"unknown scenario kind {self.kind!r}")


def flux_scenario(n: int, base: float, steps: Sequence, label: str = "", **kw) -> Scenario:
    return Scenario("flux_family", n, {"base": base, "steps": [tuple(s) for s in steps],
                                       "label": label or "flux_family"}, **kw)


def required_r_out_factor(n: int, t_max: float) -> float:
    """Grid extent that keeps the flowing enclosure well inside the grid."""
    return max(DEFAULT_R_OUT_FACTOR, 1e3 * math.exp(2.0 * t_max / (n - 2)))


# ---------------------------------------------------------------- geometry


def _check_range(metric_or_profile, r):
    grid = metric_or_profile.grid
    r = np.asarray(r, dtype=float)
    if np.any(r < grid.r_min * (1 - 1e-13)) or np.any(r > grid.r_out * (1 + 1e-13)):
        raise DomainError("radius outside the grid")
    return r


def scalar_curvature(metric: BackgroundMetric, r):
    """``R_g = a_n U^{-(n+2)/(n-2)} r^{1-n} F'(r)``."""
    r = _check_range(metric, r)
    n = metric.n
    k = n - 2
    out = conformal_exponent(n) * metric.U(r) ** (-(n + 2) / k) * r ** (1 - n) * metric.flux.derivative(r)
    return out if np.ndim(out) else float(out)


def scalar_curvature_of_factor(phi: RadialProfile, r=None):
    """Scalar curvature of ``phi^{4/(n-2)} delta`` from nodal finite differences.

    Returns values at the nodes when ``r`` is None.
    """
    n = phi.n
    k = n - 2
    nodes = phi.grid.nodes
    t = phi.grid.log_nodes
    F = -nodes ** (n - 1) * phi.derivative(nodes)
    dF = np.gradient(F, t, edge_order=2) / nodes
    R = conformal_exponent(n) * phi.values ** (-(n + 2) / k) * nodes ** (1 - n) * dF
    if r is None:
        return R
    return np.interp(np.log(r), t, R)


def adm_mass(metric: BackgroundMetric, rtol: float = 1e-4, return_routes: bool = False):
    """ADM mass by (a) tail fit of ``r^{n-2}(U-1)`` and (b) ``2F(r_out)/(n-2)``."""
    k = metric.n - 2
    _, c, _, _ = fit_tail(metric.grid, metric.U.values, tail_value=1.0,
                          r_floor=metric.harmonic_radius)
    m_fit = 2.0 * c
    m_flux = 2.0 * float(metric.flux.values[-1]) / k
    scale = max(abs(m_fit), abs(m_flux))
    if abs(m_fit - m_flux) > rtol * scale + 1e-12:
        raise TailFitError(f"ADM mass routes disagree: fit={m_fit!r}, flux={m_flux!r}")
    if return_routes:
        return m_fit, m_flux
    return m_fit


def sphere_area(phi, rho, n: int | None = None):
    """Area of the coordinate sphere ``r = rho`` in ``phi^{4/(n-2)} delta``."""
    n = n or phi.n
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("radius must be positive")
    val = phi(rho) if callable(phi) else phi
    val = np.asarray(val, dtype=float)
    if np.any(val <= 0):
        raise DomainError("conformal factor must be positive")
    out = n * unit_ball_volume(n) * rho ** (n - 1) * val ** (2.0 * (n - 1) / (n - 2))
    return out if np.ndim(out) else float(out)


def mean_curvature(phi, rho: float, orientation: str = "toward-end", n: int | None = None):
    """Mean curvature of ``r = rho`` in ``phi^{4/(n-2)} delta``.

    ``toward-end`` uses the normal pointing to infinity (the Euclidean unit
    sphere gets ``+(n-1)``); ``toward-hole`` flips the sign.
    """
    n = n or phi.n
    k = n - 2
    val = phi(rho)
    dval = phi.derivative(rho)
    H = val ** (-2.0 / k) * ((n - 1) / rho + 2.0 * (n - 1) / k * dval / val)
    if orientation == "toward-end":
        return float(H)
    if orientation == "toward-hole":
        return float(-H)
    raise DomainError(f"unknown orientation {orientation!r}")


class CallableFactor:
    """Adapter giving a plain function the profile interface used by geometry code."""

    def __init__(self, grid: RadialGrid, fn: Callable, dfn: Callable,
                 tail_value: float, tail_coeff: float):
        self.grid = grid
        self._fn = fn
        self._dfn = dfn
        self.tail_value = tail_value
        self.tail_coeff = tail_coeff

    @property
    def n(self):
        return self.grid.n

    @property
    def values(self):
        return np.asarray(self._fn(self.grid.nodes))

    def __call__(self, r):
        out = np.asarray(self._fn(np.asarray(r, dtype=float)))
        return out if out.ndim else float(out)

    def derivative(self, r):
        out = np.asarray(self._dfn(np.asarray(r, dtype=float)))
        return out if out.ndim else float(out)
