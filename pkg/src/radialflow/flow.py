"""Time-discrete conformal flow of a radial background metric.

With step size ``eps`` the flow is frozen on each interval
``[k eps, (k+1) eps)``: the enclosure ``rho_k`` of the current metric
``(u_k U)^{4/(n-2)} delta`` is found, the background-harmonic function
``v_k`` vanishing inside it and tending to ``-(1-eps)^k`` is solved, and
``u_{k+1} = u_k + eps v_k``.  Because every ``v_j`` is an affine function of
the background resistance ``I``, ``u_k`` is known in closed form through
the ledger of past radii, amplitudes and resistances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import kernels
from .enclosure import outermost_min_enclosure
from .errors import DomainError, InvariantViolation, NumericalError, RadialFlowError
from .harmonic import HarmonicSolution, capacity, potential, resistance_table
from .profiles import BackgroundMetric, RadialProfile, adm_mass, fit_tail, sphere_area

CSV_COLUMNS = ("t", "rho", "rho_normalized", "area_flow", "area_bg", "mass", "cap_bg",
               "cap_flow", "mtilde", "b_coeff", "B_integral", "umin", "vmin")
EXTRA_COLUMNS = ("mass_adm", "mass_adm_exact", "u_inf", "cap_bg_ledger")
BOUND_RTOL = 1e-12
BOUND_ATOL = 1e-12  # accumulated round-off of the additive update
LEDGER_RTOL = 1e-6


class FlowFactor:
    """Total conformal factor ``u_k U`` of the discrete flow at one step.

    Quacks like a :class:`RadialProfile` (``n``, ``grid``, ``tail_value``,
    ``tail_coeff``, call and derivative) so that enclosures, areas and
    capacities can be evaluated on it directly.
    """

    def __init__(self, metric: BackgroundMetric, eps: float, radii, amplitudes,
                 resistances, u_nodes: np.ndarray):
        self.metric = metric
        self.U = metric.U
        self.n = metric.n
        self.grid = metric.grid
        self.eps = float(eps)
        self.table = resistance_table(metric.U)
        self.radii = np.asarray(radii, dtype=float)
        amps = np.asarray(amplitudes, dtype=float)
        res = np.asarray(resistances, dtype=float)
        if self.radii.size and np.any(np.diff(self.radii) < 0):
            raise DomainError("ledger radii must be nondecreasing")
        self.amplitudes, self.resistances = amps, res
        self._sum_a = np.concatenate([[0.0], np.cumsum(amps)])
        self._sum_ai = np.concatenate([[0.0], np.cumsum(amps / res)])
        self.u_nodes = u_nodes
        k = self.n - 2
        alpha = 1.0 - self.eps * self._sum_a[-1]
        self.u_inf = alpha
        self.tail_value = alpha
        self.tail_coeff = alpha * self.U.tail_coeff + self.eps * self._sum_ai[-1] / k

    def _coeffs(self, r):
        j = np.searchsorted(self.radii, r, side="right")
        return 1.0 - self.eps * self._sum_a[j], self.eps * self._sum_ai[j]

    def u(self, r):
        r = np.asarray(r, dtype=float)
        alpha, beta = self._coeffs(r)
        out = alpha + beta * self.table(r)
        return out if out.ndim else float(out)

    def u_derivative(self, r):
        r = np.asarray(r, dtype=float)
        _, beta = self._coeffs(r)
        out = beta * self.table.derivative(r)
        return out if out.ndim else float(out)

    def __call__(self, r):
        out = np.asarray(self.U(r)) * np.asarray(self.u(r))
        return out if out.ndim else float(out)

    def derivative(self, r):
        out = (np.asarray(self.U.derivative(r)) * np.asarray(self.u(r))
               + np.asarray(self.U(r)) * np.asarray(self.u_derivative(r)))
        return out if out.ndim else float(out)

    @property
    def values(self) -> np.ndarray:
        return self.U.values * self.u_nodes

    def u_profile(self) -> RadialProfile:
        k = self.n - 2
        slopes = self.u_derivative(self.grid.nodes)
        return RadialProfile(self.grid, self.u_nodes, self.u_inf,
                             self.eps * self._sum_ai[-1] / k, slopes)


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    k: int
    eps: float
    u: RadialProfile
    rho: float
    v_current: HarmonicSolution
    capacity_ledger: tuple
    factor: FlowFactor = field(repr=False)
    zero_potential: bool = False

    @property
    def amplitude(self) -> float:
        """``(1 - eps)^k``, minus the asymptote of ``v_current``."""
        return 0.0 if self.zero_potential else (1.0 - self.eps) ** self.k


def _solve_step(metric: BackgroundMetric, factor: FlowFactor, k: int, eps: float,
                rho_lower: float, rho_upper: float | None, zero_potential: bool,
                ledger: tuple) -> FlowState:
    enc = outermost_min_enclosure(factor, rho_lower, rho_upper)
    amp = 0.0 if zero_potential else (1.0 - eps) ** k
    v = potential(metric.U, enc.rho, 0.0, -amp)
    cap_direct = capacity(metric.U, enc.rho, cross_check=False)
    if amp > 0:
        cap_b = v.capacity_coeff / amp
        if abs(cap_b - cap_direct) > LEDGER_RTOL * cap_direct:
            raise NumericalError(
                f"background capacity routes disagree at step {k}: {cap_b!r} vs {cap_direct!r}")
    return FlowState(t=k * eps, k=k, eps=eps, u=factor.u_profile(), rho=enc.rho,
                     v_current=v, capacity_ledger=ledger + (cap_direct,), factor=factor,
                     zero_potential=zero_potential)


def initial_state(metric: BackgroundMetric, eps: float, rho_upper: float | None = None,
                  zero_potential: bool = False) -> FlowState:
    _check_eps(eps)
    u_nodes = np.ones(metric.grid.size)
    factor = FlowFactor(metric, eps, [], [], [], u_nodes)
    upper = rho_upper if rho_upper is not None else _window_upper(metric, metric.rho0, 0.0, metric.rho0)
    return _solve_step(metric, factor, 0, eps, metric.rho0, upper, zero_potential, ())


def step(state: FlowState, metric: BackgroundMetric, rho_upper: float | None = None) -> FlowState:
    """Advance one step: ``u <- u + eps v`` and re-solve enclosure and potential."""
    eps = state.eps
    v = state.v_current
    amp = state.amplitude
    f = state.factor
    u_nodes = np.array(f.u_nodes, dtype=float)
    if amp > 0:
        _, umin, vmin = kernels.flow_update(u_nodes, f.table.nodes, v.resistance_rho, amp, eps)
        if vmin < -amp * (1 + BOUND_RTOL):
            raise InvariantViolation(f"v below its asymptote at step {state.k}")
    u_nodes.setflags(write=False)
    factor = FlowFactor(metric, eps, np.append(f.radii, state.rho), np.append(f.amplitudes, amp),
                        np.append(f.resistances, v.resistance_rho), u_nodes)
    floor = factor.u_inf
    if u_nodes.min() < floor - BOUND_ATOL or u_nodes.max() > 1 + BOUND_ATOL:
        raise InvariantViolation(f"u left [{floor:g}, 1] at step {state.k + 1}")
    return _solve_step(metric, factor, state.k + 1, eps, state.rho, rho_upper,
                       state.zero_potential, state.capacity_ledger)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 0.5:
        raise DomainError("eps must lie in (0, 0.5)")


def _window_upper(metric: BackgroundMetric, r_est: float, t: float, rho: float) -> float:
    k = metric.n - 2
    return min(metric.grid.r_out, max(4.0 * r_est * math.exp(2.0 * t / k), 10.0 * rho))


# ---------------------------------------------------------------- traces


@dataclass(frozen=True, eq=False)
class FlowTrace:
    """Immutable table of per-step diagnostics plus run metadata."""

    columns: dict
    meta: dict
    snapshots: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        cols = {}
        for key, val in self.columns.items():
            arr = np.array(val, dtype=float)
            arr.setflags(write=False)
            cols[key] = arr
        t = cols["t"]
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise DomainError("trace rows must be strictly increasing in t")
        object.__setattr__(self, "columns", cols)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return self.columns["t"].size

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    @property
    def eps(self) -> float:
        return float(self.meta.get("eps", 0.0))

    def replace(self, **cols) -> "FlowTrace":
        merged = dict(self.columns)
        merged.update(cols)
        return FlowTrace(merged, dict(self.meta), self.snapshots)


def _row(state: FlowState, metric: BackgroundMetric, ledger_b: float) -> dict:
    n = metric.n
    k = n - 2
    f = state.factor
    v = state.v_current
    rho = state.rho
    alpha = f.u_inf
    c0 = metric.U.tail_coeff
    phi_nodes = f.values
    v_nodes = v.profile.values
    a_fit, c_fit, _, _ = fit_tail(metric.grid, phi_nodes, r_floor=max(rho, metric.harmonic_radius))
    tilde = 0.5 * metric.U.values * (f.u_nodes - v_nodes)
    at, ct, _, _ = fit_tail(metric.grid, tilde, r_floor=max(rho, metric.harmonic_radius))
    return {
        "t": state.t,
        "rho": rho,
        "rho_normalized": rho * alpha ** (2.0 / k),
        "area_flow": float(sphere_area(f, rho, n=n)),
        "area_bg": float(sphere_area(metric.U, rho, n=n)),
        "cap_bg": state.capacity_ledger[-1],
        "cap_flow": capacity(f, rho),
        "mtilde": 2.0 * at * ct,
        "b_coeff": v.capacity_coeff,
        "B_integral": ledger_b,
        "umin": float(f.u_nodes.min()),
        "vmin": float(v_nodes.min()),
        "mass_adm": 2.0 * a_fit * c_fit,
        "mass_adm_exact": 2.0 * alpha * f.tail_coeff,
        "u_inf": alpha,
        "cap_bg_ledger": v.capacity_coeff / state.amplitude if state.amplitude > 0 else state.capacity_ledger[-1],
    }


def run(metric: BackgroundMetric, eps: float, t_max: float, snapshot_times: Sequence[float] = (),
        zero_potential: bool = False, scenario: str | None = None) -> FlowTrace:
    """Discrete flow on ``[0, t_max]`` with one trace row per step time."""
    _check_eps(eps)
    if not t_max > 0:
        raise DomainError("T must be positive")
    steps = int(math.floor(t_max / eps + 1e-9))
    k = metric.n - 2
    wanted = {int(round(s / eps)): s for s in snapshot_times}
    state = initial_state(metric, eps, zero_potential=zero_potential)
    rows = []
    snaps = {}
    r_est = state.rho
    b_int = 0.0
    floor_T = 4.0 ** (-t_max)
    for j in range(steps + 1):
        if state.factor.u_nodes.min() < floor_T or state.v_current.profile.values.min() < -state.amplitude * (1 + BOUND_RTOL):
            raise InvariantViolation(f"scheme bounds breached at step {j}")
        rows.append(_row(state, metric, b_int))
        if j in wanted:
            snaps[wanted[j]] = state
        if j == steps:
            break
        b_int += eps * state.v_current.capacity_coeff
        t_next = (j + 1) * eps
        r_est = max(r_est, state.rho * math.exp(-2.0 * state.t / k))
        try:
            state = step(state, metric, _window_upper(metric, r_est, t_next, state.rho))
        except RadialFlowError as exc:
            raise type(exc)(f"step {j + 1} (t={t_next:g}): {exc}") from exc
    cols = {name: np.array([r[name] for r in rows]) for name in rows[0]}
    r_max = float(np.max(cols["rho"] * np.exp(-2.0 * cols["t"] / k)))
    m0 = adm_mass(metric)
    meta = {
        "n": metric.n, "eps": eps, "t_max": t_max, "steps": steps,
        "grid_points": metric.grid.size, "r_min": metric.grid.r_min, "r_out": metric.grid.r_out,
        "scenario": scenario or metric.label, "m0": m0, "rho0": metric.rho0,
        "r_max_fit": r_max, "max_rho_jump": float(np.max(np.abs(np.diff(cols["rho"])), initial=0.0)),
    }
    trace = FlowTrace(cols, meta, snaps)
    routes = mass_series(trace, m0, check=not zero_potential)
    return trace.replace(mass=routes["route_a"])


# ---------------------------------------------------------------- mass


def mass_series(trace: FlowTrace, m0: float, check: bool = True) -> dict:
    """Mass by the time-integral formula (route A) and by tail fits (route B).

    Route A integrates the background-capacity ledger with the trapezoid
    rule.  The two routes differ by the first-order scheme error; they must
    agree within ten times the estimate ``eps (1 + t) m0`` plus the
    trapezoid-versus-rectangle spread of the quadrature.
    """
    t = trace.t
    cap = trace["cap_bg"]
    g = np.exp(-t) * cap
    if t.size > 1:
        trap = cumulative_trapezoid(g, t, initial=0.0)
        rect = np.concatenate([[0.0], np.cumsum(g[:-1] * np.diff(t))])
    else:
        trap = rect = np.zeros(1)
    route_a = m0 * np.exp(-2 * t) + 2 * np.exp(-t) * trap
    quad_err = 2 * np.exp(-t) * np.abs(trap - rect)
    out = {"route_a": route_a, "quad_error": quad_err}
    if "mass_adm" in trace.columns:
        route_b = trace["mass_adm"]
        tol = 10.0 * (trace.eps * (1 + t) * abs(m0) + quad_err)
        gap = np.abs(route_a - route_b)
        out.update(route_b=route_b, tolerance=tol, gap=gap)
        if check and np.any(gap > tol):
            i = int(np.argmax(gap - tol))
            raise NumericalError(
                f"mass routes disagree at t={t[i]:g}: {route_a[i]!r} vs {route_b[i]!r}")
    return out


def mass_ode_residual(trace: FlowTrace, column: str = "mass_adm") -> np.ndarray:
    """Per-row ``m' + 2 (m - cap_flow)`` with centered differences in t."""
    if len(trace) < 3:
        raise DomainError("need at least 3 rows")
    m = trace[column]
    dm = np.gradient(m, trace.t, edge_order=1)
    return dm + 2.0 * (m - trace["cap_flow"])


def vanishing_mass_checks(trace: FlowTrace, m0: float | None = None, t_ref: float = 0.5) -> dict:
    """Residuals of the pseudo-mass identities and the decay of ``mtilde``.

    The identities are evaluated with the discrete asymptote
    ``u_inf = (1 - eps)^k`` in place of ``exp(-t)``.
    """
    t = trace.t
    if t[-1] < 4.0 - 1e-9:
        raise DomainError("vanishing-mass checks need a trace spanning t >= 4")
    m0 = trace.meta.get("m0") if m0 is None else m0
    a = trace["u_inf"] if "u_inf" in trace.columns else np.exp(-t)
    B, b = trace["B_integral"], trace["b_coeff"]
    m_col = trace["mass_adm"] if "mass_adm" in trace.columns else trace["mass"]
    scale = abs(m0)
    tilde_id = np.abs(trace["mtilde"] - (a * a * m0 + a * (B - b)))
    mass_id = np.abs(m_col - (a * a * m0 + 2 * a * B))
    ratio = b / a
    drops = np.maximum(0.0, ratio[:-1] - ratio[1:]) / max(abs(ratio).max(), 1e-300)
    lit = np.exp(t) * b
    lit_drops = np.maximum(0.0, lit[:-1] - lit[1:]) / max(abs(lit).max(), 1e-300)
    i_ref = int(np.argmin(np.abs(t - t_ref)))
    return {
        "tilde_identity": float(tilde_id.max() / scale),
        "mass_identity": float(mass_id.max() / scale),
        "b_monotone_violation": float(drops.max(initial=0.0)),
        "literal_b_monotone_violation": float(lit_drops.max(initial=0.0)),
        "mtilde_final": float(trace["mtilde"][-1]),
        "mtilde_ref": float(trace["mtilde"][i_ref]),
        "mtilde_decay": float(abs(trace["mtilde"][-1]) / max(abs(trace["mtilde"][i_ref]), 1e-300)),
    }


# ---------------------------------------------------------------- extrapolation


def extrapolate(traces: Sequence[FlowTrace]) -> FlowTrace:
    """First-order Richardson extrapolation in ``eps`` over common rows.

    The two finest traces are combined; with three or more the observed
    order of every column is estimated and stored in ``meta['order']``.
    """
    if len(traces) < 2:
        raise DomainError("need at least two traces")
    traces = sorted(traces, key=lambda tr: -tr.eps)
    labels = {tr.meta.get("scenario") for tr in traces}
    if len(labels) > 1:
        raise DomainError("traces come from different scenarios")
    coarse = traces[0]
    sampled = [_sample_on(coarse, tr) for tr in traces]
    c, f = traces[-2], traces[-1]
    q = c.eps / f.eps
    names = [name for name in coarse.columns if name != "t"]
    out = {"t": sampled[0]["t"]}
    for name in names:
        x1, x2 = sampled[-2][name], sampled[-1][name]
        out[name] = x2 if q == 1.0 else (q * x2 - x1) / (q - 1.0)
    order = {}
    if len(traces) >= 3:
        q1 = traces[-3].eps / traces[-2].eps
        for name in names:
            d1 = np.abs(sampled[-3][name] - sampled[-2][name])
            d2 = np.abs(sampled[-2][name] - sampled[-1][name])
            ok = (d1 > 0) & (d2 > 0)
            if ok.any():
                order[name] = float(np.median(np.log(d1[ok] / d2[ok]) / math.log(q1)))
    meta = dict(coarse.meta)
    meta.update(eps=0.0, extrapolated_from=[tr.eps for tr in traces], order=order)
    return FlowTrace(out, meta)


def _sample_on(coarse: FlowTrace, fine: FlowTrace) -> dict:
    if fine.eps == coarse.eps:
        return dict(coarse.columns) if fine is coarse else _common(fine, coarse.t)
    return _common(fine, coarse.t)


def _common(trace: FlowTrace, times: np.ndarray) -> dict:
    idx = np.rint(times / trace.eps).astype(int) if trace.eps > 0 else np.arange(times.size)
    if np.any(idx >= len(trace)) or not np.allclose(trace.t[idx], times, rtol=0, atol=1e-9):
        raise DomainError("traces are not nested in time")
    return {name: col[idx] for name, col in trace.columns.items()}
