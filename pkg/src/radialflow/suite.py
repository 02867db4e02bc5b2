"""Orchestration of an eps ladder, its checks, and deterministic output files."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import DomainError, PreconditionError
from .flow import CSV_COLUMNS, FlowTrace, extrapolate, mass_ode_residual, run, vanishing_mass_checks
from .harmonic import capacity
from .masscap import penrose_gap
from .profiles import BackgroundMetric, adm_mass

SUMMARY_TXT = "summary.txt"
SUMMARY_JSON = "summary.json"


@dataclass
class SuiteResult:
    status: int
    summary: dict
    files: list = field(default_factory=list)
    traces: list = field(default_factory=list)
    extrapolated: FlowTrace | None = None


def trace_filename(eps: float | None) -> str:
    return "trace_extrapolated.csv" if eps is None else f"trace_eps{eps:g}.csv"


# ---------------------------------------------------------------- checks


def bound_violations(trace: FlowTrace, t_max: float) -> int:
    """Rows whose node-wise extremes leave ``[4^-T, 1]`` for u or ``[-(1-eps)^k, 0]`` for v."""
    eps = trace.eps
    k = np.rint(trace.t / eps)
    floor_v = -(1.0 - eps) ** k
    bad_u = (trace["umin"] < 4.0 ** (-t_max)) | (trace["umin"] > 1.0)
    bad_v = (trace["vmin"] < floor_v * (1 + 1e-12)) | (trace["vmin"] > 0.0)
    return int(np.count_nonzero(bad_u | bad_v))


def area_drift(trace: FlowTrace) -> float:
    a = trace["area_flow"]
    return float(np.max(np.abs(a - a[0])) / a[0])


def monotone_violation(mass: np.ndarray) -> float:
    """Largest row-to-row increase."""
    return float(np.max(np.diff(mass), initial=0.0))


def horizon_radius(M: float, n: int) -> float:
    return (0.5 * M) ** (1.0 / (n - 2))


def trace_checks(traces: list, extrapolated: FlowTrace | None, meta: dict, tol: dict,
                 schwarzschild: bool) -> tuple[dict, dict]:
    """Metrics and pass/fail flags that depend only on the traces."""
    n, m0, t_max = meta["n"], meta["m0"], meta["t_max"]
    best = extrapolated if extrapolated is not None else traces[-1]
    finest = traces[-1]
    M = float(best["mass"][-1])
    metrics = {
        "m0": m0,
        "M_estimate": M,
        "bounds_violations": sum(bound_violations(tr, t_max) for tr in traces),
        "area_drift_raw": {f"{tr.eps:g}": area_drift(tr) for tr in traces},
        "area_drift": area_drift(best),
        "monotone_violation": monotone_violation(best["mass"]) / abs(m0),
        "mtilde_T": float(best["mtilde"][-1]),
    }
    checks = {
        "bounds": metrics["bounds_violations"] == 0,
        "monotone": metrics["monotone_violation"] <= tol["monotone_rel"],
        "area": metrics["area_drift"] <= tol["area_rel"],
    }
    if len(finest) >= 3:
        ode = [float(np.max(np.abs(mass_ode_residual(tr))) / abs(m0)) for tr in traces]
        metrics["ode_residual"] = {f"{tr.eps:g}": r for tr, r in zip(traces, ode)}
        checks["ode"] = ode[-1] <= tol["ode_rel"]
        if len(traces) >= 2:
            metrics["ode_shrink"] = ode[-2] / ode[-1] if ode[-1] > 0 else math.inf
            checks["ode_shrink"] = metrics["ode_shrink"] >= 1.5
    if M > 0:
        h = horizon_radius(M, n)
        metrics["rho_gap"] = float(abs(best["rho_normalized"][-1] - h) / h)
        checks["rho"] = metrics["rho_gap"] <= tol["rho_rel"]
    if schwarzschild:
        metrics["mass_deviation"] = float(np.max(np.abs(best["mass"] - m0)) / abs(m0))
        checks["mass_equality"] = metrics["mass_deviation"] <= tol["mass_rel"]
    if t_max >= 4.0 and len(finest) >= 3:
        vm = vanishing_mass_checks(finest, m0)
        metrics["vanishing_mass"] = vm
        checks["mtilde_decay"] = vm["mtilde_decay"] <= tol["mtilde_decay"]
        checks["b_monotone"] = vm["b_monotone_violation"] <= tol["b_monotone"]
    return metrics, checks


def static_checks(metric: BackgroundMetric, tol: dict, schwarzschild: bool) -> tuple[dict, dict]:
    m0 = adm_mass(metric)
    cap0 = capacity(metric.U, metric.rho0)
    try:
        gap = penrose_gap(metric)
    except PreconditionError as exc:
        # both inequalities are claimed only for minimal, outer-minimizing boundaries
        return {"penrose_gap": "n/a", "cap_initial": cap0, "boundary": str(exc)}, {}
    metrics = {"penrose_gap": gap, "cap_initial": cap0}
    checks = {"penrose": abs(gap) <= tol["penrose_abs"] if schwarzschild else gap > -tol["penrose_abs"],
              "mass_capacity": m0 >= cap0 - tol["capacity_abs"]}
    return metrics, checks


# ---------------------------------------------------------------- output


def format_float(x) -> str:
    return format(float(x), ".17g")


def trace_csv(trace: FlowTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    cols = [trace[name] for name in CSV_COLUMNS]
    for i in range(len(trace)):
        w.writerow([format_float(c[i]) for c in cols])
    return buf.getvalue()


def read_trace_csv(path: str | Path, meta: dict) -> FlowTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise DomainError(f"{path}: unexpected CSV header")
    data = np.array([[float(x) for x in row] for row in rows[1:]], dtype=float).reshape(-1, len(CSV_COLUMNS))
    cols = {name: data[:, i] for i, name in enumerate(CSV_COLUMNS)}
    eps = float(meta.get("eps", 0.0))
    # the flowing-metric mass is recoverable exactly from the stored columns
    cols["mass_adm"] = cols["mtilde"] + cols["cap_flow"]
    if eps > 0:
        cols["u_inf"] = (1.0 - eps) ** np.rint(cols["t"] / eps)
    return FlowTrace(cols, dict(meta))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def summary_text(summary: dict) -> str:
    lines = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for key in sorted(obj):
                walk(f"{prefix}.{key}" if prefix else str(key), obj[key])
        elif isinstance(obj, (list, tuple)):
            lines.append(f"{prefix} = {', '.join(_scalar(v) for v in obj)}")
        else:
            lines.append(f"{prefix} = {_scalar(obj)}")

    walk("", _jsonable(summary))
    return "\n".join(lines) + "\n"


def _scalar(v) -> str:
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _trace_meta(trace: FlowTrace) -> dict:
    keep = ("n", "eps", "t_max", "steps", "grid_points", "r_min", "r_out", "scenario", "m0",
            "rho0", "r_max_fit", "max_rho_jump", "extrapolated_from", "order")
    return {k: trace.meta[k] for k in keep if k in trace.meta}


# ---------------------------------------------------------------- suite


def run_suite(config: RunConfig, write: bool = True) -> SuiteResult:
    scenario = config.scenario()
    metric = scenario.build()
    schwarzschild = config.kind == "schwarzschild"
    m0 = adm_mass(metric)
    static_m, static_c = static_checks(metric, config.tolerances, schwarzschild)
    traces = [run(metric, eps, config.t_max) for eps in config.eps]
    extrap = extrapolate(traces) if len(traces) >= 2 else None
    meta = {"n": config.n, "m0": m0, "t_max": config.t_max}
    trace_m, trace_c = trace_checks(traces, extrap, meta, config.tolerances, schwarzschild)
    checks = {**static_c, **trace_c}
    summary = {
        "scenario": metric.label,
        "n": config.n,
        "eps": list(config.eps),
        "T": config.t_max,
        "grid_points": metric.grid.size,
        "r_out": metric.grid.r_out,
        "rho0": metric.rho0,
        "metrics": {**static_m, **trace_m},
        "checks": checks,
        "passed": all(checks.values()),
        "traces": {f"{tr.eps:g}": _trace_meta(tr) for tr in traces},
    }
    if extrap is not None:
        summary["extrapolation_order"] = extrap.meta.get("order", {})
    result = SuiteResult(0 if summary["passed"] else 1, summary, [], traces, extrap)
    if write:
        out = Path(config.out_dir)
        for tr in traces:
            path = out / trace_filename(tr.eps)
            atomic_write(path, trace_csv(tr))
            result.files.append(path)
        if extrap is not None:
            path = out / trace_filename(None)
            atomic_write(path, trace_csv(extrap))
            result.files.append(path)
        atomic_write(out / SUMMARY_JSON, to_json(summary))
        atomic_write(out / SUMMARY_TXT, summary_text(summary))
        result.files += [out / SUMMARY_JSON, out / SUMMARY_TXT]
    return result


def report_from_dir(out_dir: str | Path, tolerances: dict) -> SuiteResult:
    """Recompute trace checks from CSVs written by :func:`run_suite`."""
    out = Path(out_dir)
    try:
        summary = json.loads((out / SUMMARY_JSON).read_text())
    except (OSError, ValueError) as exc:
        raise DomainError(f"cannot read {out / SUMMARY_JSON}: {exc}") from None
    traces = []
    for key, meta in sorted(summary["traces"].items(), key=lambda kv: -float(kv[0])):
        traces.append(read_trace_csv(out / trace_filename(float(key)), meta))
    extrap = extrapolate(traces) if len(traces) >= 2 else None
    meta = {"n": summary["n"], "m0": summary["metrics"]["m0"], "t_max": summary["T"]}
    schwarzschild = summary["scenario"].startswith("schwarzschild")
    metrics, checks = trace_checks(traces, extrap, meta, tolerances, schwarzschild)
    for key in ("penrose", "mass_capacity"):
        if key in summary["checks"]:
            checks[key] = bool(summary["checks"][key])
    report = dict(summary)
    report["metrics"] = {**summary["metrics"], **_jsonable(metrics)}
    report["checks"] = checks
    report["passed"] = all(checks.values())
    return SuiteResult(0 if report["passed"] else 1, report, [], traces, extrap)
