"""Acceptance criteria, one test per criterion; each prints a CRITERION line."""
import time

import numpy as np
import pytest

from conftest import cached_extrapolation, cached_run, record, scenario_metric
from radialflow import adm_mass, capacity, make_flat, make_schwarzschild
from radialflow.catalog import FLUX_FAMILY, SCHWARZSCHILD_SUITE
from radialflow.cli import main
from radialflow.flow import mass_ode_residual, vanishing_mass_checks
from radialflow.masscap import mass_yamabe_check, penrose_gap, yamabe_dirichlet, yamabe_neumann
from radialflow.normalize import blow_down, convergence_metrics
from radialflow.suite import area_drift, bound_violations, monotone_violation

SCHW_T = 3.0
FLUX_T = 8.0
SCHW_EPS = (0.05, 0.025)
FLUX_EPS = (0.025, 0.0125)
SCHW = [("schw", i) for i in range(len(SCHWARZSCHILD_SUITE))]
FLUX = [("flux", i) for i in range(len(FLUX_FAMILY))]


def _t_max(kind):
    return SCHW_T if kind == "schw" else FLUX_T


def _ladder(kind):
    return SCHW_EPS if kind == "schw" else FLUX_EPS


def _label(kind, index):
    return scenario_metric(kind, index, _t_max(kind)).label


def test_criterion_01_capacity_oracles():
    start = time.perf_counter()
    worst = 0.0
    for n in (3, 4, 5, 8):
        for rho in (1.0, 2.5):
            worst = max(worst, abs(capacity(make_flat(n, r_min=rho).U, rho) / rho ** (n - 2) - 1))
        for m in (1.0, 2.0):
            g = make_schwarzschild(n, m)
            worst = max(worst, abs(capacity(g.U, g.rho0) / m - 1))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 1.0
    record(1, ok, f"max rel err {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-6
    assert elapsed < 1.0


def test_criterion_02_equality_case():
    lines, ok = [], True
    for kind, i in SCHW:
        n, m = SCHWARZSCHILD_SUITE[i]
        metric = scenario_metric(kind, i, SCHW_T)
        ex = cached_extrapolation(kind, i, SCHW_EPS, SCHW_T)
        dev = float(np.max(np.abs(ex["mass"] - m)) / m)
        gap = penrose_gap(metric)
        h = (m / 2) ** (1 / (n - 2))
        rho_gap = abs(float(ex["rho_normalized"][-1]) - h) / h
        good = dev <= 5e-3 and gap <= 1e-8 and rho_gap <= 1e-2
        ok &= good
        lines.append(f"n={n}: mass dev {dev:.2e}, penrose {gap:.1e}, rho gap {rho_gap:.2e}")
    record(2, ok, "; ".join(lines))
    assert ok


def test_criterion_03_area_constancy():
    lines, ok = [], True
    for kind, i in SCHW + FLUX:
        coarse, fine = (cached_run(kind, i, e, _t_max(kind)) for e in _ladder(kind))
        at_0025 = cached_run(kind, i, 0.025, _t_max(kind))
        d0, d1 = area_drift(coarse), area_drift(fine)
        good = area_drift(at_0025) <= 1e-2 and d1 < d0
        ok &= good
        lines.append(f"{_label(kind, i)} {d0:.3f}->{d1:.3f}")
    record(3, ok, "area drift at ladder eps: " + "; ".join(lines))
    assert ok


def test_criterion_04_mass_monotonicity():
    worst = 0.0
    for kind, i in SCHW + FLUX:
        ex = cached_extrapolation(kind, i, _ladder(kind), _t_max(kind))
        worst = max(worst, monotone_violation(ex["mass"]) / abs(ex.meta["m0"]))
    record(4, worst <= 1e-4, f"max per-row increase {worst:.2e} m(0)")
    assert worst <= 1e-4


def test_criterion_05_mass_ode():
    lines, ok = [], True
    for kind, i in SCHW + FLUX:
        t_max = _t_max(kind)
        res = [float(np.max(np.abs(mass_ode_residual(cached_run(kind, i, e, t_max)))))
               / abs(cached_run(kind, i, e, t_max).meta["m0"]) for e in (0.025, 0.0125)]
        shrink = res[0] / res[1]
        good = res[0] <= 0.05 and shrink >= 1.5
        ok &= good
        lines.append(f"{_label(kind, i)} {res[0]:.4f} (x{shrink:.2f})")
    record(5, ok, "; ".join(lines))
    assert ok


def test_criterion_06_vanishing_mass():
    lines, ok = [], True
    for kind, i in FLUX:
        tr = cached_run(kind, i, FLUX_EPS[-1], FLUX_T)
        vm = vanishing_mass_checks(tr)
        good = vm["mtilde_decay"] <= 0.1 and vm["literal_b_monotone_violation"] <= 1e-6
        ok &= good
        lines.append(f"[{i}] decay {vm['mtilde_decay']:.1e} b-viol {vm['literal_b_monotone_violation']:.1e}")
    record(6, ok, "; ".join(lines))
    assert ok


def test_criterion_07_penrose_inequality():
    lines, ok = [], len(FLUX) >= 5 and {n for n, _, _ in FLUX_FAMILY} == {3, 4, 6}
    for kind, i in FLUX:
        metric = scenario_metric(kind, i, FLUX_T)
        gap = penrose_gap(metric)
        cap0 = float(cached_run(kind, i, FLUX_EPS[-1], FLUX_T)["cap_flow"][0])
        good = gap > 0 and adm_mass(metric) >= cap0 - 1e-6
        ok &= good
        lines.append(f"[{i}] gap {gap:.3f}")
    record(7, ok, "; ".join(lines))
    assert ok


def test_criterion_08_convergence_to_schwarzschild():
    lines, ok = [], True
    for kind, i in FLUX:
        metric = scenario_metric(kind, i, FLUX_T)
        k = metric.n - 2
        tr = cached_run(kind, i, FLUX_EPS[-1], FLUX_T)
        M = float(tr["mass_adm"][-1])
        r_max = tr.meta["r_max_fit"]
        gaps = [convergence_metrics(blow_down(tr.snapshots[t], metric), M, r_max)["U_gap"]
                for t in (2.0, FLUX_T)]
        ex = cached_extrapolation(kind, i, FLUX_EPS, FLUX_T)
        M_ext = float(ex["mass"][-1])
        h = (M_ext / 2) ** (1 / k)
        rho_err = abs(float(ex["rho_normalized"][-1]) - h) / h
        ratio = gaps[1] / gaps[0]
        good = ratio <= 0.25 and rho_err <= 2e-2
        ok &= good
        lines.append(f"[{i}] U-gap ratio {ratio:.1e} rho err {rho_err:.1e}")
    record(8, ok, "; ".join(lines))
    assert ok


def test_criterion_09_yamabe_identities():
    notes, ok = [], True
    for n in (3, 4, 6):
        for g in (make_flat(n), make_schwarzschild(n, 2.0)):
            yd = yamabe_dirichlet(g)
            target = yd.diagnostics["capacity_identity"]
            ok &= abs(yd.value - target) <= 1e-5 * yd.value
        g = make_schwarzschild(n, 2.0)
        yn = yamabe_neumann(g)
        u = yn.minimizer.values[g.grid.nodes >= g.rho0]
        ok &= abs(yn.value) <= 1e-8 and float(np.max(np.abs(u - 1))) <= 1e-8
        eq = mass_yamabe_check(g)["residual"]
        ok &= abs(eq) <= 1e-6
        notes.append(f"schw n={n} residual {eq:.1e}")
    worst = min(mass_yamabe_check(scenario_metric("flux", i, FLUX_T))["residual"] for _, i in FLUX)
    ok &= worst >= -1e-6
    record(9, ok, "; ".join(notes) + f"; min flux residual {worst:.1e}")
    assert ok


def test_criterion_10_scheme_bounds():
    total = 0
    for kind, i in SCHW + FLUX:
        for e in sorted({*_ladder(kind), 0.025, 0.0125}, reverse=True):
            total += bound_violations(cached_run(kind, i, e, _t_max(kind)), _t_max(kind))
    record(10, total == 0, f"{total} violating rows")
    assert total == 0


CONFIG = """
[scenario]
kind = flux_family
n = 4
base = 1
steps = 1.5:20:0.5
perturb = 0.1
seed = 11
[flow]
eps = 0.1, 0.05
T = 1
[grid]
points = 1024
"""


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(CONFIG)
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["suite", "--config", str(cfg), "--out", str(d), "--quiet"]) for d in outs]
    names = sorted(p.name for p in outs[0].iterdir())
    same = names == sorted(p.name for p in outs[1].iterdir()) and all(
        (outs[0] / nm).read_bytes() == (outs[1] / nm).read_bytes() for nm in names)
    record(11, same and codes[0] == codes[1], f"{len(names)} files compared, exit codes {codes}")
    assert same and codes[0] == codes[1]
