import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radialflow import make_schwarzschild, sphere_area, unit_ball_volume
from radialflow.errors import DomainError
from radialflow.flow import initial_state, run
from radialflow.normalize import blow_down, convergence_metrics, horizon_mass_relation


@pytest.fixture(scope="module")
def schw():
    return make_schwarzschild(3, 2.0)


def test_blow_down_at_start_is_background(schw):
    s0 = initial_state(schw, 0.1)
    nz = blow_down(s0, schw)
    assert nz.scale == 1.0 and nz.rho_star == pytest.approx(schw.rho0)
    np.testing.assert_allclose(nz.U_t.values, schw.U.values, rtol=1e-13)
    np.testing.assert_allclose(nz.V_t.values, schw.U.values * s0.v_current.profile.values, rtol=1e-12)
    np.testing.assert_allclose(nz.W_t.values, 0.5 * (nz.U_t.values - nz.V_t.values), rtol=1e-14)


def test_blow_down_is_an_isometry(schw):
    tr = run(schw, 0.1, 1.0, snapshot_times=(1.0,))
    state = tr.snapshots[1.0]
    nz = blow_down(state, schw)
    area_norm = sphere_area(nz.U_t, nz.rho_star, n=3)
    assert area_norm == pytest.approx(tr["area_flow"][-1], rel=1e-9)
    # tends to one at infinity
    assert nz.U_t.tail_value == 1.0
    assert nz.U_t(1e6) == pytest.approx(1.0, abs=1e-5)


def test_schwarzschild_stays_schwarzschild(schw):
    tr = run(schw, 0.1, 1.0, snapshot_times=(1.0,))
    nz = blow_down(tr.snapshots[1.0], schw)
    M = float(tr["mass_adm"][-1])
    gaps = convergence_metrics(nz, M, r_max=1.0)
    assert gaps["U_gap"] < 1e-6
    assert gaps["horizon_radius"] == pytest.approx(M / 2)


def test_convergence_metrics_validation(schw):
    nz = blow_down(initial_state(schw, 0.1), schw)
    with pytest.raises(DomainError):
        convergence_metrics(nz, 0.0)


@given(st.integers(3, 9), st.floats(0.01, 50.0))
def test_horizon_mass_relation_inverts_schwarzschild_area(n, m):
    k = n - 2
    r_h = (m / 2) ** (1 / k)
    area = n * unit_ball_volume(n) * (1 + m / (2 * r_h ** k)) ** (2 * (n - 1) / k) * r_h ** (n - 1)
    assert horizon_mass_relation(area, n) == pytest.approx(m, rel=1e-12)


def test_horizon_mass_relation_rejects_nonpositive_area():
    with pytest.raises(DomainError):
        horizon_mass_relation(0.0, 3)
    assert horizon_mass_relation(16 * math.pi, 3) == pytest.approx(1.0)
