import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from radialflow import (RampFlux, adm_mass, make_flat, make_from_flux, make_grid, make_schwarzschild,
                        mean_curvature, scalar_curvature, sphere_area, unit_ball_volume)
from radialflow.errors import DomainError, PreconditionError
from radialflow.profiles import (RadialProfile, Scenario, conformal_exponent, fit_tail, make_tabulated,
                                 required_r_out_factor, scalar_curvature_of_factor)


def test_unit_ball_volumes():
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)
    for n in range(1, 12):
        assert unit_ball_volume(n) == pytest.approx(math.pi ** (n / 2) / math.gamma(n / 2 + 1), rel=1e-14)


def test_conformal_exponent():
    assert conformal_exponent(3) == 8.0
    assert conformal_exponent(4) == 6.0


def test_grid_validation():
    with pytest.raises(DomainError):
        make_grid(3, 2.0, 1.0)
    with pytest.raises(DomainError):
        make_grid(2, 1.0, 2.0)
    with pytest.raises(DomainError):
        make_grid(3, 1.0, 2.0, points=8)
    g = make_grid(3, 1.0, 100.0, 101)
    assert g.r_min == 1.0 and g.r_out == 100.0
    assert g.h == pytest.approx(math.log(100.0) / 100)


@pytest.mark.parametrize("n", [3, 4, 5, 8])
def test_schwarzschild_profile_is_exact(n):
    m = 2.0
    g = make_schwarzschild(n, m)
    r = np.geomspace(g.rho0, 50 * g.rho0, 37) * 1.0001
    np.testing.assert_allclose(g.U(r), 1 + 0.5 * m * r ** (2 - n), rtol=1e-9)  # cubic Hermite, h~3e-3
    # slopes are exact at nodes; between nodes the Hermite derivative is O(h^3)
    x = g.grid.nodes[::97]
    np.testing.assert_allclose(g.U.derivative(x), -(n - 2) * 0.5 * m * x ** (1 - n), rtol=1e-12)
    np.testing.assert_allclose(g.U.derivative(r), -(n - 2) * 0.5 * m * r ** (1 - n), rtol=2e-4)
    assert g.rho0 == pytest.approx((m / 2) ** (1 / (n - 2)))
    assert adm_mass(g) == pytest.approx(m, rel=1e-10)
    # the horizon is minimal and the metric is scalar flat
    assert abs(mean_curvature(g.U, g.rho0)) < 1e-9
    assert np.max(np.abs(scalar_curvature(g, r))) == 0.0


def test_profile_tail_and_domain():
    g = make_schwarzschild(3, 2.0)
    assert g.U(1e9) == pytest.approx(1 + 1e-9, rel=1e-15)
    with pytest.raises(DomainError):
        g.U(0.5)
    doubled = g.U.scaled(2.0)
    assert doubled(3.0) == pytest.approx(2 * g.U(3.0))


def test_flat_sphere_geometry():
    g = make_flat(3)
    assert sphere_area(g.U, 2.0) == pytest.approx(16 * math.pi)
    assert mean_curvature(g.U, 2.0) == pytest.approx(1.0)
    assert mean_curvature(g.U, 2.0, "toward-hole") == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        mean_curvature(g.U, 2.0, "sideways")


def test_fit_tail_recovers_coefficients():
    grid = make_grid(4, 1.0, 1e5, 2048)
    r = grid.nodes
    a, c, _, resid = fit_tail(grid, 0.7 + 0.3 * r ** -2.0)
    assert a == pytest.approx(0.7, rel=1e-12) and c == pytest.approx(0.3, rel=1e-7)
    assert resid < 1e-10


@pytest.mark.parametrize("n", [3, 4, 6])
def test_flux_metric_matches_direct_integral(n):
    flux = RampFlux(1.0, ((1.5, 6.0, 0.7),))
    g = make_from_flux(n, flux, 0.2, 1e5, points=4096)
    for r in (0.5, 1.7, 3.0, 5.9, 20.0):
        cuts = [x for x in (1.5, 6.0) if r < x]
        tail = sum(quad(lambda s: flux(s) * s ** (1 - n), a, b, limit=400, epsabs=0, epsrel=1e-13)[0]
                   for a, b in zip([r] + cuts, cuts + [50.0]))
        exact = 1.0 + tail + flux.limit * 50.0 ** (2 - n) / (n - 2)
        assert g.U(r) == pytest.approx(exact, rel=1e-10)
    assert adm_mass(g) == pytest.approx(2 * 1.7 / (n - 2), rel=1e-8)
    # nonnegative scalar curvature and positivity on the ramp
    r = np.linspace(1.6, 5.9, 20)
    assert np.all(scalar_curvature(g, r) > 0)


def test_flux_boundary_is_outermost_minimal_sphere():
    flux = RampFlux(1.0, ((2.0, 12.0, 1.0),))
    g = make_from_flux(3, flux, 0.25, 1e6)
    assert abs(mean_curvature(g.U, g.rho0)) < 1e-8
    r = g.grid.nodes[g.grid.nodes > g.rho0 * 1.001]
    G = 0.5 * r * g.U(r) - flux(r)
    assert np.all(G > 0)


def test_flux_validation():
    with pytest.raises(DomainError):
        make_from_flux(3, RampFlux(1.0, ((2.0, 1e7, 1.0),)), 0.25, 1e6)
    with pytest.raises(PreconditionError):
        make_from_flux(3, RampFlux(1.0, ()), 2.0, 1e6)  # minimal sphere below the grid


def test_ramp_flux_is_monotone_and_smooth():
    flux = RampFlux(0.5, ((1.0, 4.0, 2.0),))
    r = np.geomspace(0.5, 8.0, 400)
    F = flux(r)
    assert np.all(np.diff(F) >= 0)
    assert F[0] == 0.5 and F[-1] == pytest.approx(2.5)
    assert flux.limit == 2.5 and flux.support_end == 4.0


def test_tabulated_round_trip(tmp_path):
    r = np.geomspace(1.0, 1e6, 3000)
    path = tmp_path / "schw.txt"
    np.savetxt(path, np.column_stack([r, 1 + r ** -1.0]), header="radius U")
    g = make_tabulated(path, 3, 1.0, points=4096)
    assert g.U(7.3) == pytest.approx(1 + 1 / 7.3, rel=1e-8)
    assert adm_mass(g, rtol=1e-3) == pytest.approx(2.0, rel=1e-3)


def test_tabulated_rejects_bad_files(tmp_path):
    path = tmp_path / "bad.txt"
    np.savetxt(path, np.array([[1.0, 2.0, 3.0], [2.0, 1.5, 1.0]]))
    with pytest.raises(DomainError):
        make_tabulated(path, 3, 1.0)


def test_scenario_builder():
    s = Scenario("schwarzschild", 4, {"mass": 1.0})
    assert s.build().rho0 == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(DomainError):
        Scenario("torus", 3).build()


def test_required_grid_extent_grows_with_horizon():
    assert required_r_out_factor(3, 1.0) == 1e6
    assert required_r_out_factor(3, 8.0) == pytest.approx(1e3 * math.exp(16.0))


def test_scalar_curvature_of_factor_on_harmonic_factor():
    g = make_schwarzschild(3, 2.0)
    R = scalar_curvature_of_factor(g.U)
    assert np.max(np.abs(R[5:-5])) < 1e-6


@given(st.integers(3, 9), st.floats(0.3, 5.0))
def test_schwarzschild_mass_property(n, m):
    g = make_schwarzschild(n, m, points=1024)
    assert adm_mass(g) == pytest.approx(m, rel=1e-8)
    assert sphere_area(g.U, g.rho0) == pytest.approx(n * unit_ball_volume(n) * (2 * m) ** ((n - 1) / (n - 2)), rel=1e-12)


def test_profile_rejects_bad_values():
    grid = make_grid(3, 1.0, 10.0, 32)
    with pytest.raises(DomainError):
        RadialProfile(grid, np.ones(31), 1.0, 0.0)
    vals = np.ones(32)
    vals[3] = np.nan
    with pytest.raises(DomainError):
        RadialProfile(grid, vals, 1.0, 0.0)
