"""Shipped scenarios: Schwarzschild controls and an admissible flux family.

Flux ramps reach far enough out that the normalized metric is still
visibly non-Schwarzschild near ``x = 4 R_max`` at ``t = 2``.
"""
from __future__ import annotations

from .profiles import Scenario, flux_scenario, required_r_out_factor

FLUX_FAMILY = (
    (3, 1.0, ((2.0, 1000.0, 1.0),)),
    (3, 0.5, ((1.0, 30.0, 0.5), (50.0, 500.0, 1.0))),
    (4, 1.0, ((1.5, 100.0, 1.0),)),
    (4, 2.0, ((2.0, 10.0, 0.5), (20.0, 80.0, 0.5))),
    (6, 1.0, ((1.2, 20.0, 1.0),)),
    (6, 1.0, ((1.0, 3.0, 0.3), (5.0, 15.0, 0.3))),
)

SCHWARZSCHILD_SUITE = ((3, 2.0), (5, 1.0))


def flux_family(t_max: float = 8.0, points: int = 4096) -> list[Scenario]:
    out = []
    for i, (n, base, steps) in enumerate(FLUX_FAMILY):
        out.append(flux_scenario(n, base, steps, label=f"flux_family[{i}](n={n})", points=points,
                                 r_out_factor=required_r_out_factor(n, t_max)))
    return out


def schwarzschild_suite(t_max: float = 3.0, points: int = 4096) -> list[Scenario]:
    return [Scenario("schwarzschild", n, {"mass": m}, points, required_r_out_factor(n, t_max))
            for n, m in SCHWARZSCHILD_SUITE]
