import functools

import pytest
from hypothesis import HealthCheck, settings

from radialflow.catalog import flux_family, schwarzschild_suite
from radialflow.flow import extrapolate, run

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

CRITERIA_LINES: list[str] = []


def record(number: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    CRITERIA_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def scenario_metric(kind: str, index: int, t_max: float):
    scenarios = flux_family(t_max) if kind == "flux" else schwarzschild_suite(t_max)
    return scenarios[index].build()


@functools.lru_cache(maxsize=None)
def cached_run(kind: str, index: int, eps: float, t_max: float):
    metric = scenario_metric(kind, index, t_max)
    return run(metric, eps, t_max, snapshot_times=(0.0, 2.0, t_max) if t_max >= 2 else (0.0,))


@functools.lru_cache(maxsize=None)
def cached_extrapolation(kind: str, index: int, eps_pair: tuple, t_max: float):
    return extrapolate([cached_run(kind, index, e, t_max) for e in eps_pair])


@pytest.fixture(scope="session")
def schwarzschild_n3():
    from radialflow import make_schwarzschild

    return make_schwarzschild(3, 2.0)
