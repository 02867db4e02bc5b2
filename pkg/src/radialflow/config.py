"""Run configuration: a small sectioned ``key = value`` format.

Unknown sections or keys, duplicates and constraint violations are hard
errors.  Constraint violations are collected and reported together.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .profiles import DEFAULT_POINTS, Scenario, required_r_out_factor

DEFAULT_TOLERANCES = {
    "mass_rel": 5e-3,
    "monotone_rel": 1e-4,
    "area_rel": 1e-2,
    "ode_rel": 0.05,
    "rho_rel": 1e-2,
    "penrose_abs": 1e-8,
    "capacity_abs": 1e-6,
    "mtilde_decay": 0.1,
    "b_monotone": 1e-6,
}

_KEYS = {
    "scenario": {"kind", "n", "mass", "base", "steps", "r_min", "path", "rho0", "label",
                 "seed", "perturb"},
    "flow": {"eps", "T"},
    "grid": {"points", "r_out_factor"},
    "output": {"dir"},
    "tolerances": set(DEFAULT_TOLERANCES),
}


@dataclass(frozen=True)
class RunConfig:
    kind: str
    n: int
    params: dict
    eps: tuple
    t_max: float
    points: int = DEFAULT_POINTS
    r_out_factor: float | None = None
    out_dir: str = "out"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int | None = None

    def scenario(self) -> Scenario:
        factor = self.r_out_factor or required_r_out_factor(self.n, self.t_max)
        params = dict(self.params)
        if self.kind == "flux_family" and self.seed is not None and params.get("perturb"):
            rng = np.random.default_rng(self.seed)
            amp = float(params["perturb"])
            params["steps"] = [(a, b, rise * (1.0 + amp * rng.uniform(-1.0, 1.0)))
                               for a, b, rise in params["steps"]]
        return Scenario(self.kind, self.n, params, self.points, factor)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {key: val for key, val in kw.items() if val is not None}
        cfg = replace(self, **kw)
        errors = _validate(cfg)
        if errors:
            raise ConfigError("; ".join(errors))
        return cfg


def _parse_steps(text: str, line: int) -> list:
    steps = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigError(f"line {line}: step {chunk!r} must be r_start:r_end:rise")
        try:
            steps.append(tuple(float(x) for x in parts))
        except ValueError:
            raise ConfigError(f"line {line}: step {chunk!r} is not numeric") from None
    return steps


def _number(text: str, line: int, key: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"line {line}: {key} = {text!r} is not a valid {kind.__name__}") from None


def parse_config(text: str) -> RunConfig:
    raw: dict[tuple[str, str], tuple[str, int]] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header {body!r}")
            section = body[1:-1].strip()
            if section not in _KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside of any section")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in _KEYS[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if (section, key) in raw:
            first = raw[(section, key)][1]
            raise ConfigError(f"duplicate key {key!r} in [{section}] on lines {first} and {lineno}")
        raw[(section, key)] = (value, lineno)
    return _build(raw)


def _build(raw: dict) -> RunConfig:
    def get(section, key, default=None, kind=str):
        if (section, key) not in raw:
            return default
        value, line = raw[(section, key)]
        return _number(value, line, key, kind) if kind is not str else value

    errors = []
    kind = get("scenario", "kind")
    if kind is None:
        errors.append("[scenario] kind is required")
    n = get("scenario", "n", None, int)
    if n is None:
        errors.append("[scenario] n is required")
    params: dict = {}
    if kind == "schwarzschild":
        params["mass"] = get("scenario", "mass", 2.0, float)
    elif kind == "flux_family":
        params["base"] = get("scenario", "base", 1.0, float)
        if ("scenario", "steps") in raw:
            value, line = raw[("scenario", "steps")]
            params["steps"] = _parse_steps(value, line)
        else:
            params["steps"] = []
        for key in ("r_min", "perturb"):
            val = get("scenario", key, None, float)
            if val is not None:
                params[key] = val
    elif kind == "tabulated":
        params["path"] = get("scenario", "path")
        params["rho0"] = get("scenario", "rho0", None, float)
        if params["path"] is None or params["rho0"] is None:
            errors.append("tabulated scenarios need path and rho0")
    elif kind is not None:
        errors.append(f"unknown scenario kind {kind!r}")
    label = get("scenario", "label")
    if label:
        params["label"] = label
    eps_text = get("flow", "eps", "0.05")
    try:
        eps = tuple(float(e) for e in eps_text.split(",") if e.strip())
    except ValueError:
        raise ConfigError(f"line {raw[('flow', 'eps')][1]}: eps must be a comma-separated list") from None
    tol = dict(DEFAULT_TOLERANCES)
    for key in DEFAULT_TOLERANCES:
        val = get("tolerances", key, None, float)
        if val is not None:
            tol[key] = val
    cfg = RunConfig(
        kind=kind or "", n=n or 0, params=params, eps=eps,
        t_max=get("flow", "T", 2.0, float),
        points=get("grid", "points", DEFAULT_POINTS, int),
        r_out_factor=get("grid", "r_out_factor", None, float),
        out_dir=get("output", "dir", "out"),
        tolerances=tol,
        seed=get("scenario", "seed", None, int),
    )
    errors.extend(_validate(cfg))
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg


def _validate(cfg: RunConfig) -> list:
    errors = []
    if cfg.n and cfg.n < 3:
        errors.append("n must be at least 3")
    if not cfg.eps:
        errors.append("eps ladder is empty")
    if any(not 0 < e < 0.5 for e in cfg.eps):
        errors.append("eps must lie in (0, 0.5)")
    if any(b >= a for a, b in zip(cfg.eps, cfg.eps[1:])):
        errors.append("eps ladder must be strictly decreasing")
    if not cfg.t_max > 0:
        errors.append("T must be positive")
    if cfg.points < 64:
        errors.append("grid points must be at least 64")
    if cfg.r_out_factor is not None and not cfg.r_out_factor > 1:
        errors.append("r_out_factor must exceed 1")
    if cfg.kind == "schwarzschild" and not cfg.params.get("mass", 0) > 0:
        errors.append("mass must be positive")
    return errors


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
