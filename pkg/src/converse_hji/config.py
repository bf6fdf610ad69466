"""JSON problem configs.

A config holds the ProblemSpec fields as expression strings plus optional
``simulation`` and ``verify`` sections. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import expr as ex
from .model import DEFAULT_BOX, DEFAULT_SAMPLES, DEFAULT_SEED, ProblemSpec, StructuralError

TOP_KEYS = {
    "dimension", "disturbance_dim", "control_dim", "value_function",
    "g1", "g2", "E", "gamma", "alpha1", "alpha2", "b", "simulation", "verify",
}
REQUIRED = TOP_KEYS - {"simulation", "verify"}
SIM_KEYS = {"x0", "T", "dt", "control_mode", "disturbance_mode", "seed", "lo", "hi", "record_every"}
VERIFY_KEYS = {"samples", "box_half_width", "seed"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimulationSettings:
    x0: tuple
    T: float = 2.0
    dt: float = 1e-3
    control_mode: str = "open_loop"
    disturbance_mode: str = "zero"
    seed: int = DEFAULT_SEED
    lo: float = 0.0
    hi: float = 0.0
    record_every: int = 10


@dataclass(frozen=True)
class VerifySettings:
    samples: int = DEFAULT_SAMPLES
    box_half_width: float = DEFAULT_BOX
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class Config:
    spec: ProblemSpec
    simulation: SimulationSettings | None
    verify: VerifySettings
    raw: dict


def _number(d: dict, key: str, where: str) -> float:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}{key}: expected a number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, where: str) -> int:
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}{key}: expected an integer, got {v!r}")
    return v


def _parse(src, n: int, where: str) -> ex.Expr:
    if isinstance(src, bool):
        raise ConfigError(f"{where}: expected an expression string, got {src!r}")
    if isinstance(src, (int, float)):
        return ex.Const(src)
    if not isinstance(src, str):
        raise ConfigError(f"{where}: expected an expression string, got {src!r}")
    try:
        return ex.parse(src, n)
    except ex.ExprError as err:
        raise ConfigError(f"{where}: {err}") from err


def _matrix(rows, n: int, where: str):
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{where}: expected an array of arrays")
    return [[_parse(s, n, f"{where}[{i}][{j}]") for j, s in enumerate(r)] for i, r in enumerate(rows)]


def _check_keys(d, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where or 'config'}: expected a JSON object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown keys {unknown}")


def spec_from_dict(d: dict) -> ProblemSpec:
    _check_keys(d, TOP_KEYS, "")
    missing = sorted(REQUIRED - set(d))
    if missing:
        raise ConfigError(f"config: missing keys {missing}")
    n = _int(d, "dimension", "")
    m = _int(d, "disturbance_dim", "")
    p = _int(d, "control_dim", "")
    if n < 1 or m < 1 or p < 1:
        raise ConfigError("dimensions must be positive")
    gamma = d["gamma"]
    if not isinstance(gamma, list):
        raise ConfigError("gamma: expected an array")
    try:
        return ProblemSpec(
            n=n,
            m=m,
            p=p,
            V=_parse(d["value_function"], n, "value_function"),
            g1=_matrix(d["g1"], n, "g1"),
            g2=_matrix(d["g2"], n, "g2"),
            alpha1=_number(d, "alpha1", ""),
            alpha2=_number(d, "alpha2", ""),
            E=_matrix(d["E"], n, "E"),
            gamma=[_parse(s, n, f"gamma[{i}]") for i, s in enumerate(gamma)],
            b=_number(d, "b", ""),
        )
    except StructuralError as err:
        raise ConfigError(str(err)) from err


def _simulation(d: dict, n: int) -> SimulationSettings:
    _check_keys(d, SIM_KEYS, "simulation.")
    if "x0" not in d:
        raise ConfigError("simulation.x0 is required")
    x0 = d["x0"]
    if not isinstance(x0, list) or len(x0) != n or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x0
    ):
        raise ConfigError(f"simulation.x0: expected {n} numbers")
    kw: dict = {"x0": tuple(float(v) for v in x0)}
    for key in ("T", "dt", "lo", "hi"):
        if key in d:
            kw[key] = _number(d, key, "simulation.")
    for key in ("seed", "record_every"):
        if key in d:
            kw[key] = _int(d, key, "simulation.")
    for key, allowed in (
        ("control_mode", ("open_loop", "optimal")),
        ("disturbance_mode", ("zero", "worst_case", "uniform")),
    ):
        if key in d:
            if d[key] not in allowed:
                raise ConfigError(f"simulation.{key}: expected one of {allowed}, got {d[key]!r}")
            kw[key] = d[key]
    return SimulationSettings(**kw)


def _verify(d: dict) -> VerifySettings:
    _check_keys(d, VERIFY_KEYS, "verify.")
    kw: dict = {}
    if "samples" in d:
        kw["samples"] = _int(d, "samples", "verify.")
        if kw["samples"] < 1:
            raise ConfigError("verify.samples must be >= 1")
    if "seed" in d:
        kw["seed"] = _int(d, "seed", "verify.")
    if "box_half_width" in d:
        kw["box_half_width"] = _number(d, "box_half_width", "verify.")
    return VerifySettings(**kw)


def config_from_dict(d: dict) -> Config:
    spec = spec_from_dict(d)
    sim = _simulation(d["simulation"], spec.n) if "simulation" in d else None
    ver = _verify(d["verify"]) if "verify" in d else VerifySettings()
    return Config(spec=spec, simulation=sim, verify=ver, raw=d)


def load_config(path: str | Path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    try:
        d = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON in {path}: {err}") from err
    return config_from_dict(d)
