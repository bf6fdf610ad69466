"""Command-line front end.

    python -m converse_hji synthesize CONFIG [--out DIR]
    python -m converse_hji verify     CONFIG [--out DIR] [--seed N] [--samples N]
    python -m converse_hji simulate   CONFIG [--out DIR] [--seed N]
    python -m converse_hji cost-check CONFIG [--out DIR]

Exit codes: 0 success, 1 failed check / non-finite state, 2 config or IO
error, 3 cost identity not applicable (trajectory left X).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import expr as ex
from .analysis import verify_system
from .config import Config, ConfigError, load_config
from .design import SynthesisError, synthesize
from .model import ProblemSpec, SystemDefinition, validate
from .sim import COST_IDENTITY_RTOL, IntegrationError, SimConfig, cost_identity_check, integrate

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NOT_APPLICABLE = 0, 1, 2, 3


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n")


def system_to_dict(system: SystemDefinition) -> dict:
    s = ex.to_string
    return {
        "dimension": system.spec.n,
        "disturbance_dim": system.spec.m,
        "control_dim": system.spec.p,
        "k": system.k,
        "f": [s(e) for e in system.f],
        "h": [s(e) for e in system.h],
        "P": [[s(e) for e in row] for row in system.P],
        "q": s(system.q),
        "Vx": [s(e) for e in system.Vx],
        "notes": list(system.notes),
    }


def _verify_settings(cfg: Config, args):
    v = cfg.verify
    if args.seed is not None:
        v = replace(v, seed=args.seed)
    if args.samples is not None:
        v = replace(v, samples=args.samples)
    return v


def _sim_config(cfg: Config, args) -> SimConfig:
    s = cfg.simulation
    if s is None:
        raise ConfigError("config has no 'simulation' section")
    seed = args.seed if args.seed is not None else s.seed
    try:
        return SimConfig(
            x0=s.x0, T=s.T, dt=s.dt, control_mode=s.control_mode,
            disturbance_mode=s.disturbance_mode, lo=s.lo, hi=s.hi, seed=seed,
            record_every=s.record_every,
        )
    except ValueError as err:
        raise ConfigError(f"simulation: {err}") from err


def cmd_synthesize(cfg: Config, out: Path, args, factory) -> int:
    report = validate(cfg.spec)
    payload: dict = {"validation": report.to_dict()}
    if not report.passed:
        payload["error"] = "validation failed: " + ", ".join(c.name for c in report.failures())
        write_json(out / "system.json", payload)
        return EXIT_FAIL
    system = factory(cfg.spec)
    payload = {**system_to_dict(system), **payload}
    write_json(out / "system.json", payload)
    print(f"k = {system.k:.12g}")
    for i, e in enumerate(payload["f"], 1):
        print(f"f{i} = {e}")
    return EXIT_OK


def cmd_verify(cfg: Config, out: Path, args, factory) -> int:
    settings = _verify_settings(cfg, args)
    report = validate(cfg.spec, seed=settings.seed, box=settings.box_half_width)
    if not report.passed:
        write_json(out / "verify.json", {"passed": False, "validation": report.to_dict()})
        return EXIT_FAIL
    system = factory(cfg.spec)
    result = verify_system(
        system, samples=settings.samples, seed=settings.seed, box=settings.box_half_width
    )
    result["validation"] = report.to_dict()
    result["settings"] = dict(settings.__dict__)
    write_json(out / "verify.json", result)
    print(f"{'check':<26}{'samples':>8}  worst")
    for name in ("hji_residual", "inf_sup_oracle", "saturated_residual_on_X"):
        r = result[name]
        print(f"{name:<26}{r['samples']:>8}  {r['worst']:.3e}")
    r = result["rclf"]
    print(f"{'rclf (max inf-sup)':<26}{r['samples']:>8}  {r.get('max_inf_sup', float('nan')):.6g}")
    r = result["open_loop_decrease"]
    print(f"{'open loop (max dV/dt)':<26}{r['samples']:>8}  {r['max_dVdt']:.6g}")
    print(f"violations: {result['violation_count']}")
    return EXIT_OK if result["passed"] else EXIT_FAIL


def cmd_simulate(cfg: Config, out: Path, args, factory) -> int:
    sim = _sim_config(cfg, args)
    system = factory(cfg.spec)
    code = EXIT_OK
    error = None
    try:
        rec = integrate(system, sim)
    except IntegrationError as err:
        rec, error, code = err.record, str(err), EXIT_FAIL
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        rec.write_csv(fh)
    x_end = rec.x[-1]
    summary = {
        "terminal_time": float(rec.t[-1]),
        "terminal_state": x_end.tolist(),
        "terminal_norm": float(np.linalg.norm(x_end)),
        "terminal_V": float(rec.V[-1]),
        "total_J": float(rec.J[-1]),
        "x_exit_times": list(rec.exit_times),
        "records": len(rec),
        "simulation": dict(sim.__dict__),
    }
    if error:
        summary["error"] = error
    write_json(out / "summary.json", summary)
    print(f"t = {summary['terminal_time']:g}  |x| = {summary['terminal_norm']:.6g}  "
          f"V = {summary['terminal_V']:.6g}  J = {summary['total_J']:.6g}")
    return code


def cmd_cost_check(cfg: Config, out: Path, args, factory) -> int:
    s = cfg.simulation
    if s is None:
        raise ConfigError("config has no 'simulation' section")
    if s.control_mode != "optimal":
        raise ConfigError("cost-check requires simulation.control_mode = 'optimal'")
    system = factory(cfg.spec)
    try:
        res = cost_identity_check(system, s.x0, s.T, s.dt)
    except IntegrationError as err:
        write_json(out / "cost_check.json", {"error": str(err)})
        return EXIT_FAIL
    payload = {
        "lhs": res.lhs, "rhs": res.rhs, "deviation": res.deviation,
        "max_deviation": res.max_deviation, "V0": res.V0,
        "tolerance": COST_IDENTITY_RTOL * res.V0,
        "applicable": res.applicable, "exit_time": res.exit_time,
    }
    write_json(out / "cost_check.json", payload)
    print(f"lhs = {res.lhs:.12g}\nrhs = {res.rhs:.12g}\ndeviation = {res.deviation:.3e}")
    if not res.applicable:
        print(f"identity not applicable: trajectory left X at t = {res.exit_time:g}")
        return EXIT_NOT_APPLICABLE
    return EXIT_OK if res.holds else EXIT_FAIL


COMMANDS = {
    "synthesize": (cmd_synthesize, "system.json"),
    "verify": (cmd_verify, "verify.json"),
    "simulate": (cmd_simulate, "summary.json"),
    "cost-check": (cmd_cost_check, "cost_check.json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="converse_hji", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON problem config")
        p.add_argument("--out", default="./out", help="output directory (default ./out)")
        p.add_argument("--seed", type=int, default=None, help="override config seeds")
        p.add_argument("--samples", type=int, default=None, help="override verify sample count")
    return parser


def main(
    argv: list[str] | None = None,
    *,
    system_factory: Callable[[ProblemSpec], SystemDefinition] = synthesize,
) -> int:
    """Entry point. ``system_factory`` lets tests inject a modified system."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler, report_name = COMMANDS[args.command]
    out = Path(args.out)
    try:
        if args.samples is not None and args.samples < 1:
            raise ConfigError("--samples must be >= 1")
        cfg = load_config(args.config)
        return handler(cfg, out, args, system_factory)
    except (ConfigError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        try:
            write_json(out / report_name, {"error": str(err)})
        except OSError:
            pass
        return EXIT_CONFIG
    except SynthesisError as err:
        print(f"error: {err}", file=sys.stderr)
        write_json(out / report_name, {"error": str(err)})
        return EXIT_FAIL
