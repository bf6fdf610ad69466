"""Fixed-step RK4 simulation of xdot = f(x) + g1(x) w + g2(x) u."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .model import SystemDefinition
from .policy import in_domain_x, sat, saturated_policies, unsaturated_policies

OPEN_LOOP = "open_loop"
OPTIMAL = "optimal"
ZERO = "zero"
WORST_CASE = "worst_case"
UNIFORM = "uniform"

COST_IDENTITY_RTOL = 1e-3


class IntegrationError(RuntimeError):
    def __init__(self, message: str, record: "TrajectoryRecord"):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class SimConfig:
    x0: tuple
    T: float
    dt: float = 1e-3
    control_mode: str = OPEN_LOOP
    disturbance_mode: str = ZERO
    lo: float = 0.0
    hi: float = 0.0
    seed: int = 0
    record_every: int = 10

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 0 < self.dt <= self.T:
            raise ValueError(f"dt must satisfy 0 < dt <= T, got {self.dt}")
        if self.control_mode not in (OPEN_LOOP, OPTIMAL):
            raise ValueError(f"unknown control mode {self.control_mode!r}")
        if self.disturbance_mode not in (ZERO, WORST_CASE, UNIFORM):
            raise ValueError(f"unknown disturbance mode {self.disturbance_mode!r}")
        if self.disturbance_mode == UNIFORM and not self.lo <= self.hi:
            raise ValueError("uniform disturbance requires lo <= hi")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    V: np.ndarray
    q: np.ndarray
    stage_cost: np.ndarray
    J: np.ndarray
    in_x: np.ndarray
    exit_times: list = field(default_factory=list)
    all_steps_in_x: bool = True

    def __len__(self):
        return len(self.t)

    def header(self) -> list[str]:
        n, p, m = self.x.shape[1], self.u.shape[1], self.w.shape[1]
        return (
            ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"u{i}" for i in range(1, p + 1)]
            + [f"w{i}" for i in range(1, m + 1)] + ["V", "q", "stage_cost", "J", "in_X"]
        )

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(self.header())
        g = "{:.17g}".format
        for k in range(len(self.t)):
            row = [g(self.t[k])]
            row += [g(v) for v in self.x[k]] + [g(v) for v in self.u[k]] + [g(v) for v in self.w[k]]
            row += [g(self.V[k]), g(self.q[k]), g(self.stage_cost[k]), g(self.J[k])]
            row.append("1" if self.in_x[k] else "0")
            writer.writerow(row)


def _rk4_step(rhs: Callable, x: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * h * k1)
    k3 = rhs(x + 0.5 * h * k2)
    k4 = rhs(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _policies(system: SystemDefinition, config: SimConfig):
    spec = system.spec
    sat_pol = saturated_policies(system)
    if config.control_mode == OPTIMAL:
        control = lambda x, k: sat_pol.u_star(x)  # noqa: E731
    else:
        zero_u = np.zeros(spec.p)
        control = lambda x, k: zero_u  # noqa: E731
    if config.disturbance_mode == WORST_CASE:
        disturbance = lambda x, k: sat_pol.w_star(x)  # noqa: E731
    elif config.disturbance_mode == UNIFORM:
        rng = np.random.default_rng(config.seed)

        def disturbance(x, k):
            return sat(rng.uniform(config.lo, config.hi, size=spec.m), spec.alpha1)
    else:
        zero_w = np.zeros(spec.m)
        disturbance = lambda x, k: zero_w  # noqa: E731
    return control, disturbance


def simulate(
    system: SystemDefinition,
    x0,
    T: float,
    dt: float,
    control: Callable,
    disturbance: Callable,
    record_every: int = 1,
) -> TrajectoryRecord:
    """Integrate with caller-supplied feedback ``control(x, k)`` and ``disturbance(x, k)``.

    u and w are held at their step-start values for the whole RK4 step. The
    running cost J is integrated alongside the state by the same RK4 step.
    """
    spec, num = system.spec, system.num
    x = np.asarray(x0, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError(f"x0 must have length {spec.n}, got shape {x.shape}")
    n_steps = max(1, math.ceil(T / dt - 1e-9))

    rows: dict[str, list] = {k: [] for k in ("t", "x", "u", "w", "V", "q", "s", "J", "in_x")}
    exit_times: list[float] = []
    all_in = True

    def stage(x, k):
        u = np.asarray(control(x, k), dtype=float)
        w = np.asarray(disturbance(x, k), dtype=float)
        q = float(num.q(x))
        return u, w, q, q + float(u @ u) - float(w @ w)

    def push(t, x, u, w, q, s, J, inside):
        rows["t"].append(t)
        rows["x"].append(x.copy())
        rows["u"].append(u)
        rows["w"].append(w)
        rows["V"].append(float(num.V(x)))
        rows["q"].append(q)
        rows["s"].append(s)
        rows["J"].append(J)
        rows["in_x"].append(inside)

    def record() -> TrajectoryRecord:
        return TrajectoryRecord(
            t=np.array(rows["t"]),
            x=np.array(rows["x"]).reshape(-1, spec.n),
            u=np.array(rows["u"]).reshape(-1, spec.p),
            w=np.array(rows["w"]).reshape(-1, spec.m),
            V=np.array(rows["V"]),
            q=np.array(rows["q"]),
            stage_cost=np.array(rows["s"]),
            J=np.array(rows["J"]),
            in_x=np.array(rows["in_x"], dtype=bool),
            exit_times=exit_times,
            all_steps_in_x=all_in,
        )

    t, J = 0.0, 0.0
    u, w, q, s = stage(x, 0)
    inside = in_domain_x(spec, x)
    if not inside:
        all_in = False
        exit_times.append(0.0)
    push(t, x, u, w, q, s, J, inside)

    for k in range(n_steps):
        h = dt if k < n_steps - 1 else T - dt * (n_steps - 1)

        ww, uu = float(w @ w), float(u @ u)

        # state augmented with the running cost so J gets RK4 accuracy
        def rhs(z, u=u, w=w):
            xs = z[:-1]
            dx = num.f(xs) + num.g1(xs) @ w + num.g2(xs) @ u
            return np.append(dx, num.q(xs) + uu - ww)

        try:
            z_new = _rk4_step(rhs, np.append(x, J), h)
            x_new, J_new = z_new[:-1], float(z_new[-1])
        except (OverflowError, ZeroDivisionError, FloatingPointError) as err:
            raise IntegrationError(f"integration failed at t={t:.6g}: {err}", record()) from err
        if not np.all(np.isfinite(x_new)):
            raise IntegrationError(f"non-finite state at t={t + h:.6g}", record())
        x = x_new
        t = (k + 1) * dt if k < n_steps - 1 else T
        J = J_new
        u, w, q, s = stage(x, k + 1)
        now_inside = in_domain_x(spec, x)
        if inside and not now_inside:
            exit_times.append(t)
        inside = now_inside
        all_in = all_in and inside
        if (k + 1) % record_every == 0 or k == n_steps - 1:
            push(t, x, u, w, q, s, J, inside)
    return record()


def integrate(system: SystemDefinition, config: SimConfig) -> TrajectoryRecord:
    control, disturbance = _policies(system, config)
    return simulate(
        system, config.x0, config.T, config.dt, control, disturbance, config.record_every
    )


@dataclass(frozen=True)
class CostIdentity:
    lhs: float
    rhs: float
    deviation: float
    max_deviation: float
    applicable: bool
    exit_time: float | None
    V0: float

    @property
    def holds(self) -> bool:
        return self.applicable and self.deviation <= COST_IDENTITY_RTOL * self.V0


def cost_identity_check(
    system: SystemDefinition, x0, T: float, dt: float = 1e-3
) -> CostIdentity:
    """Compare V(x0) - V(x(T)) with the accumulated stage cost under optimal play.

    Uses the unsaturated optima; the comparison is only meaningful while the
    trajectory stays in X, so an exit is reported instead of a deviation.
    """
    pol = unsaturated_policies(system)
    rec = simulate(
        system, x0, T, dt,
        control=lambda x, k: pol.u_star(x),
        disturbance=lambda x, k: pol.w_star(x),
        record_every=1,
    )
    V0 = float(rec.V[0])
    lhs = V0 - float(rec.V[-1])
    rhs = float(rec.J[-1])
    max_dev = float(np.max(np.abs(V0 - rec.V - rec.J)))
    if not rec.all_steps_in_x:
        return CostIdentity(lhs, rhs, abs(lhs - rhs), max_dev, False, rec.exit_times[0], V0)
    return CostIdentity(lhs, rhs, abs(lhs - rhs), max_dev, True, None, V0)
