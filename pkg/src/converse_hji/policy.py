"""Saturation, optimal control / worst-case disturbance, and the region X."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ProblemSpec, SystemDefinition

SATURATED = "saturated"
UNSATURATED = "unsaturated"


def sat(y, alpha: float) -> np.ndarray:
    """Radial projection of ``y`` onto the closed ball of radius ``alpha``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    y = np.asarray(y, dtype=float)
    r = float(np.linalg.norm(y))
    if r < alpha:
        return y.copy()
    return alpha * (y / r)


@dataclass(frozen=True)
class PolicyPair:
    u_star: Callable[[np.ndarray], np.ndarray]
    w_star: Callable[[np.ndarray], np.ndarray]
    mode: str


def saturated_policies(system: SystemDefinition) -> PolicyPair:
    """w* = sat_a1(g1'Vx / 2),  u* = -sat_a2(g2'Vx / 2)."""
    spec, num = system.spec, system.num
    a1, a2 = spec.alpha1, spec.alpha2
    return PolicyPair(
        u_star=lambda x: -sat(0.5 * num.g2T_Vx(x), a2),
        w_star=lambda x: sat(0.5 * num.g1T_Vx(x), a1),
        mode=SATURATED,
    )


def unsaturated_policies(system: SystemDefinition) -> PolicyPair:
    """u* = -g2'Vx / 2,  w* = g1'Vx / 2; only optimal inside X."""
    num = system.num
    return PolicyPair(
        u_star=lambda x: -0.5 * num.g2T_Vx(x),
        w_star=lambda x: 0.5 * num.g1T_Vx(x),
        mode=UNSATURATED,
    )


def in_domain_x(spec: ProblemSpec, x) -> bool:
    """True iff both norm constraints are strictly inactive at ``x``."""
    num = spec.num
    x = np.asarray(x, dtype=float)
    return bool(
        np.linalg.norm(0.5 * num.g2T_Vx(x)) < spec.alpha2
        and np.linalg.norm(0.5 * num.g1T_Vx(x)) < spec.alpha1
    )


class DomainX:
    """Membership predicate for X; supports ``x in DomainX(spec)``."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec

    def __contains__(self, x) -> bool:
        return in_domain_x(self.spec, x)

    def margins(self, x) -> tuple[float, float]:
        """(alpha2 - |g2'Vx/2|, alpha1 - |g1'Vx/2|); both positive inside X."""
        num = self.spec.num
        return (
            self.spec.alpha2 - float(np.linalg.norm(0.5 * num.g2T_Vx(x))),
            self.spec.alpha1 - float(np.linalg.norm(0.5 * num.g1T_Vx(x))),
        )
