"""Converse construction of the internal dynamics f from a chosen V.

Given V, the couplings g1, g2, norm bounds alpha1, alpha2 and the free design
data (E, gamma, b), the drift

    f = -3/4 g1 g1' Vx - alpha2 g2 g2' Vx - k/(1 + Vx'Vx) Vx - E Vx + gamma,
    k = alpha1^2/3 (1 + 1/b^2),

makes V solve the HJI equation of the min-max game with utility q = Vx' h,
and makes V a robust control Lyapunov function.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .expr import Const, Expr
from .model import (
    CASE_STUDY_STATES,
    DEFAULT_BOX,
    DEFAULT_SEED,
    ProblemSpec,
    SystemDefinition,
    sample_states,
)

CROSS_CHECK_TOL = 1e-12

NOTES = (
    "k/(1+Vx'Vx) coefficient applied uniformly to every state component",
    "compositional drift built with the gamma term mirrored (Vx'gamma = 0 makes "
    "q and the HJI residual independent of its sign)",
)


class SynthesisError(RuntimeError):
    """Internal consistency failure of the expression algebra."""


def disturbance_gain(spec: ProblemSpec) -> float:
    """k = alpha1^2/3 * (1 + 1/b^2)."""
    return spec.alpha1 ** 2 / 3.0 * (1.0 + 1.0 / spec.b ** 2)


def _gg_vx(g, gT_vx):
    # g g' Vx computed as g (g' Vx) to keep the trees small
    return ex.matvec(g, gT_vx)


def _saturation_weight(spec: ProblemSpec, k: float) -> Expr:
    """k / (1 + Vx'Vx)."""
    return ex.simplify(Const(k) / (Const(1.0) + ex.dot(spec.Vx, spec.Vx)))


def build_p(spec: ProblemSpec) -> tuple:
    k = disturbance_gain(spec)
    n = spec.n
    g2g2T = ex.matmul(spec.g2, ex.transpose(spec.g2))
    parts = [ex.mscale(spec.alpha2, g2g2T)]
    if k != 0.0:
        parts.append(ex.identity(n, _saturation_weight(spec, k)))
    parts.append(spec.E)
    return ex.madd(*parts)


def build_h(spec: ProblemSpec, P: tuple | None = None, *, gamma_sign: float = 1.0) -> tuple:
    """h = 1/4 g2 g2' Vx + 1/2 g1 g1' Vx + P Vx + gamma."""
    if P is None:
        P = build_p(spec)
    gamma = spec.gamma if gamma_sign == 1.0 else ex.scale(gamma_sign, spec.gamma)
    return ex.vadd(
        ex.scale(0.25, _gg_vx(spec.g2, spec.g2T_Vx)),
        ex.scale(0.5, _gg_vx(spec.g1, spec.g1T_Vx)),
        ex.matvec(P, spec.Vx),
        gamma,
    )


def expanded_drift(spec: ProblemSpec) -> tuple:
    k = disturbance_gain(spec)
    terms = [
        ex.scale(-0.75, _gg_vx(spec.g1, spec.g1T_Vx)),
        ex.scale(-spec.alpha2, _gg_vx(spec.g2, spec.g2T_Vx)),
    ]
    if k != 0.0:
        terms.append(ex.scale(ex.simplify(ex.Neg(_saturation_weight(spec, k))), spec.Vx))
    terms.append(ex.vneg(ex.matvec(spec.E, spec.Vx)))
    terms.append(spec.gamma)
    return ex.vadd(*terms)


def composed_drift(spec: ProblemSpec, h: tuple) -> tuple:
    """f = 1/4 (g2 g2' - g1 g1') Vx - h for an arbitrary admissible h."""
    return ex.vadd(
        ex.scale(0.25, _gg_vx(spec.g2, spec.g2T_Vx)),
        ex.scale(-0.25, _gg_vx(spec.g1, spec.g1T_Vx)),
        ex.vneg(h),
    )


def _cross_check(spec, f_expanded, f_composed, states) -> None:
    fa = ex.lambdify(f_expanded, spec.n)
    fb = ex.lambdify(f_composed, spec.n)
    num = spec.num
    for x in states:
        a, b = np.asarray(fa(x)), np.asarray(fb(x))
        vx = num.Vx(x)
        # float error is proportional to the magnitude of the summands
        scale = 1.0 + np.abs(num.g1(x) @ num.g1T_Vx(x)) + np.abs(num.g2(x) @ num.g2T_Vx(x)) * (
            1.0 + spec.alpha2
        ) + np.abs(num.E(x) @ vx) + np.abs(num.gamma(x)) + disturbance_gain(spec) * np.abs(vx)
        err = np.abs(a - b)
        if np.any(err > CROSS_CHECK_TOL * scale):
            i = int(np.argmax(err / scale))
            raise SynthesisError(
                f"drift forms disagree at x={list(map(float, x))}, component {i + 1}: "
                f"{a[i]!r} vs {b[i]!r}"
            )


def synthesize(
    spec: ProblemSpec,
    *,
    check_states: np.ndarray | None = None,
    check_count: int = 100,
) -> SystemDefinition:
    """Build f, h, P and q for a (validated) ProblemSpec.

    The expanded drift is cross-checked against the compositional form
    ``1/4 (g2 g2' - g1 g1') Vx - h`` on seeded sample states.
    """
    P = build_p(spec)
    h = build_h(spec, P)
    f = expanded_drift(spec)
    f_alt = composed_drift(spec, build_h(spec, P, gamma_sign=-1.0))
    if check_states is None:
        check_states = sample_states(
            spec.n, check_count, box=DEFAULT_BOX, seed=DEFAULT_SEED, extra=CASE_STUDY_STATES
        )
    _cross_check(spec, f, f_alt, check_states)

    q = ex.dot(spec.Vx, h)
    origin = [0.0] * spec.n
    f0 = [ex.evaluate(e, origin) for e in f]
    if any(v != 0.0 for v in f0):
        raise SynthesisError(f"f(0) = {f0} is not zero")
    return SystemDefinition(
        spec=spec, f=f, h=h, P=P, q=q, Vx=spec.Vx, k=disturbance_gain(spec), notes=NOTES
    )


def admissible_utility(
    system: SystemDefinition, states: np.ndarray | None = None
) -> Expr:
    """Return q = Vx' h, checking q(0) = 0 and q > 0 on sampled x != 0."""
    spec = system.spec
    q = ex.dot(system.Vx, system.h)
    fn = ex.lambdify([q], spec.n)
    if fn([0.0] * spec.n)[0] != 0.0:
        raise SynthesisError("q(0) != 0")
    if states is None:
        states = sample_states(spec.n, 100, seed=DEFAULT_SEED)
    for x in states:
        if np.any(x) and not fn(x)[0] > 0.0:
            raise SynthesisError(f"q is not positive at x={list(map(float, x))}")
    return q
