"""Verification quantities for synthesized systems.

Closed forms (HJI residual, inf-sup Lie derivative, parabola bound) are
paired with independent checks: a brute-force min-max over sampled inputs
and the directly evaluated Hamiltonian.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .model import (
    CASE_STUDY_STATES,
    DEFAULT_BOX,
    DEFAULT_SEED,
    ProblemSpec,
    SystemDefinition,
    sample_states,
)
from .policy import in_domain_x, saturated_policies

logger = logging.getLogger(__name__)

TOL = 1e-9
C_INFLATION = 0.10
ANALYTIC = "analytic-quadratic"
SAMPLED = "sampled"


class ConsistencyError(RuntimeError):
    """Two closed forms of the same quantity disagree."""


class CertificationError(RuntimeError):
    def __init__(self, report: "AnalysisReport"):
        v = report.violations[0]
        super().__init__(f"{len(report.violations)} violations; first: {v['check']} at x={v['x']}")
        self.report = report


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _pieces(system: SystemDefinition, x):
    num = system.num
    x = _vec(x)
    vx = num.Vx(x)
    return x, vx, num.g1T_Vx(x), num.g2T_Vx(x)


def hji_residual(system: SystemDefinition, x) -> float:
    """Vx'f + 1/4 Vx'(g1 g1' - g2 g2')Vx + q."""
    x, vx, a, c = _pieces(system, x)
    num = system.num
    return float(vx @ num.f(x) + 0.25 * (a @ a - c @ c) + num.q(x))


def hamiltonian(system: SystemDefinition, x, u, w) -> float:
    """Vx'(f + g1 w + g2 u) + q + u'u - w'w, evaluated directly."""
    num = system.num
    x, u, w = _vec(x), _vec(u), _vec(w)
    vx = num.Vx(x)
    xdot = num.f(x) + num.g1(x) @ w + num.g2(x) @ u
    return float(vx @ xdot + num.q(x) + u @ u - w @ w)


def saturated_hamiltonian_residual(system: SystemDefinition, x) -> float:
    """Completed-square Hamiltonian at the saturated optimizers.

    |u* + g2'Vx/2|^2 - |w* - g1'Vx/2|^2 + Vx'f + 1/4 Vx'(g1g1' - g2g2')Vx + q.
    The two squares vanish inside X, so there it equals ``hji_residual``.
    """
    pol = saturated_policies(system)
    x, vx, a, c = _pieces(system, x)
    u, w = pol.u_star(x), pol.w_star(x)
    du = u + 0.5 * c
    dw = w - 0.5 * a
    return float(du @ du - dw @ dw) + hji_residual(system, x)


def _inf_sup_forms(system: SystemDefinition, x):
    spec, num = system.spec, system.num
    x, vx, a, c = _pieces(system, x)
    na, nc = float(np.linalg.norm(a)), float(np.linalg.norm(c))
    vh = float(vx @ num.h(x))
    vpv = float(vx @ num.P(x) @ vx)
    generic = 0.25 * nc ** 2 - spec.alpha2 * nc - 0.25 * na ** 2 + spec.alpha1 * na - vh
    specific = -0.75 * na ** 2 + spec.alpha1 * na - spec.alpha2 * nc - vpv
    magnitude = 0.25 * nc ** 2 + spec.alpha2 * nc + 0.25 * na ** 2 + spec.alpha1 * na + abs(vh) + abs(vpv)
    return generic, specific, magnitude


def inf_sup_lie_derivative(system: SystemDefinition, x) -> float:
    """inf over |u| < alpha2 of sup over |w| < alpha1 of Vx'(f + g1 w + g2 u).

    Evaluated through the generic-h form and through the form specific to
    the constructed h; the two must agree.
    """
    generic, specific, magnitude = _inf_sup_forms(system, x)
    if abs(generic - specific) > TOL * (1.0 + magnitude):
        raise ConsistencyError(
            f"inf-sup forms disagree at x={_vec(x).tolist()}: {generic!r} vs {specific!r}"
        )
    return specific


def parabola_bound(system: SystemDefinition, x) -> float:
    """Maximum over Y of -3/4 Y^2 + alpha1 Y - alpha2|g2'Vx| - Vx'P Vx."""
    spec, num = system.spec, system.num
    x, vx, _, c = _pieces(system, x)
    return spec.alpha1 ** 2 / 3.0 - spec.alpha2 * float(np.linalg.norm(c)) - float(vx @ num.P(x) @ vx)


def parabola(system: SystemDefinition, x, Y: float) -> float:
    spec, num = system.spec, system.num
    x, vx, _, c = _pieces(system, x)
    return (
        -0.75 * Y ** 2 + spec.alpha1 * Y - spec.alpha2 * float(np.linalg.norm(c))
        - float(vx @ num.P(x) @ vx)
    )


def ball_points(
    dim: int, radius: float, density: int, rng: np.random.Generator, directions=()
) -> np.ndarray:
    """Points of the closed ball: boundary directions, sphere and interior samples."""
    pts = [np.zeros(dim)]
    for d in directions:
        d = _vec(d)
        nd = np.linalg.norm(d)
        if nd > 0:
            pts.append(radius * d / nd)
            pts.append(-radius * d / nd)
    if dim == 1:
        pts.extend(np.linspace(-radius, radius, density).reshape(-1, 1))
    else:
        g = rng.standard_normal((density, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        pts.extend(radius * g)
        h = rng.standard_normal((density, dim))
        h /= np.linalg.norm(h, axis=1, keepdims=True)
        r = radius * rng.uniform(0.0, 1.0, size=(density, 1)) ** (1.0 / dim)
        pts.extend(r * h)
    return np.array(pts, dtype=float).reshape(-1, dim)


def brute_force_inf_sup(
    system: SystemDefinition, x, grid_density: int = 64, seed: int = 0
) -> float:
    """Grid min over u of max over w of Vx'(f + g1 w + g2 u).

    Independent of h and P: only f, g1, g2 and Vx enter. The analytic optimizer
    directions are always in the grid so the optimum is hit exactly.
    """
    if grid_density < 8:
        raise ValueError("grid_density must be >= 8")
    spec, num = system.spec, system.num
    x = _vec(x)
    vx = num.Vx(x)
    G1, G2 = num.g1(x), num.g2(x)
    rng = np.random.default_rng(seed)
    W = ball_points(spec.m, spec.alpha1, grid_density, rng, [G1.T @ vx])
    U = ball_points(spec.p, spec.alpha2, grid_density, rng, [G2.T @ vx])
    drift = float(vx @ num.f(x))
    lie = drift + (U @ (G2.T @ vx))[:, None] + (W @ (G1.T @ vx))[None, :]
    return float(np.min(np.max(lie, axis=1)))


def open_loop_derivative(system: SystemDefinition, x) -> float:
    """dV/dt = Vx'f with u = 0, w = 0."""
    num = system.num
    x = _vec(x)
    return float(num.Vx(x) @ num.f(x))


# ----------------------------------------------------------------------------
# c(b)


@dataclass(frozen=True)
class RclfRegion:
    b: float
    c: float
    method: str
    inflation: float = 0.0


def quadratic_form(V: ex.Expr, n: int) -> np.ndarray | None:
    """Return Q if V is exactly 1/2 x'Qx (homogeneous degree 2), else None."""
    poly = ex.to_polynomial(V, n)
    if poly is None or not poly or any(sum(k) != 2 for k in poly):
        return None
    Q = np.zeros((n, n))
    for k, coef in poly.items():
        idx = [i for i, e in enumerate(k) for _ in range(e)]
        i, j = idx
        if i == j:
            Q[i, i] = 2.0 * coef
        else:
            Q[i, j] = Q[j, i] = coef
    return Q


def multiscale_states(n: int, count: int, *, box: float, seed: int) -> np.ndarray:
    """Uniform box samples plus log-radially spread samples down to 1e-3*box."""
    rng = np.random.default_rng(seed)
    uniform = rng.uniform(-box, box, size=(count, n))
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = box * 10.0 ** rng.uniform(-3.0, 0.0, size=(count, 1))
    return np.vstack([uniform, r * d])


def estimate_c(
    spec: ProblemSpec,
    b: float | None = None,
    *,
    states: np.ndarray | None = None,
    count: int = 20000,
    seed: int = DEFAULT_SEED,
    box: float = DEFAULT_BOX,
) -> RclfRegion:
    """Level c with {V > c} contained in {|Vx| > b}.

    For V = 1/2 x'Qx with Q positive definite, |Vx|^2 = x'Q^2 x >= 2 lmin(Q) V,
    so c = b^2 / (2 lmin(Q)). Otherwise c is the largest sampled V with
    |Vx| <= b, inflated by 10%.
    """
    b = spec.b if b is None else float(b)
    if not b > 0:
        raise ValueError("b must be positive")
    Q = quadratic_form(spec.V, spec.n)
    if Q is not None:
        lam = np.linalg.eigvalsh(Q)
        if lam[0] > 0:
            return RclfRegion(b=b, c=b ** 2 / (2.0 * float(lam[0])), method=ANALYTIC)
    if states is None:
        states = multiscale_states(spec.n, count, box=box, seed=seed)
    num = spec.num
    worst = 0.0
    for x in states:
        if np.linalg.norm(num.Vx(x)) <= b:
            worst = max(worst, float(num.V(x)))
    return RclfRegion(b=b, c=(1.0 + C_INFLATION) * worst, method=SAMPLED, inflation=C_INFLATION)


# ----------------------------------------------------------------------------
# certification


@dataclass
class SampleRecord:
    x: list
    hji_residual: float
    inf_sup: float
    in_x: bool
    V: float
    grad_norm: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AnalysisReport:
    records: list[SampleRecord] = field(default_factory=list)
    violations: list[dict] = field(default_factory=list)
    region: RclfRegion | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self) -> dict:
        if not self.records:
            return {"samples": 0, "violations": len(self.violations)}
        return {
            "samples": len(self.records),
            "worst_hji_residual": max(abs(r.hji_residual) for r in self.records),
            "max_inf_sup": max(r.inf_sup for r in self.records),
            "violations": len(self.violations),
        }

    def to_dict(self) -> dict:
        out = {"summary": self.summary(), "violations": self.violations}
        if self.region is not None:
            out["region"] = dict(self.region.__dict__)
        out["records"] = [r.to_dict() for r in self.records]
        return out


def states_above_level(
    spec: ProblemSpec, c: float, count: int, *, box: float, seed: int, max_draws: int = 100
) -> np.ndarray:
    """``count`` seeded box samples with V(x) > c (drawn in batches)."""
    rng = np.random.default_rng(seed)
    num = spec.num
    kept: list = []
    for _ in range(max_draws):
        batch = rng.uniform(-box, box, size=(count, spec.n))
        kept.extend(x for x in batch if num.V(x) > c)
        if len(kept) >= count:
            return np.array(kept[:count])
    raise RuntimeError(f"could not draw {count} states with V > {c} in the box")


def rclf_certify(
    system: SystemDefinition,
    region: RclfRegion,
    states: np.ndarray | None = None,
    count: int = 1000,
    *,
    seed: int = DEFAULT_SEED,
    box: float = DEFAULT_BOX,
    strict: bool = True,
) -> AnalysisReport:
    """Check the robust CLF conditions on samples with V(x) > c.

    Per sample: inf-sup Lie derivative < 0, the sufficient condition
    alpha1^2/3 - alpha2|g2'Vx| < Vx'P Vx, and inf-sup <= parabola maximum.
    Samples with V > c but |Vx| <= b count as c-estimation failures.
    """
    spec, num = system.spec, system.num
    if states is None:
        states = states_above_level(spec, region.c, count, box=box, seed=seed)
    report = AnalysisReport(region=region)
    for x in states:
        x = _vec(x)
        v = float(num.V(x))
        if not v > region.c:
            continue
        vx = num.Vx(x)
        gnorm = float(np.linalg.norm(vx))
        val = inf_sup_lie_derivative(system, x)
        rec = SampleRecord(
            x=x.tolist(), hji_residual=hji_residual(system, x), inf_sup=val,
            in_x=in_domain_x(spec, x), V=v, grad_norm=gnorm,
        )
        report.records.append(rec)
        bound = parabola_bound(system, x)
        if not val < 0.0:
            report.violations.append({"check": "inf_sup_negative", "x": rec.x, "value": val})
        if not bound < 0.0:
            report.violations.append({"check": "condition_p", "x": rec.x, "value": bound})
        if val > bound + TOL * (1.0 + abs(bound)):
            report.violations.append({"check": "parabola_bound", "x": rec.x, "value": val - bound})
        if not gnorm > region.b:
            report.violations.append({"check": "c_estimate", "x": rec.x, "value": gnorm})
    if strict and report.violations:
        raise CertificationError(report)
    return report


# ----------------------------------------------------------------------------
# full verification pass


def _worst(items):
    return max(items, key=lambda t: t[0]) if items else (0.0, None)


def verify_system(
    system: SystemDefinition,
    *,
    samples: int = 1000,
    seed: int = DEFAULT_SEED,
    box: float = DEFAULT_BOX,
    oracle_samples: int = 200,
    grid_density: int = 64,
) -> dict:
    """Run every sampled check; returns a JSON-ready report with witnesses."""
    spec, num = system.spec, system.num
    states = sample_states(spec.n, samples, box=box, seed=seed, extra=CASE_STUDY_STATES)
    violations: list[dict] = []
    out: dict = {}

    # HJI identity
    errs = []
    for x in states:
        r = hji_residual(system, x)
        tol = TOL * (1.0 + abs(num.q(x)))
        errs.append((abs(r), x.tolist()))
        if abs(r) > tol:
            violations.append({"check": "hji_residual", "x": x.tolist(), "value": r})
    worst, wx = _worst(errs)
    out["hji_residual"] = {"samples": len(states), "worst": worst, "worst_at": wx}

    # closed form vs brute force
    errs = []
    for x in states[:oracle_samples]:
        try:
            a = inf_sup_lie_derivative(system, x)
        except ConsistencyError as err:
            violations.append({"check": "inf_sup_forms", "x": x.tolist(), "value": str(err)})
            continue
        bf = brute_force_inf_sup(system, x, grid_density)
        errs.append((abs(a - bf), x.tolist()))
        if abs(a - bf) > TOL * (1.0 + abs(a)):
            violations.append({"check": "inf_sup_oracle", "x": x.tolist(), "value": a - bf})
    worst, wx = _worst(errs)
    out["inf_sup_oracle"] = {"samples": min(len(states), oracle_samples), "grid_density": grid_density,
                             "worst": worst, "worst_at": wx}

    # saturated residual agrees with the plain one inside X
    errs = []
    for x in states:
        if in_domain_x(spec, x):
            d = abs(saturated_hamiltonian_residual(system, x) - hji_residual(system, x))
            errs.append((d, x.tolist()))
            if d > TOL * (1.0 + abs(num.q(x))):
                violations.append({"check": "saturated_residual_on_X", "x": x.tolist(), "value": d})
    worst, wx = _worst(errs)
    out["saturated_residual_on_X"] = {"samples": len(errs), "worst": worst, "worst_at": wx}

    # robust CLF
    region = estimate_c(spec)
    try:
        rep = rclf_certify(system, region, count=samples, seed=seed, box=box, strict=False)
    except ConsistencyError as err:
        rep = AnalysisReport(region=region, violations=[{"check": "inf_sup_forms", "x": None, "value": str(err)}])
    violations.extend(rep.violations)
    out["rclf"] = {"region": dict(region.__dict__), **rep.summary()}

    # open-loop Lyapunov decrease
    worst_val, wx, count = -np.inf, None, 0
    for x in states:
        if not np.any(x):
            continue
        d = open_loop_derivative(system, x)
        count += 1
        if d > worst_val:
            worst_val, wx = d, x.tolist()
        if not d < 0.0:
            violations.append({"check": "open_loop_decrease", "x": x.tolist(), "value": d})
    out["open_loop_decrease"] = {"samples": count, "max_dVdt": float(worst_val), "max_at": wx}

    out["violations"] = violations
    out["violation_count"] = len(violations)
    out["passed"] = not violations
    logger.info("verification finished with %d violations", len(violations))
    return out
