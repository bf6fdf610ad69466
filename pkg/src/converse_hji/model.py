"""Problem inputs, synthesized systems and structural validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex
from .expr import Expr

DEFAULT_SEED = 42
DEFAULT_BOX = 10.0
DEFAULT_SAMPLES = 1000


class StructuralError(ValueError):
    """A ProblemSpec field has the wrong shape or refers to unknown variables."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _as_vector(values) -> tuple[Expr, ...]:
    return tuple(ex.as_expr(v) for v in values)


def _as_matrix(rows) -> tuple[tuple[Expr, ...], ...]:
    return tuple(_as_vector(r) for r in rows)


def _compile_matrix(M, n: int, shape: tuple[int, int]):
    fn = ex.lambdify([e for row in M for e in row], n)
    return lambda x: np.asarray(fn(x), dtype=float).reshape(shape)


def _compile_vector(v, n: int):
    fn = ex.lambdify(list(v), n)
    return lambda x: np.asarray(fn(x), dtype=float)


def _compile_scalar(e, n: int):
    fn = ex.lambdify([e], n)
    return lambda x: fn(x)[0]


@dataclass(frozen=True)
class ProblemSpec:
    """User inputs of the converse construction.

    ``g1`` is n x m, ``g2`` is n x p, ``E`` is n x n; all entries are
    expressions over ``x1..xn``. Shapes are checked eagerly, everything else
    (definiteness, orthogonality) by :func:`validate`.
    """

    n: int
    m: int
    p: int
    V: Expr
    g1: tuple
    g2: tuple
    alpha1: float
    alpha2: float
    E: tuple
    gamma: tuple
    b: float

    def __post_init__(self):
        object.__setattr__(self, "V", ex.as_expr(self.V))
        object.__setattr__(self, "g1", _as_matrix(self.g1))
        object.__setattr__(self, "g2", _as_matrix(self.g2))
        object.__setattr__(self, "E", _as_matrix(self.E))
        object.__setattr__(self, "gamma", _as_vector(self.gamma))
        for name in ("alpha1", "alpha2", "b"):
            object.__setattr__(self, name, float(getattr(self, name)))
        check_dimensions(self)

    # numeric views -----------------------------------------------------
    @cached_property
    def Vx(self) -> tuple[Expr, ...]:
        return ex.gradient(self.V, self.n)

    @cached_property
    def g1T_Vx(self) -> tuple[Expr, ...]:
        return ex.matvec(ex.transpose(self.g1), self.Vx)

    @cached_property
    def g2T_Vx(self) -> tuple[Expr, ...]:
        return ex.matvec(ex.transpose(self.g2), self.Vx)

    @cached_property
    def num(self) -> "SpecFunctions":
        return SpecFunctions(self)

    @property
    def E_is_constant(self) -> bool:
        return all(ex.is_constant(e) for row in self.E for e in row)


class SpecFunctions:
    """Compiled numeric evaluators for the pieces of a ProblemSpec."""

    def __init__(self, spec: ProblemSpec):
        n = spec.n
        self.V = _compile_scalar(spec.V, n)
        self.Vx = _compile_vector(spec.Vx, n)
        self.g1 = _compile_matrix(spec.g1, n, (n, spec.m))
        self.g2 = _compile_matrix(spec.g2, n, (n, spec.p))
        self.E = _compile_matrix(spec.E, n, (n, n))
        self.gamma = _compile_vector(spec.gamma, n)
        self.g1T_Vx = _compile_vector(spec.g1T_Vx, n)
        self.g2T_Vx = _compile_vector(spec.g2T_Vx, n)


def check_dimensions(spec: ProblemSpec) -> None:
    n, m, p = spec.n, spec.m, spec.p
    if not (isinstance(n, int) and n >= 1):
        raise StructuralError("n", f"state dimension must be a positive integer, got {n!r}")
    for name, d in (("m", m), ("p", p)):
        if not (isinstance(d, int) and d >= 1):
            raise StructuralError(name, f"dimension must be a positive integer, got {d!r}")

    def check_matrix(name, M, rows, cols):
        if len(M) != rows or any(len(r) != cols for r in M):
            shape = f"{len(M)}x{'/'.join(sorted({str(len(r)) for r in M})) or 0}"
            raise StructuralError(name, f"expected shape {rows}x{cols}, got {shape}")
        for r in M:
            for e in r:
                check_vars(name, e)

    def check_vars(name, e):
        if ex.max_index(e) > n:
            raise StructuralError(name, f"expression {e} uses variables beyond x{n}")

    check_vars("V", spec.V)
    check_matrix("g1", spec.g1, n, m)
    check_matrix("g2", spec.g2, n, p)
    check_matrix("E", spec.E, n, n)
    if len(spec.gamma) != n:
        raise StructuralError("gamma", f"expected length {n}, got {len(spec.gamma)}")
    for e in spec.gamma:
        check_vars("gamma", e)


@dataclass(frozen=True)
class SystemDefinition:
    """A synthesized converse system ``xdot = f + g1 w + g2 u``."""

    spec: ProblemSpec
    f: tuple
    h: tuple
    P: tuple
    q: Expr
    Vx: tuple
    k: float
    notes: tuple = ()

    @cached_property
    def num(self) -> "SystemFunctions":
        return SystemFunctions(self)


class SystemFunctions(SpecFunctions):
    def __init__(self, system: SystemDefinition):
        super().__init__(system.spec)
        n = system.spec.n
        self.f = _compile_vector(system.f, n)
        self.h = _compile_vector(system.h, n)
        self.P = _compile_matrix(system.P, n, (n, n))
        self.q = _compile_scalar(system.q, n)


# ----------------------------------------------------------------------------
# Validation


@dataclass
class Check:
    name: str
    passed: bool
    worst: float = 0.0
    witness: list | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "worst_violation": self.worst,
            "witness": self.witness,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def sample_states(
    n: int,
    count: int = DEFAULT_SAMPLES,
    *,
    box: float = DEFAULT_BOX,
    seed: int = DEFAULT_SEED,
    extra: Iterable[Sequence[float]] = (),
) -> np.ndarray:
    """Uniform states in ``[-box, box]^n`` followed by ``extra`` points."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box, box, size=(count, n))
    extra = [np.asarray(e, dtype=float) for e in extra]
    extra = [e for e in extra if e.shape == (n,)]
    if extra:
        pts = np.vstack([pts, np.array(extra)])
    return pts


# Initial conditions used in the committed case studies; always added to the
# validation sample set when they match the dimension.
CASE_STUDY_STATES = (
    (3.0, -2.0), (-5.0, 5.0), (1.0, 4.0), (1.0, 0.0), (0.0, 1.0), (4.0, 2.0),
    (5.0, 4.0, -1.0), (0.5, 0.4, -0.1), (1.0, 1.0, 1.0),
)


def leading_pivots(M: np.ndarray) -> np.ndarray:
    """Pivots of Gaussian elimination without row exchange.

    A symmetric matrix is positive definite iff every pivot is > 0 (the pivots
    are ratios of consecutive leading principal minors).
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    pivots = np.empty(n)
    for j in range(n):
        pivots[j] = A[j, j]
        if pivots[j] <= 0.0:
            pivots[j + 1:] = np.nan
            return pivots
        A[j + 1:, j:] -= np.outer(A[j + 1:, j] / A[j, j], A[j, j:])
    return pivots


def is_symmetric_positive_definite(M: np.ndarray, sym_tol: float = 0.0) -> bool:
    M = np.asarray(M, dtype=float)
    if M.shape[0] != M.shape[1]:
        return False
    if np.max(np.abs(M - M.T), initial=0.0) > sym_tol * (1.0 + np.max(np.abs(M), initial=0.0)):
        return False
    piv = leading_pivots(M)
    return bool(np.all(piv > 0.0))


def _norm(v) -> float:
    return float(np.linalg.norm(v))


def validate(
    spec: ProblemSpec,
    states: np.ndarray | None = None,
    count: int = DEFAULT_SAMPLES,
    *,
    seed: int = DEFAULT_SEED,
    box: float = DEFAULT_BOX,
    orth_tol: float = 1e-9,
) -> ValidationReport:
    """Check the ProblemSpec invariants on sampled states.

    ``states`` defaults to :func:`sample_states` with the case-study initial
    conditions appended. Shape problems raise :class:`StructuralError`.
    """
    check_dimensions(spec)
    if states is None:
        states = sample_states(spec.n, count, box=box, seed=seed, extra=CASE_STUDY_STATES)
    states = np.asarray(states, dtype=float)
    fn = spec.num
    report = ValidationReport()
    report.checks.append(Check("dimensions", True, detail=f"n={spec.n} m={spec.m} p={spec.p}"))

    bad = [k for k in ("alpha1", "alpha2", "b") if not getattr(spec, k) > 0]
    report.checks.append(
        Check("bounds_positive", not bad, detail=("non-positive: " + ", ".join(bad)) if bad else "")
    )

    # V(0) = 0 and V > 0 away from the origin
    origin = np.zeros(spec.n)
    v0 = fn.V(origin)
    worst, witness = abs(v0), (origin.tolist() if v0 != 0.0 else None)
    ok = bool(v0 == 0.0)
    for x in states:
        if not np.any(x):
            continue
        v = fn.V(x)
        if not v > 0.0 and (witness is None or -v > worst):
            ok, worst, witness = False, -v, x.tolist()
    report.checks.append(Check("value_function_positive_definite", ok, worst, witness))

    # gradient nonvanishing away from the origin
    ok, worst, witness = True, 0.0, None
    for x in states:
        if not np.any(x):
            continue
        g = _norm(fn.Vx(x))
        if not g > 0.0:
            ok, worst, witness = False, 0.0, x.tolist()
            break
    report.checks.append(Check("gradient_nonvanishing", ok, worst, witness))

    # E symmetric positive definite
    if spec.E_is_constant:
        E0 = fn.E(origin)
        piv = leading_pivots(E0)
        sym_err = float(np.max(np.abs(E0 - E0.T)))
        ok = sym_err == 0.0 and bool(np.all(piv > 0.0))
        worst = max(sym_err, float(-np.nanmin(piv)))
        report.checks.append(
            Check("E_positive_definite", ok, 0.0 if ok else worst, None if ok else origin.tolist(),
                  detail=f"constant E, pivots {np.round(piv, 12).tolist()}")
        )
    else:
        ok, worst, witness = True, 0.0, None
        for x in states:
            Ex = fn.E(x)
            if not is_symmetric_positive_definite(Ex, sym_tol=1e-12):
                eig = float(np.min(np.linalg.eigvalsh(0.5 * (Ex + Ex.T))))
                if witness is None or -eig > worst:
                    ok, worst, witness = False, -eig, x.tolist()
        report.checks.append(Check("E_positive_definite", ok, worst, witness, detail="state-dependent E, sampled"))

    # V_x' gamma = 0
    ok, worst, witness = True, 0.0, None
    for x in np.vstack([origin, states]):
        vx, gam = fn.Vx(x), fn.gamma(x)
        val = abs(float(vx @ gam))
        if val > orth_tol * (1.0 + _norm(vx) * _norm(gam)):
            if witness is None or val > worst:
                ok, worst, witness = False, val, x.tolist()
    report.checks.append(Check("gamma_orthogonal", ok, worst, witness))

    return report
