import copy
import dataclasses
import functools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from converse_hji import expr as ex
from converse_hji.analysis import (
    ANALYTIC,
    SAMPLED,
    CertificationError,
    brute_force_inf_sup,
    estimate_c,
    hamiltonian,
    hji_residual,
    inf_sup_lie_derivative,
    open_loop_derivative,
    parabola,
    parabola_bound,
    quadratic_form,
    rclf_certify,
    saturated_hamiltonian_residual,
    verify_system,
)
from converse_hji.cases import SYS_A, sys_a_spec
from converse_hji.config import config_from_dict
from converse_hji.design import synthesize
from converse_hji.model import sample_states
from converse_hji.policy import in_domain_x, saturated_policies


def variant(**changes):
    d = copy.deepcopy(SYS_A)
    d.update(changes)
    return config_from_dict(d).spec


def scaled(a, b, tol=1e-9):
    return abs(a - b) <= tol * (1.0 + abs(a))


def test_residual_examples(sys_a):
    assert hji_residual(sys_a, (1.0, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert hji_residual(sys_a, (0.0, 0.0)) == 0.0


def test_residual_linear_in_drift(sys_a):
    f = ex.vadd(sys_a.f, (ex.Const(1.0), ex.Const(0.0)))
    perturbed = dataclasses.replace(sys_a, f=f)
    assert hji_residual(perturbed, (1.0, 0.0)) == pytest.approx(1.0, abs=1e-12)


def test_saturated_residual_examples(sys_a):
    assert abs(saturated_hamiltonian_residual(sys_a, (4.0, 2.0))) <= 1e-9 * (1 + sys_a.num.q((4.0, 2.0)))
    assert saturated_hamiltonian_residual(sys_a, (0.0, 0.0)) == 0.0
    assert saturated_hamiltonian_residual(sys_a, (30.0, 30.0)) == pytest.approx(-6400.0)


@pytest.mark.parametrize("which", ["a", "b"])
def test_saturated_residual_is_the_hamiltonian(which, sys_a, sys_b):
    s = sys_a if which == "a" else sys_b
    pol = saturated_policies(s)
    inside = 0
    for x in sample_states(s.spec.n, 300, box=10, seed=8):
        r = saturated_hamiltonian_residual(s, x)
        direct = hamiltonian(s, x, pol.u_star(x), pol.w_star(x))
        assert r == pytest.approx(direct, rel=1e-9, abs=1e-9 * (1 + s.num.q(x)))
        if in_domain_x(s.spec, x):
            inside += 1
            assert abs(r - hji_residual(s, x)) <= 1e-9 * (1 + s.num.q(x))
    assert inside > 0


def test_inf_sup_examples(sys_a, sys_b):
    assert inf_sup_lie_derivative(sys_a, (1.0, 0.0)) == pytest.approx(-90.75, abs=1e-9)
    assert inf_sup_lie_derivative(sys_a, (0.0, 1.0)) == pytest.approx(-38.75, abs=1e-9)
    assert brute_force_inf_sup(sys_a, (1.0, 0.0)) == pytest.approx(-90.75, abs=1e-9)
    assert brute_force_inf_sup(sys_a, (0.0, 1.0)) == pytest.approx(-38.75, abs=1e-9)
    for s in (sys_a, sys_b):
        z = np.zeros(s.spec.n)
        assert inf_sup_lie_derivative(s, z) == 0.0
        assert brute_force_inf_sup(s, z) == 0.0


def test_brute_force_density_floor(sys_a):
    with pytest.raises(ValueError):
        brute_force_inf_sup(sys_a, (1.0, 0.0), grid_density=4)


@pytest.mark.parametrize("which", ["a", "b"])
def test_oracle_agreement(which, sys_a, sys_b):
    s = sys_a if which == "a" else sys_b
    for x in sample_states(s.spec.n, 100, box=10, seed=21):
        a = inf_sup_lie_derivative(s, x)
        assert scaled(a, brute_force_inf_sup(s, x, 64, seed=3))


def test_quadratic_detection(spec_a):
    assert np.array_equal(quadratic_form(spec_a.V, 2), np.eye(2))
    assert quadratic_form(ex.parse("0.25*x1^4 + 0.5*x2^2", 2), 2) is None
    assert quadratic_form(ex.parse("0.5*x1^2 + x2", 2), 2) is None
    Q = quadratic_form(ex.parse("x1^2 + 0.5*x1*x2 + 0.5*x2^2", 2), 2)
    assert np.array_equal(Q, [[2.0, 0.5], [0.5, 1.0]])


def test_estimate_c_analytic(spec_a, spec_b):
    ra = estimate_c(spec_a)
    assert ra.method == ANALYTIC
    assert ra.c == pytest.approx(0.25)
    assert estimate_c(spec_b, 1.0).c == pytest.approx(0.5)
    with pytest.raises(ValueError):
        estimate_c(spec_a, 0.0)


def grid_states(half, n_per_axis):
    g = np.linspace(-half, half, n_per_axis)
    return np.array(np.meshgrid(g, g)).reshape(2, -1).T


def test_estimate_c_general_quadratic():
    spec = variant(value_function="x1^2 + 0.5*x1*x2 + 0.5*x2^2", gamma=["0", "0"])
    region = estimate_c(spec, 1.0)
    assert region.method == ANALYTIC
    num = spec.num
    grid = grid_states(2.0, 401)
    inside = [num.V(x) for x in grid if np.linalg.norm(num.Vx(x)) <= 1.0]
    # c is the tight level: the grid maximum approaches it from below
    assert max(inside) <= region.c * (1 + 1e-12)
    assert max(inside) >= 0.98 * region.c


def test_estimate_c_sampled_non_quadratic():
    spec = variant(value_function="0.25*x1^4 + 0.5*x2^2", gamma=["-x2", "x1^3"])
    region = estimate_c(spec, 1.0)
    assert region.method == SAMPLED
    assert region.inflation == 0.1
    # true sup of V on |Vx| <= 1 is 1/36 + 13/27 (at x1^2 = 1/3)
    true_c = 1.0 / 36.0 + 13.0 / 27.0
    assert true_c <= region.c <= 1.1 * true_c + 1e-12
    num = spec.num
    for x in grid_states(1.5, 301):
        if num.V(x) > region.c:
            assert np.linalg.norm(num.Vx(x)) > 1.0


@pytest.mark.parametrize("which", ["a", "b"])
def test_rclf_certify_case_studies(which, sys_a, sys_b):
    s = sys_a if which == "a" else sys_b
    rep = rclf_certify(s, estimate_c(s.spec), count=300, seed=5)
    assert rep.passed
    assert len(rep.records) == 300
    assert all(r.V > 0.25 and r.inf_sup < 0 for r in rep.records)
    assert rep.summary()["max_inf_sup"] < 0


def test_rclf_certify_flags_negated_e():
    spec = variant(E=[["-10", "0"], ["0", "-20"]])
    system = synthesize(spec)
    with pytest.raises(CertificationError) as info:
        rclf_certify(system, estimate_c(spec), count=200)
    checks = {v["check"] for v in info.value.report.violations}
    assert "inf_sup_negative" in checks
    assert all(v["x"] is not None for v in info.value.report.violations)
    rep = rclf_certify(system, estimate_c(spec), count=200, strict=False)
    assert not rep.passed


def test_rclf_flags_loose_level(sys_a):
    region = dataclasses.replace(estimate_c(sys_a.spec), c=0.01)
    rep = rclf_certify(sys_a, region, states=[(0.3, 0.0), (2.0, 0.0)], strict=False)
    flagged = [v for v in rep.violations if v["check"] == "c_estimate"]
    assert [v["x"] for v in flagged] == [[0.3, 0.0]]


@functools.lru_cache(maxsize=None)
def _sys_a():
    return synthesize(sys_a_spec())


@settings(max_examples=50, deadline=None)
@given(x1=st.floats(-10, 10), x2=st.floats(-10, 10), delta=st.floats(1e-3, 5))
def test_parabola_vertex(x1, x2, delta):
    system = _sys_a()
    x = (x1, x2)
    ystar = 2.0 * system.spec.alpha1 / 3.0
    top = parabola_bound(system, x)
    assert parabola(system, x, ystar) == pytest.approx(top, rel=1e-12, abs=1e-9)
    assert parabola(system, x, ystar + delta) < top
    assert parabola(system, x, ystar - delta) < top
    assert inf_sup_lie_derivative(system, x) <= top + 1e-9 * (1 + abs(top))


@pytest.mark.parametrize("which", ["a", "b"])
def test_open_loop_decrease(which, sys_a, sys_b):
    s = sys_a if which == "a" else sys_b
    for x in sample_states(s.spec.n, 500, box=10, seed=6):
        assert open_loop_derivative(s, x) < 0


def test_verify_system_reports(sys_a):
    out = verify_system(sys_a, samples=100, oracle_samples=20)
    assert out["passed"] and out["violation_count"] == 0
    assert out["rclf"]["region"]["c"] == pytest.approx(0.25)
    assert out["hji_residual"]["samples"] == 100 + 9 - 3  # three 3D case states dropped
