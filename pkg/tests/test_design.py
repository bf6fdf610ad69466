import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from converse_hji import design
from converse_hji import expr as ex
from converse_hji.cases import SYS_A
from converse_hji.config import config_from_dict
from converse_hji.design import (
    SynthesisError,
    admissible_utility,
    build_h,
    build_p,
    disturbance_gain,
    synthesize,
)
from converse_hji.model import sample_states, validate

from reference_dynamics import f_2d, f_3d


def variant(**changes):
    d = copy.deepcopy(SYS_A)
    d.update(changes)
    return config_from_dict(d).spec


def evaluate_matrix(M, x):
    return np.array([[ex.evaluate(e, x) for e in row] for row in M])


def test_gain_values(spec_a, spec_b):
    # (100/3)(1 + 2) and (25/3)(1 + 2)
    assert disturbance_gain(spec_a) == pytest.approx(100.0, rel=1e-14)
    assert disturbance_gain(spec_b) == pytest.approx(25.0, rel=1e-14)


def test_p_at_unit_state(spec_a):
    P = evaluate_matrix(build_p(spec_a), (1.0, 0.0))
    assert P == pytest.approx(np.diag([80.0, 70.0]))


def test_p_without_disturbance_bound():
    spec = variant(alpha1=0.0)
    P = build_p(spec)
    for x in sample_states(2, 20, seed=0):
        expected = 20.0 * np.array([[1.0, 0.0], [0.0, 0.0]]) + np.diag([10.0, 20.0])
        assert evaluate_matrix(P, x) == pytest.approx(expected)


def test_h_examples(spec_a):
    h = build_h(spec_a)
    assert [ex.evaluate(e, (0.0, 0.0)) for e in h] == [0.0, 0.0]
    assert [ex.evaluate(e, (1.0, 0.0)) for e in h] == pytest.approx([80.75, 3.5])


def test_utility_examples(sys_a):
    q = admissible_utility(sys_a)
    assert ex.evaluate(q, (1.0, 0.0)) == pytest.approx(80.75)
    assert ex.evaluate(q, (0.0, 1.0)) == pytest.approx(82.5)
    assert ex.evaluate(q, (0.0, 0.0)) == 0.0


def test_drift_examples(sys_a, sys_b):
    assert sys_a.num.f((1.0, 0.0)) == pytest.approx([-80.75, -2.75])
    assert sys_b.num.f((1.0, 1.0, 1.0))[1] == pytest.approx(-21.0)
    # f = A(x) x, so f1 at (0,1) is entry (1,2) of A
    assert sys_a.num.f((0.0, 1.0))[0] == pytest.approx(-4.75)


def test_drift_vanishes_at_origin(sys_a, sys_b):
    for s in (sys_a, sys_b):
        assert np.all(s.num.f(np.zeros(s.spec.n)) == 0.0)
        assert s.num.q(np.zeros(s.spec.n)) == 0.0


@pytest.mark.parametrize("which", ["a", "b"])
def test_hji_and_utility_identities(which, sys_a, sys_b):
    s = sys_a if which == "a" else sys_b
    num = s.num
    for x in sample_states(s.spec.n, 300, seed=11):
        vx, a, c = num.Vx(x), num.g1T_Vx(x), num.g2T_Vx(x)
        vf = vx @ num.f(x)
        q = num.q(x)
        assert vf + 0.25 * (a @ a - c @ c) + q == pytest.approx(0.0, abs=1e-9 * (1 + q))
        assert q == pytest.approx(-vf + 0.25 * (c @ c - a @ a), rel=1e-12)
        if np.any(x):
            assert q > 0


def test_matches_hand_expanded_dynamics(sys_a, sys_b):
    for s, ref in ((sys_a, f_2d), (sys_b, f_3d)):
        for x in sample_states(s.spec.n, 100, seed=5):
            assert np.max(np.abs(s.num.f(x) - ref(x))) <= 1e-9 * (1 + np.max(np.abs(ref(x))))


def test_compositional_form_with_mirrored_gamma(spec_b):
    h_mirror = build_h(spec_b, gamma_sign=-1.0)
    f_comp = design.composed_drift(spec_b, h_mirror)
    f_exp = design.expanded_drift(spec_b)
    for x in sample_states(3, 50, seed=2):
        a = [ex.evaluate(e, x) for e in f_comp]
        b = [ex.evaluate(e, x) for e in f_exp]
        assert a == pytest.approx(b, rel=1e-12, abs=1e-9)


def test_disagreeing_forms_raise(spec_a, monkeypatch):
    original = design.expanded_drift
    monkeypatch.setattr(
        design, "expanded_drift",
        lambda spec: ex.vadd(original(spec), (ex.Var(1) * 1e-3, ex.Const(0.0))),
    )
    with pytest.raises(SynthesisError, match="disagree"):
        synthesize(spec_a)


@settings(max_examples=25, deadline=None)
@given(
    g=st.lists(st.integers(-3, 3), min_size=4, max_size=4),
    e=st.lists(st.integers(1, 30), min_size=2, max_size=2),
    a1=st.floats(0.5, 20), a2=st.floats(0.5, 20), b2=st.floats(0.1, 4),
)
def test_valid_specs_always_synthesize(g, e, a1, a2, b2):
    spec = variant(
        g1=[[str(g[0])], [str(g[1])]], g2=[[str(g[2])], [str(g[3])]],
        E=[[str(e[0]), "0"], ["0", str(e[1])]], alpha1=a1, alpha2=a2, b=math.sqrt(b2),
    )
    assert validate(spec, count=50).passed
    system = synthesize(spec)
    assert disturbance_gain(spec) == pytest.approx(a1 ** 2 / 3 * (1 + 1 / b2))
    x = np.array([0.7, -1.3])
    num = system.num
    vx, a, c = num.Vx(x), num.g1T_Vx(x), num.g2T_Vx(x)
    assert vx @ num.f(x) + 0.25 * (a @ a - c @ c) + num.q(x) == pytest.approx(0.0, abs=1e-9)
