import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from bestarm.baseline import UniformPlan, sufficient_m, uniform_best, uniform_trial
from bestarm.env import BanditInstance, EnvironmentHandle, make_alpha_instance, shuffle_instance
from bestarm.metrics import gaps


def brute_sufficient_m(g, delta):
    m = 1
    while sum(2 * math.exp(-m * d * d / 2) for d in g) > delta * (1 + 1e-12):
        m += 1
    return m


def test_plan_total():
    assert UniformPlan(7, 5).total == 35
    with pytest.raises(ValueError):
        UniformPlan(0, 3)


def test_deterministic_always_right():
    inst = shuffle_instance(make_alpha_instance(6, 0.5, family="deterministic"), 3)
    for m in [1, 2, 10]:
        chosen, total = uniform_best(EnvironmentHandle(inst), m)
        assert inst.permutation[chosen] == 0 and total == 7 * m


def test_single_arm():
    assert uniform_best(EnvironmentHandle(BanditInstance((0.3,))), 7) == (0, 7)


def test_rejects_bad_m():
    with pytest.raises(ValueError):
        uniform_best(EnvironmentHandle(BanditInstance((0.9, 0.1))), 0)


def test_ties_go_to_lowest_index():
    # best arm sits at external index 2; one pull each almost surely gives all zeros
    inst = BanditInstance((1e-6, 0.0, 0.0), permutation=(1, 2, 0))
    env = EnvironmentHandle(inst, master_seed=1)
    assert uniform_best(env, 1)[0] == 0


@pytest.mark.parametrize("n", [1, 5, 30])
def test_exact_budget(n):
    env = EnvironmentHandle(make_alpha_instance(n, 0.5, mu0=0.9, gap_scale=0.5))
    _, total = uniform_best(env, 13)
    assert total == env.total == 13 * (n + 1)


def test_two_arm_error_matches_exact_rule():
    # two unit-variance arms: P(err) = Phi(-gap * sqrt(m/2)) exactly
    inst = BanditInstance((0.5, 0.0), family="gaussian", sigma=1.0)
    trials, m = 20000, 4
    errs = sum(uniform_best(EnvironmentHandle(inst, 3, t), m)[0] != 0 for t in range(trials))
    p = norm.cdf(-0.5 * math.sqrt(m / 2))
    assert abs(errs / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials)


def test_sufficient_m_examples():
    assert sufficient_m([1.0], 2 * math.exp(-2)) == 4
    for n in [1, 3, 10]:
        assert sufficient_m([1.0] * n, 2 * n * math.exp(-8)) == 16


def test_sufficient_m_single_arm_closed_form():
    for d, delta in [(0.3, 0.05), (0.1, 0.2), (0.7, 0.01)]:
        assert sufficient_m([d], delta) == math.ceil(2 / d ** 2 * math.log(2 / delta))


def test_sufficient_m_alpha_scaling():
    m16 = sufficient_m(gaps(make_alpha_instance(16, 0.5)), 0.1)
    m64 = sufficient_m(gaps(make_alpha_instance(64, 0.5)), 0.1)
    assert m16 == brute_sufficient_m(gaps(make_alpha_instance(16, 0.5)), 0.1)
    assert m64 == brute_sufficient_m(gaps(make_alpha_instance(64, 0.5)), 0.1)
    assert 3 <= m64 / m16 <= 6


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=8), st.floats(0.01, 0.5))
def test_sufficient_m_against_brute_force(g, delta):
    assert sufficient_m(g, delta) == brute_sufficient_m(g, delta)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=1, max_size=8), st.floats(0.01, 0.4), st.floats(1.0, 2.0))
def test_sufficient_m_monotone(g, delta, factor):
    base = sufficient_m(g, delta)
    assert sufficient_m([min(d * factor, 1.0) for d in g], delta) <= base
    assert sufficient_m(g, min(delta * factor, 0.99)) <= base


def test_sufficient_m_errors():
    with pytest.raises(ValueError):
        sufficient_m([0.0], 0.1)
    with pytest.raises(ValueError):
        sufficient_m([1e-9], 1e-3)


def test_pac_sufficiency_small_instance():
    inst = make_alpha_instance(4, 1.0, mu0=0.9, gap_scale=0.5)
    delta = 0.1
    m = sufficient_m(gaps(inst), delta)
    trials = 10 ** 4
    errs = sum(
        not uniform_trial(EnvironmentHandle(shuffle_instance(inst, t), 8, t), m).correct for t in range(trials)
    )
    assert errs / trials <= delta + 3 * math.sqrt(delta * (1 - delta) / trials)


def test_uniform_trial_shape():
    env = EnvironmentHandle(make_alpha_instance(3, 1.0, mu0=0.9, gap_scale=0.5))
    res = uniform_trial(env, 5)
    assert len(res.phases) == 1 and res.total_pulls == 20 and res.phases[0].pulls_phase == 20
    assert res.phases[0].active_after == [res.chosen]
