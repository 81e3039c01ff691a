from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socnet import ContractError
from socnet.diffusion import DecaySchedule, DiffusionTrace, LivePool, exact_sigma
from socnet.twophase import (STAGNATION, ExactTwoPhase, Observation, PoolTwoPhase,
                             TwoPhaseConfig, eval_f_exact, eval_h, exhaustive_joint, face_joint,
                             golden_section_k1, observe, optimize_budget_split, run_two_phase,
                             sequential_delay_max)

from test_diffusion import random_graph, toy


def test_observe_splits_already_and_recent():
    tr = DiffusionTrace(((0,), (1, 2), (3,)))
    obs = observe(tr, 1)
    assert obs.already_activated == {0}
    assert obs.recently_activated == {1, 2}
    late = observe(tr, STAGNATION)
    assert late.already_activated == {0, 1, 2, 3}
    assert late.recently_activated == set()


def test_observation_sets_must_be_disjoint():
    with pytest.raises(ContractError):
        Observation(frozenset({1}), frozenset({1}), 0)


@pytest.mark.parametrize("kw", [dict(k=3, k1=4), dict(k=3, k1=1, d=-1), dict(k=3, k1=1, mode="x"),
                                dict(k=3, k1=1, selector1="nope"), dict(k=3, k1=1, M1=0)])
def test_config_rejects_bad_values(kw):
    with pytest.raises(ContractError):
        TwoPhaseConfig(**kw)


def test_toy_values():
    g = toy()
    assert eval_f_exact(g, [0], 1, 1) == pytest.approx(3.8)
    assert eval_f_exact(g, [], 3, 1) == pytest.approx(2.7)
    assert eval_f_exact(g, [2, 3], 3, 1) == pytest.approx(3.5)


def test_empty_first_phase_is_deferred_single_phase():
    g = random_graph(5, 7, 2)
    best = max(exact_sigma(g, s) for s in combinations(range(5), 2))
    assert eval_f_exact(g, [], 2, 2) == pytest.approx(best)


def test_zero_second_budget_is_plain_spread():
    g = random_graph(5, 7, 3)
    assert eval_f_exact(g, [0, 1], STAGNATION, 0) == pytest.approx(exact_sigma(g, [0, 1]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_f_monotone_in_first_phase_set(seed):
    g = random_graph(5, 7, seed)
    ev = ExactTwoPhase(g)
    for s in combinations(range(5), 1):
        for t in range(5):
            if t not in s:
                assert ev.value(s, 1, 1) <= ev.value(s + (t,), 1, 1) + 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_f_subadditive(seed):
    g = random_graph(5, 6, seed)
    ev = ExactTwoPhase(g)
    sets = [(), (0,), (1,), (2, 3), (4,)]
    for a in sets:
        for b in sets:
            union = tuple(sorted(set(a) | set(b)))
            assert ev.value(union, 1, 1) <= ev.value(a, 1, 1) + ev.value(b, 1, 1) + 1e-12


def test_pool_estimate_agrees_with_exact_gdd_second_phase():
    # on the toy graph GDD picks the true best second-phase node, so both
    # evaluators should agree up to sampling error
    g = toy()
    pool = LivePool.sample(g, 20_000, np.random.default_rng(0))
    est = PoolTwoPhase(g, pool).estimate([0], 1, 1)
    assert abs(est.mean - 3.8) < 4 * est.se + 1e-9


def test_eval_h_toy():
    val = eval_h(toy(), [0], 1, 1, 400, 400, np.random.default_rng(1))
    assert abs(val.mean - 3.8) < 4 * val.se + 0.02


def test_decay_lowers_value():
    g = toy()
    pool = LivePool.sample(g, 2000, np.random.default_rng(0))
    plain = PoolTwoPhase(g, pool).value([0], 1, 1)
    decayed = PoolTwoPhase(g, pool, DecaySchedule.geometric(0.5)).value([0], 1, 1)
    assert decayed < plain


def test_single_phase_run_has_no_second_seeds():
    g = random_graph(8, 14, 1)
    cfg = TwoPhaseConfig(k=2, k1=2, d=0, pool_size=100)
    out = run_two_phase(g, cfg, np.random.default_rng(0))
    assert out["S2"] == []
    assert len(out["S1"]) == 2


def test_shortfall_when_residual_is_exhausted():
    g = toy()
    cfg = TwoPhaseConfig(k=6, k1=1, d=STAGNATION, pool_size=50, selector1="gdd")
    out = run_two_phase(g, cfg, np.random.default_rng(0), s1=[1])
    assert out["shortfall"] > 0
    assert out["total_activated"] <= 4


def test_budget_split_endpoints():
    g = random_graph(5, 7, 5)
    res = optimize_budget_split(g, 2, 1)
    vals = {k1: v for k1, v, _ in res.curve}
    best_single = max(exact_sigma(g, s) for s in combinations(range(5), 2))
    assert vals[2] == pytest.approx(best_single)
    assert vals[0] == pytest.approx(best_single)
    assert res.best_value == max(vals.values())


def test_sequential_delay_stops_at_first_drop():
    calls = []

    def f(d):
        calls.append(d)
        return [1, 2, 3, 2, 9][d]

    assert sequential_delay_max(f, 4) == (2, 3)
    assert calls == [0, 1, 2, 3]


def test_golden_k1_on_separable_evaluator():
    k1, d, v = golden_section_k1(lambda k1, d: -(k1 - 2) ** 2 - (d - 1) ** 2, 6, 4)
    assert (k1, d) == (2, 1)


def test_face_joint_close_to_exhaustive_sweep():
    g = random_graph(7, 12, 2)
    ev = PoolTwoPhase(g, LivePool.sample(g, 200, np.random.default_rng(0)))
    ex = exhaustive_joint(g, 2, 3, ev)
    res = face_joint(g, 2, 3, ev, None, np.random.default_rng(1))
    assert res.value >= 0.95 * ex.value
    assert res.value == pytest.approx(ev.value(res.s1, res.d, 2 - res.k1))
    if res.k1 == 2:
        assert res.d == 0
