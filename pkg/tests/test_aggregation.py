import math
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socnet import CapExceeded, ContractError
from socnet.aggregation import (RULES, AggregateResult, aggregate, assign_representatives,
                                delta_error, ewi_test, friend_similarity, gately, kemeny,
                                minimal_rights, psi, rho, select_representatives,
                                shapley_similarity, similarity_game, social_centrality_score,
                                tau_value, weighted_profile)
from socnet.graph import Graph
from socnet.preferences import Profile, kendall_tau_steps
from socnet.seeding import Objective, shapley_estimate

X, Y, Z = 0, 1, 2
profiles4 = st.lists(st.permutations(range(4)).map(tuple), min_size=1, max_size=6)


@pytest.mark.parametrize("rule", [r for r in RULES])
def test_unanimous_profile_is_fixed(rule):
    p = (2, 0, 3, 1)
    res = aggregate(rule, [p] * 3, dictator=1)
    assert [q.ranking for q in res.sorted()] == [p]


def test_borda_two_voter_branches_match_hand_enumeration():
    # scores X=2, Y=3, Z=1: Y wins, then X and Z tie 1-1 on the remainder
    res = aggregate("borda", [(Y, Z, X), (X, Y, Z)])
    assert {p.ranking for p in res.preferences} == {(Y, X, Z), (Y, Z, X)}


def test_plurality_follows_every_co_winner():
    res = aggregate("plurality", [(X, Y, Z), (Y, X, Z)])
    assert {p.ranking for p in res.preferences} == {(X, Y, Z), (Y, X, Z)}


def test_dictatorship_and_random_dictatorship():
    prof = [(X, Y, Z), (Z, Y, X)]
    assert {p.ranking for p in aggregate("dictatorship", prof, dictator=1).preferences} == {(Z, Y, X)}
    assert len(aggregate("random-dictatorship", prof)) == 2
    with pytest.raises(ContractError):
        aggregate("dictatorship", prof)
    with pytest.raises(ContractError):
        aggregate("approval", prof)


@settings(max_examples=40, deadline=None)
@given(profiles4)
def test_kemeny_matches_brute_force(prof):
    cost = {c: sum(kendall_tau_steps(p, c) for p in prof) for c in permutations(range(4))}
    best = min(cost.values())
    assert kemeny(Profile(prof)) == {c for c, v in cost.items() if v == best}


def test_kemeny_cap():
    with pytest.raises(CapExceeded):
        kemeny(Profile([tuple(range(7))]))


@settings(max_examples=40, deadline=None)
@given(profiles4, st.sampled_from(["plurality", "borda", "veto", "copeland",
                                   "minmax-pairwise-opposition", "bucklin"]))
def test_rules_return_full_rankings(prof, rule):
    res = aggregate(rule, prof)
    for p in res.preferences:
        assert sorted(p.ranking) == [0, 1, 2, 3]


def test_delta_error_examples():
    truth = AggregateResult(frozenset([(X, Y, Z)]))
    assert delta_error(truth, AggregateResult(frozenset([(Y, Z, X)]))) == pytest.approx(2 / 3)
    assert delta_error(truth, truth) == 0
    a = AggregateResult(frozenset([(X, Y, Z)]))
    b = AggregateResult(frozenset([(X, Y, Z), (Z, Y, X)]))
    assert delta_error(b, a) == 0
    assert delta_error(a, b) == pytest.approx(0.5)


def test_assignment_edge_cases():
    rng = np.random.default_rng(0)
    d = np.array([[0, .2, .5], [.2, 0, .3], [.5, .3, 0]])
    a = assign_representatives(d, range(3), rng)
    assert a.rep_of == [0, 1, 2] and set(a.weights.values()) == {1}
    a = assign_representatives(d, [1], rng)
    assert a.weights == {1: 3}


def test_equidistant_tie_is_uniform():
    d = np.array([[0, 1, 1], [1, 0, .5], [1, .5, 0]], dtype=float)
    d[0, 1] = d[0, 2] = d[1, 0] = d[2, 0] = 0.4
    rng = np.random.default_rng(1)
    hits = sum(assign_representatives(d, [1, 2], rng).rep_of[0] == 1 for _ in range(10_000))
    p = hits / 10_000
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / 10_000)


def test_weighted_profile_copies_representative_preferences():
    prof = Profile([(X, Y, Z)] + [(Z, Y, X)] * 10)
    d = np.full((11, 11), 0.5)
    np.fill_diagonal(d, 0)
    d[1:, 1] = d[1, 1:] = 0.1
    d[1, 1] = 0
    a = assign_representatives(d, [0, 1], np.random.default_rng(0))
    q = weighted_profile(prof, a)
    assert sum(p.ranking == (Z, Y, X) for p in q) == 10
    assert sum(p.ranking == (X, Y, Z) for p in q) == 1


def hand_similarity():
    return np.array([[1, .6, .2, .3], [.6, 1, .4, .5], [.2, .4, 1, .7], [.3, .5, .7, 1]])


def test_rho_psi_values():
    c = hand_similarity()
    assert rho(c, range(4)) == 1 and psi(c, range(4)) == 4
    assert rho(c, [1]) == pytest.approx(0.4)
    assert psi(c, [1]) == pytest.approx(2.5)


def lattice():
    return [set(s) for k in range(5) for s in combinations(range(4), k)]


def test_objectives_match_direct_formula_on_every_subset():
    c = hand_similarity()
    for s in lattice():
        cols = [max((c[j, i] for j in s), default=0.0) for i in range(4)]
        assert rho(c, s) == pytest.approx(min(cols) if s else 0.0)
        assert psi(c, s) == pytest.approx(sum(cols))


@pytest.mark.parametrize("f", [rho, psi])
def test_objectives_are_monotone(f):
    c = hand_similarity()
    for a in lattice():
        for b in lattice():
            if a <= b:
                assert f(c, a) <= f(c, b) + 1e-12


def test_psi_is_submodular_but_rho_is_not():
    c = hand_similarity()
    for a in lattice():
        for b in lattice():
            if a <= b:
                for x in set(range(4)) - b:
                    assert psi(c, a | {x}) - psi(c, a) >= psi(c, b | {x}) - psi(c, b) - 1e-12
    # adding 2 helps more once 0 already covers the rest
    assert rho(c, {2}) - rho(c, set()) < rho(c, {0, 2}) - rho(c, {0})


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 8), st.integers(1, 3), st.integers(0, 10_000))
def test_greedy_min_within_bound(n, k, seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(0, 1, (n, n))
    c = (c + c.T) / 2
    np.fill_diagonal(c, 1)
    got = rho(c, select_representatives("greedy-min", c, None, k, rng))
    best = max(rho(c, s) for s in combinations(range(n), k))
    assert got >= (1 - 1 / math.e) * best - 1e-12


def test_selection_edge_cases():
    star = Graph(5, [(0, i) for i in range(1, 5)], directed=False)
    rng = np.random.default_rng(0)
    assert select_representatives("degree-cen", None, star, 1, rng) == [0]
    c = hand_similarity()
    for m in ["greedy-min", "greedy-sum", "random-poll"]:
        assert sorted(select_representatives(m, c, None, 4, rng)) == [0, 1, 2, 3]
    with pytest.raises(ContractError):
        select_representatives("greedy-min", c, None, 5, rng)


def random_profiles(count, r, seed):
    rng = np.random.default_rng(seed)
    return [Profile([tuple(rng.permutation(r)) for _ in range(9)]) for _ in range(count)]


def test_ewi_dictatorship_and_constant_rule_never_violate():
    base = random_profiles(2, 4, 0)
    rng = np.random.default_rng(3)
    cells = ewi_test("dictatorship", base, [0.1, 0.3, 0.5], [0.05, 0.1], 40, rng)
    assert not any(c.violated for c in cells if c.feasible)
    const = AggregateResult(frozenset([(0, 1, 2, 3)]))
    cells = ewi_test(lambda P: const, base, [0.2, 0.4], [0.1], 20, rng)
    assert all(c.mean_delta == 0 and not c.violated for c in cells)


def test_ewi_grid_contract():
    with pytest.raises(ContractError):
        ewi_test("borda", random_profiles(1, 4, 0), [0.1], [0.4], 5, np.random.default_rng(0))


def test_shapley_closed_form():
    c = [[0, .5, .2], [.5, 0, .4], [.2, .4, 0]]
    phi = shapley_similarity(c)
    assert np.allclose(phi, [0.35, 0.45, 0.30])
    game = similarity_game(c)
    assert sum(phi) == pytest.approx(game({0, 1, 2}))
    est = shapley_estimate(Objective(lambda s: game(s)), 4000, np.random.default_rng(0), n=3)
    assert np.all(np.abs(np.asarray(est.values) - phi) <= 3 * np.asarray(est.se) + 1e-9)


def test_solution_concepts_coincide_on_similarity_games():
    c = [[0, .5, .2], [.5, 0, .4], [.2, .4, 0]]
    g = similarity_game(c)
    assert np.allclose(gately(g), shapley_similarity(c), atol=1e-9)
    assert np.allclose(tau_value(g), shapley_similarity(c), atol=1e-9)
    eq = similarity_game([[0, .3, .3], [.3, 0, .3], [.3, .3, 0]])
    assert np.allclose(gately(eq), [0.3] * 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10_000))
def test_tau_lambda_is_one_half(n, seed):
    rng = np.random.default_rng(seed)
    c = [[Fraction(0)] * n for _ in range(n)]
    for i, j in combinations(range(n), 2):
        c[i][j] = c[j][i] = Fraction(int(rng.integers(0, 100)), 100)
    g = similarity_game(c)
    alloc, lam = tau_value(g, return_lambda=True)
    if sum(sum(row) for row in c):
        assert lam == Fraction(1, 2)
    assert alloc == shapley_similarity(c)
    assert gately(g) == shapley_similarity(c)
    assert minimal_rights(g) == [0] * n


def test_similarity_game_rejects_asymmetry():
    with pytest.raises(ContractError):
        similarity_game([[0, 1], [0, 0]])


def test_scores():
    p = (0, 1, 2, 3, 4)
    assert social_centrality_score([p, p], [p, p], [3, 5]) == 10.0
    far = (1, 4, 2, 0, 3)
    # similarity 1/3 and 0 with equal weights is 1/6; sqrt and half-point rounding
    want = math.ceil(20 * math.sqrt(1 / 6)) / 2
    assert social_centrality_score([far, (4, 3, 2, 1, 0)], [p, p], [1, 1]) == want
    assert social_centrality_score([far, None], [p, p], [1, 1]) == math.ceil(20 * math.sqrt(1 / 3)) / 2
    assert friend_similarity([p], [far]) == pytest.approx(100 / 3)
    assert friend_similarity([p, None], [far, p]) == pytest.approx(100 / 3)
    with pytest.raises(ContractError):
        social_centrality_score([None], [p], [1])


def test_score_quarter_similarity_is_five():
    # footrule similarity 1/4 exactly: weighted mix of 1/2 and 0 with equal weights
    p = (0, 1, 2, 3)
    half = (1, 0, 3, 2)
    rev = (3, 2, 1, 0)
    assert social_centrality_score([half, rev], [p, p], [1, 1]) == 5.0


def test_veto_places_most_vetoed_last():
    res = aggregate("veto", [(X, Y, Z), (Y, X, Z), (X, Z, Y)])
    # Z vetoed twice goes last; on {X, Y} Y takes two of the three vetoes
    assert {p.ranking for p in res.preferences} == {(X, Y, Z)}
    res = aggregate("veto", [(X, Y, Z), (Y, X, Z)])
    assert {p.ranking for p in res.preferences} == {(X, Y, Z), (Y, X, Z)}


def test_ewi_veto_margin_can_exceed_a_fifth_of_the_mean():
    rng = np.random.default_rng(0)
    base = [Profile([tuple(rng.permutation(5)) for _ in range(9)]) for _ in range(5)]
    cells = ewi_test("veto", base, [0.05, 0.1, 0.2], [0.05, 0.1], 40, rng)
    assert max((c.mean_delta - c.mu) / c.mu for c in cells if c.feasible) > 0.2
