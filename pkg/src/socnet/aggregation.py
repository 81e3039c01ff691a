"""Voting rules as correspondences, the aggregate error, representative
selection, the expected weak insensitivity tester, and the cooperative
similarity game with its allocation rules."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CapExceeded, ContractError
from .graph import Graph
from .preferences import (Preference, Profile, as_preference, dtg_with_mean, footrule_similarity,
                          kendall_tau_norm, pair_count, random_at_distance, sample_steps)

DEFAULT_BRANCH_CAP = 5000
KEMENY_MAX_R = 6
RULES = ("plurality", "borda", "veto", "copeland", "minmax-pairwise-opposition", "bucklin",
         "kemeny", "dictatorship", "random-dictatorship")


@dataclass(frozen=True)
class AggregateResult:
    preferences: frozenset

    def __post_init__(self):
        prefs = frozenset(as_preference(p) for p in self.preferences)
        if not prefs:
            raise ContractError("an aggregate needs at least one ranking")
        object.__setattr__(self, "preferences", prefs)

    def sorted(self) -> list[Preference]:
        return sorted(self.preferences, key=lambda p: p.ranking)

    def __len__(self):
        return len(self.preferences)

    def __contains__(self, p):
        return as_preference(p) in self.preferences


def _as_profile(profile) -> Profile:
    return profile if isinstance(profile, Profile) else Profile(profile)


class _Scorer:
    """Scores of the remaining alternatives; the maximizers are placed next."""

    def __init__(self, rule: str, profile: Profile):
        self.rule = rule
        self.pos = profile.positions()
        self.voters, self.r = self.pos.shape
        # veto fills the ranking from the bottom: the most-vetoed goes last
        self.from_bottom = rule == "veto"

    def winners(self, remaining: tuple[int, ...]) -> list[int]:
        rem = np.array(remaining)
        pos = self.pos[:, rem]
        m = len(rem)
        if m == 1:
            return [remaining[0]]
        rank = np.argsort(np.argsort(pos, axis=1), axis=1)  # 0 = best among remaining
        if self.rule == "plurality":
            score = (rank == 0).sum(axis=0).astype(float)
        elif self.rule == "borda":
            score = (m - 1 - rank).sum(axis=0).astype(float)
        elif self.rule == "veto":
            score = (rank == m - 1).sum(axis=0).astype(float)
        elif self.rule in ("copeland", "minmax-pairwise-opposition"):
            beats = (pos[:, :, None] < pos[:, None, :]).sum(axis=0)  # beats[a, b]: voters a > b
            if self.rule == "copeland":
                score = (np.sign(beats - beats.T)).sum(axis=1).astype(float)
            else:
                opp = beats.T.copy()
                np.fill_diagonal(opp, -1)
                score = -opp.max(axis=1).astype(float)
        elif self.rule == "bucklin":
            half = self.voters / 2
            score = np.full(m, -np.inf)
            for depth in range(1, m + 1):
                counts = (rank < depth).sum(axis=0)
                ok = counts > half
                if ok.any():
                    score = np.where(ok, counts, -np.inf)
                    break
        else:
            raise ContractError(f"rule {self.rule!r} is not score based")
        best = score.max()
        return [remaining[i] for i in np.flatnonzero(score == best)]


def _branch(scorer: _Scorer, cap: int) -> set[tuple[int, ...]]:
    r = scorer.r
    memo_w: dict[tuple[int, ...], list[int]] = {}
    count_memo: dict[tuple[int, ...], int] = {}

    def win(rem):
        if rem not in memo_w:
            memo_w[rem] = scorer.winners(rem)
        return memo_w[rem]

    def count(rem) -> int:
        if len(rem) <= 1:
            return 1
        if rem not in count_memo:
            total = 0
            for w in win(rem):
                total += count(tuple(a for a in rem if a != w))
                if total > cap:
                    break
            count_memo[rem] = total
        return count_memo[rem]

    full = tuple(range(r))
    total = count(full)
    if total > cap:
        raise CapExceeded(f"tie branching yields more than {cap} rankings", required=total)

    def expand(rem):
        if len(rem) <= 1:
            return [rem]
        out = []
        for w in win(rem):
            rest = tuple(a for a in rem if a != w)
            if scorer.from_bottom:
                out.extend(tail + (w,) for tail in expand(rest))
            else:
                out.extend((w,) + tail for tail in expand(rest))
        return out

    return set(expand(full))


@lru_cache(maxsize=8)
def _all_rankings(r: int) -> np.ndarray:
    return np.array(list(permutations(range(r))), dtype=np.int64)


def kemeny(profile: Profile) -> set[tuple[int, ...]]:
    r = profile.r
    if r > KEMENY_MAX_R:
        raise CapExceeded(f"Kemeny search over {r}! rankings exceeds r <= {KEMENY_MAX_R}",
                          required=math.factorial(r))
    cands = _all_rankings(r)
    pos = profile.positions()
    cpos = np.argsort(cands, axis=1)
    total = np.zeros(len(cands), dtype=np.int64)
    for a in range(r):
        for b in range(a + 1, r):
            # voters preferring a to b against candidates preferring b to a
            va = (pos[:, a] < pos[:, b]).sum()
            ca = cpos[:, a] < cpos[:, b]
            total += np.where(ca, len(pos) - va, va)
    best = total.min()
    return {tuple(int(x) for x in cands[i]) for i in np.flatnonzero(total == best)}


def aggregate(rule: str, profile, dictator: int | None = None,
              cap: int = DEFAULT_BRANCH_CAP) -> AggregateResult:
    """Set of rankings the rule can produce. Score-based rules pick a winner,
    drop it, and recurse (veto instead drops the most-vetoed alternative to
    the bottom); every tie is followed."""
    profile = _as_profile(profile)
    if rule == "dictatorship":
        if dictator is None or not 0 <= dictator < len(profile):
            raise ContractError("dictatorship needs a voter index")
        return AggregateResult(frozenset([profile[dictator]]))
    if rule == "random-dictatorship":
        return AggregateResult(frozenset(profile.preferences))
    if rule == "kemeny":
        return AggregateResult(frozenset(kemeny(profile)))
    if rule not in RULES:
        raise ContractError(f"unknown rule {rule!r}")
    return AggregateResult(frozenset(_branch(_Scorer(rule, profile), cap)))


def delta_error(truth: AggregateResult, candidate: AggregateResult) -> float:
    """Mean over candidate rankings of the distance to the nearest truth."""
    return float(np.mean([min(kendall_tau_norm(x, y) for x in truth.preferences)
                          for y in candidate.preferences]))


# representatives ----------------------------------------------------------------------

@dataclass
class RepresentativeAssignment:
    M: list[int]
    rep_of: list[int]
    weights: dict[int, int]


def assign_representatives(distance: np.ndarray, M: Iterable[int], rng: np.random.Generator
                           ) -> RepresentativeAssignment:
    """Each node goes to a uniformly chosen closest member of M (members
    represent themselves)."""
    members = sorted(set(M))
    if not members:
        raise ContractError("need at least one representative")
    d = np.asarray(distance, dtype=float)
    n = d.shape[0]
    mset = set(members)
    sub = d[members, :]
    rep = []
    for i in range(n):
        if i in mset:
            rep.append(i)
            continue
        col = sub[:, i]
        ties = np.flatnonzero(np.isclose(col, col.min(), rtol=0, atol=1e-12))
        rep.append(members[int(ties[rng.integers(len(ties))])] if len(ties) > 1 else members[int(ties[0])])
    weights = {j: 0 for j in members}
    for j in rep:
        weights[j] += 1
    return RepresentativeAssignment(members, rep, weights)


def weighted_profile(profile, assignment: RepresentativeAssignment) -> Profile:
    profile = _as_profile(profile)
    if len(assignment.rep_of) != len(profile):
        raise ContractError("assignment does not cover every voter")
    return Profile([profile[j] for j in assignment.rep_of])


def representatives_profile(profile, M: Sequence[int]) -> Profile:
    """Unweighted profile of the representatives' own preferences."""
    profile = _as_profile(profile)
    return Profile([profile[j] for j in sorted(set(M))])


def rho(similarity: np.ndarray, S: Iterable[int]) -> float:
    S = sorted(set(S))
    if not S:
        return 0.0
    return float(np.asarray(similarity)[S, :].max(axis=0).min())


def psi(similarity: np.ndarray, S: Iterable[int]) -> float:
    S = sorted(set(S))
    if not S:
        return 0.0
    return float(np.asarray(similarity)[S, :].max(axis=0).sum())


def _greedy(objective: Callable[[list[int]], float], n: int, k: int) -> list[int]:
    chosen: list[int] = []
    for _ in range(k):
        best, best_v = None, -math.inf
        for v in range(n):
            if v in chosen:
                continue
            val = objective(chosen + [v])
            if val > best_v + 1e-12:
                best, best_v = v, val
        chosen.append(best)
    return chosen


REP_METHODS = ("greedy-min", "greedy-sum", "greedy-orig", "degree-cen", "random-poll")


def corpus_error(rule: str, corpus, M: Sequence[int] | Callable, distance: np.ndarray | None,
                 rng: np.random.Generator, weighted: bool = True, topics: Iterable[int] | None = None
                 ) -> tuple[float, float]:
    """Mean and standard error of the aggregate error over corpus topics,
    using Q' (weighted) or the representatives' own preferences. ``M`` may
    be a callable drawing a fresh set per topic."""
    vals = []
    fixed = M
    for t in (range(corpus.topics) if topics is None else topics):
        if callable(fixed):
            M = fixed(rng)
        P = Profile([tuple(x) for x in corpus.rankings[t]])
        truth = aggregate(rule, P, dictator=0)
        if weighted:
            Q = weighted_profile(P, assign_representatives(distance, M, rng))
        else:
            Q = representatives_profile(P, M)
        vals.append(delta_error(truth, aggregate(rule, Q, dictator=0)))
    vals = np.asarray(vals)
    se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return float(vals.mean()), se


def select_representatives(method: str, similarity: np.ndarray | None, g: Graph | None, k: int,
                           rng: np.random.Generator, rule: str | None = None, corpus=None
                           ) -> list[int]:
    n = similarity.shape[0] if similarity is not None else g.n
    if not 0 < k <= n:
        raise ContractError(f"k must lie in 1..{n}")
    if method == "greedy-min":
        return _greedy(lambda S: rho(similarity, S), n, k)
    if method == "greedy-sum":
        return _greedy(lambda S: psi(similarity, S), n, k)
    if method == "greedy-orig":
        if rule is None or corpus is None:
            raise ContractError("greedy-orig needs a rule and a corpus")
        distance = 1.0 - similarity
        seed = int(rng.integers(2**63))
        return _greedy(lambda S: 1.0 - corpus_error(rule, corpus, S, distance,
                                                    np.random.default_rng(seed))[0], n, k)
    if method == "degree-cen":
        if g is None:
            raise ContractError("degree-cen needs the graph")
        return sorted(sorted(range(n), key=lambda v: (-g.degree(v), v))[:k])
    if method == "random-poll":
        return sorted(int(v) for v in rng.choice(n, size=k, replace=False))
    raise ContractError(f"unknown method {method!r}")


# expected weak insensitivity -----------------------------------------------------------

@dataclass
class EwiCell:
    mu: float
    sigma: float
    mean_delta: float
    se: float
    violated: bool
    feasible: bool = True


def perturb(profile: Profile, mean: float, sigma: float, rng: np.random.Generator,
            law=None) -> Profile:
    """Move every voter to a uniform ranking at a random distance whose law
    has the given mean."""
    law = law or dtg_with_mean(mean, sigma, profile.r)
    if law is None:
        raise ContractError(f"no distance law with mean {mean} and spread {sigma}")
    return Profile([random_at_distance(p, sample_steps(law, rng), rng) for p in profile])


def ewi_test(rule: Callable[[Profile], AggregateResult] | str, base_profiles: Sequence,
             mu_grid: Sequence[float], sigma_grid: Sequence[float], trials: int,
             rng: np.random.Generator) -> list[EwiCell]:
    """Worst mean aggregate error per (mu, sigma) cell under perturbations of
    mean mu; a cell is violated when that mean exceeds mu by more than three
    standard errors (never less than the perturbation law's own spread
    over the trials). Cells whose (mu, sigma) admits no distance law are
    reported as infeasible and skipped."""
    if isinstance(rule, str):
        name = rule
        rule = lambda P: aggregate(name, P, dictator=0)  # noqa: E731
    if any(not 0 <= m <= 1 for m in mu_grid) or any(not 0 <= s <= 0.28 + 1e-12 for s in sigma_grid):
        raise ContractError("grids must lie within [0,1] x [0, 0.28]")
    profiles = [_as_profile(p) for p in base_profiles]
    out = []
    for mu in mu_grid:
        for sigma in sigma_grid:
            law = dtg_with_mean(mu, sigma, profiles[0].r)
            if law is None:
                out.append(EwiCell(mu, sigma, math.nan, math.nan, False, feasible=False))
                continue
            # a rule that passes the perturbation straight through has this spread
            floor = law.std() / math.sqrt(trials)
            worst = None
            for P in profiles:
                truth = rule(P)
                vals = np.array([delta_error(truth, rule(perturb(P, mu, sigma, rng, law)))
                                 for _ in range(trials)])
                se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
                cell = EwiCell(mu, sigma, float(vals.mean()), se,
                               bool(vals.mean() > mu + 3 * max(se, floor) + 1e-12))
                if worst is None or (cell.violated, cell.mean_delta - mu) > (worst.violated, worst.mean_delta - mu):
                    worst = cell
            out.append(worst)
    return out


# cooperative games ------------------------------------------------------------------

class TuGame:
    def __init__(self, n: int, value: Callable[[frozenset], float]):
        self.n = n
        self._value = value
        self._memo: dict[frozenset, float] = {}

    def __call__(self, S: Iterable[int]) -> float:
        S = frozenset(S)
        if not S:
            return 0
        if S not in self._memo:
            self._memo[S] = self._value(S)
        return self._memo[S]

    @property
    def grand(self) -> frozenset:
        return frozenset(range(self.n))


def similarity_game(c) -> TuGame:
    """nu(S) = sum of c over unordered pairs inside S. Entries may be
    Fractions for exact arithmetic."""
    n = len(c)
    for i in range(n):
        for j in range(n):
            if c[i][j] != c[j][i]:
                raise ContractError("similarity matrix must be symmetric")

    def value(S):
        members = sorted(S)
        return sum((c[i][j] for i, j in combinations(members, 2)), 0)

    return TuGame(n, value)


def shapley_similarity(c) -> list:
    n = len(c)
    return [sum((c[i][j] for i in range(n) if i != j), 0) / 2 for j in range(n)]


def _upper_vector(game: TuGame) -> list:
    full = game.grand
    return [game(full) - game(full - {i}) for i in range(game.n)]


def gately(game: TuGame) -> list:
    """Allocation equalizing every player's propensity to disrupt."""
    full = game(game.grand)
    single = [game({i}) for i in range(game.n)]
    marg = _upper_vector(game)
    gaps = [m - s for m, s in zip(marg, single)]
    denom = sum(gaps)
    if denom == 0:
        warnings.warn("all marginal contributions are zero; splitting equally")
        return [full / game.n] * game.n
    surplus = full - sum(single)
    return [s + gap * surplus / denom for s, gap in zip(single, gaps)]


def minimal_rights(game: TuGame, upper: list | None = None) -> list:
    upper = upper if upper is not None else _upper_vector(game)
    out = []
    for i in range(game.n):
        others = [j for j in range(game.n) if j != i]
        best = None
        for size in range(len(others) + 1):
            for rest in combinations(others, size):
                val = game(set(rest) | {i}) - sum((upper[j] for j in rest), 0)
                if best is None or val > best:
                    best = val
        out.append(best)
    return out


def tau_value(game: TuGame, return_lambda: bool = False):
    upper = _upper_vector(game)
    lower = minimal_rights(game, upper)
    full = game(game.grand)
    su, sl = sum(upper), sum(lower)
    if su == sl:
        lam = 1
        alloc = list(upper)
    else:
        lam = (full - sl) / (su - sl)
        alloc = [lam * u + (1 - lam) * m for u, m in zip(upper, lower)]
    return (alloc, lam) if return_lambda else alloc


# app scores ---------------------------------------------------------------------------

def social_centrality_score(user_prefs: Sequence, aggregates: Sequence, counts: Sequence[float]
                            ) -> float:
    """Half-point score in [0, 10] from response-weighted footrule
    similarity to the per-topic aggregates; unanswered topics (None) are
    dropped."""
    if not len(user_prefs) == len(aggregates) == len(counts):
        raise ContractError("need one user ranking, aggregate and count per topic")
    used = [(p, a, w) for p, a, w in zip(user_prefs, aggregates, counts) if p is not None]
    if not used:
        raise ContractError("user answered no topics")
    total = sum(w for _, _, w in used)
    sim = sum(w / total * footrule_similarity(p, a) for p, a, w in used)
    return math.ceil(20 * math.sqrt(max(sim, 0.0)) - 1e-9) / 2


def friend_similarity(prefs_i: Sequence, prefs_j: Sequence) -> float:
    """Percentage: 100 times the summed footrule similarity over topics both
    answered."""
    if len(prefs_i) != len(prefs_j):
        raise ContractError("topic lists differ in length")
    return 100 * sum(footrule_similarity(p, q) for p, q in zip(prefs_i, prefs_j)
                     if p is not None and q is not None)
