"""Two-phase influence maximization: observations, the exact objective f,
the GDD-based proxy h, the two-phase pipeline, and joint search over the
budget split k1 and the delay d."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .diffusion import (DecaySchedule, DiffusionTrace, Estimate, LivePool, _summary,
                        activation_times_batch, simulate_ic)
from .errors import CapExceeded, ContractError
from .graph import DEFAULT_ENUM_CAP, Graph, live_outcomes, mask_nodes, reach_levels, reach_mask, to_mask
from .seeding import (CESample, FaceParams, FaceResult, GreedyResult, Objective, PoolSpread,
                      SampleSpace, face, gdd, gdd_weights, greedy_hill_climb, rmax,
                      shapley_estimate, single_discount, spic, weighted_discount)

STAGNATION = "D"  # delay token: start phase two once phase one has stopped


@dataclass(frozen=True)
class Observation:
    already_activated: frozenset
    recently_activated: frozenset
    step: int

    def __post_init__(self):
        if self.already_activated & self.recently_activated:
            raise ContractError("already and recently activated sets must be disjoint")


def observe(trace: DiffusionTrace, d: int | str) -> Observation:
    """Snapshot at step d: nodes activated exactly at d, and everything earlier.
    ``d = STAGNATION`` means after the diffusion stopped."""
    steps = trace.steps
    if d == STAGNATION:
        d = len(steps)
    if d < 0:
        raise ContractError("delay must be non-negative")
    earlier = frozenset(v for layer in steps[:d] for v in layer)
    recent = frozenset(steps[d]) if d < len(steps) else frozenset()
    return Observation(earlier, recent, d)


@dataclass
class TwoPhaseConfig:
    k: int
    k1: int
    d: int | str = STAGNATION
    M1: int = 200
    M2: int = 200
    decay: DecaySchedule | None = None
    mode: str = "myopic"
    selector1: str = "greedy"
    selector2: str | None = None
    pool_size: int = 500

    def __post_init__(self):
        if not 0 <= self.k1 <= self.k:
            raise ContractError(f"first-phase budget {self.k1} outside 0..{self.k}")
        if self.d != STAGNATION and (not isinstance(self.d, (int, np.integer)) or self.d < 0):
            raise ContractError(f"delay must be a non-negative integer or {STAGNATION!r}")
        if self.M1 < 1 or self.M2 < 1:
            raise ContractError("Monte-Carlo counts must be positive")
        if self.mode not in ("myopic", "farsighted"):
            raise ContractError(f"unknown mode {self.mode!r}")
        for sel in (self.selector1, self.selector2 or self.selector1):
            if sel not in SELECTORS:
                raise ContractError(f"unknown selector {sel!r}")

    @property
    def k2(self) -> int:
        return self.k - self.k1


# exact objective f -------------------------------------------------------------------

class ExactTwoPhase:
    """Exact evaluator of f(S1, d, k2) by live-graph enumeration.

    Live graphs are grouped by the observation at step d; inside each group
    the best second-phase set is found by brute force over subsets of the
    nodes neither seeded in phase one nor already activated.
    """

    def __init__(self, g: Graph, cap: int = DEFAULT_ENUM_CAP, subset_cap: int = 200_000):
        self.g = g
        self.outcomes = list(live_outcomes(g, cap))
        self.subset_cap = subset_cap

    def groups(self, s1: Iterable[int], d: int | str) -> dict[tuple[int, int], list]:
        smask = to_mask(s1)
        out = defaultdict(list)
        for p, outs in self.outcomes:
            if p == 0.0:
                continue
            layers = reach_levels(outs, smask) if smask else []
            stop = len(layers) if d == STAGNATION else d
            a = 0
            for layer in layers[:stop]:
                a |= layer
            r = layers[stop] if stop < len(layers) else 0
            out[(a, r)].append((p, outs))
        return out

    def value(self, s1: Iterable[int], d: int | str, k2: int) -> float:
        s1 = sorted(set(s1))
        smask = to_mask(s1)
        total = []
        for (a, r), members in self.groups(s1, d).items():
            mass = math.fsum(p for p, _ in members)
            total.append(mass * a.bit_count())
            cand = [v for v in range(self.g.n) if not (smask | a) >> v & 1]
            size = min(k2, len(cand))
            if math.comb(len(cand), size) > self.subset_cap:
                raise CapExceeded(f"C({len(cand)},{size}) second-phase subsets exceed the cap",
                                  required=math.comb(len(cand), size))
            best = -1.0
            for s2 in combinations(cand, size):
                start = r | to_mask(s2)
                score = math.fsum(p * reach_mask(outs, start, blocked=a).bit_count()
                                  for p, outs in members)
                if score > best:
                    best = score
            total.append(best)
        return math.fsum(total)

    def best_first_phase(self, k1: int, d: int | str, k2: int) -> tuple[float, tuple[int, ...]]:
        best = (-1.0, ())
        for s1 in combinations(range(self.g.n), k1):
            v = self.value(s1, d, k2)
            if v > best[0] + 1e-12:
                best = (v, s1)
        return best


def eval_f_exact(g: Graph, s1: Iterable[int], d: int | str, k2: int,
                 cap: int = DEFAULT_ENUM_CAP) -> float:
    return ExactTwoPhase(g, cap).value(s1, d, k2)


# Monte-Carlo proxy h --------------------------------------------------------------

def eval_h(g: Graph, s1: Iterable[int], d: int | str, k2: int, M1: int, M2: int,
           rng: np.random.Generator) -> Estimate:
    """Two-level Monte Carlo of the two-phase spread with GDD second-phase
    seeds: M1 first-phase runs, each completed M2 times on the residual graph."""
    s1 = sorted(set(s1))
    totals = np.empty(M1)
    for i in range(M1):
        if s1:
            obs = observe(simulate_ic(g, s1, rng), d)
        else:
            obs = Observation(frozenset(), frozenset(), 0 if d == STAGNATION else d)
        residual = g.subgraph_without(obs.already_activated)
        s2 = gdd(residual, k2, preselected=obs.recently_activated,
                 removed=obs.already_activated | set(s1), allow_shortfall=True)
        start = sorted(obs.recently_activated | set(s2))
        if start:
            reached = (activation_times_batch(residual, start, M2, rng) >= 0).sum(axis=1).mean()
        else:
            reached = 0.0
        totals[i] = len(obs.already_activated) + reached
    return _summary(totals)


class PoolTwoPhase:
    """Single-level estimator of the two-phase value on a fixed pool of live
    graphs. The observation at step d only depends on arcs leaving nodes
    activated before d, and the residual graph drops exactly those nodes,
    so each pooled live graph can serve both phases.

    Second-phase seeds come from GDD run on each sample's residual graph
    with the recently activated nodes pre-selected. With a decay schedule,
    every activation at step t is worth Gamma(t), second-phase seeds count
    at step d (at the stagnation step when d is STAGNATION).
    """

    def __init__(self, g: Graph, pool: LivePool, decay: DecaySchedule | None = None):
        self.g = g.to_directed()
        self.pool = pool
        self.decay = decay
        n = self.g.n
        p = self.g.weight_matrix()
        self.P = p
        certain = p >= 1.0
        with np.errstate(divide="ignore"):
            self.log_keep = np.where(certain, 0.0, np.log1p(-np.minimum(p, 1.0 - 1e-300)))
        self.certain = certain.astype(float)
        self.PT = p.T.copy()
        self.gamma = decay.vector(2 * n + 2) if decay is not None else np.ones(2 * n + 2)
        self._cache: dict = {}

    def _gdd_batch(self, selected: np.ndarray, removed: np.ndarray, k2: int) -> np.ndarray:
        sel = selected.copy()
        chosen = np.zeros_like(sel)
        rows = np.arange(sel.shape[0])
        for _ in range(k2):
            self_f = sel.astype(float)
            keep = np.exp(self_f @ self.log_keep) * ((self_f @ self.certain) == 0)
            avail = (~sel & ~removed).astype(float)
            w = keep * (1.0 + avail @ self.PT)
            w[sel | removed] = -np.inf
            pick = np.argmax(w, axis=1)
            ok = np.isfinite(w[rows, pick])
            sel[rows[ok], pick[ok]] = True
            chosen[rows[ok], pick[ok]] = True
        return chosen

    def per_sample(self, s1: Sequence[int], d: int | str, k2: int,
                   selector2: Callable | None = None) -> np.ndarray:
        s1 = sorted(set(s1))
        M, n = self.pool.size, self.pool.n
        start = np.zeros((M, n), dtype=bool)
        start[:, s1] = True
        if s1:
            t1 = self.pool.levels(start)
        else:
            t1 = np.full((M, n), -1, dtype=np.int32)
        if d == STAGNATION:
            dstep = t1.max(axis=1) + 1 if s1 else np.zeros(M, dtype=np.int32)
        else:
            dstep = np.full(M, int(d), dtype=np.int32)
        already = (t1 >= 0) & (t1 < dstep[:, None])
        recent = t1 == dstep[:, None]
        removed = already.copy()
        removed[:, s1] = True
        if selector2 is None:
            s2 = self._gdd_batch(recent, removed, k2)
        else:
            s2 = selector2(recent, removed, k2)
        t2 = self.pool.levels(recent | s2, blocked=already)
        g1 = np.where(already, self.gamma[np.clip(t1, 0, None)], 0.0).sum(axis=1)
        when = np.where(t2 >= 0, t2 + dstep[:, None], 0)
        g2 = np.where(t2 >= 0, self.gamma[np.clip(when, 0, len(self.gamma) - 1)], 0.0).sum(axis=1)
        return g1 + g2

    def value(self, s1: Iterable[int], d: int | str, k2: int) -> float:
        key = (frozenset(s1), d, k2)
        if key not in self._cache:
            self._cache[key] = float(self.per_sample(sorted(key[0]), d, k2).mean())
        return self._cache[key]

    def estimate(self, s1: Iterable[int], d: int | str, k2: int) -> Estimate:
        return _summary(self.per_sample(sorted(set(s1)), d, k2))

    def stagnation_steps(self, s1: Sequence[int]) -> np.ndarray:
        """Per sample, the first step at which phase one activates nobody."""
        start = np.zeros((self.pool.size, self.pool.n), dtype=bool)
        start[:, list(s1)] = True
        return self.pool.levels(start).max(axis=1) + 1


def h_objective(evaluator: PoolTwoPhase, d: int | str, k2: int) -> Objective:
    return Objective(lambda s: evaluator.value(s, d, k2), name="h-pool")


# pipeline ----------------------------------------------------------------------------

def _select(g: Graph, name: str, k: int, obj: Objective | None, rng: np.random.Generator,
            candidates: Sequence[int], preselected: Sequence[int] = (),
            removed: Sequence[int] = ()) -> list[int]:
    if k == 0:
        return []
    if name == "gdd":
        return gdd(g, k, preselected=preselected, removed=removed, allow_shortfall=True)
    if name in ("sd", "wd"):
        sub = g.subgraph_without(set(removed) | set(preselected))
        picker = single_discount if name == "sd" else weighted_discount
        order = picker(sub, sub.n)
        return [v for v in order if v in set(candidates)][:k]
    if name == "greedy":
        return greedy_hill_climb(obj, candidates, k).selected
    if name == "rmax":
        return rmax(obj, k, 5 * len(candidates), rng, candidates=candidates)
    if name == "face":
        space = SampleSpace(n=g.n, sizes=[k], candidates=candidates)
        return sorted(face(space, lambda s: obj(s.nodes), None, rng).best.nodes)
    if name == "spic":
        cand = set(candidates)
        vals = shapley_estimate(obj, 5 * len(candidates), rng, players=sorted(cand))
        full = np.zeros(g.n)
        full[: len(vals.values)] = vals.values
        full[[v for v in range(g.n) if v not in cand]] = -1.0
        from .seeding import NodeValues
        return spic(g, k, obj, 0, rng, values=NodeValues(full, "shapley"))[:k]
    raise ContractError(f"unknown selector {name!r}")


SELECTORS = ("greedy", "gdd", "sd", "wd", "spic", "rmax", "face")


def _residual_objective(g: Graph, base: Sequence[int], removed: Iterable[int], size: int,
                        rng: np.random.Generator) -> tuple[PoolSpread, list[int]]:
    """sigma(base + S) on the graph with ``removed`` deleted, via a pooled
    estimate over the surviving nodes. Returns the objective (on local ids)
    and the local->global node list."""
    gone = set(removed)
    nodes = [v for v in range(g.n) if v not in gone]
    local = {v: i for i, v in enumerate(nodes)}
    pool = LivePool.sample(g, size, rng, nodes=nodes)
    return PoolSpread(pool, base=[local[v] for v in base]), nodes


def select_second_phase(g: Graph, obs: Observation, s1: Iterable[int], k2: int, selector: str,
                        rng: np.random.Generator, pool_size: int = 300) -> list[int]:
    """Phase-two seeds on the residual graph, recently activated nodes acting
    as a partial seed set. Returns fewer than k2 nodes if not enough remain."""
    blocked = set(obs.already_activated) | set(s1)
    avail = [v for v in range(g.n) if v not in blocked and v not in obs.recently_activated]
    k2 = min(k2, len(avail))
    if k2 == 0:
        return []
    residual = g.subgraph_without(obs.already_activated)
    if selector in ("gdd", "sd", "wd"):
        return _select(residual, selector, k2, None, rng, avail,
                       preselected=sorted(obs.recently_activated), removed=sorted(blocked))
    obj, nodes = _residual_objective(g, sorted(obs.recently_activated),
                                     obs.already_activated, pool_size, rng)
    local = {v: i for i, v in enumerate(nodes)}
    cand_local = [local[v] for v in avail]
    if selector == "greedy":
        picks = greedy_hill_climb(obj, cand_local, k2).selected
    elif selector == "rmax":
        picks = rmax(obj, k2, 5 * len(cand_local), rng, candidates=cand_local)
    elif selector == "face":
        space = SampleSpace(n=len(nodes), sizes=[k2], candidates=cand_local)
        picks = sorted(face(space, lambda s: obj(s.nodes), None, rng).best.nodes)
    elif selector == "spic":
        vals = shapley_estimate(obj, 5 * len(cand_local), rng, players=cand_local)
        sub = residual.subgraph_without(())  # same ids
        full = np.full(g.n, -1.0)
        for v in avail:
            full[v] = vals.values[local[v]]
        from .seeding import NodeValues
        return spic(sub, k2, obj, 0, rng, values=NodeValues(full, "shapley"))
    else:
        raise ContractError(f"unknown selector {selector!r}")
    return [nodes[i] for i in picks]


def first_phase_seeds(g: Graph, config: TwoPhaseConfig, rng: np.random.Generator) -> list[int]:
    cand = list(range(g.n))
    if config.k1 == 0:
        return []
    value_driven = config.selector1 in ("greedy", "spic", "rmax", "face")
    if not value_driven:
        return _select(g, config.selector1, config.k1, None, rng, cand)
    pool = LivePool.sample(g, config.pool_size, rng)
    if config.mode == "farsighted" and config.k2 > 0:
        obj = h_objective(PoolTwoPhase(g, pool), config.d, config.k2)
    else:
        obj = PoolSpread(pool)
    return _select(g, config.selector1, config.k1, obj, rng, cand)


def run_two_phase(g: Graph, config: TwoPhaseConfig, rng: np.random.Generator,
                  s1: Sequence[int] | None = None) -> dict:
    """One realization of the two-phase campaign (Algorithm-style pipeline)."""
    rng1, rng2, rng3 = (np.random.default_rng(s) for s in rng.bit_generator.seed_seq.spawn(3)) \
        if hasattr(rng.bit_generator, "seed_seq") else (rng, rng, rng)
    if s1 is None:
        s1 = first_phase_seeds(g, config, rng1)
    s1 = sorted(s1)
    if s1:
        trace = simulate_ic(g, s1, rng2)
        obs = observe(trace, config.d)
    else:
        trace = DiffusionTrace(())
        obs = Observation(frozenset(), frozenset(), 0 if config.d == STAGNATION else config.d)
    selector2 = config.selector2 or config.selector1
    s2 = select_second_phase(g, obs, s1, config.k2, selector2, rng3, config.pool_size)
    shortfall = config.k2 - len(s2)
    start = sorted(obs.recently_activated | set(s2))
    steps = [list(layer) for layer in trace.steps[:obs.step]]
    if start:
        residual = g.subgraph_without(obs.already_activated)
        cont = simulate_ic(residual, start, rng2)
        for t, layer in enumerate(cont.steps):
            idx = obs.step + t
            while len(steps) <= idx:
                steps.append([])
            steps[idx].extend(layer)
    total = len(obs.already_activated) + (len(cont.activated) if start else 0)
    return {"S1": s1, "S2": sorted(s2), "observation": obs, "shortfall": shortfall,
            "trace": [sorted(x) for x in steps], "total_activated": total}


def evaluate_two_phase_policy(g: Graph, s1: Sequence[int], d: int | str, k2: int, selector: str,
                              runs: int, rng: np.random.Generator, pool_size: int = 300,
                              continuations: int = 20) -> Estimate:
    """Expected final spread of the adaptive policy: seed s1, wait d, pick k2
    more with ``selector`` on the observed residual graph, continue. Averaged
    over ``runs`` independent first-phase realizations."""
    s1 = sorted(s1)
    if s1:
        times = activation_times_batch(g, s1, runs, rng)
    else:
        times = np.full((runs, g.n), -1, dtype=np.int32)
    out = np.empty(runs)
    for i in range(runs):
        t = times[i]
        stop = (t.max() + 1 if s1 else 0) if d == STAGNATION else int(d)
        already = frozenset(int(v) for v in np.flatnonzero((t >= 0) & (t < stop)))
        recent = frozenset(int(v) for v in np.flatnonzero(t == stop))
        obs = Observation(already, recent, stop)
        s2 = select_second_phase(g, obs, s1, k2, selector, rng, pool_size)
        start = sorted(recent | set(s2))
        if start:
            residual = g.subgraph_without(already)
            reach = (activation_times_batch(residual, start, continuations, rng) >= 0).sum(axis=1).mean()
        else:
            reach = 0.0
        out[i] = len(already) + reach
    return _summary(out)


# budget split and delay --------------------------------------------------------------

@dataclass
class SplitResult:
    best_k1: int
    best_value: float
    curve: list[tuple[int, float, tuple]]


def optimize_budget_split(g: Graph, k: int, d: int | str, evaluator: str | Callable = "f-exact",
                          grid: Iterable[int] | None = None, pool: PoolTwoPhase | None = None
                          ) -> SplitResult:
    """Value of the best exact-k1 first-phase set for each k1 on the grid.

    ``evaluator`` is "f-exact" (brute force over first-phase sets with the
    exact objective), "h" (greedy first-phase sets under the pooled GDD
    proxy; needs ``pool``), or a callable k1 -> (value, S1).
    """
    grid = list(range(k + 1)) if grid is None else sorted(set(grid))
    if any(not 0 <= x <= k for x in grid):
        raise ContractError(f"grid must lie within 0..{k}")
    curve = []
    if evaluator == "f-exact":
        exact = ExactTwoPhase(g)
        for k1 in grid:
            val, s1 = exact.best_first_phase(k1, d, k - k1)
            curve.append((k1, val, tuple(s1)))
    elif evaluator == "h":
        if pool is None:
            raise ContractError("the h evaluator needs a PoolTwoPhase")
        for k1 in grid:
            obj = h_objective(pool, d, k - k1)
            res = greedy_hill_climb(obj, range(g.n), k1)
            curve.append((k1, res.prefix_values[-1], tuple(res.selected)))
    else:
        for k1 in grid:
            val, s1 = evaluator(k1)
            curve.append((k1, float(val), tuple(s1)))
    best = max(curve, key=lambda c: (c[1], -c[0]))
    return SplitResult(best[0], best[1], curve)


@dataclass
class JointResult:
    k1: int
    d: int | str
    s1: list[int]
    value: float
    search: FaceResult | None = None


def default_delay_bound(evaluator: PoolTwoPhase, k: int) -> int:
    """Largest phase-one stagnation step seen in the pool for the GDD top-k1
    sets, k1 = 1..k. Used as the upper end of the delay range."""
    order = gdd(evaluator.g, k)
    return int(max(evaluator.stagnation_steps(order[:k1]).max() for k1 in range(1, k + 1)))


def face_joint(g: Graph, k: int, d_max: int, evaluator: PoolTwoPhase,
               params: FaceParams | None, rng: np.random.Generator) -> JointResult:
    """Cross-entropy search over (k1, d, S1) jointly.

    k1 ranges over 1..k and d over 1..d_max plus the stagnation token. A
    sample with k1 = k is single phase and is recorded with d = 0; a delay
    no earlier than the last pooled stagnation step of S1 is the same
    policy as waiting for stagnation and is recorded as such, as is any
    delay that scores no better than waiting for stagnation. First-iteration
    inclusion probabilities follow the GDD weights of the full graph.
    """
    if d_max < 0:
        raise ContractError("d_max must be non-negative")
    weights = gdd_weights(g)
    delays = list(range(1, d_max + 1)) + [STAGNATION]
    stag: dict[frozenset, int] = {}

    def canonical(s: CESample) -> CESample:
        if len(s.nodes) == k:
            return CESample(s.nodes, (("d", 0),))
        d = s.get("d")
        if d != STAGNATION:
            if s.nodes not in stag:
                stag[s.nodes] = int(evaluator.stagnation_steps(sorted(s.nodes)).max())
            if d >= stag[s.nodes]:
                return CESample(s.nodes, (("d", STAGNATION),))
        return s

    space = SampleSpace(n=g.n, sizes=list(range(1, k + 1)), aux={"d": delays},
                        node_weights=weights, canonical=canonical)

    def value(s: CESample) -> float:
        return evaluator.value(s.nodes, s.get("d"), k - len(s.nodes))

    res = face(space, value, params, rng)
    best, d = res.best, res.best.get("d")
    if d not in (0, STAGNATION):
        # waiting for stagnation costs nothing when it scores the same
        late = evaluator.value(best.nodes, STAGNATION, k - len(best.nodes))
        if late >= res.best_value - 1e-12:
            d = STAGNATION
    return JointResult(len(best.nodes), d, sorted(best.nodes), res.best_value, res)


def exhaustive_joint(g: Graph, k: int, d_max: int, evaluator: PoolTwoPhase,
                     first_phase: Callable[[int, int], list[int]] | None = None) -> JointResult:
    """Sweep every (k1, d); S1 per cell from ``first_phase(k1, d)`` (greedy
    under the pooled objective by default)."""
    best = None
    for k1 in range(1, k + 1):
        for d in ([0] if k1 == k else range(1, d_max + 1)):
            if first_phase is None:
                s1 = greedy_hill_climb(h_objective(evaluator, d, k - k1), range(g.n), k1).selected
            else:
                s1 = first_phase(k1, d)
            v = evaluator.value(s1, d, k - k1)
            if best is None or v > best.value + 1e-12:
                best = JointResult(k1, d, sorted(s1), v)
    return best


GOLDEN = (math.sqrt(5) - 1) / 2


def golden_probes(lo: float, hi: float) -> tuple[float, float]:
    """Interior probe points: x1 = hi - 0.618(hi-lo), x2 = lo + 0.618(hi-lo)."""
    span = hi - lo
    return hi - GOLDEN * span, lo + GOLDEN * span


def golden_section_max(f: Callable[[int], float], lo: int, hi: int) -> tuple[int, float, list[int]]:
    """Golden-section search for a maximum over the integers lo..hi with
    rounded, memoized probes. Exact for unimodal f."""
    memo: dict[int, float] = {}
    probes: list[int] = []

    def val(x: int) -> float:
        if x not in memo:
            memo[x] = f(x)
            probes.append(x)
        return memo[x]

    a, b = lo, hi
    while b - a > 2:
        x1, x2 = golden_probes(a, b)
        i1, i2 = int(round(x1)), int(round(x2))
        if i1 == i2:
            i2 = i1 + 1
        if val(i1) >= val(i2):
            b = i2
        else:
            a = i1
    best = max(range(a, b + 1), key=lambda x: (val(x), -x))
    return best, memo[best], probes


def sequential_delay_max(f: Callable[[int], float], d_max: int) -> tuple[int, float]:
    """Scan d = 0, 1, ... and stop at the first decrease."""
    best_d, best_v = 0, f(0)
    for d in range(1, d_max + 1):
        v = f(d)
        if v < best_v:
            break
        if v > best_v:
            best_d, best_v = d, v
    return best_d, best_v


def golden_section_k1(evaluator: Callable[[int, int], float], k: int, d_max: int,
                      inner_d_search: str = "sequential") -> tuple[int, int, float]:
    """Golden-section over k1 in 0..k; each probe picks its best delay by a
    sequential scan from d = 0 (or a nested golden-section)."""
    if inner_d_search not in ("sequential", "golden"):
        raise ContractError(f"unknown inner search {inner_d_search!r}")
    inner: dict[int, tuple[int, float]] = {}

    def best_for(k1: int) -> float:
        if k1 not in inner:
            if k1 == k:
                inner[k1] = (0, evaluator(k1, 0))
            elif inner_d_search == "sequential":
                inner[k1] = sequential_delay_max(lambda d: evaluator(k1, d), d_max)
            else:
                d, v, _ = golden_section_max(lambda d: evaluator(k1, d), 0, d_max)
                inner[k1] = (d, v)
        return inner[k1][1]

    k1, value, _ = golden_section_max(best_for, 0, k)
    return k1, inner[k1][0], value
