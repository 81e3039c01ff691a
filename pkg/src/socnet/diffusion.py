"""Independent cascade and linear threshold diffusion, spread estimators,
and the time-discounted spread nu."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ContractError
from .graph import DEFAULT_ENUM_CAP, Graph, live_outcomes, reach_levels, to_mask


@dataclass(frozen=True)
class DiffusionTrace:
    """Newly activated nodes per step; steps[0] is the seed set."""
    steps: tuple[tuple[int, ...], ...]

    @property
    def activated(self) -> set[int]:
        return {v for layer in self.steps for v in layer}

    @property
    def count(self) -> int:
        return sum(len(layer) for layer in self.steps)

    def activation_times(self) -> dict[int, int]:
        return {v: t for t, layer in enumerate(self.steps) for v in layer}

    def to_json(self) -> str:
        return json.dumps([list(layer) for layer in self.steps])


class DecaySchedule:
    """Value Gamma(t) of an activation at step t.

    ``geometric(delta)`` gives delta**t; ``table(values)`` gives values[t] and
    holds the last entry for later steps.
    """

    def __init__(self, delta: float | None = None, values: Sequence[float] | None = None):
        if (delta is None) == (values is None):
            raise ContractError("give exactly one of delta or values")
        if delta is not None:
            if not 0.0 <= delta <= 1.0:
                raise ContractError(f"decay rate {delta} outside [0,1]")
            self.kind = "geometric"
            self.delta = float(delta)
            self.values = None
        else:
            vals = [float(x) for x in values]
            if not vals:
                raise ContractError("decay table is empty")
            if any(not 0.0 <= x <= 1.0 for x in vals):
                raise ContractError("decay table values must lie in [0,1]")
            if any(b > a for a, b in zip(vals, vals[1:])):
                raise ContractError("decay table must be non-increasing")
            self.kind = "table"
            self.delta = None
            self.values = vals

    @classmethod
    def geometric(cls, delta: float) -> "DecaySchedule":
        return cls(delta=delta)

    @classmethod
    def table(cls, values: Sequence[float]) -> "DecaySchedule":
        return cls(values=values)

    def __call__(self, t: int) -> float:
        if self.kind == "geometric":
            # 0**0 == 1, so seeds keep full value even when delta = 0
            return self.delta ** t
        return self.values[min(t, len(self.values) - 1)]

    def vector(self, length: int) -> np.ndarray:
        return np.array([self(t) for t in range(length)])

    def __repr__(self) -> str:
        if self.kind == "geometric":
            return f"DecaySchedule.geometric({self.delta})"
        return f"DecaySchedule.table({self.values})"


class Estimate(NamedTuple):
    mean: float
    se: float


def _check_seeds(g: Graph, seeds) -> list[int]:
    seeds = sorted(set(int(s) for s in seeds))
    for s in seeds:
        if not 0 <= s < g.n:
            raise ContractError(f"unknown node id {s}")
    return seeds


def simulate_ic(g: Graph, seeds: Iterable[int], rng: np.random.Generator) -> DiffusionTrace:
    """One independent-cascade run in synchronous rounds."""
    seeds = _check_seeds(g, seeds)
    if not seeds:
        raise ContractError("independent cascade needs at least one seed")
    active = set(seeds)
    steps = [tuple(seeds)]
    frontier = seeds
    for _ in range(g.n):
        fresh = []
        for u in frontier:
            for v, w, _ in g.out_edges(u):
                if v in active:
                    continue
                if rng.random() < w:
                    active.add(v)
                    fresh.append(v)
        if not fresh:
            break
        fresh.sort()
        steps.append(tuple(fresh))
        frontier = fresh
    return DiffusionTrace(tuple(steps))


def _arc_arrays(g: Graph):
    d = g.to_directed()
    src = np.array([u for u, _, _ in d.edges], dtype=np.int64)
    dst = np.array([v for _, v, _ in d.edges], dtype=np.int64)
    w = np.array([p for _, _, p in d.edges], dtype=float)
    return d, src, dst, w


def activation_times_batch(g: Graph, seeds: Sequence[int], count: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Activation steps for ``count`` independent IC runs, shape (count, n);
    -1 marks nodes never activated. Each arc gets one coin per run, which is
    the live-graph view of the cascade."""
    d, src, dst, w = _arc_arrays(g)
    n, m = d.n, d.m
    times = np.full((count, n), -1, dtype=np.int32)
    if count == 0:
        return times
    seeds = list(seeds)
    times[:, seeds] = 0
    if m == 0 or not seeds:
        return times
    incidence = np.zeros((m, n), dtype=np.float32)
    incidence[np.arange(m), dst] = 1.0
    coins = rng.random((count, m)) < w
    frontier = np.zeros((count, n), dtype=bool)
    frontier[:, seeds] = True
    active = frontier.copy()
    for t in range(1, n + 1):
        fired = (frontier[:, src] & coins).astype(np.float32)
        fresh = (fired @ incidence > 0) & ~active
        if not fresh.any():
            break
        times[fresh] = t
        active |= fresh
        frontier = fresh
    return times


def _batched(total: int, g: Graph, budget: int = 4_000_000):
    size = max(1, budget // max(1, 2 * g.m + g.n))
    done = 0
    while done < total:
        step = min(size, total - done)
        yield step
        done += step


def _summary(values: np.ndarray) -> Estimate:
    if len(values) < 2:
        return Estimate(float(values.mean()), 0.0)
    return Estimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values))))


def estimate_sigma(g: Graph, seeds: Iterable[int], iterations: int,
                   rng: np.random.Generator) -> Estimate:
    """Monte-Carlo expected spread with its standard error."""
    if iterations < 1:
        raise ContractError("need at least one iteration")
    seeds = _check_seeds(g, seeds)
    if not seeds:
        return Estimate(0.0, 0.0)
    if len(seeds) == g.n:
        return Estimate(float(g.n), 0.0)
    counts = np.concatenate([
        (activation_times_batch(g, seeds, c, rng) >= 0).sum(axis=1)
        for c in _batched(iterations, g)])
    return _summary(counts.astype(float))


def estimate_nu(g: Graph, seeds: Iterable[int], decay: DecaySchedule, iterations: int,
                rng: np.random.Generator) -> Estimate:
    """Monte-Carlo time-discounted spread: each activated node adds Gamma(its step)."""
    if iterations < 1:
        raise ContractError("need at least one iteration")
    seeds = _check_seeds(g, seeds)
    if not seeds:
        return Estimate(0.0, 0.0)
    gamma = np.append(decay.vector(g.n + 1), 0.0)  # index -1 -> 0
    vals = np.concatenate([
        gamma[activation_times_batch(g, seeds, c, rng)].sum(axis=1)
        for c in _batched(iterations, g)])
    return _summary(vals)


def exact_sigma(g: Graph, seeds: Iterable[int], cap: int = DEFAULT_ENUM_CAP) -> float:
    """sum_X p(X) sigma^X(S) by live-graph enumeration."""
    seeds = _check_seeds(g, seeds)
    if not seeds:
        return 0.0
    from .graph import reach_mask
    smask = to_mask(seeds)
    return math.fsum(p * reach_mask(outs, smask).bit_count() for p, outs in live_outcomes(g, cap))


def exact_nu(g: Graph, seeds: Iterable[int], decay: DecaySchedule,
             cap: int = DEFAULT_ENUM_CAP) -> float:
    seeds = _check_seeds(g, seeds)
    if not seeds:
        return 0.0
    smask = to_mask(seeds)
    total = []
    for p, outs in live_outcomes(g, cap):
        layers = reach_levels(outs, smask)
        total.append(p * sum(decay(t) * layer.bit_count() for t, layer in enumerate(layers)))
    return math.fsum(total)


def simulate_lt(g: Graph, seeds: Iterable[int], rng: np.random.Generator,
                threshold_bounds: Sequence[float] | None = None,
                thresholds: Sequence[float] | None = None) -> DiffusionTrace:
    """Linear threshold run. Arc (u,v) weight is u's influence on v.

    Thresholds are drawn uniformly from (lower_v, 1]; pass ``thresholds`` to
    fix them instead (useful for continuing a diffusion in a later phase).
    """
    seeds = _check_seeds(g, seeds)
    if not seeds:
        raise ContractError("linear threshold needs at least one seed")
    d = g.to_directed()
    for v in range(d.n):
        incoming = math.fsum(w for _, w, _ in d.in_edges(v))
        if incoming > 1.0 + 1e-9:
            raise ContractError(f"incoming influence weights of node {v} sum to {incoming} > 1")
    lower = np.zeros(d.n) if threshold_bounds is None else np.asarray(threshold_bounds, dtype=float)
    if np.any(lower < 0) or np.any(lower >= 1):
        raise ContractError("threshold lower bounds must lie in [0,1)")
    if thresholds is None:
        u = 1.0 - rng.random(d.n)  # uniform on (0, 1]
        chi = lower + u * (1.0 - lower)
    else:
        chi = np.asarray(thresholds, dtype=float)
    active = set(seeds)
    steps = [tuple(seeds)]
    received = np.zeros(d.n)
    frontier = seeds
    for _ in range(d.n):
        touched = set()
        for u in frontier:
            for v, w, _ in d.out_edges(u):
                if v not in active:
                    received[v] += w
                    touched.add(v)
        fresh = sorted(v for v in touched if received[v] >= chi[v])
        if not fresh:
            break
        active.update(fresh)
        steps.append(tuple(fresh))
        frontier = fresh
    return DiffusionTrace(tuple(steps))


def lt_received_influence(g: Graph, active: Iterable[int]) -> np.ndarray:
    """Total weight each node receives from the given active set."""
    d = g.to_directed()
    got = np.zeros(d.n)
    for u in set(active):
        for v, w, _ in d.out_edges(u):
            got[v] += w
    return got


class LivePool:
    """A fixed batch of sampled live graphs stored as boolean adjacency
    tensors. Used as common random numbers: every seed set is scored on the
    same realizations, so comparisons between sets are not blurred by
    independent noise."""

    def __init__(self, adjacency: np.ndarray):
        self.adj = adjacency  # (M, n, n) bool, adj[m, u, v] = arc u->v present
        self.size, self.n = adjacency.shape[0], adjacency.shape[1]
        self._reach = None
        self._adj_f = None

    @classmethod
    def sample(cls, g: Graph, size: int, rng: np.random.Generator,
               nodes: Sequence[int] | None = None) -> "LivePool":
        """Sample ``size`` live graphs. With ``nodes`` given, only arcs inside
        that node list are kept and node i of the pool is nodes[i]."""
        d, src, dst, w = _arc_arrays(g)
        if nodes is not None:
            local = np.full(d.n, -1, dtype=np.int64)
            local[np.asarray(nodes, dtype=np.int64)] = np.arange(len(nodes))
            keep = (local[src] >= 0) & (local[dst] >= 0)
            src, dst, w = local[src[keep]], local[dst[keep]], w[keep]
            n = len(nodes)
        else:
            n = d.n
        adj = np.zeros((size, n, n), dtype=bool)
        if len(w):
            coins = rng.random((size, len(w))) < w
            rows, arcs = np.nonzero(coins)
            adj[rows, src[arcs], dst[arcs]] = True
        return cls(adj)

    @property
    def reach(self) -> np.ndarray:
        """Transitive-reflexive closure, (M, n, n) bool, by repeated squaring."""
        if self._reach is None:
            r = self.adj | np.eye(self.n, dtype=bool)[None]
            r = r.astype(np.float32)
            for _ in range(max(1, math.ceil(math.log2(max(self.n, 2))))):
                nxt = (np.matmul(r, r) > 0).astype(np.float32)
                if np.array_equal(nxt, r):
                    break
                r = nxt
            self._reach = r > 0
        return self._reach

    def covered(self, seeds: Sequence[int]) -> np.ndarray:
        seeds = list(seeds)
        if not seeds:
            return np.zeros((self.size, self.n), dtype=bool)
        return self.reach[:, seeds, :].any(axis=1)

    def spread(self, seeds: Sequence[int]) -> Estimate:
        return _summary(self.covered(seeds).sum(axis=1).astype(float))

    def gains(self, covered: np.ndarray) -> np.ndarray:
        """Mean number of new nodes each candidate would add, shape (n,)."""
        fresh = self.reach & ~covered[:, None, :]
        return fresh.sum(axis=2).mean(axis=0)

    def adjacency_float(self) -> np.ndarray:
        if self._adj_f is None:
            self._adj_f = self.adj.astype(np.float32)
        return self._adj_f

    def levels(self, start: np.ndarray, blocked: np.ndarray | None = None) -> np.ndarray:
        """BFS steps from a per-sample start mask (M, n) bool; -1 = unreached."""
        adj = self.adjacency_float()
        frontier = start.copy()
        if blocked is not None:
            frontier &= ~blocked
        times = np.where(frontier, 0, -1).astype(np.int32)
        visited = frontier.copy()
        if blocked is not None:
            visited |= blocked
        for t in range(1, self.n + 1):
            nxt = np.matmul(frontier.astype(np.float32)[:, None, :], adj)[:, 0, :] > 0
            nxt &= ~visited
            if not nxt.any():
                break
            times[nxt] = t
            visited |= nxt
            frontier = nxt
        return times
