"""Generators that spread preferences over a social graph, the distance
composition table T_r with its operator, mean-distance propagation over
all pairs, and validation of generated corpora."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import CapExceeded, ContractError
from .graph import Graph
from .preferences import (DiscreteTruncGauss, PairDistanceModel, Preference, count_at_distance,
                          dtg_pmf, dtg_with_mean, pair_count, permutations_by_distance,
                          sample_steps)

KINDS = ("ic", "s-random", "s-mu", "s-sigma", "d", "r")
MAX_IC_ALTERNATIVES = 7
DEFAULT_SIGMA_GRID = (0.05, 0.10, 0.15, 0.20)


@dataclass
class GeneratedCorpus:
    """rankings[t, v] is node v's ranking on topic t; ``orders[t]`` lists the
    nodes in assignment order."""
    rankings: np.ndarray
    kind: str
    seed: int | None = None
    orders: np.ndarray | None = None

    @property
    def topics(self) -> int:
        return self.rankings.shape[0]

    @property
    def n(self) -> int:
        return self.rankings.shape[1]

    @property
    def r(self) -> int:
        return self.rankings.shape[2]

    def preference(self, t: int, v: int) -> Preference:
        return Preference(tuple(self.rankings[t, v]))

    def pair_distances(self, i: int, j: int) -> np.ndarray:
        """Kendall-Tau steps between nodes i and j on every topic."""
        pos_j = np.argsort(self.rankings[:, j, :], axis=1)
        seq = np.take_along_axis(pos_j, self.rankings[:, i, :], axis=1)
        r = self.r
        inv = np.zeros(self.topics, dtype=np.int64)
        for a in range(r):
            for b in range(a + 1, r):
                inv += seq[:, a] > seq[:, b]
        return inv

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["topic", "node", "ranking"])
        for t in range(self.topics):
            for v in range(self.n):
                w.writerow([t, v, " ".join(map(str, self.rankings[t, v]))])
        return out.getvalue()


def read_corpus_csv(text: str, kind: str = "file") -> GeneratedCorpus:
    rows = [row for row in csv.reader(io.StringIO(text)) if row and row[0] != "topic"]
    cells = {(int(t), int(v)): tuple(int(a) for a in rk.split()) for t, v, rk in rows}
    topics = 1 + max(t for t, _ in cells)
    n = 1 + max(v for _, v in cells)
    r = len(next(iter(cells.values())))
    arr = np.zeros((topics, n, r), dtype=np.int8)
    for (t, v), rk in cells.items():
        arr[t, v] = rk
    return GeneratedCorpus(arr, kind)


class _Space:
    """All r! rankings with their pairwise Kendall-Tau steps."""

    def __init__(self, r: int):
        self.r = r
        self.perms = np.array(list(permutations(range(r))), dtype=np.int8)
        self.index = {tuple(p): i for i, p in enumerate(self.perms.tolist())}
        pos = np.argsort(self.perms, axis=1)
        # dist[a, b]: pairs ordered one way by ranking a and the other way by b
        dist = np.zeros((len(self.perms), len(self.perms)), dtype=np.int16)
        for x in range(r):
            for y in range(x + 1, r):
                ax, ay = self.perms[:, x], self.perms[:, y]
                dist += pos[:, ax].T > pos[:, ay].T
        self.dist = dist
        self.counts = np.array([count_at_distance(r, k) for k in range(pair_count(r) + 1)], float)


def _check_graph(g: Graph) -> None:
    if g.directed:
        raise ContractError("preference generators need an undirected graph")
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for v in g.neighbors(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) != g.n:
        raise ContractError("graph must be connected")


class _Generator:
    def __init__(self, g: Graph, model: PairDistanceModel, kind: str, r: int,
                 rng: np.random.Generator):
        self.g, self.model, self.kind, self.r, self.rng = g, model, kind, r, rng
        self.nbrs = [g.neighbors(v) for v in range(g.n)]
        self.groups = [np.array(gr, dtype=np.int8) for gr in permutations_by_distance(r)]
        self._dists: dict[tuple[int, int], DiscreteTruncGauss] = {}
        self.space = _Space(r) if kind in ("ic", "d") else None
        if kind in ("ic", "d", "s-random", "s-mu", "s-sigma"):
            for u in range(g.n):
                for v in self.nbrs[u]:
                    if np.isnan(model.mu[u, v]):
                        raise ContractError(f"no distance model for edge ({u}, {v})")

    def dist(self, i: int, j: int) -> DiscreteTruncGauss:
        key = (min(i, j), max(i, j))
        if key not in self._dists:
            self._dists[key] = self.model.distribution(key[0], key[1], self.r)
        return self._dists[key]

    def uniform(self) -> np.ndarray:
        return self.rng.permutation(self.r).astype(np.int8)

    def at_distance(self, base: np.ndarray, steps: int) -> np.ndarray:
        group = self.groups[steps]
        q = group[int(self.rng.integers(len(group)))]
        return base[q]

    def ic_pick(self, u: int, assigned: dict[int, int]) -> np.ndarray:
        sp = self.space
        logw = np.zeros(len(sp.perms))
        for j in self.nbrs[u]:
            if j in assigned:
                pmf = np.asarray(self.dist(u, j).pmf)
                steps = sp.dist[:, assigned[j]]
                with np.errstate(divide="ignore"):
                    logw += np.log(pmf[steps]) - np.log(sp.counts[steps])
        top = logw.max()
        if not np.isfinite(top):
            w = np.ones(len(logw))
        else:
            w = np.exp(logw - top)
        idx = int(self.rng.choice(len(w), p=w / w.sum()))
        assigned[u] = idx
        return sp.perms[idx]

    def neighbor_for_s(self, u: int, done: list[int]) -> int:
        if self.kind == "s-random":
            return done[int(self.rng.integers(len(done)))]
        if self.kind == "s-mu":
            w = np.array([1.0 - self.model.mu[u, j] for j in done])
        else:
            sig = np.array([self.model.sigma[u, j] for j in done])
            if np.any(sig == 0):
                w = (sig == 0).astype(float)
            else:
                w = 1.0 / sig
        if w.sum() <= 0:
            w = np.ones(len(done))
        return done[int(self.rng.choice(len(done), p=w / w.sum()))]

    def topic(self) -> tuple[np.ndarray, np.ndarray]:
        n, rng = self.g.n, self.rng
        out = np.zeros((n, self.r), dtype=np.int8)
        if self.kind == "r":
            for v in range(n):
                out[v] = self.uniform()
            return out, np.arange(n)
        assigned = np.zeros(n, dtype=bool)
        order: list[int] = []
        ic_index: dict[int, int] = {}

        def settle(v: int, pref: np.ndarray):
            out[v] = pref
            assigned[v] = True
            order.append(v)

        start = int(rng.integers(n))
        if self.kind == "d":
            size = int(rng.integers(1, math.ceil(math.sqrt(n)) + 1))
            init = [start]
            frontier = set(self.nbrs[start])
            while len(init) < size and frontier:
                v = sorted(frontier)[int(rng.integers(len(frontier)))]
                init.append(v)
                frontier |= set(self.nbrs[v])
                frontier -= set(init)
            first = self.uniform()
            ic_index[start] = self.space.index[tuple(first.tolist())]
            settle(start, first)
            for v in init[1:]:
                settle(v, self.ic_pick(v, ic_index))
        else:
            first = self.uniform()
            if self.kind == "ic":
                ic_index[start] = self.space.index[tuple(first.tolist())]
            settle(start, first)
        pending = {v for u in order for v in self.nbrs[u] if not assigned[v]}
        while pending:
            u = sorted(pending)[int(rng.integers(len(pending)))]
            done = [j for j in self.nbrs[u] if assigned[j]]
            if self.kind == "ic":
                pref = self.ic_pick(u, ic_index)
            elif self.kind == "d":
                best = min(done, key=lambda j: (self.model.mu[u, j], j))
                pref = out[best].copy()
            else:
                j = self.neighbor_for_s(u, done)
                pref = self.at_distance(out[j], sample_steps(self.dist(u, j), rng))
            settle(u, pref)
            pending.discard(u)
            pending |= {v for v in self.nbrs[u] if not assigned[v]}
        return out, np.array(order)


def generate(g: Graph, model: PairDistanceModel, kind: str, topics: int, rng: np.random.Generator,
             r: int = 5, seed: int | None = None) -> GeneratedCorpus:
    if kind not in KINDS:
        raise ContractError(f"unknown generator {kind!r}; choose from {', '.join(KINDS)}")
    if kind in ("ic", "d") and r > MAX_IC_ALTERNATIVES:
        raise CapExceeded(f"{r}! candidate rankings exceed the r <= {MAX_IC_ALTERNATIVES} cap",
                          required=math.factorial(r))
    if topics < 1 or r < 2:
        raise ContractError("need at least one topic and two alternatives")
    _check_graph(g)
    gen = _Generator(g, model, kind, r, rng)
    rankings = np.zeros((topics, g.n, r), dtype=np.int8)
    orders = np.zeros((topics, g.n), dtype=np.int32)
    for t in range(topics):
        rankings[t], orders[t] = gen.topic()
    return GeneratedCorpus(rankings, kind, seed, orders)


# T_r table -------------------------------------------------------------------------------

def round_grid(x: float, step: float = 0.01) -> float:
    q = Decimal(str(float(x))) / Decimal(str(step))
    return float(q.quantize(Decimal(1), rounding=ROUND_HALF_UP) * Decimal(str(step)))


def level_pair_means(r: int, mc: int | None = None, rng: np.random.Generator | None = None
                     ) -> np.ndarray:
    """M[a, b] = expected normalized distance between two rankings drawn
    uniformly at a and b inversions from a common anchor. Exact by full
    enumeration unless ``mc`` is given."""
    groups = permutations_by_distance(r)
    c = pair_count(r)
    if mc is None:
        if r > 6:
            raise CapExceeded(f"exact level-pair table for r={r} is too large", required=math.factorial(r) ** 2)
        sp = _Space(r)
        level = np.empty(len(sp.perms), dtype=np.int64)
        for k, grp in enumerate(groups):
            for p in grp:
                level[sp.index[p]] = k
        sums = np.zeros((c + 1, c + 1))
        np.add.at(sums, (level[:, None], level[None, :]), sp.dist.astype(float))
        sizes = np.bincount(level, minlength=c + 1).astype(float)
        return sums / np.outer(sizes, sizes) / c
    rng = rng or np.random.default_rng()
    out = np.zeros((c + 1, c + 1))
    for a in range(c + 1):
        for b in range(c + 1):
            ga, gb = groups[a], groups[b]
            tot = 0
            for _ in range(mc):
                p = ga[int(rng.integers(len(ga)))]
                q = gb[int(rng.integers(len(gb)))]
                qpos = [0] * r
                for i, x in enumerate(q):
                    qpos[x] = i
                seq = [qpos[x] for x in p]
                tot += sum(1 for i in range(r) for j in range(i + 1, r) if seq[i] > seq[j])
            out[a, b] = tot / mc / c
    return out


@dataclass
class TrTable:
    r: int
    step: float
    values: np.ndarray  # values[i, j] = T_r(i*step, j*step)
    spread: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def index(self, d: float) -> int:
        k = int(round(d / self.step))
        if abs(k * self.step - d) > 1e-9 or not 0 <= k < self.size:
            raise ContractError(f"{d} is not on the {self.step} grid")
        return k

    def __call__(self, dx: float, dy: float) -> float:
        return float(self.values[self.index(dx), self.index(dy)])

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["dx", "dy", "value"])
        for i in range(self.size):
            for j in range(self.size):
                w.writerow([f"{i * self.step:.2f}", f"{j * self.step:.2f}", f"{self.values[i, j]:.2f}"])
        return out.getvalue()


def build_tr(r: int, sigma_grid: Sequence[float] = DEFAULT_SIGMA_GRID, mc_per_cell: int | None = None,
             rng: np.random.Generator | None = None, step: float = 0.01) -> TrTable:
    """Expected distance between two rankings derived from a common anchor
    at distances drawn with means d_x and d_y, averaged over the spreads in
    ``sigma_grid`` and rounded to ``step``.

    Draws use the family member whose mean equals the requested distance;
    spreads that cannot reach that mean are skipped for the cell. With
    ``mc_per_cell`` None the expectation is computed exactly from the
    level-pair means.
    """
    if r < 2:
        raise ContractError("need r >= 2")
    m = level_pair_means(r, mc_per_cell, rng) if (mc_per_cell is None and r <= 6) \
        else level_pair_means(r, mc_per_cell or 200, rng)
    size = int(round(1 / step)) + 1
    laws = []
    for i in range(size):
        row = []
        for s in sigma_grid:
            d = dtg_with_mean(round(i * step, 10), s, r)
            if d is not None:
                row.append((s, np.asarray(d.pmf)))
        laws.append(dict(row))
    raw = np.zeros((size, size))
    spread = np.zeros((size, size))
    for i in range(size):
        for j in range(i, size):
            vals = [float(laws[i][s] @ m @ laws[j][s]) for s in sigma_grid
                    if s in laws[i] and s in laws[j]]
            if not vals:
                vals = [float(laws[i][min(laws[i])] @ m @ laws[j][min(laws[j])])]
            raw[i, j] = raw[j, i] = float(np.mean(vals))
            spread[i, j] = spread[j, i] = float(np.std(vals))
    vals = np.vectorize(lambda x: round_grid(x, step))(raw)
    return TrTable(r, step, vals, spread)


def oplus(t: TrTable, dx: float, dy: float) -> float:
    t.index(dx), t.index(dy)
    if dx <= 0.5 and dy <= 0.5:
        return t(dx, dy)
    return max(dx, dy)


def _oplus_matrix(t: TrTable) -> np.ndarray:
    """Index-level operator: OP[i, j] = grid index of d_i (+) d_j."""
    size = t.size
    idx = np.rint(t.values / t.step).astype(np.int64)
    ii, jj = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    half = int(round(0.5 / t.step))
    return np.where((ii <= half) & (jj <= half), idx, np.maximum(ii, jj))


def msm_sp(g: Graph, model: PairDistanceModel, t: TrTable, max_rounds: int = 1000
           ) -> tuple[np.ndarray, np.ndarray]:
    """Distance for every pair by shortest-path style relaxation with the
    composition operator, to a fixpoint. Returns (distance, similarity)."""
    n = g.n
    step = t.step
    cur = np.full((n, n), t.size - 1, dtype=np.int64)
    np.fill_diagonal(cur, 0)
    for u, v, _ in g.edges:
        mu = model.mu[u, v]
        if np.isnan(mu):
            raise ContractError(f"no observed mean for edge ({u}, {v})")
        cur[u, v] = cur[v, u] = int(round(round_grid(float(mu), step) / step))
    op = _oplus_matrix(t)
    for _ in range(max_rounds):
        changed = False
        for p in range(n):
            row = cur[p]
            cand = op[row[:, None], row[None, :]]
            better = cand < cur
            if better.any():
                cur = np.where(better, cand, cur)
                changed = True
        if not changed:
            break
    else:
        raise ContractError("relaxation did not reach a fixpoint")
    d = cur * step
    return d, 1.0 - d


def validate(corpus: GeneratedCorpus, truth: PairDistanceModel, smoothing: float = 1e-6) -> dict:
    """Per modelled pair, compare the corpus' empirical distance law with
    the model's: KL(model || empirical) and the absolute mean gap; RMS over
    pairs."""
    if corpus.n != truth.n:
        raise ContractError("corpus and model disagree on the number of nodes")
    r = corpus.r
    c = pair_count(r)
    kls, gaps, smoothed = [], [], 0
    for i, j in truth.pairs():
        steps = corpus.pair_distances(i, j)
        emp = np.bincount(steps, minlength=c + 1) / len(steps)
        model = np.asarray(truth.distribution(i, j, r).pmf)
        if np.any((emp == 0) & (model > 0)):
            smoothed += 1
            emp = (emp + smoothing) / (1 + smoothing * len(emp))
        used = model > 0
        kls.append(float(np.sum(model[used] * np.log(model[used] / emp[used]))))
        grid = np.arange(c + 1) / c
        gaps.append(abs(float(grid @ emp - grid @ model)))
    if not kls:
        raise ContractError("model has no pairs to validate")
    return {"rms_kl": math.sqrt(np.mean(np.square(kls))),
            "rms_mean_abs": math.sqrt(np.mean(np.square(gaps))),
            "pairs": len(kls), "smoothed_pairs": smoothed}


def fit_pair_model(corpus: GeneratedCorpus, pairs: Sequence[tuple[int, int]]) -> PairDistanceModel:
    """Maximum-likelihood distance model per pair from a corpus."""
    from .preferences import mle_fit
    c = pair_count(corpus.r)
    rows = []
    for i, j in pairs:
        fit = mle_fit(corpus.pair_distances(i, j) / c, corpus.r)
        rows.append((i, j, fit.mu, fit.sigma))
    return PairDistanceModel.from_pairs(corpus.n, rows)
