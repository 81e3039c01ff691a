"""Single-phase seed selection: greedy hill climbing, degree discounts,
GDD, cross-entropy search (FACE), RMax, Shapley-based selection and the
value post-processing schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .diffusion import DecaySchedule, LivePool, exact_nu, exact_sigma
from .errors import ContractError
from .graph import Graph


class Objective:
    """Set function wrapper with memoization.

    ``budget`` is "exact" (selectors return exactly k nodes) or "at-most"
    (callers may keep the best prefix of a greedy run).
    """

    def __init__(self, fn: Callable[[frozenset], float], name: str = "objective",
                 budget: str = "exact", memoize: bool = True):
        if budget not in ("exact", "at-most"):
            raise ContractError(f"unknown budget semantics {budget!r}")
        self.fn = fn
        self.name = name
        self.budget = budget
        self._cache: dict[frozenset, float] | None = {} if memoize else None
        self.evaluations = 0

    def __call__(self, nodes: Iterable[int]) -> float:
        key = frozenset(int(v) for v in nodes)
        if self._cache is not None and key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        val = float(self.fn(key))
        if self._cache is not None:
            self._cache[key] = val
        return val

    def marginal_gains(self, selected: Sequence[int], candidates: Sequence[int]) -> np.ndarray:
        base = self(selected)
        return np.array([self(list(selected) + [c]) - base for c in candidates])


class PoolSpread(Objective):
    """sigma estimated on a fixed pool of live graphs (common random numbers),
    optionally with a pre-seeded base set that counts toward the spread."""

    def __init__(self, pool: LivePool, base: Sequence[int] = (), name: str = "sigma-pool"):
        self.pool = pool
        self.base = tuple(base)
        self._base_cover = pool.covered(self.base)
        super().__init__(self._value, name=name)

    def _value(self, nodes: frozenset) -> float:
        cover = self._base_cover | self.pool.covered(sorted(nodes))
        return float(cover.sum(axis=1).mean())

    def marginal_gains(self, selected, candidates):
        cover = self._base_cover | self.pool.covered(list(selected))
        return self.pool.gains(cover)[list(candidates)]

    def permutation_marginals(self, order: Sequence[int]) -> np.ndarray:
        cover = self._base_cover.copy()
        prev = cover.sum(axis=1).mean()
        out = np.empty(len(order))
        for i, v in enumerate(order):
            cover |= self.pool.reach[:, v, :]
            cur = cover.sum(axis=1).mean()
            out[i] = cur - prev
            prev = cur
        return out


def exact_sigma_objective(g: Graph) -> Objective:
    return Objective(lambda s: exact_sigma(g, s), name="sigma-exact")


def exact_nu_objective(g: Graph, decay: DecaySchedule) -> Objective:
    return Objective(lambda s: exact_nu(g, s, decay), name="nu-exact")


def pool_sigma_objective(g: Graph, pool_size: int, rng: np.random.Generator) -> PoolSpread:
    return PoolSpread(LivePool.sample(g, pool_size, rng))


@dataclass
class NodeValues:
    values: np.ndarray
    provenance: str
    se: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ContractError("node values must be finite")
        if self.provenance not in ("shapley", "degree", "gdd", "custom"):
            raise ContractError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return len(self.values)


@dataclass
class GreedyResult:
    selected: list[int]
    prefix_values: list[float]  # value after 0, 1, ..., k picks

    def best_prefix(self) -> list[int]:
        best = int(np.argmax(self.prefix_values))
        return self.selected[:best]


def greedy_hill_climb(obj: Objective, candidates: Iterable[int], k: int) -> GreedyResult:
    """Add, k times, the candidate with the largest marginal gain (lowest id on ties)."""
    pool = sorted(set(int(c) for c in candidates))
    if k > len(pool):
        raise ContractError(f"budget {k} exceeds {len(pool)} candidates")
    selected: list[int] = []
    values = [obj(selected)]
    remaining = list(pool)
    for _ in range(k):
        gains = np.asarray(obj.marginal_gains(selected, remaining), dtype=float)
        best = int(np.argmax(gains))  # first maximum = lowest id
        selected.append(remaining.pop(best))
        values.append(obj(selected))
    return GreedyResult(selected, values)


def _discount_pick(g: Graph, k: int, weighted: bool) -> list[int]:
    if k > g.n:
        raise ContractError(f"budget {k} exceeds {g.n} nodes")
    d = g.to_directed()
    removed = [False] * d.n
    chosen = []
    for _ in range(k):
        best, best_score = -1, -math.inf
        for u in range(d.n):
            if removed[u]:
                continue
            score = sum((w if weighted else 1.0) for v, w, _ in d.out_edges(u) if not removed[v])
            if score > best_score:
                best, best_score = u, score
        chosen.append(best)
        removed[best] = True
    return chosen


def single_discount(g: Graph, k: int) -> list[int]:
    """Repeatedly take the node of largest out-degree, then delete it."""
    return _discount_pick(g, k, weighted=False)


def weighted_discount(g: Graph, k: int) -> list[int]:
    """Repeatedly take the node of largest outgoing weight sum, then delete it."""
    return _discount_pick(g, k, weighted=True)


def gdd_weights(g: Graph, selected: Iterable[int] = (), removed: Iterable[int] = ()) -> np.ndarray:
    """w_v = prod over selected in-neighbours x of (1 - p_xv), times
    (1 + sum of p_vy over unselected out-neighbours y). Removed nodes are
    treated as deleted from the graph; selected and removed nodes get -inf."""
    d = g.to_directed()
    sel = set(selected)
    gone = set(removed)
    w = np.empty(d.n)
    for v in range(d.n):
        if v in sel or v in gone:
            w[v] = -math.inf
            continue
        keep = 1.0
        for x, p, _ in d.in_edges(v):
            if x in sel:
                keep *= 1.0 - p
        out = 1.0 + sum(p for y, p, _ in d.out_edges(v) if y not in sel and y not in gone)
        w[v] = keep * out
    return w


def gdd(g: Graph, k: int, preselected: Iterable[int] = (), removed: Iterable[int] = (),
        allow_shortfall: bool = False) -> list[int]:
    """Generalized degree discount. ``preselected`` nodes count as already
    chosen (they discount their out-neighbours) but are not returned."""
    sel = list(preselected)
    gone = set(removed)
    available = g.n - len(set(sel) | gone)
    if k > available:
        if not allow_shortfall:
            raise ContractError(f"budget {k} exceeds {available} available nodes")
        k = available
    picks = []
    for _ in range(k):
        w = gdd_weights(g, sel, gone)
        v = int(np.argmax(w))
        picks.append(v)
        sel.append(v)
    return picks


# cross-entropy search ---------------------------------------------------------------

@dataclass
class FaceParams:
    n_min: int | None = None
    n_max: int | None = None
    n_elite: int | None = None
    alpha: float = 0.6
    max_iters: int = 20
    tol: float = 1e-9

    def resolved(self, n: int) -> "FaceParams":
        return FaceParams(
            n_min=self.n_min or n,
            n_max=self.n_max or 20 * n,
            n_elite=self.n_elite or math.ceil(n / 4),
            alpha=self.alpha, max_iters=self.max_iters, tol=self.tol)


@dataclass(frozen=True)
class CESample:
    nodes: frozenset
    aux: tuple = ()  # sorted (name, value) pairs

    def get(self, name, default=None):
        return dict(self.aux).get(name, default)


@dataclass
class SampleSpace:
    """Subsets of ``candidates`` whose size is drawn from ``sizes``, plus
    optional categorical coordinates ``aux`` (name -> allowed values).

    ``node_weights`` sets the first-iteration inclusion propensities (uniform
    when omitted). ``canonical`` may rewrite a sample, e.g. to collapse
    equivalent encodings.
    """
    n: int
    sizes: Sequence[int]
    candidates: Sequence[int] | None = None
    aux: dict = field(default_factory=dict)
    node_weights: Sequence[float] | None = None
    size_key: str | None = None
    canonical: Callable[[CESample], CESample] | None = None

    def __post_init__(self):
        cand = list(range(self.n)) if self.candidates is None else sorted(self.candidates)
        self.candidates = cand
        if not self.sizes or max(self.sizes) > len(cand) or min(self.sizes) < 0:
            raise ContractError(f"subset sizes {list(self.sizes)} infeasible for {len(cand)} candidates")


def capped_inclusion(weights: np.ndarray, size: int) -> np.ndarray:
    """Scale weights to sum to ``size``; any surplus above 1 is handed to the
    uncapped entries in proportion to their values, repeated until all <= 1."""
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    if size == 0:
        return np.zeros_like(w)
    if w.sum() <= 0:
        w = np.ones_like(w)
    q = size * w / w.sum()
    for _ in range(len(q) + 1):
        over = q > 1.0
        if not over.any():
            break
        surplus = (q[over] - 1.0).sum()
        q[over] = 1.0
        free = (~over) & (q < 1.0)
        if not free.any() or q[free].sum() <= 0:
            # spread evenly over whatever still has room
            room = q < 1.0
            if not room.any():
                break
            q[room] += surplus / room.sum()
        else:
            q[free] += surplus * q[free] / q[free].sum()
    return np.minimum(q, 1.0)


def _draw_subset(q: np.ndarray, size: int, rng: np.random.Generator, tries: int = 200) -> np.ndarray:
    for _ in range(tries):
        pick = np.nonzero(rng.random(len(q)) < q)[0]
        if len(pick) == size:
            return pick
    # conditional Bernoulli rejection failed; fall back to weighted draw without replacement
    p = q + 1e-12
    return np.sort(rng.choice(len(q), size=size, replace=False, p=p / p.sum()))


@dataclass
class FaceIteration:
    iteration: int
    samples: int
    gamma: float
    best_value: float
    node_probabilities: np.ndarray


@dataclass
class FaceResult:
    best: CESample
    best_value: float
    trace: list[FaceIteration]
    converged: bool


def face(space: SampleSpace, obj: Callable[[CESample], float], params: FaceParams | None,
         rng: np.random.Generator) -> FaceResult:
    """Fully adaptive cross-entropy search over ``space``.

    Each iteration draws batches of n_min valid samples, adding batches (up
    to n_max) while neither the elite threshold nor the best value improves.
    Elite samples update the distributions with weights proportional to
    their objective values, smoothed by alpha.
    """
    cand = np.asarray(space.candidates)
    p = (params or FaceParams()).resolved(len(cand))
    if space.node_weights is None:
        w = np.full(len(cand), 1.0 / len(cand))
    else:
        w = np.asarray(space.node_weights, dtype=float)[cand]
        w = np.clip(w, 0.0, None)
        w = w / w.sum() if w.sum() > 0 else np.full(len(cand), 1.0 / len(cand))
    sizes = list(space.sizes)
    size_prob = np.full(len(sizes), 1.0 / len(sizes))
    aux_names = sorted(space.aux)
    aux_vals = {a: list(space.aux[a]) for a in aux_names}
    aux_prob = {a: np.full(len(aux_vals[a]), 1.0 / len(aux_vals[a])) for a in aux_names}
    cache: dict[CESample, float] = {}

    def evaluate(s: CESample) -> float:
        if s not in cache:
            cache[s] = float(obj(s))
        return cache[s]

    def draw() -> CESample:
        si = rng.choice(len(sizes), p=size_prob)
        size = sizes[si]
        picks = _draw_subset(capped_inclusion(w, size), size, rng)
        aux = []
        for a in aux_names:
            aux.append((a, aux_vals[a][rng.choice(len(aux_vals[a]), p=aux_prob[a])]))
        if space.size_key:
            aux.append((space.size_key, size))
        s = CESample(frozenset(int(cand[i]) for i in picks), tuple(sorted(aux)))
        return space.canonical(s) if space.canonical else s

    best, best_val = None, -math.inf
    prev_gamma = None
    stable = 0
    trace = []
    converged = False
    for it in range(1, p.max_iters + 1):
        batch: list[tuple[float, CESample]] = []
        while True:
            for _ in range(p.n_min):
                s = draw()
                batch.append((evaluate(s), s))
            batch.sort(key=lambda t: -t[0])
            gamma = batch[min(p.n_elite, len(batch)) - 1][0]
            top = batch[0][0]
            improved = (top > best_val + p.tol or prev_gamma is None
                        or gamma > prev_gamma + p.tol or abs(gamma - prev_gamma) <= p.tol)
            if improved or len(batch) + p.n_min > p.n_max:
                break
        if batch[0][0] > best_val:
            best_val, best = batch[0]
        elite = [(v, s) for v, s in batch if v >= gamma - p.tol]
        weight = np.array([max(v, 0.0) for v, _ in elite])
        if weight.sum() <= 0:
            weight = np.ones(len(elite))
        index = {int(c): i for i, c in enumerate(cand)}
        freq = np.zeros(len(cand))
        norm = 0.0
        for wt, (_, s) in zip(weight, elite):
            for v in s.nodes:
                freq[index[v]] += wt
            norm += wt * len(s.nodes)
        if norm > 0:
            w = (1 - p.alpha) * w + p.alpha * freq / norm
        if len(sizes) > 1:
            counts = np.zeros(len(sizes))
            for wt, (_, s) in zip(weight, elite):
                counts[sizes.index(len(s.nodes))] += wt
            size_prob = (1 - p.alpha) * size_prob + p.alpha * counts / counts.sum()
            size_prob /= size_prob.sum()
        for a in aux_names:
            counts = np.zeros(len(aux_vals[a]))
            for wt, (_, s) in zip(weight, elite):
                val = s.get(a)
                if val in aux_vals[a]:
                    counts[aux_vals[a].index(val)] += wt
            if counts.sum() > 0:
                aux_prob[a] = (1 - p.alpha) * aux_prob[a] + p.alpha * counts / counts.sum()
                aux_prob[a] /= aux_prob[a].sum()
        probs = np.zeros(space.n)
        probs[cand] = capped_inclusion(w, sizes[int(np.argmax(size_prob))])
        trace.append(FaceIteration(it, len(batch), gamma, best_val, probs))
        if prev_gamma is not None and abs(gamma - prev_gamma) <= p.tol:
            stable += 1
        else:
            stable = 0
        prev_gamma = gamma
        if stable >= 2:
            converged = True
            break
    return FaceResult(best, best_val, trace, converged)


def face_select(obj: Objective, n: int, k: int, rng: np.random.Generator,
                params: FaceParams | None = None, candidates: Sequence[int] | None = None) -> FaceResult:
    """Fixed-size convenience wrapper: maximize obj over k-subsets."""
    space = SampleSpace(n=n, sizes=[k], candidates=candidates)
    return face(space, lambda s: obj(s.nodes), params, rng)


def rmax(obj: Objective, k: int, num_samples: int, rng: np.random.Generator,
         candidates: Sequence[int] | None = None, n: int | None = None,
         dedup: bool = True) -> list[int]:
    """Best of ``num_samples`` uniformly drawn k-subsets."""
    if num_samples < 1:
        raise ContractError("need at least one sample")
    if candidates is None:
        if n is None:
            raise ContractError("give candidates or n")
        candidates = range(n)
    cand = sorted(candidates)
    if k > len(cand):
        raise ContractError(f"budget {k} exceeds {len(cand)} candidates")
    total = math.comb(len(cand), k)
    if dedup and num_samples >= total:
        sets = [frozenset(c) for c in combinations(cand, k)]
    else:
        seen = []
        keys = set()
        attempts = 0
        while len(seen) < num_samples and attempts < 50 * num_samples:
            attempts += 1
            s = frozenset(int(x) for x in rng.choice(cand, size=k, replace=False))
            if dedup and s in keys:
                continue
            keys.add(s)
            seen.append(s)
        sets = seen
    best = max(sets, key=lambda s: (obj(s), [-v for v in sorted(s)]))
    return sorted(best)


def shapley_estimate(obj: Objective, permutations: int, rng: np.random.Generator,
                     players: Sequence[int] | None = None, n: int | None = None) -> NodeValues:
    """Average marginal contribution over random player orders."""
    if permutations < 1:
        raise ContractError("need at least one permutation")
    if players is None:
        if n is None:
            raise ContractError("give players or n")
        players = list(range(n))
    players = list(players)
    size = max(players) + 1 if players else 0
    draws = np.zeros((permutations, len(players)))
    pos = {v: i for i, v in enumerate(players)}
    fast = hasattr(obj, "permutation_marginals")
    for t in range(permutations):
        order = [players[i] for i in rng.permutation(len(players))]
        if fast:
            marg = obj.permutation_marginals(order)
        else:
            vals = [obj(order[:i]) for i in range(len(order) + 1)]
            marg = np.diff(vals)
        for v, g in zip(order, marg):
            draws[t, pos[v]] = g
    values = np.zeros(size)
    se = np.zeros(size)
    values[players] = draws.mean(axis=0)
    if permutations > 1:
        se[players] = draws.std(axis=0, ddof=1) / math.sqrt(permutations)
    return NodeValues(values, "shapley", se)


def exact_shapley(obj: Callable[[frozenset], float], players: Sequence[int]) -> dict[int, float]:
    """Shapley values by the subset formula (exponential; small games only)."""
    players = list(players)
    n = len(players)
    out = {}
    for i in players:
        others = [p for p in players if p != i]
        total = 0.0
        for r in range(n):
            coef = math.factorial(r) * math.factorial(n - r - 1) / math.factorial(n)
            for s in combinations(others, r):
                total += coef * (obj(frozenset(s) | {i}) - obj(frozenset(s)))
        out[i] = total
    return out


def spic(g: Graph, k: int, sigma_evaluator: Objective, permutations: int,
         rng: np.random.Generator, values: NodeValues | None = None) -> list[int]:
    """Shapley values under sigma, then pick greedily with two discounts:
    out-neighbours x of a chosen y keep a (1 - p_yx) fraction of their value;
    in-neighbours z lose p_zy times y's value at selection (floored at 0)."""
    if k > g.n:
        raise ContractError(f"budget {k} exceeds {g.n} nodes")
    if values is None:
        values = shapley_estimate(sigma_evaluator, permutations, rng, n=g.n)
    d = g.to_directed()
    phi = np.array(values.values, dtype=float)
    chosen: list[int] = []
    taken = np.zeros(d.n, dtype=bool)
    for _ in range(k):
        masked = np.where(taken, -np.inf, phi)
        y = int(np.argmax(masked))
        chosen.append(y)
        taken[y] = True
        at_pick = phi[y]
        for x, p, _ in d.out_edges(y):
            if not taken[x]:
                phi[x] *= 1.0 - p
        for z, p, _ in d.in_edges(y):
            if not taken[z]:
                phi[z] = max(0.0, phi[z] - p * at_pick)
    return chosen


POSTPROCESS_MODES = ("eliminate-always", "eliminate-threshold", "eliminate-local",
                     "discount-I", "discount-II", "discount-III")


def _ordered(values: np.ndarray, rng: np.random.Generator | None) -> list[int]:
    if rng is None:
        return sorted(range(len(values)), key=lambda v: (-values[v], v))
    jitter = rng.random(len(values))
    return sorted(range(len(values)), key=lambda v: (-values[v], jitter[v]))


def postprocess(values: NodeValues, g: Graph, k: int, mode: str, threshold: float | None = None,
                local_fraction: float = 0.5, rng: np.random.Generator | None = None) -> list[int]:
    """Turn per-node values into a k-set, avoiding clustered picks.

    Elimination modes skip nodes next to already chosen ones (always, when
    the mutual weight exceeds ``threshold``, or when the node sits in the
    first ``local_fraction`` of the chosen node's neighbours ranked by
    weight) and fall back to plain value order once nothing is eligible.
    Discount modes lower the values of neighbours after each pick. Pass
    ``rng`` to break value ties randomly instead of by lowest id.
    """
    if mode not in POSTPROCESS_MODES:
        raise ContractError(f"unknown post-processing mode {mode!r}")
    if k > g.n:
        raise ContractError(f"budget {k} exceeds {g.n} nodes")
    if mode == "eliminate-threshold" and threshold is None:
        raise ContractError("eliminate-threshold needs a threshold")
    n = g.n
    nbrs = [set(g.neighbors(v)) for v in range(n)]

    def mutual(x, y):
        return max(g.weight(x, y), g.weight(y, x))

    if mode.startswith("eliminate"):
        order = _ordered(values.values, rng)
        chosen: list[int] = []

        def blocked(x):
            for y in chosen:
                if x not in nbrs[y]:
                    continue
                if mode == "eliminate-always":
                    return True
                if mode == "eliminate-threshold" and mutual(x, y) > threshold:
                    return True
                if mode == "eliminate-local":
                    ranked = sorted(nbrs[y], key=lambda z: (-mutual(y, z), z))
                    if ranked.index(x) < local_fraction * len(ranked):
                        return True
            return False

        for x in order:
            if len(chosen) == k:
                break
            if not blocked(x):
                chosen.append(x)
        for x in order:
            if len(chosen) == k:
                break
            if x not in chosen:
                chosen.append(x)
        return chosen

    phi0 = np.array(values.values, dtype=float)
    phi = phi0.copy()
    chosen = []
    taken = np.zeros(n, dtype=bool)
    for _ in range(k):
        pool = np.where(taken, -np.inf, phi)
        if rng is None:
            y = int(np.argmax(pool))
        else:
            top = np.flatnonzero(pool == pool.max())
            y = int(rng.choice(top))
        chosen.append(y)
        taken[y] = True
        at_pick = phi[y]
        for x in nbrs[y]:
            if taken[x]:
                continue
            if mode == "discount-I":
                phi[x] *= 1.0 - g.weight(y, x)
            elif mode == "discount-II":
                phi[x] -= g.weight(y, x) * phi0[x]
            else:
                phi[x] = max(0.0, phi[x] - g.weight(x, y) * at_pick)
    return chosen
