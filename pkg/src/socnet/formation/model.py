"""Utility model, pairwise stability, best responses and the recursive
formation process."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError

EPS = 1e-9  # utilities closer than this count as equal


@dataclass(frozen=True)
class FormationParams:
    """Benefit schedule b[0] = b_1, b[1] = b_2, ... (zero beyond the list),
    link cost c, entry factor c0 and rent fraction gamma."""
    b: tuple[float, ...]
    c: float
    c0: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        b = tuple(float(x) for x in self.b)
        if not b or any(x <= y for x, y in zip(b, b[1:])) or b[-1] < 0:
            raise ContractError("benefits must be positive and strictly decreasing")
        if not 0 <= self.gamma < 1:
            raise ContractError("rent fraction must lie in [0, 1)")
        object.__setattr__(self, "b", b)

    @classmethod
    def geometric(cls, delta: float, c: float, c0: float = 0.0, gamma: float = 0.0,
                  length: int = 64) -> "FormationParams":
        return cls(tuple(delta ** i for i in range(1, length + 1)), c, c0, gamma)

    def benefit(self, dist: int) -> float:
        return self.b[dist - 1] if 1 <= dist <= len(self.b) else 0.0

    def with_values(self, **kw) -> "FormationParams":
        return replace(self, **kw)


class FormationState:
    """Undirected simple graph over the entered nodes (0..n-1, in entry
    order) with an event log."""

    def __init__(self, n: int = 1, edges: Iterable[tuple[int, int]] = ()):
        self.adj = np.zeros((n, n), dtype=bool)
        for u, v in edges:
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise ContractError(f"bad edge ({u}, {v})")
            self.adj[u, v] = self.adj[v, u] = True
        self.log: list[dict] = []
        self.stable = False

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        us, vs = np.nonzero(np.triu(self.adj, 1))
        return list(zip(us.tolist(), vs.tolist()))

    def degree(self, v: int) -> int:
        return int(self.adj[v].sum())

    def copy(self) -> "FormationState":
        s = FormationState(self.n)
        s.adj = self.adj.copy()
        s.log = list(self.log)
        s.stable = self.stable
        return s

    def add_node(self) -> int:
        n = self.n
        adj = np.zeros((n + 1, n + 1), dtype=bool)
        adj[:n, :n] = self.adj
        self.adj = adj
        return n

    def toggle(self, u: int, v: int) -> None:
        self.adj[u, v] = self.adj[v, u] = not self.adj[u, v]

    def to_networkx(self):
        import networkx as nx
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges())
        return g


def _closure(adj: np.ndarray) -> np.ndarray:
    """Reachability (including self) for a stack of adjacency matrices."""
    n = adj.shape[-1]
    reach = (adj | np.eye(n, dtype=bool)).astype(np.float32)
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        nxt = (reach @ reach) > 0
        reach = nxt.astype(np.float32)
    return reach > 0


def _distances(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    dist = np.full((n, n), -1, dtype=np.int64)
    np.fill_diagonal(dist, 0)
    reach = np.eye(n, dtype=bool)
    frontier = reach.astype(np.float32)
    a = adj.astype(np.float32)
    step = 0
    while True:
        step += 1
        nxt = ((frontier @ a) > 0) & ~reach
        if not nxt.any():
            break
        dist[nxt] = step
        reach |= nxt
        frontier = nxt.astype(np.float32)
    return dist


def essential_matrix(adj: np.ndarray) -> np.ndarray:
    """sep[j, y, z] is True when j (not y or z) lies on every path joining the
    connected pair y, z."""
    n = adj.shape[0]
    stack = np.repeat(adj[None, :, :], n, axis=0)
    idx = np.arange(n)
    stack[idx, idx, :] = False
    stack[idx, :, idx] = False
    conn = _closure(adj)
    without = _closure(stack)
    sep = conn[None, :, :] & ~without
    sep[idx, idx, :] = False
    sep[idx, :, idx] = False
    return sep


def essential_nodes(state: FormationState, y: int, z: int) -> set[int]:
    if y == z:
        raise ContractError("need two distinct nodes")
    sep = essential_matrix(state.adj)
    return {int(j) for j in np.flatnonzero(sep[:, y, z])}


def utilities(adj: np.ndarray, params: FormationParams) -> np.ndarray:
    """Every node's utility, without entry fees."""
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0)
    dist = _distances(adj)
    bvec = np.array((0.0,) + params.b + (0.0,) * max(0, n - len(params.b)))
    ben = np.where(dist > 0, bvec[np.clip(dist, 0, len(bvec) - 1)], 0.0)
    deg = adj.sum(axis=1)
    u = deg * (params.b[0] - params.c) + np.where(dist > 1, ben, 0.0).sum(axis=1)
    if params.gamma > 0 and n > 2:
        sep = essential_matrix(adj)
        count = sep.sum(axis=0)
        u -= params.gamma * np.where(count > 0, ben, 0.0).sum(axis=1)
        share = np.where(count > 0, 2 * params.gamma * ben / np.maximum(count, 1), 0.0)
        u += 0.5 * (sep * share[None, :, :]).sum(axis=(1, 2))
    return u


def utility(state: FormationState, params: FormationParams, j: int,
            entrant_target: int | None = None) -> float:
    """Utility of j; ``entrant_target`` marks j as the newly entering node
    whose first link goes to that node (entry fee charged on its degree
    before the link)."""
    u = float(utilities(state.adj, params)[j])
    if entrant_target is not None:
        u -= params.c0 * (state.degree(entrant_target) - int(state.adj[j, entrant_target]))
    return u


class UtilityCache:
    """Memoized utility vectors keyed by edge set."""

    def __init__(self, params: FormationParams):
        self.params = params
        self._memo: dict[bytes, np.ndarray] = {}

    def __call__(self, adj: np.ndarray) -> np.ndarray:
        key = adj.shape[0].to_bytes(2, "little") + np.packbits(adj).tobytes()
        got = self._memo.get(key)
        if got is None:
            got = utilities(adj, self.params)
            if len(self._memo) > 200_000:
                self._memo.clear()
            self._memo[key] = got
        return got


@dataclass
class Action:
    kind: str  # add | delete | pass
    partner: int | None = None
    gain: float = 0.0


def _toggled(adj: np.ndarray, u: int, v: int) -> np.ndarray:
    out = adj.copy()
    out[u, v] = out[v, u] = not adj[u, v]
    return out


def best_response(state: FormationState, node: int, params: FormationParams | UtilityCache,
                  rng: np.random.Generator) -> Action:
    """Myopic best single-link alteration for ``node``. Additions need the
    partner not to lose; a move needs a strict gain; ties are broken
    uniformly."""
    util = params if isinstance(params, UtilityCache) else UtilityCache(params)
    base = util(state.adj)
    options: list[Action] = []
    for x in range(state.n):
        if x == node:
            continue
        after = util(_toggled(state.adj, node, x))
        if state.adj[node, x]:
            options.append(Action("delete", x, after[node] - base[node]))
        elif after[x] >= base[x] - EPS:
            options.append(Action("add", x, after[node] - base[node]))
    if not options:
        return Action("pass")
    top = max(a.gain for a in options)
    if top <= EPS:
        return Action("pass")
    best = [a for a in options if a.gain >= top - EPS]
    return best[int(rng.integers(len(best)))] if len(best) > 1 else best[0]


def is_pairwise_stable(state: FormationState, params: FormationParams | UtilityCache
                       ) -> tuple[bool, tuple | None]:
    """(stable?, first violating move). A move is a profitable deletion by
    either endpoint, or an addition that helps one side and hurts neither."""
    util = params if isinstance(params, UtilityCache) else UtilityCache(params)
    base = util(state.adj)
    for u in range(state.n):
        for v in range(u + 1, state.n):
            after = util(_toggled(state.adj, u, v))
            du, dv = after[u] - base[u], after[v] - base[v]
            if state.adj[u, v]:
                if du > EPS:
                    return False, ("delete", u, v)
                if dv > EPS:
                    return False, ("delete", v, u)
            elif (du > EPS and dv >= -EPS) or (dv > EPS and du >= -EPS):
                return False, ("add", u, v)
    return True, None


class FormationAborted(RuntimeError):
    def __init__(self, message: str, state: FormationState):
        super().__init__(message)
        self.state = state


def entry_options(state: FormationState, util: UtilityCache) -> list[tuple[int, float]]:
    """(target, entrant utility) for every target that would accept."""
    n = state.n
    base = util(state.adj)
    adj = np.zeros((n + 1, n + 1), dtype=bool)
    adj[:n, :n] = state.adj
    out = []
    for x in range(n):
        trial = adj.copy()
        trial[n, x] = trial[x, n] = True
        after = util(trial)
        if after[x] >= base[x] - EPS:
            out.append((x, float(after[n] - util.params.c0 * state.degree(x))))
    return out


def enter(state: FormationState, util: UtilityCache, rng: np.random.Generator) -> int | None:
    """The next node proposes its best accepted entry link if that gives it
    strictly positive utility. Returns the new node id or None."""
    opts = entry_options(state, util)
    if not opts:
        return None
    top = max(u for _, u in opts)
    if top <= EPS:
        return None
    best = [x for x, u in opts if u >= top - EPS]
    target = best[int(rng.integers(len(best)))] if len(best) > 1 else best[0]
    new = state.add_node()
    state.toggle(new, target)
    state.log.append({"event": "enter", "node": new, "target": target, "utility": top})
    return new


def stabilize(state: FormationState, util: UtilityCache, rng: np.random.Generator,
              round_cap: int | None = None) -> int:
    """Random-order best-response passes until a full pass makes no move."""
    cap = round_cap if round_cap is not None else 10 * state.n ** 2
    moves = 0
    while True:
        moved = False
        for v in rng.permutation(state.n):
            act = best_response(state, int(v), util, rng)
            if act.kind == "pass":
                continue
            before = util(state.adj)
            state.toggle(int(v), act.partner)
            after = util(state.adj)
            state.log.append({"event": act.kind, "node": int(v), "partner": act.partner,
                              "before": float(before[v]), "after": float(after[v])})
            moved = True
            moves += 1
            if moves > cap:
                raise FormationAborted(f"no stable state after {cap} moves", state)
        if not moved:
            break
    ok, bad = is_pairwise_stable(state, util)
    if not ok:
        raise FormationAborted(f"pass found no move but {bad} is profitable", state)
    state.stable = True
    return moves


def run_recursive_formation(params: FormationParams | Callable[[int], FormationParams], n_max: int,
                            rng: np.random.Generator, base: FormationState | None = None,
                            round_cap: int | None = None,
                            on_stable: Callable[[FormationState], None] | None = None
                            ) -> FormationState:
    """Grow the network one entrant at a time, stabilizing after each entry.

    ``params`` may be a function of the entrant's 1-based number, which is
    how deviation experiments change conditions for a single entry. If an
    entrant declines under fixed parameters the network stops growing.
    """
    state = base.copy() if base is not None else FormationState(1)
    schedule = params if callable(params) else (lambda _n: params)
    caches: dict[FormationParams, UtilityCache] = {}

    def cache_for(p):
        if p not in caches:
            caches[p] = UtilityCache(p)
        return caches[p]

    if state.n > 1:
        stabilize(state, cache_for(schedule(state.n)), rng, round_cap)
        if on_stable:
            on_stable(state)
    declined = 0
    while state.n < n_max:
        number = state.n + 1
        util = cache_for(schedule(number + declined))
        if enter(state, util, rng) is None:
            state.log.append({"event": "decline", "node": state.n})
            if callable(params) and declined == 0:
                declined = 1  # try again once conditions have moved on
                continue
            break
        declined = 0
        stabilize(state, util, rng, round_cap)
        if on_stable:
            on_stable(state)
    return state
