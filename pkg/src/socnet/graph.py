"""Graph containers, edge-list ingestion, probability transforms and
small graph primitives (live graphs, reachability, BFS, max-flow)."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapExceeded, ContractError, ParseError

INF = math.inf
DEFAULT_ENUM_CAP = 22
TRIVALENCY_VALUES = (0.001, 0.01, 0.1)


class Graph:
    """Weighted graph on nodes 0..n-1.

    Directed graphs keep one entry per arc. Undirected graphs keep one entry
    per unordered pair (stored with u < v) and expose symmetric adjacency.
    """

    def __init__(self, n: int, edges: Iterable[tuple], directed: bool = True,
                 labels: Sequence | None = None):
        self.n = int(n)
        self.directed = bool(directed)
        cleaned = []
        seen = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ContractError(f"edge ({u},{v}) references a node outside 0..{self.n - 1}")
            if u == v:
                raise ContractError(f"self-loop at node {u}")
            if not 0.0 <= w <= 1.0:
                raise ContractError(f"edge ({u},{v}) weight {w} outside [0,1]")
            if not self.directed and u > v:
                u, v = v, u
            if (u, v) in seen:
                raise ContractError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            cleaned.append((u, v, w))
        self.edges: list[tuple[int, int, float]] = cleaned
        self.labels = list(labels) if labels is not None else list(range(self.n))
        self._out: list[list[tuple[int, float, int]]] = [[] for _ in range(self.n)]
        self._in: list[list[tuple[int, float, int]]] = [[] for _ in range(self.n)]
        for idx, (u, v, w) in enumerate(cleaned):
            self._out[u].append((v, w, idx))
            self._in[v].append((u, w, idx))
            if not self.directed:
                self._out[v].append((u, w, idx))
                self._in[u].append((v, w, idx))
        for lst in self._out:
            lst.sort()
        for lst in self._in:
            lst.sort()
        self._weight = {}
        for u, v, w in cleaned:
            self._weight[(u, v)] = w
            if not self.directed:
                self._weight[(v, u)] = w

    @property
    def m(self) -> int:
        return len(self.edges)

    def out_edges(self, u: int) -> list[tuple[int, float, int]]:
        """(target, weight, edge index) triples sorted by target id."""
        return self._out[u]

    def in_edges(self, v: int) -> list[tuple[int, float, int]]:
        return self._in[v]

    def successors(self, u: int) -> list[int]:
        return [v for v, _, _ in self._out[u]]

    def predecessors(self, v: int) -> list[int]:
        return [u for u, _, _ in self._in[v]]

    def neighbors(self, u: int) -> list[int]:
        return sorted(set(self.successors(u)) | set(self.predecessors(u)))

    def degree(self, u: int) -> int:
        if self.directed:
            return len(self.neighbors(u))
        return len(self._out[u])

    def out_degree(self, u: int) -> int:
        return len(self._out[u])

    def weight(self, u: int, v: int, default: float = 0.0) -> float:
        return self._weight.get((u, v), default)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._weight

    def to_directed(self) -> "Graph":
        """Symmetrize: every undirected pair becomes two arcs with the same weight."""
        if self.directed:
            return self
        arcs = []
        for u, v, w in self.edges:
            arcs.append((u, v, w))
            arcs.append((v, u, w))
        return Graph(self.n, arcs, directed=True, labels=self.labels)

    def weight_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n, self.n))
        for (u, v), w in self._weight.items():
            mat[u, v] = w
        return mat

    def subgraph_without(self, removed: Iterable[int]) -> "Graph":
        """Same node ids, with every edge touching a removed node dropped."""
        gone = set(removed)
        kept = [(u, v, w) for u, v, w in self.edges if u not in gone and v not in gone]
        return Graph(self.n, kept, directed=self.directed, labels=self.labels)

    def with_weights(self, weights: Sequence[float]) -> "Graph":
        edges = [(u, v, float(w)) for (u, v, _), w in zip(self.edges, weights)]
        return Graph(self.n, edges, directed=self.directed, labels=self.labels)

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, m={self.m}, {kind})"


def load_edge_list(text: str, directed: bool = True) -> Graph:
    """Parse "u v [p]" lines ('#' starts a comment) into a Graph.

    External ids are re-indexed in order of first appearance; the mapping
    is kept on ``graph.labels`` (internal id -> external id).
    """
    ids: dict[str, int] = {}
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"line {lineno}: expected 'u v [p]', got {raw!r}")
        a, b = parts[0], parts[1]
        if a == b:
            raise ParseError(f"line {lineno}: self-loop on node {a}")
        if len(parts) == 3:
            try:
                p = float(parts[2])
            except ValueError:
                raise ParseError(f"line {lineno}: weight {parts[2]!r} is not a number") from None
            if not 0.0 <= p <= 1.0 or math.isnan(p):
                raise ParseError(f"line {lineno}: weight {p} outside [0,1]")
        else:
            p = 1.0
        for tok in (a, b):
            if tok not in ids:
                ids[tok] = len(ids)
        edges.append((ids[a], ids[b], p, lineno))
    seen = {}
    clean = []
    for u, v, p, lineno in edges:
        key = (u, v) if directed else (min(u, v), max(u, v))
        if key in seen:
            raise ParseError(f"line {lineno}: duplicate edge (first seen on line {seen[key]})")
        seen[key] = lineno
        clean.append((u, v, p))
    labels = [None] * len(ids)
    for tok, i in ids.items():
        labels[i] = tok
    return Graph(len(ids), clean, directed=directed, labels=labels)


def id_map_json(g: Graph) -> str:
    """Sidecar JSON {external_id: internal_id}."""
    return json.dumps({str(lab): i for i, lab in enumerate(g.labels)}, indent=1)


def write_edge_list(g: Graph) -> str:
    return "".join(f"{u} {v} {w!r}\n" for u, v, w in g.edges)


def from_networkx(nxg, weight: str | None = None) -> Graph:
    nodes = list(nxg.nodes())
    index = {u: i for i, u in enumerate(nodes)}
    edges = []
    for u, v, data in nxg.edges(data=True):
        w = float(data.get(weight, 1.0)) if weight else 1.0
        edges.append((index[u], index[v], w))
    return Graph(len(nodes), edges, directed=nxg.is_directed(), labels=nodes)


def les_miserables() -> Graph:
    """Undirected co-appearance network (77 nodes, 254 pairs), unit weights."""
    import networkx as nx
    return from_networkx(nx.les_miserables_graph())


def to_weighted_cascade(g: Graph) -> Graph:
    """Both directions of every pair; arc (u,v) gets 1/deg(v)."""
    if g.directed:
        raise ContractError("weighted-cascade transform expects an undirected graph")
    arcs = []
    for u, v, _ in g.edges:
        arcs.append((u, v, 1.0 / g.degree(v)))
        arcs.append((v, u, 1.0 / g.degree(u)))
    return Graph(g.n, arcs, directed=True, labels=g.labels)


def to_trivalency(g: Graph, rng: np.random.Generator) -> Graph:
    """Both directions of every pair, each weight drawn from {0.001, 0.01, 0.1}."""
    if g.directed:
        raise ContractError("trivalency transform expects an undirected graph")
    picks = rng.integers(0, len(TRIVALENCY_VALUES), size=2 * g.m)
    arcs = []
    for i, (u, v, _) in enumerate(g.edges):
        arcs.append((u, v, TRIVALENCY_VALUES[picks[2 * i]]))
        arcs.append((v, u, TRIVALENCY_VALUES[picks[2 * i + 1]]))
    return Graph(g.n, arcs, directed=True, labels=g.labels)


@dataclass(frozen=True)
class LiveGraph:
    """Edge-subset realization of a graph; bit i of ``mask`` keeps edge i."""
    parent: Graph
    mask: int
    probability: float

    @property
    def present_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for i, (u, v, _) in enumerate(self.parent.edges) if self.mask >> i & 1]

    def has(self, edge_index: int) -> bool:
        return bool(self.mask >> edge_index & 1)

    def out_masks(self) -> list[int]:
        """Per node, bitmask of successors along present edges."""
        g = self.parent
        outs = [0] * g.n
        for i, (u, v, _) in enumerate(g.edges):
            if self.mask >> i & 1:
                outs[u] |= 1 << v
                if not g.directed:
                    outs[v] |= 1 << u
        return outs


def live_graph_probability(g: Graph, mask: int) -> float:
    prob = 1.0
    for i, (_, _, w) in enumerate(g.edges):
        prob *= w if mask >> i & 1 else 1.0 - w
    return prob


def sample_live_graph(g: Graph, rng: np.random.Generator) -> LiveGraph:
    draws = rng.random(g.m)
    mask = 0
    for i, (_, _, w) in enumerate(g.edges):
        if draws[i] < w:
            mask |= 1 << i
    return LiveGraph(g, mask, live_graph_probability(g, mask))


def enumerate_live_graphs(g: Graph, cap: int = DEFAULT_ENUM_CAP) -> Iterator[LiveGraph]:
    if g.m > cap:
        raise CapExceeded(f"{g.m} edges exceed the enumeration cap {cap}", required=g.m)
    for mask in range(1 << g.m):
        yield LiveGraph(g, mask, live_graph_probability(g, mask))


def live_outcomes(g: Graph, cap: int = DEFAULT_ENUM_CAP) -> Iterator[tuple[float, list[int]]]:
    """Yield (probability, per-node successor bitmasks) for every live graph
    of positive probability.

    Only edges with 0 < p < 1 are enumerated; edges with p = 1 are always
    present and p = 0 never. The cap applies to the uncertain edges.
    """
    fixed = [0] * g.n
    uncertain = []
    for u, v, w in g.edges:
        if w >= 1.0:
            fixed[u] |= 1 << v
            if not g.directed:
                fixed[v] |= 1 << u
        elif w > 0.0:
            uncertain.append((u, v, w))
    if len(uncertain) > cap:
        raise CapExceeded(f"{len(uncertain)} uncertain edges exceed the enumeration cap {cap}",
                          required=len(uncertain))
    k = len(uncertain)
    for mask in range(1 << k):
        outs = list(fixed)
        prob = 1.0
        for i, (u, v, w) in enumerate(uncertain):
            if mask >> i & 1:
                prob *= w
                outs[u] |= 1 << v
                if not g.directed:
                    outs[v] |= 1 << u
            else:
                prob *= 1.0 - w
        yield prob, outs


def reach_mask(outs: Sequence[int], seeds: int, blocked: int = 0) -> int:
    """Bitmask of nodes reachable from the seed bitmask, never entering ``blocked``."""
    seen = seeds & ~blocked
    frontier = seen
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= outs[low.bit_length() - 1]
            f ^= low
        nxt &= ~seen & ~blocked
        seen |= nxt
        frontier = nxt
    return seen


def reach_levels(outs: Sequence[int], seeds: int, blocked: int = 0) -> list[int]:
    """BFS layers (bitmasks) from the seed bitmask; layer 0 is the seeds."""
    seen = seeds & ~blocked
    layers = [seen] if seen else []
    frontier = seen
    while frontier:
        nxt = 0
        f = frontier
        while f:
            low = f & -f
            nxt |= outs[low.bit_length() - 1]
            f ^= low
        nxt &= ~seen & ~blocked
        if nxt:
            layers.append(nxt)
        seen |= nxt
        frontier = nxt
    return layers


def to_mask(nodes: Iterable[int]) -> int:
    mask = 0
    for v in nodes:
        mask |= 1 << v
    return mask


def mask_nodes(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def reachable_count(x: LiveGraph, seeds: Iterable[int]) -> int:
    """sigma^X(S): nodes reachable from the seeds through present edges."""
    seeds = list(seeds)
    for s in seeds:
        if not 0 <= s < x.parent.n:
            raise ContractError(f"unknown node id {s}")
    return reach_mask(x.out_masks(), to_mask(seeds)).bit_count()


def shortest_path_lengths(g: Graph, source: int) -> list[float]:
    """Hop distances by BFS, following out-edges (both ways when undirected)."""
    dist = [INF] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v, _, _ in g.out_edges(u):
            if dist[v] == INF:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


@dataclass
class FlowNetwork:
    n_nodes: int
    source: int
    sink: int
    arcs: list[tuple[int, int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.source == self.sink:
            raise ContractError("source and sink must differ")

    def add_arc(self, u: int, v: int, capacity: int) -> int:
        if capacity < 0:
            raise ContractError("arc capacity must be non-negative")
        self.arcs.append((u, v, int(capacity)))
        return len(self.arcs) - 1


def max_flow(net: FlowNetwork) -> tuple[int, list[int]]:
    """Edmonds-Karp. Returns the flow value and the integral flow on each arc."""
    n = net.n_nodes
    # residual arcs in pairs: 2i forward, 2i+1 backward
    head, cap = [], []
    adj = [[] for _ in range(n)]
    for u, v, c in net.arcs:
        adj[u].append(len(head))
        head.append(v)
        cap.append(c)
        adj[v].append(len(head))
        head.append(u)
        cap.append(0)
    total = 0
    while True:
        parent_arc = [-1] * n
        parent_arc[net.source] = -2
        queue = deque([net.source])
        while queue and parent_arc[net.sink] == -1:
            u = queue.popleft()
            for a in adj[u]:
                v = head[a]
                if cap[a] > 0 and parent_arc[v] == -1:
                    parent_arc[v] = a
                    queue.append(v)
        if parent_arc[net.sink] == -1:
            break
        push = None
        v = net.sink
        while v != net.source:
            a = parent_arc[v]
            push = cap[a] if push is None else min(push, cap[a])
            v = head[a ^ 1]
        v = net.sink
        while v != net.source:
            a = parent_arc[v]
            cap[a] -= push
            cap[a ^ 1] += push
            v = head[a ^ 1]
        total += push
    flows = [cap[2 * i + 1] for i in range(len(net.arcs))]
    return total, flows
