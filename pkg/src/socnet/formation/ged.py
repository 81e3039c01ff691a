"""Edit distance (link additions plus deletions, up to relabeling) from a
graph to the star, complete, k-star and balanced complete bipartite graphs
on the same node count."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations

import networkx as nx
import numpy as np

from ..errors import CapExceeded, ContractError
from ..graph import FlowNetwork, max_flow


@dataclass(frozen=True)
class GedResult:
    distance: int
    centers: tuple = ()
    retained: int = 0  # center-leaf links kept by the flow
    details: dict = field(default_factory=dict)


def _as_nx(g) -> nx.Graph:
    if isinstance(g, nx.Graph):
        if g.is_directed() or g.is_multigraph():
            raise ContractError("need a simple undirected graph")
        return g
    if hasattr(g, "to_networkx"):
        return g.to_networkx()
    raise ContractError(f"cannot read a graph from {type(g).__name__}")


def ged_star(g) -> int:
    g = _as_nx(g)
    mu, xi = g.number_of_nodes(), g.number_of_edges()
    if mu == 0:
        return 0
    top = max(d for _, d in g.degree())
    return mu + xi - 2 * top - 1


def ged_complete(g) -> int:
    g = _as_nx(g)
    mu = g.number_of_nodes()
    return mu * (mu - 1) // 2 - g.number_of_edges()


def _kstar_for_centers(g: nx.Graph, centers: tuple, k: int) -> tuple[int, int, dict]:
    mu, xi = g.number_of_nodes(), g.number_of_edges()
    cset = set(centers)
    leaves = [v for v in g.nodes if v not in cset]
    beta1 = sum(1 for a, b in combinations(centers, 2) if not g.has_edge(a, b))
    links = [(c, l) for c in centers for l in g.neighbors(c) if l not in cset]
    total = mu - k
    per, extra = divmod(total, k)
    # nodes: 0 source, 1 sink, 2 hub, then centers, then leaves
    cpos = {c: 3 + i for i, c in enumerate(centers)}
    lpos = {l: 3 + k + i for i, l in enumerate(leaves)}
    net = FlowNetwork(3 + k + len(leaves), 0, 1)
    for c in centers:
        net.add_arc(0, cpos[c], per)
        net.add_arc(2, cpos[c], 1)
    net.add_arc(0, 2, extra)
    for c, l in links:
        net.add_arc(cpos[c], lpos[l], 1)
    for l in leaves:
        net.add_arc(lpos[l], 1, 1)
    kept, _ = max_flow(net)
    dist = mu + xi + 2 * beta1 - k * (k + 1) // 2 - 2 * kept
    return dist, kept, {"beta1": beta1, "center_leaf": len(links)}


def ged_kstar(g, k: int, prune: bool = True) -> GedResult:
    """Minimum over center choices of the flow-based edit count. With
    ``prune`` the choices are visited by decreasing degree and skipped when
    an upper bound on the retained links cannot beat the best found."""
    g = _as_nx(g)
    mu, xi = g.number_of_nodes(), g.number_of_edges()
    if k < 1 or mu < 2 * k:
        raise ContractError(f"a {k}-star needs at least {2 * k} nodes, got {mu}")
    nodes = sorted(g.nodes, key=lambda v: (-g.degree(v), str(v))) if prune else list(g.nodes)
    best: GedResult | None = None
    for centers in combinations(nodes, k):
        if prune and best is not None:
            cset = set(centers)
            beta1 = sum(1 for a, b in combinations(centers, 2) if not g.has_edge(a, b))
            links = sum(1 for c in centers for l in g.neighbors(c) if l not in cset)
            bound = mu + xi + 2 * beta1 - k * (k + 1) // 2 - 2 * min(links, mu - k)
            if bound >= best.distance:
                continue
        dist, kept, info = _kstar_for_centers(g, centers, k)
        if best is None or dist < best.distance:
            best = GedResult(dist, tuple(centers), kept, info)
    return best


def kstar_graph(n: int, k: int) -> nx.Graph:
    """Clique on k centers, remaining nodes spread as evenly as possible."""
    if n < 2 * k:
        raise ContractError(f"a {k}-star needs at least {2 * k} nodes")
    g = nx.complete_graph(k)
    for v in range(k, n):
        g.add_edge((v - k) % k, v)
    return g


def ged_bipartite_turan(g, cap: int = 23) -> GedResult:
    """Distance to the complete bipartite graph with parts of sizes
    ceil(n/2) and floor(n/2), by enumerating balanced splits."""
    g = _as_nx(g)
    nodes = list(g.nodes)
    n = len(nodes)
    if n > cap:
        raise CapExceeded(f"balanced split enumeration over {n} nodes", required=n)
    if n < 2:
        return GedResult(0)
    half = n // 2
    pos = {v: i for i, v in enumerate(nodes)}
    us = np.array([pos[a] for a, b in g.edges], dtype=np.int64)
    vs = np.array([pos[b] for a, b in g.edges], dtype=np.int64)
    xi = len(us)
    best_cross, best_side = -1, None
    # for even n, node n-1 is pinned to the marked side so each split is
    # counted once; for odd n the marked side is the smaller part
    if n % 2:
        splits = combinations(range(n), half)
    else:
        splits = (side + (n - 1,) for side in combinations(range(n - 1), half - 1))
    for side in splits:
        mask = np.zeros(n, dtype=bool)
        mask[list(side)] = True
        cross = int((mask[us] != mask[vs]).sum()) if xi else 0
        if cross > best_cross:
            best_cross, best_side = cross, mask.copy()
        if best_cross == xi:
            break
    a = (n + 1) // 2
    dist = xi - 2 * best_cross + a * (n - a)
    part = tuple(v for v in nodes if best_side[pos[v]])
    return GedResult(dist, part, best_cross)


def ged_brute_force(g, target) -> int:
    """Minimum over node bijections of the edge symmetric difference."""
    g, h = _as_nx(g), _as_nx(target)
    if g.number_of_nodes() != h.number_of_nodes():
        raise ContractError("graphs must have the same node count")
    n = g.number_of_nodes()
    if n > 9:
        raise CapExceeded(f"{n}! relabelings", required=n)
    gn = list(g.nodes)
    ge = {frozenset((gn.index(a), gn.index(b))) for a, b in g.edges}
    hn = list(h.nodes)
    he = [(hn.index(a), hn.index(b)) for a, b in h.edges]
    best = None
    for perm in permutations(range(n)):
        mapped = {frozenset((perm[a], perm[b])) for a, b in he}
        d = len(ge ^ mapped)
        if best is None or d < best:
            best = d
            if d == 0:
                break
    return best


def target_graph(topology: str, n: int, k: int | None = None) -> nx.Graph:
    if topology == "star":
        return nx.star_graph(n - 1)
    if topology == "complete":
        return nx.complete_graph(n)
    if topology in ("bipartite-turan", "bipartite"):
        return nx.complete_bipartite_graph((n + 1) // 2, n // 2)
    if topology in ("kstar", "k-star", "two-star"):
        return kstar_graph(n, 2 if topology == "two-star" else int(k))
    raise ContractError(f"no fixed target graph for {topology!r}")


def ged_to_target(g, topology: str, k: int | None = None, d: int | None = None) -> GedResult:
    """Edit distance to the named topology. For ``diameter`` the result is 0
    when the diameter is at most d and otherwise the number of node pairs
    farther apart than d (a violation count, not an edit distance)."""
    g = _as_nx(g)
    if topology == "star":
        return GedResult(ged_star(g))
    if topology == "complete":
        return GedResult(ged_complete(g))
    if topology in ("kstar", "k-star"):
        return ged_kstar(g, int(k))
    if topology == "two-star":
        return ged_kstar(g, 2)
    if topology in ("bipartite-turan", "bipartite"):
        return ged_bipartite_turan(g)
    if topology == "diameter":
        if d is None:
            raise ContractError("diameter target needs d")
        n = g.number_of_nodes()
        lengths = dict(nx.all_pairs_shortest_path_length(g))
        far = sum(1 for a in g.nodes for b in g.nodes
                  if str(a) < str(b) and lengths[a].get(b, n + 1) > d)
        return GedResult(far)
    raise ContractError(f"unknown topology {topology!r}")
