"""Parameter regions under which recursive formation is known to produce a
given topology, and points inside them."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from ..errors import ContractError
from .model import FormationParams, FormationState

POSITIONS = {"low": 0.1, "mid": 0.5, "high": 0.9, "L": 0.1, "M": 0.5, "H": 0.9}
DEFAULT_DELTA = 0.8


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def singleton(self) -> bool:
        return self.hi == self.lo

    def at(self, frac: float) -> float:
        return self.lo if self.singleton else self.lo + frac * (self.hi - self.lo)

    def empty(self) -> bool:
        if self.hi < self.lo:
            return True
        return self.hi == self.lo and (self.lo_open or self.hi_open)


@dataclass(frozen=True)
class Topology:
    name: str  # star | complete | diameter | bipartite-turan | two-star | k-star
    k: int | None = None
    d: int | None = None

    @property
    def ged_args(self) -> dict:
        if self.name == "k-star":
            return {"topology": "k-star", "k": self.k}
        if self.name == "diameter":
            return {"topology": "diameter", "d": self.d}
        return {"topology": self.name}


def parse_topology(text: str | Topology) -> Topology:
    if isinstance(text, Topology):
        return text
    t = text.strip().lower().replace("_", "-")
    m = re.fullmatch(r"(diameter|k-?star)\((\d+)\)", t)
    if m:
        val = int(m.group(2))
        if m.group(1) == "diameter":
            return Topology("diameter", d=val)
        return Topology("k-star", k=val)
    aliases = {"bipartite": "bipartite-turan", "turan": "bipartite-turan", "2-star": "two-star",
               "twostar": "two-star"}
    t = aliases.get(t, t)
    if t in ("star", "complete", "bipartite-turan", "two-star"):
        return Topology(t)
    raise ContractError(f"unknown topology {text!r}")


def benefits(b=None) -> tuple[float, ...]:
    if b is None:
        b = DEFAULT_DELTA
    if isinstance(b, (int, float)):
        return tuple(float(b) ** i for i in range(1, 65))
    return tuple(float(x) for x in b)


def _gamma_interval(top: Topology, b, sigma_max) -> Interval:
    b1, b2, b3 = b[0], b[1], b[2]
    if top.name in ("star", "complete", "diameter"):
        return Interval(0.0, 1.0, hi_open=True)
    if top.name == "bipartite-turan":
        return Interval(0.0, (b2 - b3) / (3 * b2 - b3), hi_open=True)
    if top.name == "two-star" and sigma_max is not None:
        lam = _lambda(b, sigma_max)
        bounds = [b3 / (b2 + b3)]
        if lam > b3:
            bounds.append((b2 - b3) / (lam - b3))
        return Interval(0.0, min(bounds), hi_open=True)
    return Interval(0.0, 0.0)


def _lambda(b, sigma_max: int) -> float:
    return math.ceil(sigma_max / 2 - 1) * (2 * b[1] - b[2])


def preset_intervals(topology, b=None, gamma: float | None = None,
                     sigma_max: int | None = None) -> dict[str, Interval]:
    """Sufficient intervals for gamma, c and c0. The c and c0 intervals
    depend on gamma; ``gamma`` defaults to the middle of its interval."""
    top = parse_topology(topology)
    b = benefits(b)
    need = 4 if top.name in ("two-star", "k-star") else 3
    if top.name == "diameter":
        need = max(need, top.d + 1)
    if len(b) < need:
        raise ContractError(f"{top.name} needs at least {need} benefit terms")
    b1, b2, b3 = b[0], b[1], b[2]
    b4 = b[3] if len(b) > 3 else 0.0
    gi = _gamma_interval(top, b, sigma_max)
    if gi.empty() or (gi.hi_open and gi.hi <= gi.lo):
        raise ContractError(f"no feasible gamma for {top.name}")
    g = gi.at(0.5) if gamma is None else float(gamma)
    if g < gi.lo or g > gi.hi or (gi.hi_open and g >= gi.hi):
        raise ContractError(
            f"{top.name} needs gamma in [{gi.lo:.6g}, {gi.hi:.6g}{')' if gi.hi_open else ']'}, got {g}")
    out = {"gamma": Interval(g, g) if gamma is not None else gi}
    if top.name == "star":
        out["c"] = Interval(b1 - b2 + g * b2, b1, hi_open=True)
        out["c0"] = Interval(0.0, (1 - g) * (b2 - b3), hi_open=True)
    elif top.name == "complete":
        out["c"] = Interval(0.0, b1 - b2, hi_open=True)
        out["c0"] = Interval(0.0, (1 - g) * b2)
    elif top.name == "diameter":
        out["c"] = Interval(0.0, b1 - b[top.d], hi_open=True)
        out["c0"] = Interval(0.0, (1 - g) * b2)
    elif top.name == "bipartite-turan":
        out["c"] = Interval(b1 - b2 + g * (3 * b2 - b3), b1 - b3, lo_open=True, hi_open=True)
        out["c0"] = Interval((1 - g) * (b2 - b3), (1 - g) * b2, lo_open=True)
    elif top.name == "two-star" and sigma_max is not None:
        out["c"] = Interval(b1 - b3 + g * (b2 + b3), b1, hi_open=True)
        out["c0"] = Interval((1 - g) * (b2 - b3), (1 - g) * (b2 - b4), lo_open=True, hi_open=True)
    elif top.name == "two-star":
        out["c"] = Interval(b1 - b3, b1, hi_open=True)
        out["c0"] = Interval(b2 - b3, b2 - b4, lo_open=True, hi_open=True)
    else:  # k-star
        out["c"] = Interval(b1 - b3, b1 - b3)
        out["c0"] = Interval(b2 - b3, b2 - b4, lo_open=True, hi_open=True)
    for name, iv in out.items():
        if iv.empty():
            raise ContractError(f"{top.name}: empty interval for {name} "
                                f"([{iv.lo:.6g}, {iv.hi:.6g}] with gamma={g:.6g})")
    return out


def preset_conditions(topology, b=None, position: str | dict = "mid",
                      sigma_max: int | None = None) -> FormationParams:
    """A parameter point inside the sufficient region. ``position`` is one of
    low/mid/high (10%, 50%, 90% of each interval) or a per-parameter dict;
    gamma is placed first because the other intervals depend on it."""
    pos = position if isinstance(position, dict) else {}
    default = "mid" if isinstance(position, dict) else position

    def frac(name):
        p = pos.get(name, default)
        if isinstance(p, (int, float)):
            return float(p)
        if p not in POSITIONS:
            raise ContractError(f"unknown position {p!r}")
        return POSITIONS[p]

    b = benefits(b)
    gi = preset_intervals(topology, b, sigma_max=sigma_max)["gamma"]
    gamma = gi.at(frac("gamma"))
    iv = preset_intervals(topology, b, gamma=gamma, sigma_max=sigma_max)
    return FormationParams(b, iv["c"].at(frac("c")), iv["c0"].at(frac("c0")), gamma)


def preset_base(topology, n_min: int | None = None) -> FormationState:
    """Starting network: a single node, or for a k-star the clique on the
    k centers with one leaf each."""
    top = parse_topology(topology)
    if top.name != "k-star":
        return FormationState(1)
    k = top.k
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)] + [(i, k + i) for i in range(k)]
    return FormationState(2 * k, edges)
