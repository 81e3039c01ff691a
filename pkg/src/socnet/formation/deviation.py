"""Push one parameter just outside its sufficient interval for a single
entrant, restore it afterwards, and follow the distance to the target."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .ged import ged_to_target
from .model import FormationParams, FormationState, run_recursive_formation
from .presets import benefits, parse_topology, preset_base, preset_conditions, preset_intervals

SINGLETON_STEP = 0.01
RELATIVE_STEP = 0.02


@dataclass
class DeviationResult:
    curve: list[tuple[int, int]]  # (nodes entered, distance) after each stabilization
    outcome: str  # A..D
    deviated: FormationParams
    before: FormationParams
    after: FormationParams
    final: FormationState = field(repr=False, default=None)

    def distance_at(self, n: int) -> int | None:
        for m, d in self.curve:
            if m == n:
                return d
        return None


def classify(curve: list[int], start: int = 0) -> str:
    """A: never leaves the target. B: leaves and comes back. C: settles at a
    constant nonzero distance. D: still drifting away at the end."""
    tail = curve[start:]
    if not tail or all(d == 0 for d in tail):
        return "A"
    if tail[-1] == 0:
        return "B"
    first = next(d for d in tail if d != 0)
    return "D" if tail[-1] > first else "C"


def deviated_value(param: str, direction: str, topology, b=None, gamma: float | None = None,
                   magnitude: float | None = None, sigma_max: int | None = None) -> float:
    iv = preset_intervals(topology, b, gamma=gamma, sigma_max=sigma_max)
    if param == "gamma":
        iv = preset_intervals(topology, b, sigma_max=sigma_max)
    if param not in iv:
        raise ContractError(f"cannot deviate {param!r}")
    span = iv[param]
    if magnitude is None:
        magnitude = SINGLETON_STEP if span.singleton else RELATIVE_STEP * span.length
    if direction in ("-", "neg", "negative"):
        return span.lo - magnitude
    if direction in ("+", "pos", "positive"):
        return span.hi + magnitude
    raise ContractError(f"direction must be + or -, got {direction!r}")


def deviation_experiment(topology, deviate_at: int, param: str, direction: str,
                         n_max: int, rng: np.random.Generator, restore: str | dict = "mid",
                         initial: str | dict = "mid", magnitude: float | None = None,
                         b=None, sigma_max: int | None = None,
                         round_cap: int | None = None) -> DeviationResult:
    """``deviate_at`` is the 1-based entry number of the deviation node.
    Entrants before it see ``initial`` parameters, it sees the deviated
    ones through its entry and the following stabilization, and later
    entrants see ``restore``."""
    top = parse_topology(topology)
    b = benefits(b)
    before = preset_conditions(top, b, initial, sigma_max)
    after = preset_conditions(top, b, restore, sigma_max)
    base = preset_base(top)
    if deviate_at <= base.n:
        raise ContractError(f"deviation node must enter after the {base.n}-node base")
    value = deviated_value(param, direction, top, b, before.gamma, magnitude, sigma_max)
    deviated = before.with_values(**{param: value})

    def schedule(number: int) -> FormationParams:
        if number < deviate_at:
            return before
        return deviated if number == deviate_at else after

    curve: list[tuple[int, int]] = []

    def record(state: FormationState) -> None:
        curve.append((state.n, ged_to_target(state, **top.ged_args).distance))

    final = run_recursive_formation(schedule, n_max, rng, base=base, round_cap=round_cap,
                                    on_stable=record)
    dists = [d for _, d in curve]
    start = next((i for i, (n, _) in enumerate(curve) if n >= deviate_at), len(curve))
    return DeviationResult(curve, classify(dists, start), deviated, before, after, final)
