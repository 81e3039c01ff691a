"""Rankings, profiles, rank distances, and the discretized truncated Gaussian
used to model the distance between two people's preferences."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.stats import truncnorm

from .errors import ContractError, ParseError


@dataclass(frozen=True)
class Preference:
    ranking: tuple[int, ...]

    def __post_init__(self):
        r = tuple(int(a) for a in self.ranking)
        if sorted(r) != list(range(len(r))):
            raise ContractError(f"ranking {self.ranking} is not a permutation of 0..{len(r) - 1}")
        object.__setattr__(self, "ranking", r)

    @property
    def r(self) -> int:
        return len(self.ranking)

    def positions(self) -> tuple[int, ...]:
        pos = [0] * self.r
        for i, a in enumerate(self.ranking):
            pos[a] = i
        return tuple(pos)

    def reversed(self) -> "Preference":
        return Preference(self.ranking[::-1])

    def __iter__(self):
        return iter(self.ranking)

    def __len__(self):
        return self.r


def as_preference(p) -> Preference:
    return p if isinstance(p, Preference) else Preference(tuple(p))


class Profile:
    """An ordered multiset of preferences over the same alternatives."""

    def __init__(self, preferences: Iterable):
        self.preferences = [as_preference(p) for p in preferences]
        if not self.preferences:
            raise ContractError("a profile needs at least one preference")
        r = self.preferences[0].r
        if any(p.r != r for p in self.preferences):
            raise ContractError("all preferences in a profile must rank the same alternatives")
        self.r = r

    def __len__(self):
        return len(self.preferences)

    def __iter__(self):
        return iter(self.preferences)

    def __getitem__(self, i):
        return self.preferences[i]

    def as_array(self) -> np.ndarray:
        return np.array([p.ranking for p in self.preferences], dtype=np.int64)

    def positions(self) -> np.ndarray:
        return np.array([p.positions() for p in self.preferences], dtype=np.int64)


def read_profile_csv(text: str) -> tuple[Profile, list[int]]:
    """One voter per row, alternatives in rank order. Empty rows are voters
    who skipped the topic; their row indices are returned separately."""
    prefs, skipped = [], []
    for i, row in enumerate(csv.reader(io.StringIO(text))):
        cells = [c.strip() for c in row if c.strip()]
        if not cells:
            skipped.append(i)
            continue
        try:
            prefs.append(Preference(tuple(int(c) for c in cells)))
        except (ValueError, ContractError) as exc:
            raise ParseError(f"row {i + 1}: {exc}") from None
    return Profile(prefs), skipped


def _pair(p, q) -> tuple[Preference, Preference]:
    p, q = as_preference(p), as_preference(q)
    if p.r != q.r:
        raise ContractError(f"preferences over {p.r} and {q.r} alternatives are not comparable")
    return p, q


def pair_count(r: int) -> int:
    return r * (r - 1) // 2


def kendall_tau_steps(p, q) -> int:
    p, q = _pair(p, q)
    qpos = q.positions()
    seq = [qpos[a] for a in p.ranking]
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def kendall_tau_norm(p, q) -> float:
    p, q = _pair(p, q)
    return kendall_tau_steps(p, q) / pair_count(p.r) if p.r > 1 else 0.0


def footrule_norm(p, q) -> float:
    p, q = _pair(p, q)
    top = 2 * math.ceil(p.r / 2) * (p.r // 2)
    if top == 0:
        return 0.0
    pp, qp = p.positions(), q.positions()
    return sum(abs(a - b) for a, b in zip(pp, qp)) / top


def footrule_similarity(p, q) -> float:
    return 1.0 - footrule_norm(p, q)


@lru_cache(maxsize=None)
def _mahonian(r: int) -> tuple[int, ...]:
    row = [1]
    for m in range(2, r + 1):
        nxt = [0] * (len(row) + m - 1)
        for k, c in enumerate(row):
            for j in range(m):
                nxt[k + j] += c
        row = nxt
    return tuple(row)


def count_at_distance(r: int, kt_steps: int) -> int:
    """Permutations of r items with exactly ``kt_steps`` inversions relative
    to any fixed permutation."""
    if r < 1 or not 0 <= kt_steps <= pair_count(r):
        raise ContractError(f"distance {kt_steps} outside 0..{pair_count(r)} for r={r}")
    return _mahonian(r)[kt_steps]


@lru_cache(maxsize=8)
def permutations_by_distance(r: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """All permutations of 0..r-1 grouped by inversion count (distance from
    the identity)."""
    groups = [[] for _ in range(pair_count(r) + 1)]
    for perm in permutations(range(r)):
        inv = sum(1 for i in range(r) for j in range(i + 1, r) if perm[i] > perm[j])
        groups[inv].append(perm)
    return tuple(tuple(g) for g in groups)


def random_at_distance(p, steps: int, rng: np.random.Generator) -> Preference:
    """Uniform preference at exactly ``steps`` inversions from p."""
    p = as_preference(p)
    group = permutations_by_distance(p.r)[steps]
    q = group[int(rng.integers(len(group)))]
    return Preference(tuple(p.ranking[i] for i in q))


# distance distribution -----------------------------------------------------------------

def distance_grid(r: int) -> np.ndarray:
    c = pair_count(r)
    return np.arange(c + 1) / c


def _cell_masses(mu: float, sigma: float, r: int) -> np.ndarray:
    grid = distance_grid(r)
    if sigma <= 0:
        out = np.zeros(len(grid))
        out[int(math.floor(min(max(mu, 0.0), 1.0) * (len(grid) - 1) + 0.5))] = 1.0
        return out
    half = 1.0 / (r * (r - 1))
    edges = np.concatenate([[0.0], grid[:-1] + half, [1.0]])
    a, b = (0.0 - mu) / sigma, (1.0 - mu) / sigma
    cdf = truncnorm.cdf(edges, a, b, loc=mu, scale=sigma)
    if not np.all(np.isfinite(cdf)):
        raise ContractError(f"distribution ({mu}, {sigma}) has no mass on [0,1]")
    cdf[0], cdf[-1] = 0.0, 1.0
    pmf = np.clip(np.diff(cdf), 0.0, None)
    return pmf / pmf.sum()


@dataclass(frozen=True)
class DiscreteTruncGauss:
    mu: float
    sigma: float
    r: int
    pmf: tuple[float, ...] = field(repr=False)

    @property
    def grid(self) -> np.ndarray:
        return distance_grid(self.r)

    def mean(self) -> float:
        return float(np.dot(self.grid, self.pmf))

    def std(self) -> float:
        return float(np.sqrt(np.dot((self.grid - self.mean()) ** 2, self.pmf)))

    def prob(self, x: float) -> float:
        return self.pmf[grid_index(x, self.r)]


def grid_index(x: float, r: int) -> int:
    c = pair_count(r)
    k = int(round(x * c))
    if abs(k - x * c) > 1e-6 or not 0 <= k <= c:
        raise ContractError(f"{x} is not on the distance grid for r={r}")
    return k


def dtg_pmf(mu: float, sigma: float, r: int) -> DiscreteTruncGauss:
    if not 0.0 <= mu <= 1.0 or sigma < 0:
        raise ContractError(f"need mu in [0,1] and sigma >= 0, got ({mu}, {sigma})")
    return DiscreteTruncGauss(mu, sigma, r, tuple(_cell_masses(mu, sigma, r)))


def dtg_with_mean(mean: float, sigma: float, r: int, tol: float = 1e-10
                  ) -> DiscreteTruncGauss | None:
    """The member of the family with the given spread whose *mean* equals
    ``mean``; the location parameter may leave [0,1]. None if no location
    in [-1, 2] reaches that mean."""
    if not 0.0 <= mean <= 1.0:
        raise ContractError("mean must lie in [0,1]")
    if sigma <= 0 or mean in (0.0, 1.0):
        pmf = _cell_masses(mean, 0.0, r)
        if abs(np.dot(distance_grid(r), pmf) - mean) > 1e-9:
            return None
        return DiscreteTruncGauss(mean, 0.0, r, tuple(pmf))
    grid = distance_grid(r)

    def mean_at(loc):
        return float(np.dot(grid, _cell_masses(loc, sigma, r)))

    lo, hi = -1.0, 2.0
    if not mean_at(lo) - 1e-9 <= mean <= mean_at(hi) + 1e-9:
        return None
    for _ in range(200):
        mid = (lo + hi) / 2
        if mean_at(mid) < mean:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    loc = (lo + hi) / 2
    return DiscreteTruncGauss(loc, sigma, r, tuple(_cell_masses(loc, sigma, r)))


def sample_distance(d: DiscreteTruncGauss, rng: np.random.Generator, size: int | None = None):
    cdf = np.cumsum(d.pmf)
    cdf[-1] = 1.0
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    grid = d.grid
    return float(grid[idx]) if size is None else grid[idx]


def sample_steps(d: DiscreteTruncGauss, rng: np.random.Generator) -> int:
    cdf = np.cumsum(d.pmf)
    cdf[-1] = 1.0
    return int(np.searchsorted(cdf, rng.random(), side="right"))


class MleFit(NamedTuple):
    mu: float
    sigma: float
    loglik: float


def _loglik_surface(counts: np.ndarray, mus: np.ndarray, sigmas: np.ndarray, r: int) -> np.ndarray:
    grid = distance_grid(r)
    half = 1.0 / (r * (r - 1))
    edges = np.concatenate([[0.0], grid[:-1] + half, [1.0]])
    M, S = np.meshgrid(mus, sigmas, indexing="ij")
    a, b = (0.0 - M) / S, (1.0 - M) / S
    cdf = truncnorm.cdf(edges[None, None, :], a[..., None], b[..., None],
                        loc=M[..., None], scale=S[..., None])
    cdf[..., 0], cdf[..., -1] = 0.0, 1.0
    pmf = np.clip(np.diff(cdf, axis=-1), 0.0, None)
    with np.errstate(divide="ignore"):
        logp = np.log(pmf)
    used = counts > 0
    return (logp[..., used] * counts[used]).sum(axis=-1)


def mle_fit(samples: Sequence[float], r: int, passes: int = 3, resolution: int = 100,
            sigma_max: float = 1.0) -> MleFit:
    """Maximum-likelihood (mu, sigma) by repeated grid refinement."""
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        raise ContractError("need at least two samples")
    idx = np.array([grid_index(x, r) for x in samples])
    counts = np.bincount(idx, minlength=pair_count(r) + 1).astype(float)
    if np.count_nonzero(counts) == 1:
        return MleFit(float(samples[0]), 0.0, 0.0)
    mu_lo, mu_hi, s_lo, s_hi = 0.0, 1.0, 1e-3, sigma_max
    best = None
    for _ in range(passes):
        mus = np.linspace(mu_lo, mu_hi, resolution)
        sigmas = np.linspace(s_lo, s_hi, resolution)
        surf = _loglik_surface(counts, mus, sigmas, r)
        i, j = np.unravel_index(np.argmax(surf), surf.shape)
        best = MleFit(float(mus[i]), float(sigmas[j]), float(surf[i, j]))
        dm, ds = 2 * (mus[1] - mus[0]), 2 * (sigmas[1] - sigmas[0])
        mu_lo, mu_hi = max(0.0, best.mu - dm), min(1.0, best.mu + dm)
        s_lo, s_hi = max(1e-4, best.sigma - ds), best.sigma + ds
    return best


class PairDistanceModel:
    """Per-pair distance distributions. Unknown pairs hold NaN."""

    def __init__(self, mu: np.ndarray, sigma: np.ndarray):
        mu = np.array(mu, dtype=float)
        sigma = np.array(sigma, dtype=float)
        if mu.shape != sigma.shape or mu.ndim != 2 or mu.shape[0] != mu.shape[1]:
            raise ContractError("mu and sigma must be square matrices of the same shape")
        np.fill_diagonal(mu, 0.0)
        np.fill_diagonal(sigma, 0.0)
        known = ~np.isnan(mu)
        if not np.array_equal(known, known.T) or not np.allclose(mu[known], mu.T[known]) \
                or not np.allclose(np.nan_to_num(sigma), np.nan_to_num(sigma.T)):
            raise ContractError("pair distance model must be symmetric")
        if np.any((mu[known] < 0) | (mu[known] > 1)) or np.any(sigma[known] < 0):
            raise ContractError("mu must lie in [0,1] and sigma must be non-negative")
        self.mu, self.sigma = mu, sigma

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def empty(cls, n: int) -> "PairDistanceModel":
        return cls(np.full((n, n), np.nan), np.full((n, n), np.nan))

    @classmethod
    def from_pairs(cls, n: int, rows: Iterable[tuple[int, int, float, float]]) -> "PairDistanceModel":
        mu, sigma = np.full((n, n), np.nan), np.full((n, n), np.nan)
        for i, j, m, s in rows:
            mu[i, j] = mu[j, i] = m
            sigma[i, j] = sigma[j, i] = s
        return cls(mu, sigma)

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n)
                if not np.isnan(self.mu[i, j])]

    def distribution(self, i: int, j: int, r: int) -> DiscreteTruncGauss:
        if np.isnan(self.mu[i, j]):
            raise ContractError(f"no distance model for pair ({i}, {j})")
        return dtg_pmf(float(self.mu[i, j]), float(self.sigma[i, j]), r)

    def similarity(self) -> np.ndarray:
        return 1.0 - self.mu

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["i", "j", "mu", "sigma"])
        for i, j in self.pairs():
            w.writerow([i, j, repr(float(self.mu[i, j])), repr(float(self.sigma[i, j]))])
        return out.getvalue()


def read_pairs_csv(text: str, n: int | None = None) -> PairDistanceModel:
    rows = []
    reader = csv.reader(io.StringIO(text))
    for lineno, row in enumerate(reader, 1):
        if not row or row[0].strip() in ("", "i"):
            continue
        try:
            i, j, m, s = int(row[0]), int(row[1]), float(row[2]), float(row[3])
        except (ValueError, IndexError):
            raise ParseError(f"line {lineno}: expected i,j,mu,sigma") from None
        rows.append((i, j, m, s))
    size = n if n is not None else 1 + max((max(i, j) for i, j, _, _ in rows), default=-1)
    return PairDistanceModel.from_pairs(size, rows)
