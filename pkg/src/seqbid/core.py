"""Domain model for a known sequence of first-price sealed-bid auctions.

Resources carry 1-based indices and are auctioned in index order, one per
stage.  Holdings are sets of resource indices, packed into bitmasks where it
matters for speed (resource i occupies bit i - 1).  A bundle confers its value
only when every member is held; the value of a holdings set is the best value
among the bundles it contains.  Whatever endowment remains at the end is worth
its residual utility, a nondecreasing piecewise-linear function with f(0) = 0.

High bids by the rest of the market are modeled per auction, either as a
multinomial over integer levels or as a Gaussian truncated below at zero.
Winning requires strictly outbidding the high bid; ties lose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .pwl import PwlFunction

Holdings = frozenset[int]


def holdings_mask(held: Union[int, Iterable[int]]) -> int:
    """Pack resource indices into a bitmask; passes bitmasks through."""
    if isinstance(held, (int, np.integer)):
        if held < 0:
            raise ValueError("holdings mask must be nonnegative")
        return int(held)
    mask = 0
    for i in held:
        if i < 1:
            raise ValueError(f"resource index {i} out of range (1-based)")
        mask |= 1 << (i - 1)
    return mask


def mask_holdings(mask: int) -> Holdings:
    """Unpack a holdings bitmask into the set of resource indices."""
    out = set()
    i = 1
    while mask:
        if mask & 1:
            out.add(i)
        mask >>= 1
        i += 1
    return frozenset(out)


@dataclass(frozen=True)
class Bundle:
    """A set of resource indices worth `value` when held in full."""

    members: frozenset[int]
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise ValueError("bundle must have at least one member")
        if any((not isinstance(i, (int, np.integer))) or i < 1 for i in self.members):
            raise ValueError("bundle members must be resource indices >= 1")
        if not self.value > 0:
            raise ValueError("bundle value must be positive")

    @property
    def mask(self) -> int:
        return holdings_mask(self.members)


@dataclass(frozen=True)
class DiscreteMultinomial:
    """High-bid distribution over integer levels 0..w_max; probs[k] = P(w = k)."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.probs) < 1:
            raise ValueError("multinomial needs at least one level")
        if any(p < 0 for p in self.probs):
            raise ValueError("multinomial probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("multinomial probabilities must sum to 1")

    @property
    def w_max(self) -> int:
        return len(self.probs) - 1

    @cached_property
    def _cum(self) -> np.ndarray:
        # _cum[j] = P(w < j) for integer j; index len(probs) means "below any
        # level above the support", i.e. total mass.
        c = np.zeros(len(self.probs) + 1)
        np.cumsum(self.probs, out=c[1:])
        return c

    def win_probability(self, z: float) -> float:
        if z < 0:
            raise ValueError("bids must be nonnegative")
        cut = min(math.ceil(z), len(self.probs))
        return float(self._cum[cut])

    def win_probability_vec(self, z: np.ndarray) -> np.ndarray:
        cut = np.minimum(np.ceil(z).astype(np.int64), len(self.probs))
        return self._cum[cut]

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probs)), self.probs))

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.probs), p=self.probs))


@dataclass(frozen=True)
class TruncatedGaussian:
    """Gaussian high-bid distribution truncated below at zero and renormalized."""

    mean: float
    std: float

    def __post_init__(self) -> None:
        if not self.std > 0:
            raise ValueError("std must be positive")
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ValueError("mean and std must be finite")

    @cached_property
    def _f0(self) -> float:
        return float(ndtr(-self.mean / self.std))

    @cached_property
    def _scale(self) -> float:
        return 1.0 - self._f0

    def win_probability(self, z: float) -> float:
        if z < 0:
            raise ValueError("bids must be nonnegative")
        return float((ndtr((z - self.mean) / self.std) - self._f0) / self._scale)

    def win_probability_vec(self, z: np.ndarray) -> np.ndarray:
        p = (ndtr((z - self.mean) / self.std) - self._f0) / self._scale
        return np.clip(p, 0.0, 1.0)

    def mean_value(self) -> float:
        """Mean of the truncated distribution (not the underlying Gaussian)."""
        a = -self.mean / self.std
        phi_a = math.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
        return self.mean + self.std * phi_a / self._scale

    def default_w_max(self) -> int:
        return math.ceil(self.mean + 4.0 * self.std)

    def sample(self, rng: np.random.Generator) -> float:
        u = rng.random()
        return float(self.mean + self.std * ndtri(self._f0 + u * self._scale))


BidDistribution = Union[DiscreteMultinomial, TruncatedGaussian]

MODE_DISCRETE = "discrete"
MODE_CONTINUOUS = "continuous"


@dataclass(frozen=True)
class ProblemSpec:
    """One auction sequence: n resources, valuation bundles, endowment, market model.

    distributions[t] is the high-bid model for the auction held at stage t,
    i.e. for resource t + 1.  In discrete mode the endowment and all bids are
    integers and every distribution is multinomial; in continuous mode bids
    are reals in [0, endowment] and every distribution is a truncated
    Gaussian.
    """

    n: int
    bundles: tuple[Bundle, ...]
    endowment: float
    residual: PwlFunction
    distributions: tuple[BidDistribution, ...]
    mode: str


def useful_resources(bundles: Iterable[Bundle]) -> frozenset[int]:
    """Union of all bundle members: the only resources worth bidding on."""
    bundles = tuple(bundles)
    if not bundles:
        raise ValueError("no bundles given")
    out: set[int] = set()
    for b in bundles:
        out |= b.members
    return frozenset(out)


def bundle_value(held: Union[int, Iterable[int]], bundles: Iterable[Bundle]) -> float:
    """Best value among bundles fully contained in the holdings; 0 if none."""
    mask = holdings_mask(held)
    best = 0.0
    for b in bundles:
        if b.mask & mask == b.mask and b.value > best:
            best = b.value
    return best


def terminal_value(held: Union[int, Iterable[int]], d: float, spec: ProblemSpec) -> float:
    """Utility once all auctions have run: bundle value plus residual utility."""
    if d < -_ENDOWMENT_SLACK or d > spec.endowment + _ENDOWMENT_SLACK:
        raise ValueError(f"endowment {d!r} outside [0, {spec.endowment}]")
    d = min(max(d, 0.0), spec.endowment)
    return bundle_value(held, spec.bundles) + spec.residual(d)


_ENDOWMENT_SLACK = 1e-9


def win_probability(dist: BidDistribution, z: float) -> float:
    """Probability that bid z strictly exceeds the market high bid."""
    return dist.win_probability(z)


def discretize_distribution(
    g: TruncatedGaussian, w_max: int | None = None
) -> DiscreteMultinomial:
    """Collapse a truncated Gaussian onto integer levels 0..w_max.

    Level k receives the probability mass of (k - 0.5, k + 0.5]; level 0 also
    absorbs [0, 0.5] and the top level absorbs the upper tail, so the masses
    sum to one by construction.
    """
    if w_max is None:
        w_max = g.default_w_max()
    if w_max < g.default_w_max():
        raise ValueError(
            f"w_max {w_max} too small; need at least {g.default_w_max()}"
        )
    edges = np.arange(0, w_max) + 0.5
    cdf = g.win_probability_vec(edges)
    masses = np.empty(w_max + 1)
    masses[0] = cdf[0]
    masses[1:w_max] = np.diff(cdf)
    masses[w_max] = 1.0 - cdf[-1]
    masses /= masses.sum()
    return DiscreteMultinomial(tuple(masses))


def to_discrete(spec: ProblemSpec, w_max: int | None = None) -> ProblemSpec:
    """Discrete-mode copy of a spec, discretizing any Gaussian distributions."""
    if abs(spec.endowment - round(spec.endowment)) > _ENDOWMENT_SLACK:
        raise ValueError("discrete mode needs an integer endowment")
    dists = tuple(
        discretize_distribution(d, w_max) if isinstance(d, TruncatedGaussian) else d
        for d in spec.distributions
    )
    return replace(spec, endowment=float(round(spec.endowment)),
                   distributions=dists, mode=MODE_DISCRETE)


def validate_problem(spec: ProblemSpec) -> list[str]:
    """All constraint violations in the problem spec, tagged with field paths.

    An empty list means the instance is well formed.
    """
    problems: list[str] = []
    if spec.n < 1:
        problems.append(f"n: must be at least 1, got {spec.n}")
    if not spec.bundles:
        problems.append("bundles: at least one bundle is required")
    for j, b in enumerate(spec.bundles):
        for i in sorted(b.members):
            if i > spec.n:
                problems.append(
                    f"bundles[{j}].members: member {i} out of range 1..{spec.n}"
                )
    if spec.bundles:
        used = useful_resources(spec.bundles)
        for i in range(1, spec.n + 1):
            if i not in used:
                problems.append(
                    f"n: resource {i} appears in no bundle; drop irrelevant resources"
                )
    if not spec.endowment >= 0:
        problems.append(f"endowment: must be nonnegative, got {spec.endowment}")
    lo, hi = spec.residual.domain
    if abs(lo) > _ENDOWMENT_SLACK or abs(hi - spec.endowment) > _ENDOWMENT_SLACK:
        problems.append(
            f"residual: domain [{lo}, {hi}] must span [0, {spec.endowment}]"
        )
    if abs(spec.residual.ys[0]) > _ENDOWMENT_SLACK:
        problems.append(f"residual: value at 0 must be 0, got {spec.residual.ys[0]}")
    if any(b < a - 1e-12 for a, b in zip(spec.residual.ys, spec.residual.ys[1:])):
        problems.append("residual: knot values must be nondecreasing")
    if len(spec.distributions) != spec.n:
        problems.append(
            f"distributions: expected {spec.n} entries, got {len(spec.distributions)}"
        )
    if spec.mode not in (MODE_DISCRETE, MODE_CONTINUOUS):
        problems.append(f"mode: unknown mode {spec.mode!r}")
    elif spec.mode == MODE_DISCRETE:
        if abs(spec.endowment - round(spec.endowment)) > _ENDOWMENT_SLACK:
            problems.append(
                f"endowment: discrete mode needs an integer endowment, got {spec.endowment}"
            )
        for t, dist in enumerate(spec.distributions):
            if not isinstance(dist, DiscreteMultinomial):
                problems.append(
                    f"distributions[{t}]: mode/distribution mismatch; "
                    "discrete mode needs multinomial distributions"
                )
    else:
        for t, dist in enumerate(spec.distributions):
            if not isinstance(dist, TruncatedGaussian):
                problems.append(
                    f"distributions[{t}]: mode/distribution mismatch; "
                    "continuous mode needs truncated-Gaussian distributions"
                )
    return problems


def ensure_valid(spec: ProblemSpec) -> ProblemSpec:
    problems = validate_problem(spec)
    if problems:
        raise ValueError("invalid problem spec:\n  " + "\n  ".join(problems))
    return spec


class BundleValueTable:
    """Memoized holdings-mask -> bundle value lookup for one spec."""

    def __init__(self, bundles: Iterable[Bundle]):
        self._pairs = [(b.mask, b.value) for b in bundles]
        self._cache: dict[int, float] = {}

    def value(self, mask: int) -> float:
        cached = self._cache.get(mask)
        if cached is not None:
            return cached
        best = 0.0
        for bmask, bvalue in self._pairs:
            if bmask & mask == bmask and bvalue > best:
                best = bvalue
        self._cache[mask] = best
        return best
