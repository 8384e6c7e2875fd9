"""Reward functions over (classified set, true category) pairs.

A reward specification pins down how much credit a classified set earns
when the truth is category i.  The expected reward of a set under a
posterior vector is the quantity every classifier in this package
maximizes, so the specifications here are the single source of truth for
what "optimal" means downstream.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import CategorySpace, ClassifiedSet, PosteriorVector
from .errors import (
    DimensionMismatch,
    NotConvex,
    OutOfRange,
    SpecSpaceMismatch,
)

#: Slack used when verifying penalty convexity, absorbing float rounding in
#: sequences such as 0.3*m whose exact second differences are zero.
CONVEXITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PenaltySequence:
    """Nonnegative penalty g(m) charged for reporting a set of size m.

    Parameters
    ----------
    values : tuple of float
        g(0), g(1), ..., g(N).  All entries must be >= 0.
    convex : bool
        Declare that g(0) = 0 and the increments g(m) - g(m-1) are
        nondecreasing.  The declaration is verified on construction and
        unlocks the threshold fast path in the classifiers.
    """

    values: tuple[float, ...]
    convex: bool = False

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise DimensionMismatch("penalty needs entries for sizes 0..N with N >= 1")
        if any(not np.isfinite(v) or v < 0.0 for v in vals):
            raise OutOfRange(f"penalties must be finite and nonnegative: {vals}")
        object.__setattr__(self, "values", vals)
        if self.convex and not _convexity_holds(vals):
            raise NotConvex(f"sequence {vals} declared convex but is not")

    @property
    def max_size(self) -> int:
        """Largest set size the sequence covers (the N it was built for)."""
        return len(self.values) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @classmethod
    def linear(cls, cost: float, n_categories: int) -> "PenaltySequence":
        """g(m) = cost * m, the per-member charge behind conformal sets."""
        cost = _check_cost(cost)
        return cls(tuple(cost * m for m in range(n_categories + 1)), convex=True)

    @classmethod
    def proportional(cls, cost: float, n_categories: int) -> "PenaltySequence":
        """g(m) = cost * max(0, m - 1): the first category is free."""
        cost = _check_cost(cost)
        return cls(tuple(cost * max(0, m - 1) for m in range(n_categories + 1)), convex=True)

    @classmethod
    def reject_plateau(cls, reject_reward: float, n_categories: int) -> "PenaltySequence":
        """The penalty shape equivalent to a singleton-or-everything rule.

        g(1) = 0, g(m) = 1 for intermediate sizes, and g(N) = 1 - reject_reward,
        so the only competitive sets are singletons and the full set.
        """
        n = int(n_categories)
        if n < 2:
            raise OutOfRange("the singleton-or-everything shape needs at least 2 categories")
        r = float(reject_reward)
        if not 1.0 / n < r < 1.0:
            raise OutOfRange(f"reject reward {r} outside (1/{n}, 1)")
        vals = [0.0, 0.0] + [1.0] * (n - 2) + [1.0 - r]
        return cls(tuple(vals), convex=False)

    def is_convex_shape(self) -> bool:
        """Check the convexity property of the stored values."""
        return _convexity_holds(self.values)


def _convexity_holds(vals: tuple[float, ...], tol: float = CONVEXITY_TOLERANCE) -> bool:
    if abs(vals[0]) > tol:
        return False
    g = np.asarray(vals, dtype=float)
    increments = np.diff(g)
    return bool(np.all(np.diff(increments) >= -tol))


def _check_cost(cost: float) -> float:
    cost = float(cost)
    if not np.isfinite(cost) or cost < 0.0:
        raise OutOfRange(f"cost must be finite and nonnegative, got {cost}")
    return cost


@dataclass(frozen=True)
class MapZeroOne:
    """Full reward for naming the single true category, nothing otherwise."""


@dataclass(frozen=True)
class InvariantPenalty:
    """Membership credit minus a penalty that depends only on the set size."""

    penalty: PenaltySequence


@dataclass(frozen=True)
class ProportionBased:
    """Membership credit minus ``cost`` per reported category beyond the first."""

    cost: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "cost", _check_cost(self.cost))


@dataclass(frozen=True)
class RipleyReject:
    """Classical reject option: name one category or surrender the whole space.

    A singleton earns 1 when correct; reporting every category earns
    ``reject_reward`` regardless of the truth; anything else earns 0.
    Requires 1/N < reject_reward < 1, checked where N is known.
    """

    reject_reward: float

    def __post_init__(self) -> None:
        r = float(self.reject_reward)
        if not np.isfinite(r) or not 0.0 < r < 1.0:
            raise OutOfRange(f"reject reward {r} outside (0, 1)")
        object.__setattr__(self, "reject_reward", r)

    def check_against(self, n_categories: int) -> None:
        if self.reject_reward <= 1.0 / n_categories:
            raise OutOfRange(
                f"reject reward {self.reject_reward} must exceed 1/{n_categories}"
            )


@dataclass(frozen=True)
class CompositeProportion:
    """Blockwise costs: cheap extra categories from the right block, dear ones
    from the wrong blocks.

    ``within_cost`` is charged per reported category beyond the first inside
    the true category's block; ``cross_cost`` per reported category outside
    it.  Setting them equal recovers a plain per-extra-category charge in
    which a nonempty intersection with the true block waives one unit.
    """

    within_cost: float
    cross_cost: float

    def __post_init__(self) -> None:
        a = _check_cost(self.within_cost)
        b = _check_cost(self.cross_cost)
        object.__setattr__(self, "within_cost", a)
        object.__setattr__(self, "cross_cost", b)
        if a > b:
            warnings.warn(
                "within-block cost exceeds cross-block cost; same-block "
                "confusions will be punished harder than cross-block ones",
                stacklevel=2,
            )


@dataclass(frozen=True)
class IndifferenceZone:
    """Singleton-or-nothing scoring with a distinguished zone category.

    The space has N regular categories plus a final zone category N+1.
    Naming the true regular category as a singleton earns 1; reporting the
    empty set earns ``empty_reward`` when the truth is the zone; everything
    else earns 0.
    """

    empty_reward: float

    def __post_init__(self) -> None:
        r = float(self.empty_reward)
        if not np.isfinite(r) or r <= 0.0:
            raise OutOfRange(f"empty-set reward {r} must be positive")
        object.__setattr__(self, "empty_reward", r)


RewardSpec = Union[
    MapZeroOne,
    InvariantPenalty,
    ProportionBased,
    RipleyReject,
    CompositeProportion,
    IndifferenceZone,
]


class BinaryReward(enum.Enum):
    """The four 0/1 scores used for cross-validated error rates.

    EXACT_SINGLETON <= WITHIN_BLOCK <= CONTAINS_TRUTH <= HITS_TRUE_BLOCK
    pointwise, which forces the same ordering on any weighted rate.
    """

    EXACT_SINGLETON = "R1"
    WITHIN_BLOCK = "R2"
    CONTAINS_TRUTH = "R3"
    HITS_TRUE_BLOCK = "R4"


def _check_pair(chosen: ClassifiedSet, true_category: int, space: CategorySpace) -> int:
    if chosen.n_categories != space.n_categories:
        raise SpecSpaceMismatch(
            f"set built for {chosen.n_categories} categories, space has {space.n_categories}"
        )
    i = int(true_category)
    if not 1 <= i <= space.n_categories:
        raise OutOfRange(f"true category {i} outside 1..{space.n_categories}")
    return i


def reward(
    spec: RewardSpec, chosen: ClassifiedSet, true_category: int, space: CategorySpace
) -> float:
    """Evaluate a reward specification on one (set, truth) pair.

    Parameters
    ----------
    spec : RewardSpec
        Any of the reward dataclasses in this module.
    chosen : ClassifiedSet
        The reported set of categories.
    true_category : int
        1-based true category.  For ``IndifferenceZone`` the final category
        of the space plays the role of the zone.
    space : CategorySpace
        Supplies N and the block partition.

    Returns
    -------
    float
    """
    i = _check_pair(chosen, true_category, space)
    size = chosen.size
    hit = 1.0 if i in chosen else 0.0

    if isinstance(spec, MapZeroOne):
        return 1.0 if (size == 1 and hit) else 0.0
    if isinstance(spec, InvariantPenalty):
        g = spec.penalty.values
        if len(g) != space.n_categories + 1:
            raise DimensionMismatch(
                f"penalty covers sizes 0..{len(g) - 1}, space needs 0..{space.n_categories}"
            )
        return hit - g[size]
    if isinstance(spec, ProportionBased):
        return hit - spec.cost * max(0, size - 1)
    if isinstance(spec, RipleyReject):
        spec.check_against(space.n_categories)
        if size == 1:
            return hit
        if size == space.n_categories:
            return spec.reject_reward
        return 0.0
    if isinstance(spec, CompositeProportion):
        k = space.block_of(i)
        sl = space.block_slice(k)
        in_block = sum(1 for j in chosen if sl.start < j <= sl.stop)
        return (
            hit
            - spec.within_cost * max(in_block - 1, 0)
            - spec.cross_cost * (size - in_block)
        )
    if isinstance(spec, IndifferenceZone):
        if space.n_categories < 2:
            raise SpecSpaceMismatch("indifference-zone scoring needs a zone plus >= 1 category")
        zone = space.n_categories
        if i == zone:
            return spec.empty_reward if chosen.is_empty else 0.0
        return 1.0 if (size == 1 and hit) else 0.0
    raise TypeError(f"unknown reward specification {spec!r}")


def binary_reward(
    variant: BinaryReward, chosen: ClassifiedSet, true_category: int, space: CategorySpace
) -> int:
    """Evaluate one of the four 0/1 scores."""
    i = _check_pair(chosen, true_category, space)
    if variant is BinaryReward.EXACT_SINGLETON:
        return int(chosen.size == 1 and i in chosen)
    k = space.block_of(i)
    sl = space.block_slice(k)
    if variant is BinaryReward.WITHIN_BLOCK:
        return int(i in chosen and all(sl.start < j <= sl.stop for j in chosen))
    if variant is BinaryReward.CONTAINS_TRUTH:
        return int(i in chosen)
    if variant is BinaryReward.HITS_TRUE_BLOCK:
        return int(any(sl.start < j <= sl.stop for j in chosen))
    raise TypeError(f"unknown binary reward {variant!r}")


def value_function(spec: RewardSpec, p: PosteriorVector, chosen: ClassifiedSet) -> float:
    """Expected reward of a candidate set under a posterior vector.

    This is the objective every classifier maximizes; the exhaustive search
    in ``classifiers.brute_force_optimal`` maximizes it by enumeration.
    """
    space = p.space
    if chosen.n_categories != space.n_categories:
        raise SpecSpaceMismatch(
            f"set built for {chosen.n_categories} categories, space has {space.n_categories}"
        )
    total = 0.0
    for i in range(1, space.n_categories + 1):
        total += reward(spec, chosen, i, space) * float(p.p[i - 1])
    return total


_KIND_TO_BUILDER = {
    "map": lambda d: MapZeroOne(),
    "penalty": lambda d: InvariantPenalty(
        PenaltySequence(tuple(float(v) for v in d["g"]), convex=bool(d.get("convex", False)))
    ),
    "proportion": lambda d: ProportionBased(float(d["c"])),
    "ripley": lambda d: RipleyReject(float(d["r"])),
    "composite": lambda d: CompositeProportion(float(d["a"]), float(d["b"])),
    "indifference_zone": lambda d: IndifferenceZone(float(d["r"])),
}


def reward_spec_from_json(obj: dict) -> RewardSpec:
    """Build a reward specification from its JSON dictionary form.

    The dictionary carries a ``kind`` discriminator; unknown kinds and
    missing parameters raise ``ValueError`` so callers can map the failure
    to an input-schema error.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("reward specification must be an object with a 'kind' field")
    kind = obj["kind"]
    builder = _KIND_TO_BUILDER.get(kind)
    if builder is None:
        raise ValueError(
            f"unknown reward kind {kind!r}; expected one of {sorted(_KIND_TO_BUILDER)}"
        )
    try:
        return builder(obj)
    except KeyError as missing:
        raise ValueError(f"reward kind {kind!r} is missing parameter {missing}") from None


def reward_spec_to_json(spec: RewardSpec) -> dict:
    """Serialize a reward specification to its JSON dictionary form."""
    if isinstance(spec, MapZeroOne):
        return {"kind": "map"}
    if isinstance(spec, InvariantPenalty):
        return {
            "kind": "penalty",
            "g": list(spec.penalty.values),
            "convex": spec.penalty.convex,
        }
    if isinstance(spec, ProportionBased):
        return {"kind": "proportion", "c": spec.cost}
    if isinstance(spec, RipleyReject):
        return {"kind": "ripley", "r": spec.reject_reward}
    if isinstance(spec, CompositeProportion):
        return {"kind": "composite", "a": spec.within_cost, "b": spec.cross_cost}
    if isinstance(spec, IndifferenceZone):
        return {"kind": "indifference_zone", "r": spec.empty_reward}
    raise TypeError(f"unknown reward specification {spec!r}")
