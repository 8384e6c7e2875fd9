"""Optimal set-valued classifiers for the reward families in ``rewards``.

Every rule here maximizes the expected reward of the reported set under a
posterior vector.  For size-penalized rewards the optimum is always one of
the N+1 "take the m most probable categories" sets, which reduces the
search to a scan over m; convex penalties admit an even shorter threshold
rule.  ``brute_force_optimal`` ignores all of that structure and checks
every subset, which is what the fast paths are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ClassifiedSet, PosteriorVector
from .errors import (
    DimensionMismatch,
    NotConvex,
    OutOfRange,
    TooManyCategories,
    UnsupportedReward,
)
from .rewards import (
    CompositeProportion,
    IndifferenceZone,
    InvariantPenalty,
    MapZeroOne,
    PenaltySequence,
    ProportionBased,
    RewardSpec,
    RipleyReject,
    value_function,
)

#: Exhaustive subset search is refused above this many categories.
BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class MMPResult:
    """A most-probable-categories set together with its size and value."""

    chosen: ClassifiedSet
    size: int
    value: float


@dataclass(frozen=True)
class CompositeResult:
    """Blockwise most-probable set with per-block sizes and total value."""

    chosen: ClassifiedSet
    block_sizes: tuple[int, ...]
    value: float


@dataclass(frozen=True)
class BruteForceResult:
    """Best subset found by exhaustive enumeration."""

    chosen: ClassifiedSet
    value: float


def map_classifier(p: PosteriorVector) -> ClassifiedSet:
    """The single most probable category (ties: smallest index)."""
    return p.top_m_set(1)


def mmp_general(p: PosteriorVector, penalty: PenaltySequence) -> MMPResult:
    """Best most-probable-categories set for an arbitrary size penalty.

    Scans all sizes m = 0..N of the expected reward
    ``top_m_cumsum(m) - g(m)`` and keeps the maximizer, preferring the
    larger m when several sizes tie exactly.

    Parameters
    ----------
    p : PosteriorVector
    penalty : PenaltySequence
        Must cover sizes 0..N.  No convexity is assumed.

    Returns
    -------
    MMPResult
    """
    n = p.n_categories
    g = penalty.as_array()
    if g.size != n + 1:
        raise DimensionMismatch(f"penalty covers sizes 0..{g.size - 1}, need 0..{n}")
    objective = p._cumsum_desc - g
    best = int(np.flatnonzero(objective == objective.max())[-1])
    return MMPResult(p.top_m_set(best), best, float(objective[best]))


def mmp_convex(p: PosteriorVector, penalty: PenaltySequence) -> MMPResult:
    """Threshold form of ``mmp_general`` for convex penalties.

    With convex g the objective is concave in m, so the best size is the
    last m whose marginal gain is still nonnegative: include the m-th most
    probable category exactly while its probability covers the penalty
    increment g(m) - g(m-1).

    Raises
    ------
    NotConvex
        If the penalty fails verification (g(0) = 0 and nondecreasing
        increments, up to a 1e-12 slack).
    """
    n = p.n_categories
    g = penalty.as_array()
    if g.size != n + 1:
        raise DimensionMismatch(f"penalty covers sizes 0..{g.size - 1}, need 0..{n}")
    if not penalty.is_convex_shape():
        raise NotConvex(f"penalty {penalty.values} is not convex with g(0) = 0")
    gains = p.sorted_desc - np.diff(g)
    keep = np.flatnonzero(gains >= 0.0)
    best = int(keep[-1]) + 1 if keep.size else 0
    value = float(p._cumsum_desc[best] - g[best])
    return MMPResult(p.top_m_set(best), best, value)


def proportion_classifier(p: PosteriorVector, cost: float) -> MMPResult:
    """Best set when each reported category beyond the first costs ``cost``.

    The most probable category is always included, and category number
    m >= 2 joins exactly while its probability is at least ``cost``.  With
    ``cost`` above the top probability this is the plain single-category
    rule; with ``cost`` = 0 the whole space is reported.
    """
    cost = float(cost)
    if not np.isfinite(cost) or cost < 0.0:
        raise OutOfRange(f"cost must be finite and nonnegative, got {cost}")
    n = p.n_categories
    extras = np.flatnonzero(p.sorted_desc[1:] >= cost)
    best = int(extras[-1]) + 2 if extras.size else 1
    value = float(p._cumsum_desc[best] - cost * (best - 1))
    return MMPResult(p.top_m_set(best), best, value)


def rho_classifier(p: PosteriorVector, ratio: float) -> ClassifiedSet:
    """All categories whose probability is at least ``ratio`` times the maximum.

    A scale-free reparametrization of ``proportion_classifier``: the same
    set comes back for every posterior that is a rescaling of ``p``.  With
    ``ratio`` = 1 this is the most probable category plus its exact ties;
    with ``ratio`` = 0 it is the whole space.
    """
    ratio = float(ratio)
    if not np.isfinite(ratio) or not 0.0 <= ratio <= 1.0:
        raise OutOfRange(f"ratio {ratio} outside [0, 1]")
    members = np.flatnonzero(p.p >= ratio * p.max_prob()) + 1
    return ClassifiedSet.of(members.tolist(), p.n_categories)


def ripley_classifier(p: PosteriorVector, reject_reward: float) -> ClassifiedSet:
    """Name the most probable category, or reject to the full space.

    The singleton wins exactly when its probability exceeds
    ``reject_reward``; at equality the full space is preferred (both have
    the same expected reward).
    """
    spec = RipleyReject(reject_reward)
    spec.check_against(p.n_categories)
    if p.max_prob() > spec.reject_reward:
        return p.top_m_set(1)
    return ClassifiedSet.full(p.n_categories)


def conformal_classifier(p: PosteriorVector, cost: float) -> ClassifiedSet:
    """All categories with probability at least ``cost``; may be empty.

    Equivalent to ``mmp_convex`` with the linear penalty cost * m.  The
    returned set shrinks as ``cost`` grows, so a calibrated ``cost``
    controls how often the true category is dropped.
    """
    cost = float(cost)
    if not np.isfinite(cost) or cost < 0.0:
        raise OutOfRange(f"cost must be finite and nonnegative, got {cost}")
    members = np.flatnonzero(p.p >= cost) + 1
    return ClassifiedSet.of(members.tolist(), p.n_categories)


def composite_classifier(
    p: PosteriorVector, within_cost: float, cross_cost: float
) -> CompositeResult:
    """Blockwise optimal set under within/cross block category costs.

    The objective separates over blocks.  Within block k, writing P_k for
    the block's total mass, the first category joins when its probability
    is at least (1 - P_k) * cross_cost, and category number m >= 2 joins
    while its probability is at least
    P_k * within_cost + (1 - P_k) * cross_cost.

    Returns
    -------
    CompositeResult
        The union of the per-block choices, the per-block sizes, and the
        achieved expected reward.
    """
    spec = CompositeProportion(within_cost, cross_cost)
    a, b = spec.within_cost, spec.cross_cost
    space = p.space
    members: list[int] = []
    sizes: list[int] = []
    value = 0.0
    for k in range(1, space.n_blocks + 1):
        order = p._block_order_desc[k - 1]
        vals = p.p[order]
        mass = p.block_mass(k)
        single = 1 if vals[0] >= (1.0 - mass) * b else 0
        extras = np.flatnonzero(vals[1:] >= mass * a + (1.0 - mass) * b)
        m_k = int(extras[-1]) + 2 if extras.size else single
        sizes.append(m_k)
        members.extend((order[:m_k] + 1).tolist())
        value += (
            p.top_m_cumsum_in_block(k, m_k)
            - mass * a * max(m_k - 1, 0)
            - (1.0 - mass) * b * m_k
        )
    return CompositeResult(
        ClassifiedSet.of(members, space.n_categories), tuple(sizes), value
    )


def indifference_zone_classifier(probs, empty_reward: float) -> ClassifiedSet:
    """Singleton-or-nothing rule with the last category acting as a zone.

    ``probs`` holds N + 1 probabilities whose final entry belongs to the
    zone.  The most probable regular category is reported as a singleton
    when its probability is at least ``empty_reward`` times the zone
    probability; otherwise the empty set is returned.
    """
    spec = IndifferenceZone(empty_reward)
    p = probs if isinstance(probs, PosteriorVector) else PosteriorVector(probs)
    total = p.n_categories
    if total < 2:
        raise DimensionMismatch("need at least one regular category plus the zone")
    regular = p.p[: total - 1]
    best = int(np.argmax(regular))  # first occurrence, so ties go to the smaller index
    if regular[best] >= spec.empty_reward * p.p[total - 1]:
        return ClassifiedSet.of([best + 1], total)
    return ClassifiedSet.empty(total)


@lru_cache(maxsize=8)
def _mask_sizes(n: int) -> np.ndarray:
    sizes = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    sizes.setflags(write=False)
    return sizes


def _mask_sums(values: np.ndarray) -> np.ndarray:
    """Sum of ``values`` over every bitmask subset, bit j <-> entry j."""
    out = np.zeros(1, dtype=float)
    for v in values:
        out = np.concatenate([out, out + v])
    return out


def brute_force_optimal(spec: RewardSpec, p: PosteriorVector) -> BruteForceResult:
    """Maximize expected reward by checking every subset of categories.

    Exponential in N and refused above ``BRUTE_FORCE_LIMIT`` categories.
    Ties are resolved toward the lexicographically smallest bitmask, where
    bit j of the mask means category j + 1 is in the set.

    Raises
    ------
    TooManyCategories
        If N exceeds the enumeration limit.
    UnsupportedReward
        For ``IndifferenceZone``, whose reward singles out one category
        and is served by its own dedicated rule instead.
    """
    n = p.n_categories
    if n > BRUTE_FORCE_LIMIT:
        raise TooManyCategories(f"{n} categories exceed the enumeration limit {BRUTE_FORCE_LIMIT}")
    if isinstance(spec, IndifferenceZone):
        raise UnsupportedReward(
            "indifference-zone scoring has a dedicated rule; exhaustive "
            "search only covers rewards driven by membership and set sizes"
        )
    sizes = _mask_sizes(n)
    included = _mask_sums(p.p)

    if isinstance(spec, MapZeroOne):
        values = np.where(sizes == 1, included, 0.0)
    elif isinstance(spec, InvariantPenalty):
        g = spec.penalty.as_array()
        if g.size != n + 1:
            raise DimensionMismatch(f"penalty covers sizes 0..{g.size - 1}, need 0..{n}")
        values = included - g[sizes]
    elif isinstance(spec, ProportionBased):
        values = included - spec.cost * np.maximum(sizes - 1, 0)
    elif isinstance(spec, RipleyReject):
        spec.check_against(n)
        values = np.where(sizes == 1, included, 0.0)
        values[-1] = spec.reject_reward
    elif isinstance(spec, CompositeProportion):
        a, b = spec.within_cost, spec.cross_cost
        values = included.astype(float, copy=True)
        for k in range(1, p.space.n_blocks + 1):
            sl = p.space.block_slice(k)
            inside = np.zeros(n)
            inside[sl] = 1.0
            block_sizes = _mask_sums(inside).astype(np.int64)
            mass = p.block_mass(k)
            values -= mass * (
                a * np.maximum(block_sizes - 1, 0) + b * (sizes - block_sizes)
            )
    else:
        raise TypeError(f"unknown reward specification {spec!r}")

    best = int(np.argmax(values))  # first maximum = smallest bitmask
    members = [j + 1 for j in range(n) if best >> j & 1]
    return BruteForceResult(
        ClassifiedSet.of(members, n), float(values[best])
    )


def optimal_set(spec: RewardSpec, p: PosteriorVector) -> tuple[ClassifiedSet, float]:
    """Dispatch a reward specification to its optimal rule.

    Returns the chosen set together with its expected reward as computed
    by ``value_function``, so the reported value is consistent across
    reward families regardless of which rule produced the set.
    """
    if isinstance(spec, MapZeroOne):
        chosen = map_classifier(p)
    elif isinstance(spec, InvariantPenalty):
        result = mmp_convex(p, spec.penalty) if spec.penalty.convex else mmp_general(p, spec.penalty)
        chosen = result.chosen
    elif isinstance(spec, ProportionBased):
        chosen = proportion_classifier(p, spec.cost).chosen
    elif isinstance(spec, RipleyReject):
        chosen = ripley_classifier(p, spec.reject_reward)
    elif isinstance(spec, CompositeProportion):
        chosen = composite_classifier(p, spec.within_cost, spec.cross_cost).chosen
    elif isinstance(spec, IndifferenceZone):
        chosen = indifference_zone_classifier(p, spec.empty_reward)
    else:
        raise TypeError(f"unknown reward specification {spec!r}")
    return chosen, value_function(spec, p, chosen)
