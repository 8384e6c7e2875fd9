"""Category spaces, posterior vectors, and classified sets.

Categories are numbered 1..N throughout the public interface.  A space may
additionally carry a partition of 1..N into K contiguous blocks; most users
get a single-block space for free and never think about it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    AllZeroMass,
    BlockOutOfRange,
    DimensionMismatch,
    InvalidDistribution,
    OutOfRange,
)

#: Largest tolerated deviation of sum(p) from 1 before construction fails.
SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CategorySpace:
    """A set of N categories partitioned into contiguous blocks.

    Parameters
    ----------
    n_categories : int
        Number of categories N >= 1.
    block_sizes : tuple of int, optional
        Sizes of the K contiguous blocks, summing to N.  Defaults to a
        single block containing every category.
    """

    n_categories: int
    block_sizes: tuple[int, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        n = int(self.n_categories)
        if n < 1:
            raise OutOfRange(f"need at least one category, got {n}")
        object.__setattr__(self, "n_categories", n)
        sizes = self.block_sizes
        if sizes is None:
            sizes = (n,)
        sizes = tuple(int(s) for s in sizes)
        if any(s < 1 for s in sizes):
            raise OutOfRange(f"every block needs at least one category: {sizes}")
        if sum(sizes) != n:
            raise DimensionMismatch(
                f"block sizes {sizes} sum to {sum(sizes)}, expected {n}"
            )
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def n_blocks(self) -> int:
        return len(self.block_sizes)

    @cached_property
    def _block_starts(self) -> tuple[int, ...]:
        # 0-based start offset of each block
        starts = np.concatenate(([0], np.cumsum(self.block_sizes)[:-1]))
        return tuple(int(s) for s in starts)

    @cached_property
    def _block_of(self) -> np.ndarray:
        # 1-based block label for each 0-based category position
        out = np.empty(self.n_categories, dtype=np.int64)
        for k, (start, size) in enumerate(zip(self._block_starts, self.block_sizes)):
            out[start : start + size] = k + 1
        out.setflags(write=False)
        return out

    def check_block(self, k: int) -> int:
        k = int(k)
        if not 1 <= k <= self.n_blocks:
            raise BlockOutOfRange(f"block {k} outside 1..{self.n_blocks}")
        return k

    def block_slice(self, k: int) -> slice:
        """0-based slice of the categories in block k (1-based)."""
        k = self.check_block(k)
        start = self._block_starts[k - 1]
        return slice(start, start + self.block_sizes[k - 1])

    def block_members(self, k: int) -> tuple[int, ...]:
        """The 1-based category indices of block k, in increasing order."""
        sl = self.block_slice(k)
        return tuple(range(sl.start + 1, sl.stop + 1))

    def block_of(self, category: int) -> int:
        """Return the 1-based block index containing a category."""
        i = int(category)
        if not 1 <= i <= self.n_categories:
            raise OutOfRange(f"category {i} outside 1..{self.n_categories}")
        return int(self._block_of[i - 1])


@dataclass(frozen=True)
class ClassifiedSet:
    """An unordered set of category indices assigned to one observation.

    Instances are immutable and hashable.  ``members`` is kept sorted; the
    empty set (total reject of the observation) and the full set are both
    legal values.
    """

    members: tuple[int, ...]
    n_categories: int

    def __post_init__(self) -> None:
        n = int(self.n_categories)
        members = tuple(sorted({int(i) for i in self.members}))
        if members and not (1 <= members[0] and members[-1] <= n):
            raise OutOfRange(f"members {members} outside 1..{n}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "n_categories", n)

    @classmethod
    def of(cls, members: Iterable[int], n_categories: int) -> "ClassifiedSet":
        return cls(tuple(members), n_categories)

    @classmethod
    def empty(cls, n_categories: int) -> "ClassifiedSet":
        return cls((), n_categories)

    @classmethod
    def full(cls, n_categories: int) -> "ClassifiedSet":
        return cls(tuple(range(1, n_categories + 1)), n_categories)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def is_empty(self) -> bool:
        return not self.members

    @property
    def is_full(self) -> bool:
        return len(self.members) == self.n_categories

    def as_mask(self) -> np.ndarray:
        """Boolean membership mask over 0-based category positions."""
        mask = np.zeros(self.n_categories, dtype=bool)
        for i in self.members:
            mask[i - 1] = True
        return mask

    def __contains__(self, category: int) -> bool:
        return int(category) in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


class PosteriorVector:
    """Posterior category probabilities for one observation.

    The vector is validated and renormalized on construction: entries must
    be finite and nonnegative and the sum may deviate from one by at most
    ``SUM_TOLERANCE``.  Larger deviations raise ``InvalidDistribution``
    rather than being silently rescaled.

    Order statistics use a fixed tie rule: among equal probabilities the
    category with the smaller index counts as the larger one.  Every
    operation in this package that ranks categories goes through the
    orderings cached here, so ties break identically everywhere.

    Parameters
    ----------
    p : array_like
        Nonnegative probabilities, one per category.
    space : CategorySpace, optional
        Defaults to a single-block space over ``len(p)`` categories.
    """

    __slots__ = ("p", "space", "__dict__")

    def __init__(self, p, space: CategorySpace | None = None):
        arr = np.asarray(p, dtype=float).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise DimensionMismatch(f"expected a 1-d probability vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidDistribution("probabilities must be finite")
        if np.any(arr < 0.0):
            raise InvalidDistribution("probabilities must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidDistribution(
                f"probabilities sum to {total!r}, more than {SUM_TOLERANCE} away from 1"
            )
        arr /= total
        if space is None:
            space = CategorySpace(arr.size)
        elif space.n_categories != arr.size:
            raise DimensionMismatch(
                f"vector has {arr.size} entries but space has {space.n_categories} categories"
            )
        arr.setflags(write=False)
        self.p = arr
        self.space = space

    @property
    def n_categories(self) -> int:
        return self.space.n_categories

    @cached_property
    def order_desc(self) -> np.ndarray:
        """0-based category positions sorted by decreasing probability.

        Stable in the category index, so ties list the smaller index first.
        """
        order = np.argsort(-self.p, kind="stable")
        order.setflags(write=False)
        return order

    @cached_property
    def sorted_desc(self) -> np.ndarray:
        vals = self.p[self.order_desc]
        vals.setflags(write=False)
        return vals

    @cached_property
    def _cumsum_desc(self) -> np.ndarray:
        out = np.concatenate(([0.0], np.cumsum(self.sorted_desc)))
        out.setflags(write=False)
        return out

    @cached_property
    def _block_order_desc(self) -> tuple[np.ndarray, ...]:
        orders = []
        for k in range(1, self.space.n_blocks + 1):
            sl = self.space.block_slice(k)
            local = np.argsort(-self.p[sl], kind="stable") + sl.start
            local.setflags(write=False)
            orders.append(local)
        return tuple(orders)

    @cached_property
    def _block_cumsum_desc(self) -> tuple[np.ndarray, ...]:
        sums = []
        for order in self._block_order_desc:
            arr = np.concatenate(([0.0], np.cumsum(self.p[order])))
            arr.setflags(write=False)
            sums.append(arr)
        return tuple(sums)

    def max_prob(self) -> float:
        """The largest posterior probability."""
        return float(self.sorted_desc[0])

    def argmax_category(self) -> int:
        """1-based index of the most probable category (ties: smallest index)."""
        return int(self.order_desc[0]) + 1

    def top_m_set(self, m: int) -> ClassifiedSet:
        """The m most probable categories under the tie rule."""
        m = self._check_size(m)
        members = (self.order_desc[:m] + 1).tolist()
        return ClassifiedSet.of(members, self.n_categories)

    def top_m_cumsum(self, m: int) -> float:
        """Total probability of the m most probable categories.

        Nondecreasing and concave as a function of m, with value 0 at m=0.
        """
        m = self._check_size(m)
        return float(self._cumsum_desc[m])

    def block_mass(self, k: int) -> float:
        """Total posterior probability of block k."""
        sl = self.space.block_slice(k)
        return float(self.p[sl].sum())

    def top_m_set_in_block(self, k: int, m: int) -> ClassifiedSet:
        """The m most probable categories of block k."""
        self.space.check_block(k)
        m = self._check_block_size(k, m)
        order = self._block_order_desc[k - 1]
        return ClassifiedSet.of((order[:m] + 1).tolist(), self.n_categories)

    def top_m_cumsum_in_block(self, k: int, m: int) -> float:
        """Total probability of the m most probable categories of block k."""
        self.space.check_block(k)
        m = self._check_block_size(k, m)
        return float(self._block_cumsum_desc[k - 1][m])

    def _check_size(self, m: int) -> int:
        m = int(m)
        if not 0 <= m <= self.n_categories:
            raise OutOfRange(f"size {m} outside 0..{self.n_categories}")
        return m

    def _check_block_size(self, k: int, m: int) -> int:
        m = int(m)
        limit = self.space.block_sizes[k - 1]
        if not 0 <= m <= limit:
            raise OutOfRange(f"size {m} outside 0..{limit} for block {k}")
        return m

    def __repr__(self) -> str:  # pragma: no cover
        return f"PosteriorVector({np.array2string(self.p, precision=4)})"


def posterior_from_likelihoods(
    prior, likelihoods, space: CategorySpace | None = None
) -> PosteriorVector:
    """Combine prior weights with per-category likelihoods via Bayes' rule.

    Parameters
    ----------
    prior : array_like
        Nonnegative prior weights, one per category.  They need not be
        normalized.
    likelihoods : array_like
        Nonnegative density values f_i(z) of the observation under each
        category, in the same order as ``prior``.
    space : CategorySpace, optional
        Attached to the result; defaults to a single block.

    Returns
    -------
    PosteriorVector

    Raises
    ------
    DimensionMismatch
        If the two vectors differ in length.
    AllZeroMass
        If every product prior[i] * likelihoods[i] is zero.
    """
    w = np.asarray(prior, dtype=float)
    f = np.asarray(likelihoods, dtype=float)
    if w.shape != f.shape or w.ndim != 1:
        raise DimensionMismatch(
            f"prior has shape {w.shape} but likelihoods have shape {f.shape}"
        )
    if np.any(w < 0) or np.any(f < 0) or not (np.all(np.isfinite(w)) and np.all(np.isfinite(f))):
        raise InvalidDistribution("prior and likelihoods must be finite and nonnegative")
    mass = w * f
    total = mass.sum()
    if total <= 0.0:
        raise AllZeroMass("all categories received zero posterior mass")
    return PosteriorVector(mass / total, space)
