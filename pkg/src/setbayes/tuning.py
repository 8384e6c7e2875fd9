"""Leave-one-out tuning of the blockwise cost parameters.

The cross-validated quality of a cost pair (within, cross) is a weighted
average of 0/1 scores over held-out observations, with the cross cost
swept along a grid while the within cost stays a fixed multiple
``epsilon`` of it.  Refitting touches only the left-out observation's
category, so each fold is one conjugate update plus a fresh Monte Carlo
sample for that category; every other category keeps the full-fit draws.

Posterior vectors are computed once per fold and cached; sweeping the grid
afterwards costs almost nothing.  Two selection rules are provided: the
largest cost whose error stays under a bound (for scores where the error
is monotone in the cost) and direct error minimization with a golden
section refinement (for the singleton-style scores).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .classifiers import composite_classifier
from .core import CategorySpace, PosteriorVector
from .errors import (
    CategoryTooSmall,
    DimensionMismatch,
    MissingRealPrior,
    NoFeasibleB,
    OutOfRange,
)
from .gaussian import (
    NormalInverseWishart,
    TrainingData,
    conjugate_update,
    default_hyperprior,
    draw_category_sample,
    fit,
    fold_rng,
    log_posterior_matrix,
)
from .rewards import BinaryReward, binary_reward

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

_VARIANT_ORDER = (
    BinaryReward.EXACT_SINGLETON,
    BinaryReward.WITHIN_BLOCK,
    BinaryReward.CONTAINS_TRUTH,
    BinaryReward.HITS_TRUE_BLOCK,
)


@dataclass(frozen=True)
class WeightScheme:
    """How held-out observations are weighted in the cross-validated rate.

    ``per_observation`` weights categories by their sample counts, so every
    observation counts equally.  ``per_category`` weights categories
    equally regardless of size.  ``rarity`` weights categories by the
    inverse of their real-world frequencies, which must be supplied.
    """

    kind: str
    real_prior: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("per_observation", "per_category", "rarity"):
            raise OutOfRange(f"unknown weighting scheme {self.kind!r}")
        if self.real_prior is not None:
            rp = tuple(float(v) for v in self.real_prior)
            if any(v <= 0 or not np.isfinite(v) for v in rp):
                raise OutOfRange("real-world frequencies must be positive and finite")
            object.__setattr__(self, "real_prior", rp)


def make_weights(scheme: WeightScheme, counts, real_prior=None) -> np.ndarray:
    """Category weights summing to one under the given scheme.

    Parameters
    ----------
    scheme : WeightScheme
    counts : sequence of int
        Per-category sample sizes.
    real_prior : array_like, optional
        Real-world frequencies for the rarity scheme; overrides any
        frequencies stored on the scheme.

    Raises
    ------
    MissingRealPrior
        If the rarity scheme has no frequencies from either source.
    """
    n = np.asarray(counts, dtype=float)
    if n.ndim != 1 or n.size < 1 or np.any(n < 0):
        raise OutOfRange(f"counts must be nonnegative, got {counts!r}")
    if scheme.kind == "per_observation":
        total = n.sum()
        if total <= 0:
            raise OutOfRange("counts sum to zero")
        return n / total
    if scheme.kind == "per_category":
        return np.full(n.size, 1.0 / n.size)
    freq = real_prior if real_prior is not None else scheme.real_prior
    if freq is None:
        raise MissingRealPrior("rarity weighting needs real-world frequencies")
    f = np.asarray(freq, dtype=float)
    if f.shape != n.shape:
        raise DimensionMismatch(f"frequencies have shape {f.shape}, counts {n.shape}")
    if np.any(f <= 0) or not np.all(np.isfinite(f)):
        raise OutOfRange("real-world frequencies must be positive and finite")
    inv = 1.0 / f
    return inv / inv.sum()


@dataclass(frozen=True)
class CVConfig:
    """Settings for one leave-one-out tuning run.

    ``epsilon`` ties the within-block cost to the swept cross-block cost:
    within = epsilon * cross at every grid point.  ``delta`` is the error
    bound used by the threshold selection rule.  The grid runs from
    ``grid_lo`` to ``grid_hi`` in steps of ``grid_step``.
    """

    epsilon: float
    delta: float
    weights: WeightScheme
    variant: BinaryReward
    grid_lo: float
    grid_hi: float
    grid_step: float
    n_draws: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise OutOfRange(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise OutOfRange(f"delta {self.delta} outside (0, 1)")
        if not 0.0 < self.grid_lo <= self.grid_hi:
            raise OutOfRange(
                f"grid needs 0 < lo <= hi, got lo={self.grid_lo} hi={self.grid_hi}"
            )
        if self.grid_step <= 0:
            raise OutOfRange(f"grid step must be positive, got {self.grid_step}")
        if self.n_draws < 1:
            raise OutOfRange(f"need at least one draw, got {self.n_draws}")

    def grid(self) -> np.ndarray:
        """The cost grid lo, lo + step, ..., up to hi inclusive."""
        count = int(math.floor((self.grid_hi - self.grid_lo) / self.grid_step + 1e-9)) + 1
        return self.grid_lo + self.grid_step * np.arange(count)


class HeldOutPosteriors:
    """Cached held-out posterior vectors for every (category, row) fold."""

    def __init__(
        self,
        vectors: list[PosteriorVector],
        categories: np.ndarray,
        counts: tuple[int, ...],
        space: CategorySpace,
    ):
        self.vectors = vectors
        self.categories = categories
        self.counts = counts
        self.space = space

    @property
    def n_folds(self) -> int:
        return len(self.vectors)

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.vstack([v.p for v in self.vectors])

    @cached_property
    def _kernel_arrays(self):
        """Per-fold quantities the grid kernel needs, padded per block."""
        space = self.space
        n_blocks = space.n_blocks
        widest = max(space.block_sizes)
        n = self.n_folds
        vals = np.full((n, n_blocks, widest), -1.0)
        mass = np.empty((n, n_blocks))
        truth_block = np.empty(n, dtype=np.int64)
        truth_rank = np.empty(n, dtype=np.int64)
        for r, pv in enumerate(self.vectors):
            cat = int(self.categories[r])
            k = space.block_of(cat)
            truth_block[r] = k - 1
            order = pv._block_order_desc[k - 1]
            truth_rank[r] = int(np.flatnonzero(order == cat - 1)[0]) + 1
            for kk in range(n_blocks):
                o = pv._block_order_desc[kk]
                vals[r, kk, : o.size] = pv.p[o]
                mass[r, kk] = pv.block_mass(kk + 1)
        return vals, mass, truth_block, truth_rank

    def fold_weights(self, weights: np.ndarray) -> np.ndarray:
        """Per-fold weight w_i / n_i, so the four rates are plain dot products."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.space.n_categories,):
            raise DimensionMismatch(
                f"weights have shape {w.shape}, expected ({self.space.n_categories},)"
            )
        n = np.asarray(self.counts, dtype=float)
        return w[self.categories - 1] / n[self.categories - 1]

    def binary_scores(self, within_cost: float, cross_cost: float) -> dict[BinaryReward, np.ndarray]:
        """0/1 score of each fold under all four scores at one cost pair.

        Vectorized form of classifying every fold with
        ``composite_classifier`` and scoring it; the two paths agree
        exactly because both rank categories with the same tie rule.
        """
        vals, mass, truth_block, truth_rank = self._kernel_arrays
        a, b = float(within_cost), float(cross_cost)
        t_extra = mass * a + (1.0 - mass) * b
        t_first = (1.0 - mass) * b
        included = (vals >= t_extra[:, :, None]).sum(axis=2)
        first = vals[:, :, 0] >= t_first
        m = np.where(included >= 2, included, first.astype(np.int64))
        sizes = m.sum(axis=1)
        rows = np.arange(self.n_folds)
        m_true = m[rows, truth_block]
        contains = truth_rank <= m_true
        return {
            BinaryReward.EXACT_SINGLETON: (contains & (sizes == 1)).astype(float),
            BinaryReward.WITHIN_BLOCK: (contains & (sizes == m_true)).astype(float),
            BinaryReward.CONTAINS_TRUTH: contains.astype(float),
            BinaryReward.HITS_TRUE_BLOCK: (m_true >= 1).astype(float),
        }


def loocv_posteriors(
    data: TrainingData,
    space: CategorySpace,
    prior,
    hyperprior: NormalInverseWishart | None = None,
    n_draws: int = 200,
    seed: int = 0,
    threads: int = 1,
) -> HeldOutPosteriors:
    """Held-out posterior vector of every observation.

    For each fold only the left-out observation's category is refitted (an
    exact conjugate update on the remaining rows) and redrawn from a stream
    keyed by (seed, category, row); the other categories reuse the full
    fit.  The prior over categories stays fixed at ``prior`` throughout.

    Raises
    ------
    CategoryTooSmall
        If any category has fewer than two observations.
    """
    counts = data.counts
    if min(counts) < 2:
        raise CategoryTooSmall(
            f"every category needs at least 2 observations for leave-one-out, got {counts}"
        )
    if hyperprior is None:
        hyperprior = default_hyperprior(data)
    model = fit(data, hyperprior, n_draws, seed, space)
    rows, labels = data.stacked()
    base_logf = np.column_stack([d.log_density(rows) for d in model.draws])
    pi = np.asarray(prior, dtype=float)

    folds = []
    r = 0
    for i, group in enumerate(data.groups, start=1):
        for j in range(group.shape[0]):
            folds.append((r, i, j))
            r += 1

    def run_fold(fold):
        r, i, j = fold
        retained = data.drop_row(i, j)
        post = conjugate_update(retained, hyperprior)
        draws = draw_category_sample(post, n_draws, fold_rng(seed, i, j))
        return r, float(draws.log_density(rows[r])[0])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_fold, folds))
    else:
        results = [run_fold(f) for f in folds]

    logf = base_logf.copy()
    for r, value in results:
        logf[r, labels[r] - 1] = value
    with np.errstate(divide="ignore"):
        logpost = logf + np.log(pi)[None, :]
    logpost -= logpost.max(axis=1, keepdims=True)
    post = np.exp(logpost)
    post /= post.sum(axis=1, keepdims=True)
    vectors = [PosteriorVector(row, space) for row in post]
    return HeldOutPosteriors(vectors, labels, counts, space)


def loocv_reward_rate(
    data: TrainingData,
    space: CategorySpace,
    prior,
    within_cost: float,
    cross_cost: float,
    weights: np.ndarray,
    variant: BinaryReward,
    hyperprior: NormalInverseWishart | None = None,
    n_draws: int = 200,
    seed: int = 0,
    held: HeldOutPosteriors | None = None,
) -> float:
    """Weighted leave-one-out rate of one binary score at one cost pair.

    This is the reference path: each held-out posterior is classified with
    ``composite_classifier`` and scored with ``binary_reward`` directly.
    Pass a precomputed ``held`` to skip the expensive refits.
    """
    if held is None:
        held = loocv_posteriors(data, space, prior, hyperprior, n_draws, seed)
    fold_w = held.fold_weights(weights)
    total = 0.0
    for r, pv in enumerate(held.vectors):
        chosen = composite_classifier(pv, within_cost, cross_cost).chosen
        total += fold_w[r] * binary_reward(variant, chosen, int(held.categories[r]), space)
    return float(min(1.0, max(0.0, total)))


@dataclass(frozen=True)
class CVReport:
    """Reward-rate curves of all four binary scores along the cost grid."""

    grid: np.ndarray
    rates: dict[BinaryReward, np.ndarray]
    epsilon: float
    metadata: dict = field(default_factory=dict)

    def non_reward(self, variant: BinaryReward) -> np.ndarray:
        return 1.0 - self.rates[variant]

    def rate_rows(self) -> list[tuple[float, float, float, float, float]]:
        """(cost, rate_R1..rate_R4) rows in grid order, for CSV export."""
        return [
            (
                float(self.grid[idx]),
                *(float(self.rates[v][idx]) for v in _VARIANT_ORDER),
            )
            for idx in range(self.grid.size)
        ]


def evaluate_curves(
    config: CVConfig,
    data: TrainingData | None,
    space: CategorySpace,
    prior,
    weights: np.ndarray,
    held: HeldOutPosteriors | None = None,
) -> CVReport:
    """Sweep the cost grid, reusing one set of held-out posteriors."""
    if held is None:
        if data is None:
            raise DimensionMismatch("need training data or precomputed posteriors")
        held = loocv_posteriors(
            data, space, prior, None, config.n_draws, config.seed
        )
    grid = config.grid()
    fold_w = held.fold_weights(weights)
    curves = {v: np.empty(grid.size) for v in _VARIANT_ORDER}
    for idx, cost in enumerate(grid):
        scores = held.binary_scores(config.epsilon * cost, cost)
        for v in _VARIANT_ORDER:
            curves[v][idx] = min(1.0, max(0.0, float(fold_w @ scores[v])))
    return CVReport(grid, curves, config.epsilon)


@dataclass(frozen=True)
class ThresholdSelection:
    """Largest grid cost keeping the non-reward rate under the bound."""

    cost: float
    non_reward_rate: float
    at_grid_top: bool

    def display(self, decimals: int = 2) -> str:
        text = f"{self.cost:.{decimals}f}"
        return f">= {text}" if self.at_grid_top else text


def select_b_threshold(
    config: CVConfig, report: CVReport
) -> ThresholdSelection:
    """Pick the largest grid cost whose non-reward rate is at most delta.

    Only meaningful for the two scores whose non-reward rate grows with
    the cost (truth containment and true-block hit); the curve is checked
    for that monotonicity before selecting.  When even the top of the grid
    satisfies the bound the selection is flagged, since any larger cost
    would satisfy it as well.

    Raises
    ------
    NoFeasibleB
        If no grid point satisfies the bound.
    """
    if config.variant not in (BinaryReward.CONTAINS_TRUTH, BinaryReward.HITS_TRUE_BLOCK):
        raise OutOfRange(
            "threshold selection applies to the containment scores; "
            "use select_b_minimize for the singleton-style scores"
        )
    curve = report.non_reward(config.variant)
    if np.any(np.diff(curve) < -1e-12):
        raise AssertionError(
            "non-reward rate decreased along the cost grid; this should be "
            "impossible for containment scores"
        )
    feasible = np.flatnonzero(curve <= config.delta)
    if feasible.size == 0:
        raise NoFeasibleB(
            f"no grid cost keeps the non-reward rate within {config.delta}"
        )
    idx = int(feasible[-1])
    return ThresholdSelection(
        float(report.grid[idx]),
        float(curve[idx]),
        idx == report.grid.size - 1,
    )


@dataclass(frozen=True)
class MinimizeSelection:
    """Cost minimizing the non-reward rate, with optional refinement."""

    cost: float
    non_reward_rate: float
    refined: bool


def select_b_minimize(
    config: CVConfig,
    report: CVReport,
    held: HeldOutPosteriors,
    weights: np.ndarray,
) -> MinimizeSelection:
    """Minimize the non-reward rate over the grid, then refine locally.

    The coarse grid supplies a bracketing triple around its best point; a
    golden section search inside that bracket then looks for a better
    cost.  On plateaus (several grid points sharing the minimum) the
    smallest cost is returned unrefined, which keeps the rule
    deterministic.  The refined answer is never worse than the grid
    minimum, because the grid point stays among the candidates.
    """
    if config.variant not in (BinaryReward.EXACT_SINGLETON, BinaryReward.WITHIN_BLOCK):
        raise OutOfRange(
            "rate minimization applies to the singleton-style scores; "
            "use select_b_threshold for the containment scores"
        )
    curve = report.non_reward(config.variant)
    best_rate = float(curve.min())
    at_minimum = np.flatnonzero(curve == best_rate)
    idx = int(at_minimum[0])
    plateau = at_minimum.size > 1
    interior = 0 < idx < curve.size - 1
    if plateau or not interior:
        return MinimizeSelection(float(report.grid[idx]), best_rate, False)

    fold_w = held.fold_weights(weights)

    def objective(cost: float) -> float:
        scores = held.binary_scores(config.epsilon * cost, cost)
        return 1.0 - min(1.0, max(0.0, float(fold_w @ scores[config.variant])))

    lo = float(report.grid[idx - 1])
    hi = float(report.grid[idx + 1])
    candidates = [(float(report.grid[idx]), best_rate)]
    x1 = hi - (hi - lo) * _INV_PHI
    x2 = lo + (hi - lo) * _INV_PHI
    f1, f2 = objective(x1), objective(x2)
    candidates += [(x1, f1), (x2, f2)]
    tol = config.grid_step * 1e-3
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - (hi - lo) * _INV_PHI
            f1 = objective(x1)
            candidates.append((x1, f1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + (hi - lo) * _INV_PHI
            f2 = objective(x2)
            candidates.append((x2, f2))
    cost, rate = min(candidates, key=lambda t: (t[1], t[0]))
    return MinimizeSelection(float(cost), float(rate), True)


def grid_scan_costs(
    within_grid,
    cross_grid,
    held: HeldOutPosteriors,
    weights: np.ndarray,
    variant: BinaryReward,
) -> np.ndarray:
    """Non-reward rates over a full (within, cross) cost lattice.

    Rows follow ``within_grid``, columns ``cross_grid``.  Unlike the
    one-dimensional sweeps the two costs vary independently here.
    """
    a_grid = np.asarray(within_grid, dtype=float)
    b_grid = np.asarray(cross_grid, dtype=float)
    if a_grid.ndim != 1 or b_grid.ndim != 1 or not a_grid.size or not b_grid.size:
        raise OutOfRange("cost grids must be nonempty 1-d arrays")
    fold_w = held.fold_weights(weights)
    out = np.empty((a_grid.size, b_grid.size))
    for ai, a in enumerate(a_grid):
        for bi, b in enumerate(b_grid):
            scores = held.binary_scores(a, b)
            out[ai, bi] = 1.0 - min(1.0, max(0.0, float(fold_w @ scores[variant])))
    return out
