"""Bayesian Gaussian category models with conjugate fitting.

Each category gets a multivariate normal likelihood with a
normal-inverse-Wishart prior on its mean and covariance.  The posterior is
again normal-inverse-Wishart, and predictive densities are Monte Carlo
averages over a cached sample of (mean, covariance) draws, so everything
downstream is reproducible from (data, hyperprior, n_draws, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp
from scipy.stats import invwishart

from .core import CategorySpace, PosteriorVector
from .errors import (
    AllZeroMass,
    DimensionMismatch,
    EmptyCategory,
    InvalidDistribution,
    OutOfRange,
    SingularScatter,
)

_LOG_2PI = math.log(2.0 * math.pi)

#: Observations per chunk when evaluating densities for large batches.
_BATCH = 512


@dataclass(frozen=True)
class NormalInverseWishart:
    """Parameters of a normal-inverse-Wishart distribution.

    ``mean`` and ``kappa`` locate the Gaussian mean given the covariance;
    ``dof`` and ``scatter`` parametrize the inverse-Wishart covariance law.
    ``scatter`` must be symmetric positive definite and ``dof`` must exceed
    dim - 1.
    """

    mean: tuple[float, ...]
    kappa: float
    dof: float
    scatter: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        scatter = np.asarray(self.scatter, dtype=float)
        if mean.ndim != 1 or scatter.shape != (mean.size, mean.size):
            raise DimensionMismatch(
                f"mean has shape {mean.shape} but scatter has shape {scatter.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(scatter))):
            raise OutOfRange("hyperparameters must be finite")
        if self.kappa <= 0.0:
            raise OutOfRange(f"kappa must be positive, got {self.kappa}")
        d = mean.size
        if self.dof <= d - 1:
            raise OutOfRange(f"dof must exceed {d - 1} for dimension {d}, got {self.dof}")
        if not np.allclose(scatter, scatter.T, atol=1e-10):
            raise SingularScatter("scatter matrix must be symmetric")
        try:
            np.linalg.cholesky(scatter)
        except np.linalg.LinAlgError:
            raise SingularScatter("scatter matrix must be positive definite") from None
        object.__setattr__(self, "mean", tuple(float(v) for v in mean))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "dof", float(self.dof))
        object.__setattr__(
            self, "scatter", tuple(tuple(float(v) for v in row) for row in scatter)
        )

    @property
    def dim(self) -> int:
        return len(self.mean)

    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def scatter_array(self) -> np.ndarray:
        return np.asarray(self.scatter, dtype=float)


class TrainingData:
    """Observation vectors grouped by category.

    Parameters
    ----------
    groups : sequence of array_like
        One (n_i, d) array per category, in category order 1..N.  Empty
        categories are representable but cannot be fitted.
    """

    def __init__(self, groups):
        cleaned = []
        dim = None
        for g in groups:
            arr = np.asarray(g, dtype=float)
            if arr.ndim == 1:
                arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
            if arr.ndim != 2:
                raise DimensionMismatch(f"each group must be a (n, d) array, got shape {arr.shape}")
            if dim is None and arr.size:
                dim = arr.shape[1]
            if dim is not None and arr.size and arr.shape[1] != dim:
                raise DimensionMismatch(
                    f"group has dimension {arr.shape[1]}, expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise OutOfRange("observations must be finite")
            arr = arr.copy()
            arr.setflags(write=False)
            cleaned.append(arr)
        if not cleaned:
            raise DimensionMismatch("need at least one category")
        if dim is None:
            raise EmptyCategory("no category has any observations")
        self.groups = tuple(
            g if g.size else np.empty((0, dim)) for g in cleaned
        )
        self.dim = dim

    @property
    def n_categories(self) -> int:
        return len(self.groups)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def drop_row(self, category: int, row: int) -> np.ndarray:
        """Observations of ``category`` (1-based) with one row removed."""
        g = self.groups[category - 1]
        if not 0 <= row < g.shape[0]:
            raise OutOfRange(f"row {row} outside 0..{g.shape[0] - 1}")
        return np.delete(g, row, axis=0)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """All observations stacked, plus their 1-based category labels."""
        rows = np.vstack([g for g in self.groups]) if self.total else np.empty((0, self.dim))
        labels = np.concatenate(
            [np.full(g.shape[0], i + 1, dtype=np.int64) for i, g in enumerate(self.groups)]
        ) if self.total else np.empty(0, dtype=np.int64)
        return rows, labels


def default_hyperprior(data: TrainingData) -> NormalInverseWishart:
    """Weak data-scaled prior: pooled mean, unit strength, diagonal scatter.

    Uses kappa = 1, dof = d + 2, location at the pooled sample mean, and a
    scatter equal to the diagonal of the pooled sample covariance.
    """
    rows = np.vstack([g for g in data.groups if g.shape[0]])
    if rows.shape[0] == 0:
        raise EmptyCategory("cannot build a hyperprior from empty data")
    mean = rows.mean(axis=0)
    if rows.shape[0] >= 2:
        var = rows.var(axis=0, ddof=1)
    else:
        var = np.ones(data.dim)
    if np.any(var <= 0.0):
        raise SingularScatter(
            "a feature column is constant; the default scatter would be singular"
        )
    return NormalInverseWishart(
        tuple(mean), 1.0, float(data.dim + 2), tuple(tuple(row) for row in np.diag(var))
    )


def conjugate_update(
    observations: np.ndarray, prior: NormalInverseWishart
) -> NormalInverseWishart:
    """Posterior hyperparameters after observing ``observations``.

    Standard normal-inverse-Wishart update: strength and degrees of freedom
    grow by n, the location moves to the precision-weighted average of the
    prior location and the sample mean, and the scatter absorbs the within
    sample scatter plus a shrinkage term for the mean shift.
    """
    x = np.asarray(observations, dtype=float)
    if x.ndim != 2 or x.shape[1] != prior.dim:
        raise DimensionMismatch(
            f"observations have shape {x.shape}, expected (n, {prior.dim})"
        )
    n = x.shape[0]
    if n == 0:
        raise EmptyCategory("cannot update on zero observations")
    xbar = x.mean(axis=0)
    centered = x - xbar
    within = centered.T @ centered
    kappa_n = prior.kappa + n
    dev = (xbar - prior.mean_array()).reshape(-1, 1)
    scatter_n = (
        prior.scatter_array() + within + (prior.kappa * n / kappa_n) * (dev @ dev.T)
    )
    mean_n = (prior.kappa * prior.mean_array() + n * xbar) / kappa_n
    return NormalInverseWishart(
        tuple(mean_n),
        kappa_n,
        prior.dof + n,
        tuple(tuple(row) for row in scatter_n),
    )


class CategoryDraws:
    """A Monte Carlo sample of (mean, covariance) pairs for one category."""

    __slots__ = ("means", "chols", "inv_chols", "logdets")

    def __init__(self, means: np.ndarray, chols: np.ndarray):
        self.means = means
        self.chols = chols
        self.inv_chols = np.linalg.inv(chols)
        self.logdets = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)

    @property
    def n_draws(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def log_density(self, points: np.ndarray) -> np.ndarray:
        """Log of the draw-averaged Gaussian density at each row of ``points``.

        Computed in log space with the usual max shift, so heavy tails and
        tiny densities cannot underflow to an unusable zero.
        """
        z = np.asarray(points, dtype=float)
        if z.ndim == 1:
            z = z.reshape(1, -1)
        if z.shape[1] != self.dim:
            raise DimensionMismatch(f"points have dimension {z.shape[1]}, expected {self.dim}")
        d = self.dim
        out = np.empty(z.shape[0])
        for start in range(0, z.shape[0], _BATCH):
            chunk = z[start : start + _BATCH]
            diff = chunk[:, None, :] - self.means[None, :, :]
            y = np.einsum("lij,mlj->mli", self.inv_chols, diff)
            maha = np.einsum("mli,mli->ml", y, y)
            logpdf = -0.5 * (d * _LOG_2PI + self.logdets[None, :] + maha)
            out[start : start + _BATCH] = logsumexp(logpdf, axis=1) - math.log(self.n_draws)
        return out


def draw_category_sample(
    posterior: NormalInverseWishart, n_draws: int, rng: np.random.Generator
) -> CategoryDraws:
    """Draw (mean, covariance) pairs from a normal-inverse-Wishart law.

    The covariance comes first from the inverse-Wishart part, then the mean
    from a Gaussian centered at the location with covariance cov / kappa.
    The draw order is fixed, so a given generator state always produces the
    same sample.
    """
    if n_draws < 1:
        raise OutOfRange(f"need at least one draw, got {n_draws}")
    d = posterior.dim
    covs = invwishart.rvs(
        df=posterior.dof, scale=posterior.scatter_array(), size=n_draws, random_state=rng
    )
    covs = np.asarray(covs, dtype=float).reshape(n_draws, d, d)
    chols = np.linalg.cholesky(covs)
    eps = rng.standard_normal((n_draws, d, 1))
    means = posterior.mean_array() + (chols @ eps)[:, :, 0] / math.sqrt(posterior.kappa)
    return CategoryDraws(means, chols)


class GaussianCategoryModel:
    """Fitted per-category posteriors plus their cached Monte Carlo draws."""

    def __init__(
        self,
        posteriors: tuple[NormalInverseWishart, ...],
        n_draws: int,
        seed: int,
        space: CategorySpace,
        draws: tuple[CategoryDraws, ...],
    ):
        self.posteriors = posteriors
        self.n_draws = n_draws
        self.seed = seed
        self.space = space
        self.draws = draws

    @property
    def n_categories(self) -> int:
        return len(self.posteriors)

    @property
    def dim(self) -> int:
        return self.posteriors[0].dim

    def with_category(
        self, category: int, posterior: NormalInverseWishart, draws: CategoryDraws
    ) -> "GaussianCategoryModel":
        """A copy of the model with one category's posterior and draws swapped."""
        posts = list(self.posteriors)
        all_draws = list(self.draws)
        posts[category - 1] = posterior
        all_draws[category - 1] = draws
        return GaussianCategoryModel(
            tuple(posts), self.n_draws, self.seed, self.space, tuple(all_draws)
        )


def category_rng(seed: int, category: int) -> np.random.Generator:
    """The dedicated stream for one category's cached draws."""
    return np.random.default_rng([int(seed), int(category)])


def fold_rng(seed: int, category: int, row: int) -> np.random.Generator:
    """The dedicated stream for a leave-one-out refit of (category, row)."""
    return np.random.default_rng([int(seed), int(category), int(row)])


def fit(
    data: TrainingData,
    hyperprior: NormalInverseWishart | None = None,
    n_draws: int = 1000,
    seed: int = 0,
    space: CategorySpace | None = None,
) -> GaussianCategoryModel:
    """Fit the conjugate model to grouped observations.

    Parameters
    ----------
    data : TrainingData
    hyperprior : NormalInverseWishart, optional
        Shared across categories.  Defaults to ``default_hyperprior(data)``.
    n_draws : int
        Monte Carlo sample size per category.
    seed : int
        Master seed; category i draws from its own stream keyed by
        (seed, i), so with a fixed hyperprior adding categories never
        disturbs earlier ones.
    space : CategorySpace, optional
        Defaults to a single block over the data's categories.

    Raises
    ------
    EmptyCategory
        If any category has no observations.
    """
    if space is None:
        space = CategorySpace(data.n_categories)
    elif space.n_categories != data.n_categories:
        raise DimensionMismatch(
            f"space has {space.n_categories} categories, data has {data.n_categories}"
        )
    if hyperprior is None:
        hyperprior = default_hyperprior(data)
    if hyperprior.dim != data.dim:
        raise DimensionMismatch(
            f"hyperprior dimension {hyperprior.dim} does not match data dimension {data.dim}"
        )
    posteriors = []
    draws = []
    for i, group in enumerate(data.groups, start=1):
        if group.shape[0] == 0:
            raise EmptyCategory(f"category {i} has no observations")
        post = conjugate_update(group, hyperprior)
        posteriors.append(post)
        draws.append(draw_category_sample(post, n_draws, category_rng(seed, i)))
    return GaussianCategoryModel(
        tuple(posteriors), int(n_draws), int(seed), space, tuple(draws)
    )


def log_predictive_density(model: GaussianCategoryModel, category: int, point) -> float:
    """Log Monte Carlo predictive density of one category at one point."""
    if not 1 <= int(category) <= model.n_categories:
        raise OutOfRange(f"category {category} outside 1..{model.n_categories}")
    return float(model.draws[int(category) - 1].log_density(np.asarray(point, float))[0])


def predictive_density(model: GaussianCategoryModel, category: int, point) -> float:
    """Monte Carlo predictive density; strictly positive by construction."""
    return math.exp(log_predictive_density(model, category, point))


def _check_prior(prior, n: int) -> np.ndarray:
    arr = np.asarray(prior, dtype=float)
    if arr.shape != (n,):
        raise DimensionMismatch(f"prior has shape {arr.shape}, expected ({n},)")
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise InvalidDistribution("prior weights must be finite and nonnegative")
    total = arr.sum()
    if abs(total - 1.0) > 1e-9:
        raise InvalidDistribution(f"prior sums to {total!r}, expected 1")
    return arr / total


def log_posterior_matrix(
    model: GaussianCategoryModel, prior, points: np.ndarray
) -> np.ndarray:
    """Log posterior category probabilities for each row of ``points``."""
    pi = _check_prior(prior, model.n_categories)
    z = np.asarray(points, dtype=float)
    if z.ndim == 1:
        z = z.reshape(1, -1)
    logf = np.column_stack([d.log_density(z) for d in model.draws])
    with np.errstate(divide="ignore"):
        logpost = logf + np.log(pi)[None, :]
    norm = logsumexp(logpost, axis=1, keepdims=True)
    if np.any(~np.isfinite(norm)):
        raise AllZeroMass("every category has zero posterior mass at some point")
    return logpost - norm


def posterior_over_categories(
    model: GaussianCategoryModel, prior, point
) -> PosteriorVector:
    """Posterior category probabilities at one observation.

    Combines the prior with the Monte Carlo predictive densities in log
    space, then exponentiates and normalizes.

    Raises
    ------
    AllZeroMass
        If every category gets zero mass (only possible with zero prior
        weights, since the predictive densities are positive).
    """
    z = np.asarray(point, dtype=float)
    if z.ndim != 1 or z.size != model.dim:
        raise DimensionMismatch(f"point has shape {z.shape}, expected ({model.dim},)")
    if not np.all(np.isfinite(z)):
        raise OutOfRange("observation must be finite")
    logpost = log_posterior_matrix(model, prior, z)[0]
    p = np.exp(logpost)
    return PosteriorVector(p / p.sum(), model.space)


def posterior_matrix(model: GaussianCategoryModel, prior, points) -> np.ndarray:
    """Row-normalized posterior probabilities for a batch of observations."""
    logpost = log_posterior_matrix(model, prior, np.asarray(points, float))
    p = np.exp(logpost)
    return p / p.sum(axis=1, keepdims=True)


def sample_mixture(
    model: GaussianCategoryModel, prior, n_samples: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw (observation, true category) pairs from the fitted mixture.

    Categories come from the prior; an observation from category i picks
    one cached (mean, covariance) draw uniformly and samples a Gaussian
    from it, which is exactly a draw from the Monte Carlo predictive.
    Returns the points and their 1-based categories.
    """
    pi = _check_prior(prior, model.n_categories)
    cats = rng.choice(model.n_categories, size=n_samples, p=pi)
    points = np.empty((n_samples, model.dim))
    for i in range(model.n_categories):
        rows = np.flatnonzero(cats == i)
        if rows.size == 0:
            continue
        draws = model.draws[i]
        which = rng.integers(0, draws.n_draws, size=rows.size)
        eps = rng.standard_normal((rows.size, model.dim, 1))
        points[rows] = draws.means[which] + (draws.chols[which] @ eps)[:, :, 0]
    return points, cats + 1


@dataclass(frozen=True)
class CalibrationCurve:
    """Sorted nonconformity scores from the fitted mixture.

    The score of a pair (z, i) is the posterior probability of i at z, so
    low scores flag observations whose true category looks implausible.
    """

    scores: np.ndarray

    @cached_property
    def sorted_scores(self) -> np.ndarray:
        out = np.sort(np.asarray(self.scores, dtype=float))
        out.setflags(write=False)
        return out

    def quantile(self, delta: float) -> float:
        """Lower empirical quantile: the largest score with ECDF <= delta.

        Returns 0 when delta is below 1/M, so tiny delta excludes nothing.
        """
        if not 0.0 < delta < 1.0:
            raise OutOfRange(f"delta {delta} outside (0, 1)")
        m = self.sorted_scores.size
        j = int(math.floor(delta * m))
        if j == 0:
            return 0.0
        return float(self.sorted_scores[j - 1])


def calibration_curve(
    model: GaussianCategoryModel, prior, n_samples: int, seed: int
) -> CalibrationCurve:
    """Monte Carlo sample of mixture nonconformity scores."""
    if n_samples < 100:
        raise OutOfRange(f"need at least 100 calibration samples, got {n_samples}")
    rng = np.random.default_rng([int(seed), 0])
    points, cats = sample_mixture(model, prior, n_samples, rng)
    post = posterior_matrix(model, prior, points)
    scores = post[np.arange(n_samples), cats - 1]
    return CalibrationCurve(scores)


def calibrate_conformal_cost(
    model: GaussianCategoryModel, prior, delta: float, n_samples: int, seed: int
) -> float:
    """Cost threshold making the set miss the truth a delta fraction of the time.

    Draws ``n_samples`` (observation, category) pairs from the fitted
    mixture, scores each by the posterior probability of its category, and
    returns the lower empirical delta-quantile of the scores.  Reporting
    every category whose posterior probability reaches the returned cost
    then covers the truth with probability about 1 - delta under the
    model.  As delta grows the cost grows and the sets shrink.
    """
    curve = calibration_curve(model, prior, n_samples, seed)
    return curve.quantile(delta)


def conformal_coverage(
    model: GaussianCategoryModel, prior, cost: float, n_samples: int, seed: int
) -> float:
    """Fraction of fresh mixture draws whose category survives the cost cut.

    Uses a sampling stream distinct from ``calibration_curve`` even for an
    identical seed, so calibrating and auditing with one seed still gives
    an honest fresh-sample estimate.
    """
    rng = np.random.default_rng([int(seed), 1])
    points, cats = sample_mixture(model, prior, n_samples, rng)
    post = posterior_matrix(model, prior, points)
    scores = post[np.arange(n_samples), cats - 1]
    return float(np.mean(scores >= cost))


def model_to_json(model: GaussianCategoryModel) -> dict:
    """JSON form of a fitted model: hyperparameters plus (n_draws, seed).

    The Monte Carlo draws are regenerated on load, never stored, so the
    file stays small and the round trip is still bit-exact.
    """
    return {
        "format": "setbayes-model",
        "dim": model.dim,
        "n_draws": model.n_draws,
        "seed": model.seed,
        "block_sizes": list(model.space.block_sizes),
        "categories": [
            {
                "mean": list(post.mean),
                "kappa": post.kappa,
                "dof": post.dof,
                "scatter": [list(row) for row in post.scatter],
            }
            for post in model.posteriors
        ],
    }


def model_from_json(obj: dict) -> GaussianCategoryModel:
    """Rebuild a model from ``model_to_json`` output, regenerating draws."""
    if not isinstance(obj, dict) or obj.get("format") != "setbayes-model":
        raise ValueError("not a setbayes model object")
    try:
        n_draws = int(obj["n_draws"])
        seed = int(obj["seed"])
        space = CategorySpace(
            sum(int(s) for s in obj["block_sizes"]),
            tuple(int(s) for s in obj["block_sizes"]),
        )
        posteriors = tuple(
            NormalInverseWishart(
                tuple(float(v) for v in cat["mean"]),
                float(cat["kappa"]),
                float(cat["dof"]),
                tuple(tuple(float(v) for v in row) for row in cat["scatter"]),
            )
            for cat in obj["categories"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model object: {exc}") from None
    if len(posteriors) != space.n_categories:
        raise ValueError("model categories do not match the block sizes")
    draws = tuple(
        draw_category_sample(post, n_draws, category_rng(seed, i))
        for i, post in enumerate(posteriors, start=1)
    )
    return GaussianCategoryModel(posteriors, n_draws, seed, space, draws)
