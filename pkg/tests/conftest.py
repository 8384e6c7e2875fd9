import numpy as np

from setbayes import CategorySpace, PosteriorVector


def random_partition(rng, n, k):
    """k positive block sizes summing to n."""
    if k == 1:
        return (n,)
    cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False))
    edges = np.concatenate([[0], cuts, [n]])
    return tuple(int(hi - lo) for lo, hi in zip(edges[:-1], edges[1:]))


def random_space(rng, n_lo=2, n_hi=10, k_hi=4):
    n = int(rng.integers(n_lo, n_hi + 1))
    k = int(rng.integers(1, min(k_hi, n) + 1))
    return CategorySpace(n, random_partition(rng, n, k))


def random_posterior(rng, space, concentration=1.0):
    p = rng.dirichlet(np.full(space.n_categories, concentration))
    return PosteriorVector(p, space)
