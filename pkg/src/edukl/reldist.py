"""Relative distribution of an observed sample against a reference.

Each observed score is mapped to its rank in the reference distribution,
R = F0(Y).  When the two distributions coincide the ranks are uniform on
[0, 1]; departures from uniformity carry all the information needed to
compare the distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .empirical import DensityEstimate, EmpiricalDistribution

__all__ = [
    "RelativeSample",
    "relative_ranks",
    "relative_cdf",
    "relative_density",
    "rank_area",
]


@dataclass(frozen=True)
class RelativeSample:
    """Reference-distribution ranks of an observed sample, all in [0, 1]."""

    ranks: np.ndarray
    reference_id: str = ""
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        ranks = np.asarray(self.ranks, dtype=float)
        if ranks.size == 0 or np.any((ranks < 0) | (ranks > 1)):
            raise ValueError("ranks must be a nonempty array with values in [0, 1]")
        weights = self.weights
        if weights is None:
            weights = np.full(ranks.size, 1.0 / ranks.size)
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != ranks.shape:
                raise ValueError("weights must match ranks in length")
        ranks = ranks.copy()
        ranks.flags.writeable = False
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "weights", weights)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.ranks))


def relative_ranks(
    obs: EmpiricalDistribution,
    ref: EmpiricalDistribution,
    reference_id: str = "",
) -> RelativeSample:
    """Rank of each observed value in the reference distribution."""
    return RelativeSample(
        ranks=ref.ecdf(obs.values), reference_id=reference_id, weights=obs.weights
    )


def relative_cdf(obs: EmpiricalDistribution, ref: EmpiricalDistribution, r):
    """G(r) = F(Q0(r)): the CDF of the relative distribution.

    ``r`` may be a scalar or array of proportions in [0, 1].  G is
    nondecreasing with G(1) = 1; it equals the identity when the two
    distributions coincide.
    """
    return obs.ecdf(ref.quantile(r))


def relative_density(
    obs_density: DensityEstimate,
    ref_density: DensityEstimate,
    ref: EmpiricalDistribution,
    r,
):
    """g(r), the density ratio f(Q0(r)) / f0(Q0(r)) on the shared grid.

    Both density estimates must live on the same grid (see ``density_pair``);
    the flooring of the estimates keeps the ratio finite.
    """
    if not obs_density.same_grid(ref_density):
        raise ValueError("density estimates must share the same grid")
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr < 0) | (r_arr > 1)):
        raise ValueError("r must lie in [0, 1]")
    y = ref.quantile(r)
    out = obs_density.at(y) / ref_density.at(y)
    return float(out) if np.ndim(r) == 0 else out


def rank_area(obs: EmpiricalDistribution, ref: EmpiricalDistribution) -> float:
    """Area between G(r) and the 45-degree line, computed exactly.

    Equals 1/2 minus the mean relative rank, so it needs no numerical
    integration.  Positive when the observed sample sits below the
    reference, negative above, and bounded by [-1/2, 1/2].
    """
    return 0.5 - relative_ranks(obs, ref).mean()
