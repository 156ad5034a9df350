"""Divergence measures between score distributions.

Kullback-Leibler divergence in the continuous (grid-density) and discrete
settings, the signed variant used as the headline indicator, entropy, the
Theil index, and the two simpler area-based gap measures.  Natural
logarithms throughout, so every divergence is in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirical import (
    DensityConfig,
    DensityEstimate,
    EmpiricalDistribution,
    density_pair,
)
from .reldist import rank_area

__all__ = [
    "SignedKL",
    "DiscreteDistribution",
    "kl_divergence",
    "kl_discrete",
    "signed_kl",
    "mean_gap_area",
    "entropy",
    "theil_index",
    "expected_lr",
]


@dataclass(frozen=True)
class SignedKL:
    """A KL magnitude together with the direction of the difference.

    ``sign`` is -1 when the observed distribution sits below the reference
    (the common case for scores), +1 when above, and 0 only when the rank
    area is exactly zero.  ``value`` is the signed quantity reported by the
    indicators.
    """

    magnitude: float
    sign: int

    def __post_init__(self):
        if not self.magnitude >= 0:
            raise ValueError("magnitude must be nonnegative")
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")

    @property
    def value(self) -> float:
        return self.sign * self.magnitude


@dataclass(frozen=True)
class DiscreteDistribution:
    """A finite probability vector: nonnegative entries summing to 1."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a nonempty 1-D array")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1 within 1e-9")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    def __len__(self) -> int:
        return self.probabilities.size

    @classmethod
    def uniform(cls, n: int) -> "DiscreteDistribution":
        if n < 1:
            raise ValueError("n must be positive")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDistribution":
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if total <= 0:
            raise ValueError("weights must have positive sum")
        return cls(w / total)


def kl_divergence(f: DensityEstimate, f0: DensityEstimate) -> float:
    """KL divergence of ``f`` from ``f0`` by trapezoid integration (nats).

    Both estimates must share a grid and be floored and normalized, which
    makes the integral a discrete KL between trapezoid-weighted measures and
    hence nonnegative up to rounding; tiny negative rounding is clamped to 0.
    """
    if not f.same_grid(f0):
        raise ValueError("density estimates must share the same grid")
    integrand = f.density * np.log(f.density / f0.density)
    raw = float(np.trapezoid(integrand, f.grid))
    return max(raw, 0.0)


def kl_discrete(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Discrete KL divergence sum p_i log(p_i / q_i), with 0 log 0 = 0.

    Returns ``math.inf`` when absolute continuity fails, i.e. some outcome
    has p_i > 0 but q_i = 0.
    """
    if len(p) != len(q):
        raise ValueError("distributions must have the same length")
    pp = p.probabilities
    qq = q.probabilities
    active = pp > 0
    if np.any(qq[active] == 0):
        return math.inf
    return float(np.sum(pp[active] * np.log(pp[active] / qq[active])))


def signed_kl(
    obs: EmpiricalDistribution,
    ref: EmpiricalDistribution,
    config: DensityConfig = DensityConfig(),
) -> SignedKL:
    """Signed KL of an observed sample against a reference sample.

    The magnitude is the grid-density KL on a common grid spanning both
    supports; the sign is the opposite of the rank-area sign, so a sample
    concentrated below the reference yields a negative value.
    """
    f, f0 = density_pair(obs, ref, config)
    magnitude = kl_divergence(f, f0)
    area = rank_area(obs, ref)
    sign = 0 if area == 0 else (-1 if area > 0 else 1)
    return SignedKL(magnitude=magnitude, sign=sign)


def mean_gap_area(obs: EmpiricalDistribution, ref: EmpiricalDistribution) -> float:
    """Difference of means, i.e. the area between the two CDFs (scale points).

    The simplest gap summary: it sees location differences only, which is
    why KL is preferred for the indicators.
    """
    return obs.mean() - ref.mean()


def entropy(p: DiscreteDistribution) -> float:
    """Shannon entropy -sum p_i log p_i in nats, with 0 log 0 = 0."""
    pp = p.probabilities
    active = pp > 0
    return float(-np.sum(pp[active] * np.log(pp[active])))


def theil_index(incomes) -> float:
    """Theil inequality index of a vector of positive incomes.

    Computed in the income-share form (1/n) sum (x_i/mu) log(x_i/mu), which
    equals the KL divergence of the income shares from the uniform
    distribution.  Zero iff all incomes are equal; approaches log(n) as one
    person's share approaches everything.
    """
    x = np.asarray(incomes, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("incomes must be a nonempty 1-D array")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("incomes must be positive and finite")
    ratio = x / x.mean()
    return float(np.mean(ratio * np.log(ratio)))


def expected_lr(f: DensityEstimate, f0: DensityEstimate) -> float:
    """Expected log-likelihood-ratio statistic: exactly twice the KL."""
    return 2.0 * kl_divergence(f, f0)
