"""Empirical score distributions.

Provides the weighted empirical distribution (ECDF, quantile function,
percentile tables) and floored density estimation on a shared grid, the
raw material for every divergence computation in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EmpiricalDistribution",
    "PercentileTable",
    "DensityConfig",
    "DensityEstimate",
    "estimate_density",
    "density_pair",
]

# Auto floor: the density of this many pseudo-observations spread uniformly
# over the grid span.  Scale-invariant, and small enough that it only matters
# where a sample has no data.
FLOOR_PSEUDO_OBS = 4.0


class EmpiricalDistribution:
    """A sorted, optionally weighted sample of real-valued scores.

    Parameters
    ----------
    values : array_like
        Observed scores.  Stored sorted ascending; must be nonempty and finite.
    weights : array_like, optional
        Nonnegative sampling weights, one per value.  Normalized to sum to 1;
        uniform when omitted.

    The object is immutable after construction and safe to share between
    threads; all methods are pure.
    """

    def __init__(self, values, weights=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must all be finite")
        order = np.argsort(values, kind="stable")
        self.values = values[order]

        if weights is None:
            n = values.size
            w = np.full(n, 1.0 / n)
            cum = np.arange(1, n + 1) / n  # exact k/n, no cumsum drift
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != values.shape:
                raise ValueError("weights must have the same length as values")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite and nonnegative")
            total = w.sum()
            if total <= 0:
                raise ValueError("weights must have positive sum")
            w = w[order] / total
            cum = np.cumsum(w)
            cum[-1] = 1.0  # guard against cumulative rounding at the top
        self.weights = w
        # ecdf lookup table with a leading 0 so searchsorted output indexes it
        self._cum = np.concatenate(([0.0], cum))
        for arr in (self.values, self.weights, self._cum):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return (
            f"EmpiricalDistribution(n={len(self)}, "
            f"support=[{self.values[0]:g}, {self.values[-1]:g}])"
        )

    @property
    def support(self) -> tuple[float, float]:
        """(minimum, maximum) of the sample."""
        return float(self.values[0]), float(self.values[-1])

    def ecdf(self, y):
        """Weighted proportion of the sample at or below ``y``.

        Right-continuous step function, defined for any real ``y`` (0 below
        the minimum, 1 at and above the maximum).  Accepts scalars or arrays.
        """
        idx = np.searchsorted(self.values, y, side="right")
        out = self._cum[idx]
        return float(out) if np.ndim(y) == 0 else out

    def quantile(self, p):
        """Smallest sample value whose ECDF reaches ``p``.

        Implements the generalized inverse inf{y : F(y) >= p}; ``p = 0``
        returns the minimum.  Accepts scalars or arrays in [0, 1].
        """
        p_arr = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(p_arr)) or np.any((p_arr < 0) | (p_arr > 1)):
            raise ValueError("p must lie in [0, 1]")
        idx = np.searchsorted(self._cum[1:], p_arr, side="left")
        idx = np.minimum(idx, len(self) - 1)
        out = self.values[idx]
        return float(out) if np.ndim(p) == 0 else out

    def percentile_table(self) -> "PercentileTable":
        """The 101 quantiles at p = 0/100 .. 100/100 as a percentile table."""
        entries = np.array(self.quantile(np.arange(101) / 100.0))
        entries[0] = self.values[0]
        entries[100] = self.values[-1]
        return PercentileTable(entries)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    def std(self) -> float:
        """Weighted population standard deviation."""
        centered = self.values - self.mean()
        return float(np.sqrt(np.dot(self.weights, centered * centered)))


@dataclass(frozen=True)
class PercentileTable:
    """101 nondecreasing values: the 0th through 100th percentiles."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (101,):
            raise ValueError("a percentile table holds exactly 101 values (r = 0..100)")
        if not np.all(np.isfinite(entries)):
            raise ValueError("percentile values must be finite")
        drops = np.nonzero(np.diff(entries) < 0)[0]
        if drops.size:
            from .exceptions import MonotonicityError

            raise MonotonicityError(
                "percentile values must be nondecreasing; "
                f"decrease after percentile(s) {drops.tolist()}"
            )
        entries = entries.copy()
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, PercentileTable):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


@dataclass(frozen=True)
class DensityConfig:
    """Settings for density estimation.

    estimator : "histogram" (default) or "kde" (Gaussian kernel).
    bins : number of grid cells; the grid pads one cell beyond the data on
        each side so floored estimates keep a little slack support.
    bandwidth : kernel bandwidth for "kde"; default is the normal-reference
        rule 1.06 * sigma * n**(-1/5).
    floor : absolute density floor; default (None) floors at the density of
        FLOOR_PSEUDO_OBS pseudo-observations spread over the grid span.
    """

    estimator: str = "histogram"
    bins: int = 100
    bandwidth: float | None = None
    floor: float | None = None

    def __post_init__(self):
        if self.estimator not in ("histogram", "kde"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.bins < 3:
            raise ValueError("bins must be at least 3")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.floor is not None and self.floor <= 0:
            raise ValueError("floor must be positive")


@dataclass(frozen=True)
class DensityEstimate:
    """A floored, normalized density evaluated on a uniform grid.

    The trapezoid integral over ``grid`` is 1 (within 1e-6) and every value
    is at least ``floor``.
    """

    grid: np.ndarray
    density: np.ndarray
    floor: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        density = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != density.shape:
            raise ValueError("grid and density must be 1-D arrays of equal length")
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing with at least 2 points")
        if self.floor <= 0 or np.any(density < self.floor * (1 - 1e-12)):
            raise ValueError("density must respect the positive floor")
        if abs(np.trapezoid(density, grid) - 1.0) > 1e-6:
            raise ValueError("density must integrate to 1 within 1e-6")
        for arr in (grid, density):
            arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", density)

    def at(self, y):
        """Density at the grid point nearest to ``y`` (scalar or array)."""
        idx = np.searchsorted(self.grid, y)
        idx = np.clip(idx, 1, self.grid.size - 1)
        left_closer = y - self.grid[idx - 1] < self.grid[idx] - np.asarray(y)
        idx = idx - left_closer
        out = self.density[idx]
        return float(out) if np.ndim(y) == 0 else out

    def same_grid(self, other: "DensityEstimate") -> bool:
        return np.array_equal(self.grid, other.grid)


def _grid_edges(lo: float, hi: float, bins: int) -> np.ndarray:
    # One cell of width h pads each side, so h solves (hi - lo) = (bins - 2) h.
    h = (hi - lo) / (bins - 2)
    return np.linspace(lo - h, hi + h, bins + 1)


def estimate_density(
    dist: EmpiricalDistribution,
    config: DensityConfig = DensityConfig(),
    support: tuple[float, float] | None = None,
) -> DensityEstimate:
    """Estimate the density of ``dist`` on a uniform grid.

    Parameters
    ----------
    dist : EmpiricalDistribution
        Must contain at least two distinct values.
    config : DensityConfig
        Estimator, grid size, bandwidth and floor settings.
    support : (lo, hi), optional
        Range the grid must span before padding; must cover the data.  Used
        to place two samples on a common grid (see ``density_pair``).

    Returns
    -------
    DensityEstimate
        Piecewise-constant histogram density (evaluated at cell centers) or
        a Gaussian KDE on the same grid, floored and renormalized.
    """
    lo_data, hi_data = dist.support
    if lo_data == hi_data:
        raise ValueError("density estimation needs at least two distinct values")
    if support is None:
        lo, hi = lo_data, hi_data
    else:
        lo, hi = float(support[0]), float(support[1])
        if lo > lo_data or hi < hi_data:
            raise ValueError("support must cover the data range")
        if lo >= hi:
            raise ValueError("support must be a nonempty interval")

    edges = _grid_edges(lo, hi, config.bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    h = edges[1] - edges[0]

    if config.estimator == "histogram":
        mass, _ = np.histogram(dist.values, bins=edges, weights=dist.weights)
        density = mass / h
    else:
        bw = config.bandwidth
        if bw is None:
            bw = 1.06 * dist.std() * len(dist) ** (-1 / 5)
        if bw <= 0:
            raise ValueError("kde bandwidth must be positive")
        density = _gaussian_kde(dist, centers, bw)

    if config.floor is not None:
        eps = config.floor
    else:
        eps = FLOOR_PSEUDO_OBS / (len(dist) * (edges[-1] - edges[0]))
    if eps * (edges[-1] - edges[0]) >= 0.5:
        raise ValueError("floor is too large for the grid span")
    # floor and renormalize to a joint fixed point: each pass shrinks the
    # normalization error by the (small) floored-mass fraction
    for _ in range(100):
        density = np.maximum(density, eps)
        total = np.trapezoid(density, centers)
        if abs(total - 1.0) < 1e-9:
            break
        density = density / total
    density = np.maximum(density, eps)
    return DensityEstimate(grid=centers, density=density, floor=eps)


def _gaussian_kde(dist: EmpiricalDistribution, grid: np.ndarray, bw: float) -> np.ndarray:
    out = np.zeros_like(grid)
    step = max(1, 10_000_000 // grid.size)
    for start in range(0, len(dist), step):
        vals = dist.values[start : start + step]
        wts = dist.weights[start : start + step]
        z = (grid[:, None] - vals[None, :]) / bw
        out += np.exp(-0.5 * z * z) @ wts
    return out / (bw * np.sqrt(2.0 * np.pi))


def density_pair(
    a: EmpiricalDistribution,
    b: EmpiricalDistribution,
    config: DensityConfig = DensityConfig(),
) -> tuple[DensityEstimate, DensityEstimate]:
    """Estimate both densities on one grid spanning the union of supports."""
    lo = min(a.values[0], b.values[0])
    hi = max(a.values[-1], b.values[-1])
    return (
        estimate_density(a, config, support=(lo, hi)),
        estimate_density(b, config, support=(lo, hi)),
    )
