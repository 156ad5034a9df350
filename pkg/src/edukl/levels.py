"""Learning-level profiles and interpretive bands for signed-KL values.

A municipality-year is summarized by the proportions of its students in the
four learning levels.  Clustering those profiles into five groups and taking
the 95th percentile of signed KL within each of the four lowest groups yields
data-driven cut-points; classification then maps any signed-KL value into one
of five named bands.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .empirical import EmpiricalDistribution
from .exceptions import ClusteringError, MonotonicityError

__all__ = [
    "LEARNING_LEVELS",
    "LevelProfile",
    "level_profile",
    "KLLevel",
    "CutPoints",
    "DEFAULT_CUTPOINTS",
    "classify_kl",
    "derive_cutpoints",
    "save_cutpoints",
    "load_cutpoints",
    "KMEANS_PARAMS",
]

LEARNING_LEVELS = ("Below Basic", "Basic", "Appropriate", "Advanced")

# Reproducible clustering defaults used by derive_cutpoints.
KMEANS_PARAMS = {
    "k": 5,
    "init": "k-means++",
    "restarts": 25,
    "max_iter": 300,
    "tol": 1e-8,
}


@dataclass(frozen=True)
class LevelProfile:
    """Proportions of students in the four learning levels (sum to 1)."""

    proportions: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.proportions, dtype=float)
        if p.shape != (4,):
            raise ValueError("a level profile holds exactly 4 proportions")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("proportions must lie in [0, 1] and sum to 1")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "proportions", p)


def level_profile(dist: EmpiricalDistribution, cut_scores) -> LevelProfile:
    """Weighted proportions below, between and above the three cut scores.

    Bands are (-inf, c1), [c1, c2), [c2, c3), [c3, inf); a value equal to a
    cut score belongs to the band above it.
    """
    cuts = np.asarray(cut_scores, dtype=float)
    if cuts.shape != (3,) or not np.all(np.diff(cuts) > 0):
        raise ValueError("cut_scores must be 3 strictly increasing values")
    band = np.searchsorted(cuts, dist.values, side="right")
    props = np.bincount(band, weights=dist.weights, minlength=4)
    return LevelProfile(props)


class KLLevel(enum.IntEnum):
    """The five interpretive bands, ordered worst to best."""

    LOW = 0
    MEDIUM_LOW = 1
    MEDIUM = 2
    MEDIUM_HIGH = 3
    HIGH = 4

    @property
    def label(self) -> str:
        return _LEVEL_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "KLLevel":
        for level, name in _LEVEL_LABELS.items():
            if name == label:
                return level
        raise ValueError(f"unknown level label {label!r}")


_LEVEL_LABELS = {
    KLLevel.LOW: "Low",
    KLLevel.MEDIUM_LOW: "Medium-Low",
    KLLevel.MEDIUM: "Medium",
    KLLevel.MEDIUM_HIGH: "Medium-High",
    KLLevel.HIGH: "High",
}


@dataclass(frozen=True)
class CutPoints:
    """Four strictly increasing thresholds splitting the signed-KL line."""

    thresholds: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if t.shape != (4,):
            raise ValueError("cut points hold exactly 4 thresholds")
        if np.any(np.diff(t) <= 0):
            raise MonotonicityError(
                f"thresholds must be strictly increasing, got {t.tolist()}"
            )
        t = t.copy()
        t.flags.writeable = False
        object.__setattr__(self, "thresholds", t)

    def __eq__(self, other):
        if not isinstance(other, CutPoints):
            return NotImplemented
        return np.array_equal(self.thresholds, other.thresholds)

    def __hash__(self):
        return hash(self.thresholds.tobytes())


# Default interpretive thresholds shipped with the package, calibrated on the
# national municipal corpus; deriving them afresh needs that corpus, so they
# are a constant here, not a computed value.
DEFAULT_CUTPOINTS = CutPoints(np.array([-1.7, -1.1, -0.7, -0.4]))


def classify_kl(value: float, cuts: CutPoints = DEFAULT_CUTPOINTS) -> KLLevel:
    """Band of a signed-KL value: left-open, right-closed at each threshold."""
    idx = int(np.searchsorted(cuts.thresholds, value, side="left"))
    return KLLevel(idx)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(len(points))]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(len(points), p=d2 / total)
        else:
            idx = rng.integers(len(points))
        centers[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _lloyd(
    points: np.ndarray,
    centers: np.ndarray,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd iterations from the given centers; returns (centers, labels, inertia)."""
    k = len(centers)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = points[labels == j]
            if len(members):
                new_centers[j] = members.mean(axis=0)
        movement = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if movement < tol:
            break
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(points)), labels].sum())
    return centers, labels, inertia


def derive_cutpoints(
    profiles: Sequence[LevelProfile],
    kls: Sequence[float],
    seed: int,
) -> CutPoints:
    """Derive the four signed-KL thresholds from profile clusters.

    Clusters the 4-dimensional level profiles into five groups (k-means with
    k-means++ starts, 25 restarts), orders the groups by mean signed KL, and
    returns the within-group 95th percentile of signed KL for the four lowest
    groups.  Inputs are canonicalized by sorting, so any permutation of the
    (profile, kl) pairs yields identical thresholds for the same seed.
    """
    if len(profiles) != len(kls):
        raise ValueError("profiles and kls must have the same length")
    points = np.array([p.proportions for p in profiles])
    kl = np.asarray(kls, dtype=float)
    if len(np.unique(points, axis=0)) < KMEANS_PARAMS["k"]:
        raise ValueError("need at least 5 distinct profiles")

    order = np.lexsort((kl, points[:, 3], points[:, 2], points[:, 1], points[:, 0]))
    points = points[order]
    kl = kl[order]

    rng = np.random.default_rng(seed)
    k = KMEANS_PARAMS["k"]
    best = None
    for _ in range(KMEANS_PARAMS["restarts"]):
        init = _kmeans_pp_init(points, k, rng)
        centers, labels, inertia = _lloyd(
            points, init, KMEANS_PARAMS["max_iter"], KMEANS_PARAMS["tol"]
        )
        if len(np.unique(labels)) < k:
            continue
        if best is None or inertia < best[0]:
            best = (inertia, labels)
    if best is None:
        raise ClusteringError(
            f"k-means found no run with {k} nonempty clusters "
            f"in {KMEANS_PARAMS['restarts']} restarts"
        )
    labels = best[1]

    group_mean_kl = np.array([kl[labels == j].mean() for j in range(k)])
    ordered_groups = np.argsort(group_mean_kl, kind="stable")
    thresholds = [
        EmpiricalDistribution(kl[labels == j]).quantile(0.95)
        for j in ordered_groups[: k - 1]
    ]
    return CutPoints(np.asarray(thresholds))


def save_cutpoints(path, cuts: CutPoints, metadata: dict | None = None) -> None:
    """Write cut points plus provenance metadata as JSON."""
    payload = {
        "thresholds": [float(t) for t in cuts.thresholds],
        "metadata": metadata or {},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_cutpoints(path) -> tuple[CutPoints, dict]:
    from .exceptions import DataError

    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        thresholds = payload["thresholds"]
    except OSError as exc:
        raise DataError(f"cannot read cut points {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"malformed cut points file {path}: {exc}") from exc
    return CutPoints(np.asarray(thresholds, dtype=float)), payload.get("metadata", {})
