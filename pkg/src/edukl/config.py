"""Flat key-value configuration files and the pipeline run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .exceptions import ConfigError

__all__ = ["read_kv_file", "PipelineConfig", "read_pipeline_config"]

GRADES = ("year5", "year9")
SUBJECTS = ("reading", "mathematics")
DEFAULT_CYCLES = (2007, 2009, 2011, 2013, 2015)
SES_SPLIT_RULES = ("tercile", "quartile", "fixed")


def read_kv_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blanks ignored."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip().lower()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


@dataclass(frozen=True)
class PipelineConfig:
    """Settings for an indicator run; one (subject, grade) pair per run."""

    subject: str = "mathematics"
    grade: str = "year5"
    cycles: tuple[int, ...] = DEFAULT_CYCLES
    estimator: str = "histogram"
    bins: int = 100
    bandwidth: float | None = None
    floor: float | None = None
    cut_scores: tuple[float, float, float] = (175.0, 225.0, 275.0)
    ses_split: str = "tercile"
    ses_low_max: float | None = None
    ses_high_min: float | None = None
    min_students_level: int = 100  # strict: need more than this per cycle
    min_students_gap: int = 20  # inclusive: each SES group needs at least this
    min_response_rate: float = 0.5  # strict: need more than this
    seed: int = 0

    def __post_init__(self):
        if self.subject not in SUBJECTS:
            raise ConfigError(f"subject must be one of {SUBJECTS}")
        if self.grade not in GRADES:
            raise ConfigError(f"grade must be one of {GRADES}")
        if not self.cycles:
            raise ConfigError("cycles must not be empty")
        if self.ses_split not in SES_SPLIT_RULES:
            raise ConfigError(f"ses_split must be one of {SES_SPLIT_RULES}")
        if self.ses_split == "fixed" and (
            self.ses_low_max is None or self.ses_high_min is None
        ):
            raise ConfigError("fixed ses_split needs ses_low_max and ses_high_min")
        cuts = self.cut_scores
        if len(cuts) != 3 or not (cuts[0] < cuts[1] < cuts[2]):
            raise ConfigError("cut_scores must be 3 strictly increasing values")
        if not 0 <= self.min_response_rate <= 1:
            raise ConfigError("min_response_rate must lie in [0, 1]")
        if self.min_students_level < 0 or self.min_students_gap < 0:
            raise ConfigError("eligibility thresholds must be nonnegative")

    def density_config(self):
        from .empirical import DensityConfig

        return DensityConfig(
            estimator=self.estimator,
            bins=self.bins,
            bandwidth=self.bandwidth,
            floor=self.floor,
        )


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from exc


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from exc


def read_pipeline_config(path) -> PipelineConfig:
    """Build a PipelineConfig from a key-value file; unknown keys are errors."""
    kv = read_kv_file(path)
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    args: dict = {}
    for key, value in kv.items():
        if key in ("subject", "grade", "estimator", "ses_split"):
            args[key] = value
        elif key in ("bins", "min_students_level", "min_students_gap", "seed"):
            args[key] = _parse_int(key, value)
        elif key in ("bandwidth", "floor", "ses_low_max", "ses_high_min"):
            args[key] = None if value.lower() in ("", "none") else _parse_float(key, value)
        elif key == "min_response_rate":
            args[key] = _parse_float(key, value)
        elif key == "cycles":
            args[key] = tuple(_parse_int(key, v) for v in value.split(","))
        elif key == "cut_scores":
            parts = value.split(",")
            if len(parts) != 3:
                raise ConfigError(f"cut_scores: expected 3 values, got {len(parts)}")
            args[key] = tuple(_parse_float(key, v) for v in parts)
    try:
        return PipelineConfig(**args)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
