"""Batch pipeline: student records in, per-municipality indicators out.

Reads the normalized student CSV, applies the eligibility rules, computes the
signed-KL level indicator against the reference and the signed-KL gap
indicator between SES groups, classifies both, and writes the report files
(indicator table, cross-tabulation, plot data, run metadata).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import GRADES, SUBJECTS, PipelineConfig
from .divergence import SignedKL, signed_kl
from .empirical import EmpiricalDistribution, estimate_density
from .exceptions import DataError
from .levels import CutPoints, KLLevel, classify_kl
from .reldist import relative_cdf

__all__ = [
    "StudentRecord",
    "RejectedRow",
    "ingest",
    "SESBoundaries",
    "ses_boundaries",
    "split_ses_groups",
    "eligible_for_level",
    "eligible_for_gap",
    "MunicipalityIndicator",
    "municipality_indicators",
    "compute_indicators",
    "emit_report",
    "write_rejects",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "municipality_id",
    "year",
    "grade",
    "subject",
    "score",
    "ses",
    "answered_questionnaire",
)

SCORE_RANGE = (0.0, 500.0)


@dataclass(frozen=True, slots=True)
class StudentRecord:
    municipality_id: str
    year: int
    grade: str
    subject: str
    score: float
    ses: float | None
    answered_questionnaire: bool


@dataclass(frozen=True, slots=True)
class RejectedRow:
    line_number: int
    reason: str
    raw: tuple[str, ...]


def ingest(
    source, supported_years=None
) -> tuple[list[StudentRecord], list[RejectedRow]]:
    """Read and validate the student CSV.

    ``source`` is a path or text stream.  The header must carry exactly the
    schema columns (any order).  Invalid rows are collected with their line
    number and reason; valid rows become records.  An unreadable source or a
    wrong header is fatal (DataError).
    """
    years = set(supported_years) if supported_years is not None else None
    if hasattr(source, "read"):
        return _ingest_stream(source, "<stream>", years)
    path = Path(source)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            return _ingest_stream(fh, str(path), years)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _ingest_stream(fh, name, years):
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or set(header) != set(CSV_COLUMNS):
        raise DataError(
            f"{name}: expected columns {','.join(CSV_COLUMNS)}, "
            f"got {header if header is None else ','.join(header)}"
        )
    col = {name_: header.index(name_) for name_ in CSV_COLUMNS}
    records: list[StudentRecord] = []
    rejects: list[RejectedRow] = []
    for line, row in enumerate(reader, start=2):
        try:
            records.append(_parse_row(row, col, years))
        except ValueError as exc:
            rejects.append(RejectedRow(line, str(exc), tuple(row)))
    return records, rejects


def _parse_row(row, col, years) -> StudentRecord:
    if len(row) != len(CSV_COLUMNS):
        raise ValueError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}")
    municipality_id = row[col["municipality_id"]].strip()
    if not municipality_id:
        raise ValueError("empty municipality_id")
    try:
        year = int(row[col["year"]])
    except ValueError:
        raise ValueError(f"unparseable year {row[col['year']]!r}") from None
    if years is not None and year not in years:
        raise ValueError(f"year {year} outside the supported set")
    grade = row[col["grade"]].strip()
    if grade not in GRADES:
        raise ValueError(f"unknown grade {grade!r}")
    subject = row[col["subject"]].strip()
    if subject not in SUBJECTS:
        raise ValueError(f"unknown subject {subject!r}")
    try:
        score = float(row[col["score"]])
    except ValueError:
        raise ValueError(f"unparseable score {row[col['score']]!r}") from None
    if not SCORE_RANGE[0] <= score <= SCORE_RANGE[1]:
        raise ValueError("score out of range")
    ses_raw = row[col["ses"]].strip()
    if ses_raw == "":
        ses = None
    else:
        try:
            ses = float(ses_raw)
        except ValueError:
            raise ValueError(f"unparseable ses {ses_raw!r}") from None
        if not np.isfinite(ses):
            raise ValueError("ses must be finite")
    answered_raw = row[col["answered_questionnaire"]].strip()
    if answered_raw not in ("0", "1"):
        raise ValueError(f"answered_questionnaire must be 0 or 1, got {answered_raw!r}")
    return StudentRecord(
        municipality_id=municipality_id,
        year=year,
        grade=grade,
        subject=subject,
        score=score,
        ses=ses,
        answered_questionnaire=answered_raw == "1",
    )


# ---------------------------------------------------------------------------
# SES groups


@dataclass(frozen=True)
class SESBoundaries:
    """Per-year SES thresholds: low means ses <= low_max, high means ses > high_min."""

    rule: str
    per_year: dict[int, tuple[float, float]]


def ses_boundaries(records, config: PipelineConfig) -> SESBoundaries:
    """National split thresholds from the pooled SES distribution per year.

    Terciles by default; quartiles or fixed thresholds by configuration.
    Years with no SES data get no thresholds.
    """
    if config.ses_split == "fixed":
        years = sorted({r.year for r in records if r.ses is not None})
        per_year = {y: (config.ses_low_max, config.ses_high_min) for y in years}
        return SESBoundaries(rule="fixed", per_year=per_year)
    p = 1 / 3 if config.ses_split == "tercile" else 1 / 4
    per_year: dict[int, tuple[float, float]] = {}
    by_year: dict[int, list[float]] = {}
    for r in records:
        if r.ses is not None:
            by_year.setdefault(r.year, []).append(r.ses)
    for year, values in sorted(by_year.items()):
        dist = EmpiricalDistribution(values)
        per_year[year] = (dist.quantile(p), dist.quantile(1 - p))
    return SESBoundaries(rule=config.ses_split, per_year=per_year)


def split_ses_groups(
    records, config: PipelineConfig, boundaries: SESBoundaries | None = None
) -> tuple[list[StudentRecord], list[StudentRecord]]:
    """(low group, high group) for the given records.

    Boundaries default to ones computed from these same records; pass the
    national boundaries when splitting a single municipality.  Records with
    missing SES belong to neither group; the middle band is dropped.
    """
    if boundaries is None:
        boundaries = ses_boundaries(records, config)
    low: list[StudentRecord] = []
    high: list[StudentRecord] = []
    for r in records:
        if r.ses is None or r.year not in boundaries.per_year:
            continue
        low_max, high_min = boundaries.per_year[r.year]
        if r.ses <= low_max:
            low.append(r)
        elif r.ses > high_min:
            high.append(r)
    return low, high


# ---------------------------------------------------------------------------
# eligibility


def eligible_for_level(records, config: PipelineConfig) -> tuple[bool, str | None]:
    """A municipality qualifies when every cycle has more than the minimum count."""
    if not records:
        return False, "no records"
    counts: dict[int, int] = {year: 0 for year in config.cycles}
    for r in records:
        if r.year in counts:
            counts[r.year] += 1
    for year in config.cycles:
        if counts[year] <= config.min_students_level:
            return False, (
                f"only {counts[year]} students in {year} "
                f"(need more than {config.min_students_level})"
            )
    return True, None


def eligible_for_gap(
    records, low, high, config: PipelineConfig
) -> tuple[bool, str | None]:
    """Gap eligibility: response rate above threshold and both groups big enough.

    A record counts as a questionnaire response only when it both carries the
    answered flag and has an SES value.
    """
    if not records:
        return False, "no records"
    responded = sum(1 for r in records if r.answered_questionnaire and r.ses is not None)
    rate = responded / len(records)
    if rate <= config.min_response_rate:
        return False, (
            f"questionnaire response rate {rate:.3f} not above "
            f"{config.min_response_rate}"
        )
    if len(low) < config.min_students_gap:
        return False, f"low-SES group below {config.min_students_gap} ({len(low)})"
    if len(high) < config.min_students_gap:
        return False, f"high-SES group below {config.min_students_gap} ({len(high)})"
    return True, None


# ---------------------------------------------------------------------------
# indicators


@dataclass(frozen=True)
class MunicipalityIndicator:
    municipality_id: str
    n_students: int
    level_ok: bool
    level_reason: str | None
    level_kl: SignedKL | None
    level_label: KLLevel | None
    gap_ok: bool
    gap_reason: str | None
    gap_kl: SignedKL | None
    gap_label: KLLevel | None
    n_low_ses: int
    n_high_ses: int


def _distinct_scores(records) -> bool:
    first = records[0].score
    return any(r.score != first for r in records)


def municipality_indicators(
    municipality_id: str,
    records,
    reference: EmpiricalDistribution,
    cutpoints: CutPoints,
    config: PipelineConfig,
    boundaries: SESBoundaries,
) -> MunicipalityIndicator:
    """Level and gap indicators for one municipality's records.

    Ineligible dimensions keep their KL and label absent rather than zero.
    """
    dconf = config.density_config()

    level_ok, level_reason = eligible_for_level(records, config)
    if level_ok and not _distinct_scores(records):
        level_ok, level_reason = False, "degenerate score distribution"
    level_kl = level_label = None
    if level_ok:
        pooled = EmpiricalDistribution([r.score for r in records])
        level_kl = signed_kl(pooled, reference, dconf)
        level_label = classify_kl(level_kl.value, cutpoints)

    low, high = split_ses_groups(records, config, boundaries)
    gap_ok, gap_reason = eligible_for_gap(records, low, high, config)
    if gap_ok and (not _distinct_scores(low) or not _distinct_scores(high)):
        gap_ok, gap_reason = False, "degenerate score distribution in an SES group"
    gap_kl = gap_label = None
    if gap_ok:
        low_dist = EmpiricalDistribution([r.score for r in low])
        high_dist = EmpiricalDistribution([r.score for r in high])
        gap_kl = signed_kl(low_dist, high_dist, dconf)
        gap_label = classify_kl(gap_kl.value, cutpoints)

    return MunicipalityIndicator(
        municipality_id=municipality_id,
        n_students=len(records),
        level_ok=level_ok,
        level_reason=level_reason,
        level_kl=level_kl,
        level_label=level_label,
        gap_ok=gap_ok,
        gap_reason=gap_reason,
        gap_kl=gap_kl,
        gap_label=gap_label,
        n_low_ses=len(low),
        n_high_ses=len(high),
    )


def compute_indicators(
    records,
    reference: EmpiricalDistribution,
    cutpoints: CutPoints,
    config: PipelineConfig,
) -> tuple[list[MunicipalityIndicator], SESBoundaries]:
    """Indicators for every ingested municipality, in municipality-id order.

    Records outside the run's (subject, grade) scope do not enter the
    computations, but their municipalities still appear, marked ineligible,
    so that no ingested municipality silently disappears.
    """
    all_ids = sorted({r.municipality_id for r in records})
    scoped = [
        r for r in records if r.subject == config.subject and r.grade == config.grade
    ]
    boundaries = ses_boundaries(scoped, config)
    by_muni: dict[str, list[StudentRecord]] = {m: [] for m in all_ids}
    for r in scoped:
        by_muni[r.municipality_id].append(r)
    indicators = [
        municipality_indicators(m, by_muni[m], reference, cutpoints, config, boundaries)
        for m in all_ids
    ]
    return indicators, boundaries


# ---------------------------------------------------------------------------
# reports


_LABELS_DESC = ["High", "Medium-High", "Medium", "Medium-Low", "Low"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rejects(path, rejects) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line_number", "reason", *CSV_COLUMNS])
        for rej in rejects:
            row = list(rej.raw)
            row += [""] * (len(CSV_COLUMNS) - len(row))
            writer.writerow([rej.line_number, rej.reason, *row[: len(CSV_COLUMNS)]])


def _indicator_rows(indicators):
    for ind in indicators:
        yield [
            ind.municipality_id,
            ind.n_students,
            _fmt(ind.level_ok),
            ind.level_reason or "",
            _fmt(None if ind.level_kl is None else ind.level_kl.value),
            "" if ind.level_label is None else ind.level_label.label,
            _fmt(ind.gap_ok),
            ind.gap_reason or "",
            _fmt(None if ind.gap_kl is None else ind.gap_kl.value),
            "" if ind.gap_label is None else ind.gap_label.label,
            ind.n_low_ses,
            ind.n_high_ses,
        ]


INDICATOR_COLUMNS = (
    "municipality_id",
    "n_students",
    "level_ok",
    "level_reason",
    "level_kl",
    "level_label",
    "gap_ok",
    "gap_reason",
    "gap_kl",
    "gap_label",
    "n_low_ses",
    "n_high_ses",
)


def write_indicator_csv(path, indicators) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(INDICATOR_COLUMNS)
        writer.writerows(_indicator_rows(indicators))


def crosstab_counts(level_labels, gap_labels) -> np.ndarray:
    """5x5 matrix of counts, rows and columns ordered High to Low."""
    counts = np.zeros((5, 5), dtype=int)
    for lvl, gap in zip(level_labels, gap_labels):
        counts[4 - int(lvl), 4 - int(gap)] += 1
    return counts


def write_crosstab(path, indicators) -> None:
    pairs = [
        (ind.level_label, ind.gap_label)
        for ind in indicators
        if ind.level_label is not None and ind.gap_label is not None
    ]
    counts = crosstab_counts([p[0] for p in pairs], [p[1] for p in pairs])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level \\ gap", *_LABELS_DESC, "Total"])
        for i, label in enumerate(_LABELS_DESC):
            writer.writerow([label, *counts[i].tolist(), int(counts[i].sum())])


def write_scatter(path, indicators) -> None:
    """Scatter points (gap on x, level on y) for municipalities with both labels."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["municipality_id", "gap_kl", "level_kl"])
        for ind in indicators:
            if ind.level_kl is not None and ind.gap_kl is not None:
                writer.writerow(
                    [ind.municipality_id, _fmt(ind.gap_kl.value), _fmt(ind.level_kl.value)]
                )


def write_band_lines(path, cutpoints: CutPoints) -> None:
    """Threshold lines to draw on both scatter axes."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "threshold_index", "value"])
        for axis in ("level", "gap"):
            for i, t in enumerate(cutpoints.thresholds, start=1):
                writer.writerow([axis, i, _fmt(float(t))])


def write_gr_curves(path, indicators, by_muni, reference, config) -> None:
    """G(r) on a 101-point rank grid for each level-eligible municipality."""
    r_grid = np.arange(101) / 100.0
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["municipality_id", "r", "g_cdf"])
        for ind in indicators:
            if not ind.level_ok:
                continue
            obs = EmpiricalDistribution([r.score for r in by_muni[ind.municipality_id]])
            curve = relative_cdf(obs, reference, r_grid)
            for r, g in zip(r_grid, curve):
                writer.writerow([ind.municipality_id, _fmt(float(r)), _fmt(float(g))])


def write_density_curves(path, scoped_records, reference, config) -> None:
    """Observed vs reference density per cycle year on a common grid."""
    dconf = config.density_config()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "score", "observed_density", "reference_density"])
        for year in config.cycles:
            scores = [r.score for r in scoped_records if r.year == year]
            if len(set(scores)) < 2:
                continue
            obs = EmpiricalDistribution(scores)
            lo = min(obs.values[0], reference.values[0])
            hi = max(obs.values[-1], reference.values[-1])
            obs_d = estimate_density(obs, dconf, support=(lo, hi))
            ref_d = estimate_density(reference, dconf, support=(lo, hi))
            for y, fo, fr in zip(obs_d.grid, obs_d.density, ref_d.density):
                writer.writerow([year, _fmt(float(y)), _fmt(float(fo)), _fmt(float(fr))])


def fingerprint(path) -> str:
    """SHA-256 of a file, for provenance metadata."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def emit_report(
    out_dir,
    indicators,
    *,
    config: PipelineConfig,
    cutpoints: CutPoints,
    boundaries: SESBoundaries | None = None,
    records=None,
    reference: EmpiricalDistribution | None = None,
    extra_metadata: dict | None = None,
) -> dict:
    """Write the report files into ``out_dir`` and return the run metadata.

    Always writes indicators.csv, crosstab.csv, scatter.csv, band_lines.csv
    and run_metadata.json; adds gr_curves.csv and density_curves.csv when the
    scoped records and the reference sample are provided.  Outputs are
    deterministic except for the ``created_at`` metadata field.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise DataError(f"output directory {out} is not writable: {exc}") from exc

    write_indicator_csv(out / "indicators.csv", indicators)
    write_crosstab(out / "crosstab.csv", indicators)
    write_scatter(out / "scatter.csv", indicators)
    write_band_lines(out / "band_lines.csv", cutpoints)

    if records is not None and reference is not None:
        scoped = [
            r for r in records if r.subject == config.subject and r.grade == config.grade
        ]
        by_muni: dict[str, list[StudentRecord]] = {}
        for r in scoped:
            by_muni.setdefault(r.municipality_id, []).append(r)
        write_gr_curves(out / "gr_curves.csv", indicators, by_muni, reference, config)
        write_density_curves(out / "density_curves.csv", scoped, reference, config)

    metadata = {
        "package_version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "subject": config.subject,
        "grade": config.grade,
        "cycles": list(config.cycles),
        "estimator": config.estimator,
        "bins": config.bins,
        "bandwidth": config.bandwidth,
        "floor": config.floor,
        "cut_scores": list(config.cut_scores),
        "cutpoints": [float(t) for t in cutpoints.thresholds],
        "ses_split": config.ses_split,
        "ses_boundaries": None
        if boundaries is None
        else {str(y): list(b) for y, b in sorted(boundaries.per_year.items())},
        "min_students_level": config.min_students_level,
        "min_students_gap": config.min_students_gap,
        "min_response_rate": config.min_response_rate,
        "seed": config.seed,
        "n_municipalities": len(indicators),
        "n_level_eligible": sum(1 for i in indicators if i.level_ok),
        "n_gap_eligible": sum(1 for i in indicators if i.gap_ok),
    }
    if extra_metadata:
        metadata.update(extra_metadata)
    (out / "run_metadata.json").write_text(
        json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return metadata


def read_indicator_csv(path) -> list[dict]:
    """Read back an indicators.csv as a list of dicts (strings preserved)."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != set(
                INDICATOR_COLUMNS
            ):
                raise DataError(f"{path}: not an indicators file")
            return list(reader)
    except OSError as exc:
        raise DataError(f"cannot read indicators {path}: {exc}") from exc


def export_plots_from_rows(out_dir, rows, cutpoints: CutPoints) -> None:
    """Rebuild scatter, band-line and cross-tab files from an indicators CSV."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "scatter.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["municipality_id", "gap_kl", "level_kl"])
        for row in rows:
            if row["level_kl"] and row["gap_kl"]:
                writer.writerow([row["municipality_id"], row["gap_kl"], row["level_kl"]])
    write_band_lines(out / "band_lines.csv", cutpoints)
    pairs = [
        (KLLevel.from_label(row["level_label"]), KLLevel.from_label(row["gap_label"]))
        for row in rows
        if row["level_label"] and row["gap_label"]
    ]
    counts = crosstab_counts([p[0] for p in pairs], [p[1] for p in pairs])
    with (out / "crosstab.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level \\ gap", *_LABELS_DESC, "Total"])
        for i, label in enumerate(_LABELS_DESC):
            writer.writerow([label, *counts[i].tolist(), int(counts[i].sum())])
