"""Command-line entry points.

Subcommands: build-reference, derive-cutpoints, compute-indicators,
export-plots.  Exit codes: 0 success, 1 input error, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import PipelineConfig, read_pipeline_config
from .divergence import signed_kl
from .empirical import EmpiricalDistribution
from .exceptions import ClusteringError, ConfigError, DataError, MonotonicityError
from .levels import (
    DEFAULT_CUTPOINTS,
    KMEANS_PARAMS,
    derive_cutpoints,
    level_profile,
    load_cutpoints,
    save_cutpoints,
)
from .pipeline import (
    compute_indicators,
    emit_report,
    export_plots_from_rows,
    fingerprint,
    ingest,
    read_indicator_csv,
    write_rejects,
)
from .reference import (
    GENERATOR_NAME,
    build_reference,
    read_reference_spec,
    read_score_sample,
    reference_table,
    write_score_sample,
)

EXIT_INPUT = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(path) -> PipelineConfig:
    return PipelineConfig() if path is None else read_pipeline_config(path)


def _cmd_build_reference(args) -> int:
    spec = read_reference_spec(args.spec)
    table = reference_table(spec)
    sample = build_reference(spec, args.n, args.seed)
    out = Path(args.out)
    write_score_sample(sample, out)
    meta = {
        "package_version": __version__,
        "seed": args.seed,
        "generator": GENERATOR_NAME,
        "n": args.n,
        "spec_file": str(args.spec),
        "national_sd": spec.national_sd,
        "base_sd": spec.base_sd,
        "reference_percentiles": [float(v) for v in table.entries],
    }
    Path(str(out) + ".meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(sample)} reference draws to {out}")
    return 0


def _cmd_derive_cutpoints(args) -> int:
    config = _load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    records, rejects = ingest(args.data, supported_years=config.cycles)
    reference = read_score_sample(args.reference)
    scoped = [
        r for r in records if r.subject == config.subject and r.grade == config.grade
    ]
    units: dict[tuple[str, int], list[float]] = {}
    for r in scoped:
        units.setdefault((r.municipality_id, r.year), []).append(r.score)
    profiles, kls = [], []
    dconf = config.density_config()
    for key in sorted(units):
        scores = units[key]
        if len(set(scores)) < 2:  # density estimation needs nondegenerate support
            continue
        dist = EmpiricalDistribution(scores)
        profiles.append(level_profile(dist, config.cut_scores))
        kls.append(signed_kl(dist, reference, dconf).value)
    cuts = derive_cutpoints(profiles, kls, seed)
    meta = {
        "package_version": __version__,
        "seed": seed,
        "kmeans": KMEANS_PARAMS,
        "data_file": str(args.data),
        "data_sha256": fingerprint(args.data),
        "reference_file": str(args.reference),
        "n_units": len(kls),
        "rejected_rows": len(rejects),
        "cut_scores": list(config.cut_scores),
    }
    save_cutpoints(args.out, cuts, meta)
    print(f"wrote cut points {[round(float(t), 6) for t in cuts.thresholds]} to {args.out}")
    return 0


def _cmd_compute_indicators(args) -> int:
    config = _load_config(args.config)
    records, rejects = ingest(args.data, supported_years=config.cycles)
    reference = read_score_sample(args.reference)
    if args.cutpoints is None:
        cuts, _ = DEFAULT_CUTPOINTS, {}
    else:
        cuts, _ = load_cutpoints(args.cutpoints)
    indicators, boundaries = compute_indicators(records, reference, cuts, config)
    out_dir = Path(args.out_dir)
    extra = {
        "data_file": str(args.data),
        "data_sha256": fingerprint(args.data),
        "reference_file": str(args.reference),
        "cutpoints_file": None if args.cutpoints is None else str(args.cutpoints),
        "rejected_rows": len(rejects),
    }
    emit_report(
        out_dir,
        indicators,
        config=config,
        cutpoints=cuts,
        boundaries=boundaries,
        records=records,
        reference=reference,
        extra_metadata=extra,
    )
    write_rejects(out_dir / "rejects.csv", rejects)
    print(
        f"{len(indicators)} municipalities "
        f"({sum(1 for i in indicators if i.level_ok)} level-eligible, "
        f"{sum(1 for i in indicators if i.gap_ok)} gap-eligible); "
        f"reports in {out_dir}"
    )
    return 0


def _cmd_export_plots(args) -> int:
    rows = read_indicator_csv(args.indicators)
    if args.cutpoints is None:
        cuts = DEFAULT_CUTPOINTS
    else:
        cuts, _ = load_cutpoints(args.cutpoints)
    export_plots_from_rows(args.out_dir, rows, cuts)
    print(f"plot data written to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edukl",
        description="Level and inequality indicators for score distributions.",
    )
    parser.add_argument("--version", action="version", version=f"edukl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-reference", help="build and sample the reference")
    p.add_argument("--spec", required=True, help="reference spec key-value file")
    p.add_argument("--n", required=True, type=int, help="number of draws")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="output sample CSV")
    p.set_defaults(func=_cmd_build_reference)

    p = sub.add_parser("derive-cutpoints", help="derive interpretive cut points")
    p.add_argument("--data", required=True, help="student records CSV")
    p.add_argument("--reference", required=True, help="reference sample CSV")
    p.add_argument("--seed", type=int, default=None, help="defaults to config seed")
    p.add_argument("--out", required=True, help="output cut points JSON")
    p.add_argument("--config", default=None, help="pipeline config file")
    p.set_defaults(func=_cmd_derive_cutpoints)

    p = sub.add_parser("compute-indicators", help="compute municipality indicators")
    p.add_argument("--data", required=True, help="student records CSV")
    p.add_argument("--reference", required=True, help="reference sample CSV")
    p.add_argument("--cutpoints", default=None, help="cut points JSON (default: shipped)")
    p.add_argument("--config", default=None, help="pipeline config file")
    p.add_argument("--out-dir", required=True, help="report output directory")
    p.set_defaults(func=_cmd_compute_indicators)

    p = sub.add_parser("export-plots", help="plot data from an indicators CSV")
    p.add_argument("--indicators", required=True, help="indicators.csv from a run")
    p.add_argument("--cutpoints", default=None, help="cut points JSON (default: shipped)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_export_plots)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MonotonicityError, ClusteringError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
