"""Command-line front end: preprocess, cluster, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Set AWT_LOG_LEVEL (debug/info/warning/error) to control log verbosity.
All randomness is opt-in via --seed-shuffle; without it, identical inputs
and flags produce byte-identical result and CSV files (run timestamps are
confined to the manifest).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, evaluate
from .dataio import (
    PanelDataset,
    read_long_csv,
    read_panel_file,
    read_result_file,
    result_to_json_dict,
    sha256_of,
    write_exclusion_report,
    write_manifest,
    write_mean_series_csv,
    write_panel_file,
    write_size_profile_csv,
    write_json,
    write_study_csv,
)
from .pipeline import MODE_AWT, MODE_BIRCH, AWTConfig, run
from .preprocess import DataError, build_panel_dataset
from .wavelet import full_level_count, pad_to_pow2

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="awt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"awt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pre = sub.add_parser("preprocess",
                         help="turn a long-format measurement CSV into a panel file")
    pre.add_argument("--input", required=True, help="long-format CSV of measurements")
    pre.add_argument("--panel", required=True, help="output panel file (JSON)")
    pre.add_argument("--exclusion-report", required=True,
                     help="output CSV listing excluded stations")
    pre.add_argument("--temperature-params", default="temperature",
                     help="comma-separated parameters to height-correct "
                          "(default: temperature)")
    pre.add_argument("--manifest", help="optional run manifest (JSON)")

    clu = sub.add_parser("cluster",
                         help="cluster a panel file and export the results")
    clu.add_argument("--panel", required=True, help="panel file from 'preprocess'")
    clu.add_argument("--outdir", required=True,
                     help="directory for result.json, size_profile.csv, "
                          "mean_series.csv and manifest.json")
    clu.add_argument("--threshold", type=float, default=1.0,
                     help="merge threshold in squared scaled-distance units "
                          "(default: 1.0)")
    clu.add_argument("--tree-levels", type=int, default=3,
                     help="wavelet levels used for the feature tree (default: 3)")
    clu.add_argument("--drop-levels", type=int, default=0,
                     help="finest wavelet levels to discard (default: 0)")
    clu.add_argument("--branching-factor", type=int, default=8,
                     help="maximum children per tree node (default: 8)")
    clu.add_argument("--max-iters-per-level", type=int, default=100,
                     help="refinement iteration cap per resolution (default: 100)")
    clu.add_argument("--mode", choices=[MODE_AWT, MODE_BIRCH], default=MODE_AWT,
                     help="awt = tree + refinement; birch = tree-only baseline")
    clu.add_argument("--outlier-max-size", type=int,
                     help="flag clusters of at most this size instead of "
                          "using the automatic size-step cutoff")
    clu.add_argument("--seed-shuffle", type=int,
                     help="shuffle station insertion order with this seed")

    eva = sub.add_parser("evaluate",
                         help="compare two results or run a resolution study")
    eva.add_argument("--results", nargs=2, metavar=("A", "B"),
                     help="two result JSON files to compare by NMI")
    eva.add_argument("--panel", help="panel file for a resolution study")
    eva.add_argument("--drop-grid", help="comma-separated drop counts, e.g. 0,1,2,3")
    eva.add_argument("--study-csv", help="output CSV for the study table")
    eva.add_argument("--threshold", type=float, default=1.0)
    eva.add_argument("--tree-levels", type=int, default=3)
    eva.add_argument("--branching-factor", type=int, default=8)
    eva.add_argument("--max-iters-per-level", type=int, default=100)
    eva.add_argument("--mode", choices=[MODE_AWT, MODE_BIRCH], default=MODE_AWT)
    return parser


def _cmd_preprocess(args) -> int:
    started = time.perf_counter()
    temperature_params = {p.strip() for p in args.temperature_params.split(",")
                          if p.strip()}
    records, parameters, timestamps = read_long_csv(args.input)
    panels, stats, mean_z, excluded = build_panel_dataset(records, temperature_params)
    dataset = PanelDataset(
        parameters=parameters,
        temperature_parameters=sorted(temperature_params & set(parameters)),
        timestamps=timestamps,
        scaling=[stats[p] for p in parameters] if panels else [],
        mean_height_m=mean_z if panels else None,
        stations=panels,
    )
    write_panel_file(args.panel, dataset)
    write_exclusion_report(args.exclusion_report, excluded)
    if args.manifest:
        write_manifest(args.manifest, command="preprocess", config=None,
                       inputs={"input": args.input},
                       outputs={"panel": args.panel,
                                "exclusion_report": args.exclusion_report},
                       elapsed_seconds=time.perf_counter() - started,
                       version=__version__,
                       extra={"kept_stations": len(panels),
                              "excluded_stations": len(excluded)})
    print(f"kept {len(panels)} stations, excluded {len(excluded)} "
          f"(report: {args.exclusion_report})")
    if not panels:
        print("error: no station survived preprocessing", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _config_from_args(args) -> AWTConfig:
    return AWTConfig(
        threshold=args.threshold,
        tree_levels=args.tree_levels,
        drop_levels=getattr(args, "drop_levels", 0),
        branching_factor=args.branching_factor,
        max_iters_per_level=args.max_iters_per_level,
        outlier_max_size=getattr(args, "outlier_max_size", None),
        mode=args.mode,
    )


def _available_levels(dataset: PanelDataset) -> int:
    padded, _ = pad_to_pow2(np.zeros(len(dataset.timestamps)))
    return full_level_count(padded.size)


def _cmd_cluster(args) -> int:
    started = time.perf_counter()
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    dataset = read_panel_file(args.panel)
    if not dataset.stations:
        raise DataError("panel file contains no stations")
    try:
        config.validate_for(_available_levels(dataset))
    except ValueError as exc:
        raise _UsageError(str(exc)) from None

    panels = dataset.to_wavelet_panels()
    if args.seed_shuffle is not None:
        order = np.random.default_rng(args.seed_shuffle).permutation(len(panels))
        panels = [panels[i] for i in order]
    result = run(panels, config)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    result_path = outdir / "result.json"
    profile_path = outdir / "size_profile.csv"
    series_path = outdir / "mean_series.csv"
    write_json(result_path, result_to_json_dict(result, sha256_of(args.panel)))
    write_size_profile_csv(profile_path, result)
    physical_means = evaluate.cluster_mean_series(result, panels,
                                                  scaling=dataset.scaling)
    write_mean_series_csv(series_path, physical_means, dataset.parameters,
                          dataset.timestamps)
    write_manifest(outdir / "manifest.json", command="cluster", config=config,
                   inputs={"panel": args.panel},
                   outputs={"result": result_path,
                            "size_profile": profile_path,
                            "mean_series": series_path},
                   elapsed_seconds=time.perf_counter() - started,
                   version=__version__,
                   extra={"seed_shuffle": args.seed_shuffle,
                          "station_count": len(result.assignments),
                          "k": result.k,
                          "outlier_count": len(result.outlier_station_ids)})
    print(f"clustered {len(result.assignments)} stations into {result.k} clusters "
          f"({len(result.outlier_station_ids)} outlier stations); "
          f"outputs in {outdir}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    if args.results and (args.panel or args.drop_grid):
        raise _UsageError("give either --results or a --panel study, not both")
    if args.results:
        payload_a = read_result_file(args.results[0])
        payload_b = read_result_file(args.results[1])
        ids_a = set(payload_a["assignments"])
        ids_b = set(payload_b["assignments"])
        if ids_a != ids_b:
            diff = sorted(ids_a.symmetric_difference(ids_b))
            raise DataError("result files cover different stations; first "
                            f"differences: {diff[:10]}")
        value = evaluate.nmi(payload_a["assignments"], payload_b["assignments"])
        print(f"nmi {value:.6f}")
        return EXIT_OK
    if not args.panel or not args.drop_grid:
        raise _UsageError("need --results A B, or --panel with --drop-grid")
    try:
        drop_grid = [int(d) for d in args.drop_grid.split(",") if d.strip() != ""]
    except ValueError:
        raise _UsageError(f"invalid --drop-grid {args.drop_grid!r}") from None
    if not drop_grid:
        raise _UsageError("empty --drop-grid")
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    dataset = read_panel_file(args.panel)
    if not dataset.stations:
        raise DataError("panel file contains no stations")
    available = _available_levels(dataset)
    for drop in drop_grid:
        try:
            replace(config, drop_levels=drop).validate_for(available)
        except ValueError as exc:
            raise _UsageError(str(exc)) from None
    rows = evaluate.resolution_study(dataset.to_wavelet_panels(), config, drop_grid)
    for tree_levels, max_resolution, value in rows:
        print(f"tree_levels={tree_levels} max_resolution={max_resolution} "
              f"nmi={value:.6f}")
    if args.study_csv:
        write_study_csv(args.study_csv, rows)
        print(f"study written to {args.study_csv}")
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("AWT_LOG_LEVEL", "WARNING").upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        level = "WARNING"
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "preprocess":
            return _cmd_preprocess(args)
        if args.command == "cluster":
            return _cmd_cluster(args)
        return _cmd_evaluate(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive catch-all
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
