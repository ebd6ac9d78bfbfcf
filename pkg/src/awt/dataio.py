"""File formats: long-format CSV ingestion, panel files, result and report files.

Input measurements arrive as long-format CSV with the header
``station_id,latitude,longitude,altitude_m,timestamp,parameter,value``;
timestamps are ISO-8601 UTC on a uniform hourly grid, and a missing value is
an empty field or the literal NaN. Rows absent for a (station, parameter,
hour) combination count as missing too. The processed dataset travels as a
single JSON panel file that also carries the scaling statistics and grid
timestamps needed to map results back to physical units.

All writers emit deterministic bytes for identical inputs; run timestamps
appear only in the manifest.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .pipeline import AWTConfig, ClusteringResult
from .preprocess import DataError, PanelSeries, RawStationRecord
from .wavelet import WaveletPanel, decompose_panel

CSV_HEADER = ["station_id", "latitude", "longitude", "altitude_m",
              "timestamp", "parameter", "value"]
PANEL_FORMAT = "awt-panel-v1"
RESULT_FORMAT = "awt-result-v1"


@dataclass
class PanelDataset:
    """Processed panel file content: grid, scaling and per-station series."""

    parameters: list[str]
    temperature_parameters: list[str]
    timestamps: list[str]
    scaling: list[tuple[float, float]]   # (mean, stddev) per parameter
    mean_height_m: float | None
    stations: list[PanelSeries]

    def to_wavelet_panels(self) -> list[WaveletPanel]:
        return [
            decompose_panel(s.station_id, [s.series[p] for p in self.parameters])
            for s in self.stations
        ]


def _parse_float_field(text: str, line_no: int, column: str) -> float | None:
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {line_no}: column {column!r} has "
                        f"non-numeric value {text!r}") from None
    if np.isinf(value):
        raise DataError(f"line {line_no}: column {column!r} is infinite")
    return None if np.isnan(value) else value


def _parse_timestamp(text: str, line_no: int) -> datetime:
    raw = text.strip()
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise DataError(f"line {line_no}: invalid timestamp {text!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    if ts.minute or ts.second or ts.microsecond:
        raise DataError(f"line {line_no}: timestamp {text!r} is not on the hourly grid")
    return ts


def read_long_csv(path) -> tuple[list[RawStationRecord], list[str], list[str]]:
    """Parse the long-format measurement CSV into per-station records.

    Returns the records in first-appearance order, the sorted parameter
    names, and the ISO timestamps of the inferred hourly grid. Raises
    :class:`DataError` with a line number on any malformed content.
    """
    rows = []  # (line_no, station_id, lat, lon, alt, ts, parameter, value)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("input file is empty") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise DataError(f"line 1: expected header {','.join(CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(CSV_HEADER):
                raise DataError(f"line {line_no}: expected {len(CSV_HEADER)} "
                                f"fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise DataError(f"line {line_no}: empty station_id")
            parameter = row[5].strip()
            if not parameter:
                raise DataError(f"line {line_no}: empty parameter")
            rows.append((
                line_no, sid,
                _parse_float_field(row[1], line_no, "latitude"),
                _parse_float_field(row[2], line_no, "longitude"),
                _parse_float_field(row[3], line_no, "altitude_m"),
                _parse_timestamp(row[4], line_no),
                parameter,
                _parse_float_field(row[6], line_no, "value"),
            ))
    if not rows:
        raise DataError("input file contains no data rows")

    parameters = sorted({r[6] for r in rows})
    t_min = min(r[5] for r in rows)
    t_max = max(r[5] for r in rows)
    grid_len = int((t_max - t_min) / timedelta(hours=1)) + 1
    grid = [t_min + timedelta(hours=i) for i in range(grid_len)]

    station_order: list[str] = []
    meta: dict[str, list] = {}          # sid -> [lat, lon, alt]
    data: dict[str, dict[str, np.ndarray]] = {}
    seen: set[tuple[str, str, datetime]] = set()
    for line_no, sid, lat, lon, alt, ts, parameter, value in rows:
        if sid not in meta:
            station_order.append(sid)
            meta[sid] = [lat, lon, alt]
            data[sid] = {p: np.full(grid_len, np.nan) for p in parameters}
        else:
            for i, (new, name) in enumerate(zip((lat, lon, alt),
                                                ("latitude", "longitude", "altitude_m"))):
                if meta[sid][i] is None:
                    meta[sid][i] = new
                elif new is not None and new != meta[sid][i]:
                    raise DataError(f"line {line_no}: station {sid!r} has "
                                    f"conflicting {name} values")
        key = (sid, parameter, ts)
        if key in seen:
            raise DataError(f"line {line_no}: duplicate sample for station "
                            f"{sid!r}, parameter {parameter!r} at {ts.isoformat()}")
        seen.add(key)
        if value is not None:
            data[sid][parameter][int((ts - t_min) / timedelta(hours=1))] = value

    records = [
        RawStationRecord(station_id=sid, latitude=meta[sid][0],
                         longitude=meta[sid][1], altitude=meta[sid][2],
                         samples=data[sid])
        for sid in station_order
    ]
    return records, parameters, [t.isoformat().replace("+00:00", "Z") for t in grid]


def write_panel_file(path, dataset: PanelDataset) -> None:
    payload = {
        "format": PANEL_FORMAT,
        "parameters": dataset.parameters,
        "temperature_parameters": dataset.temperature_parameters,
        "mean_height_m": dataset.mean_height_m,
        "timestamps": dataset.timestamps,
        "scaling": [[m, s] for m, s in dataset.scaling],
        "stations": [
            {
                "station_id": s.station_id,
                "latitude": s.latitude,
                "longitude": s.longitude,
                "altitude_m": s.altitude,
                "series": [[float(v) for v in s.series[p]] for p in dataset.parameters],
            }
            for s in dataset.stations
        ],
    }
    write_json(path, payload)


def read_panel_file(path) -> PanelDataset:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"panel file {path}: invalid JSON ({exc})") from None
    if payload.get("format") != PANEL_FORMAT:
        raise DataError(f"panel file {path}: unknown format "
                        f"{payload.get('format')!r}")
    parameters = payload["parameters"]
    if payload["stations"] and not payload["timestamps"]:
        raise DataError(f"panel file {path}: stations present but no timestamps")
    stations = []
    for entry in payload["stations"]:
        series = {p: np.asarray(vals, dtype=float)
                  for p, vals in zip(parameters, entry["series"])}
        for p, vals in series.items():
            if vals.size != len(payload["timestamps"]):
                raise DataError(f"panel file {path}: station "
                                f"{entry['station_id']!r} series length mismatch")
            if not np.all(np.isfinite(vals)):
                raise DataError(f"panel file {path}: station "
                                f"{entry['station_id']!r} has non-finite values")
        stations.append(PanelSeries(station_id=entry["station_id"],
                                    latitude=entry["latitude"],
                                    longitude=entry["longitude"],
                                    altitude=entry["altitude_m"],
                                    series=series))
    return PanelDataset(
        parameters=parameters,
        temperature_parameters=payload["temperature_parameters"],
        timestamps=payload["timestamps"],
        scaling=[(m, s) for m, s in payload["scaling"]],
        mean_height_m=payload["mean_height_m"],
        stations=stations,
    )


def write_exclusion_report(path, exclusions) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "reason", "missing_fraction"])
        for exc in exclusions:
            writer.writerow([exc.station_id, exc.reason, repr(exc.missing_fraction)])


def result_to_json_dict(result: ClusteringResult, panel_sha256: str) -> dict:
    refinement = None
    if result.iterations_per_level:
        refinement = {
            "iterations_per_level": list(result.iterations_per_level),
            "sse_per_level": [list(level) for level in result.sse_per_level],
        }
    return {
        "format": RESULT_FORMAT,
        "config": _config_dict(result.config),
        "input": {"panel_sha256": panel_sha256},
        "k": result.k,
        "station_count": len(result.assignments),
        "outlier_count": len(result.outlier_station_ids),
        "clusters": [
            {
                "cluster_id": c.cluster_id,
                "size": c.size,
                "is_outlier": c.is_outlier,
                "member_ids": list(c.member_ids),
                "centroid": [float(v) for v in c.centroid],
            }
            for c in result.clusters
        ],
        "assignments": {pid: idx for pid, idx in result.assignments.items()},
        "refinement": refinement,
    }


def read_result_file(path) -> dict:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"result file {path}: invalid JSON ({exc})") from None
    if payload.get("format") != RESULT_FORMAT:
        raise DataError(f"result file {path}: unknown format "
                        f"{payload.get('format')!r}")
    return payload


def write_size_profile_csv(path, result: ClusteringResult) -> None:
    order = sorted(result.clusters, key=lambda c: (-c.size, c.cluster_id))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "size", "is_outlier"])
        for c in order:
            writer.writerow([c.cluster_id, c.size, str(c.is_outlier).lower()])


def write_mean_series_csv(path, mean_series: dict, parameters: list[str],
                          timestamps: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "parameter", "timestamp", "value"])
        for cluster_id in sorted(mean_series):
            for p_idx, series in enumerate(mean_series[cluster_id]):
                for ts, value in zip(timestamps, series):
                    writer.writerow([cluster_id, parameters[p_idx], ts, repr(float(value))])


def write_study_csv(path, rows: list[tuple[int, int, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tree_levels", "max_resolution", "nmi"])
        for tree_levels, max_resolution, value in rows:
            writer.writerow([tree_levels, max_resolution, repr(float(value))])


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_dict(config: AWTConfig) -> dict:
    return {
        "threshold": config.threshold,
        "tree_levels": config.tree_levels,
        "drop_levels": config.drop_levels,
        "branching_factor": config.branching_factor,
        "max_iters_per_level": config.max_iters_per_level,
        "outlier_max_size": config.outlier_max_size,
        "mode": config.mode,
    }


def write_manifest(path, *, command: str, config: AWTConfig | None,
                   inputs: dict, outputs: dict, elapsed_seconds: float,
                   version: str, extra: dict) -> None:
    payload = {
        "tool": "awt",
        "version": version,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": elapsed_seconds,
        "config": _config_dict(config) if config is not None else None,
        "inputs": {name: {"path": str(p), "sha256": sha256_of(p)}
                   for name, p in inputs.items()},
        "outputs": {name: {"path": str(p), "sha256": sha256_of(p)}
                    for name, p in outputs.items()},
    }
    payload.update(extra)
    write_json(path, payload)


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, separators=(",", ": "))
        fh.write("\n")
