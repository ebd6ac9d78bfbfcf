"""Station-data preparation: filtering, gap filling, height correction, scaling.

The stages run in a fixed, auditable order: stations without usable
metadata or with too many gaps are dropped first, remaining gaps are closed
by linear interpolation, temperature-like parameters are height-corrected to
the mean station altitude, and finally every parameter is z-scaled with
statistics pooled across all stations and timestamps so that heterogeneous
units contribute equally to distances. Thresholds passed to the clustering
are therefore always in scaled, squared units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Keep a station only if strictly less than this fraction of any parameter's
# samples is missing.
MISSING_TOLERANCE = 0.10

# Temperature falls by about 0.65 K per 100 m of altitude.
LAPSE_RATE_K_PER_M = 0.0065


class DataError(Exception):
    """Input data violates the schema or carries unusable content."""


@dataclass
class RawStationRecord:
    """One station as ingested: metadata plus gappy per-parameter samples.

    Parameter arrays share one time grid; missing samples are NaN.
    """

    station_id: str
    latitude: float | None
    longitude: float | None
    altitude: float | None
    samples: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {a.size for a in self.samples.values()}
        if len(lengths) > 1:
            raise DataError(f"station {self.station_id}: parameter arrays "
                            f"disagree on grid length ({sorted(lengths)})")


@dataclass
class PanelSeries:
    """One station's fully processed panel: complete, finite, scaled series."""

    station_id: str
    latitude: float
    longitude: float
    altitude: float
    series: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class Exclusion:
    station_id: str
    reason: str
    missing_fraction: float


def missing_fraction(record: RawStationRecord) -> float:
    """Worst per-parameter fraction of missing samples for one station."""
    return max(float(np.mean(np.isnan(a))) for a in record.samples.values())


def filter_stations(records: list[RawStationRecord],
                    tolerance: float = MISSING_TOLERANCE,
                    ) -> tuple[list[RawStationRecord], list[Exclusion]]:
    """Drop stations without coordinates/altitude or with too many gaps.

    A station is kept only if every parameter has a missing fraction
    strictly below ``tolerance``. Each exclusion is reported with a reason
    (``no_coordinates``, ``no_altitude`` or ``missing_data``) and the
    station's worst missing fraction.
    """
    kept: list[RawStationRecord] = []
    excluded: list[Exclusion] = []
    for rec in records:
        frac = missing_fraction(rec) if rec.samples else 1.0
        if rec.latitude is None or rec.longitude is None:
            excluded.append(Exclusion(rec.station_id, "no_coordinates", frac))
        elif rec.altitude is None:
            excluded.append(Exclusion(rec.station_id, "no_altitude", frac))
        elif not rec.samples or frac >= tolerance:
            excluded.append(Exclusion(rec.station_id, "missing_data", frac))
        else:
            kept.append(rec)
    return kept, excluded


def interpolate_missing(series: np.ndarray) -> np.ndarray:
    """Close gaps by linear interpolation between the nearest present samples.

    Leading and trailing gaps copy the closest existing value. Present
    samples pass through unchanged.
    """
    series = np.asarray(series, dtype=float)
    present = ~np.isnan(series)
    if not present.any():
        raise DataError("cannot interpolate an all-missing series")
    if present.all():
        return series.copy()
    idx = np.arange(series.size)
    out = series.copy()
    out[~present] = np.interp(idx[~present], idx[present], series[present])
    return out


def height_correct(t, z: float, mean_z: float):
    """Shift temperatures to the mean station altitude via the lapse rate."""
    return np.asarray(t, dtype=float) + LAPSE_RATE_K_PER_M * (z - mean_z)


def mean_height(records: list[RawStationRecord]) -> float:
    """Mean altitude of the (already filtered) stations."""
    altitudes = [r.altitude for r in records if r.altitude is not None]
    if not altitudes:
        raise DataError("no station with altitude information")
    return float(np.mean(altitudes))


def zscale(series_per_station: list[dict[str, np.ndarray]],
           ) -> tuple[list[dict[str, np.ndarray]], dict[str, tuple[float, float]]]:
    """Z-scale every parameter with mean/stddev pooled over all stations.

    Returns the scaled series and the (mean, stddev) per parameter so the
    transform can be inverted. A parameter with zero pooled variance carries
    no clustering signal and is rejected.
    """
    if not series_per_station:
        raise DataError("no stations to scale")
    parameters = list(series_per_station[0])
    for s in series_per_station:
        if list(s) != parameters:
            raise DataError("stations disagree on the parameter set")
    stats: dict[str, tuple[float, float]] = {}
    for param in parameters:
        pooled = np.concatenate([s[param] for s in series_per_station])
        mean = float(np.mean(pooled))
        std = float(np.std(pooled))
        if std == 0.0:
            raise DataError(f"parameter {param!r} is constant across the data set")
        stats[param] = (mean, std)
    scaled = [
        {param: (s[param] - stats[param][0]) / stats[param][1] for param in parameters}
        for s in series_per_station
    ]
    return scaled, stats


def inverse_zscale(values: np.ndarray, mean: float, std: float) -> np.ndarray:
    return np.asarray(values, dtype=float) * std + mean


def build_panel_dataset(records: list[RawStationRecord],
                        temperature_params: set[str] | frozenset[str],
                        ) -> tuple[list[PanelSeries], dict[str, tuple[float, float]],
                                   float, list[Exclusion]]:
    """Run the whole preparation chain: filter, interpolate, correct, scale.

    Returns the processed panels (input order preserved), the per-parameter
    scaling statistics, the mean station height used for the correction, and
    the exclusion report.
    """
    kept, excluded = filter_stations(records)
    if not kept:
        return [], {}, float("nan"), excluded
    mz = mean_height(kept)
    completed = []
    for rec in kept:
        series = {p: interpolate_missing(a) for p, a in rec.samples.items()}
        for p in series:
            if p in temperature_params:
                series[p] = height_correct(series[p], rec.altitude, mz)
        completed.append(series)
    scaled, stats = zscale(completed)
    panels = [
        PanelSeries(station_id=rec.station_id, latitude=rec.latitude,
                    longitude=rec.longitude, altitude=rec.altitude, series=s)
        for rec, s in zip(kept, scaled)
    ]
    return panels, stats, mz, excluded
