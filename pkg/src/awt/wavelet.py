"""Orthonormal Haar decomposition and multi-resolution prefixes for time series.

The transform used throughout is the orthonormal (sqrt(2)-normalised) Haar
wavelet: each pairwise step maps (a, b) to the sum (a+b)/sqrt(2) and the
detail (a-b)/sqrt(2), recursing on the sums. Orthonormality gives the
Parseval identity, so the squared Euclidean distance between two full
coefficient vectors equals the squared distance between the padded raw
series. Coefficients are stored coarsest-first, which makes "the first L
resolution levels" a contiguous prefix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class WaveletCoefficients:
    """Haar coefficients of one series, grouped by resolution level.

    ``levels[0]`` holds the single overall scaling coefficient; ``levels[l]``
    for l >= 1 holds the 2**(l-1) detail coefficients of that level, coarsest
    level first. A full decomposition of a series padded to length 2**J has
    J + 1 levels and exactly ``padded_length`` coefficients in total; a panel
    that went through :func:`drop_finest_levels` keeps the same
    ``padded_length`` but stores fewer levels.
    """

    levels: tuple[np.ndarray, ...]
    original_length: int
    padded_length: int

    def __post_init__(self):
        if not self.levels:
            raise ValueError("coefficient levels must be non-empty")
        if self.padded_length < 1 or self.padded_length & (self.padded_length - 1):
            raise ValueError(f"padded_length {self.padded_length} is not a power of two")
        if not 1 <= self.original_length <= self.padded_length:
            raise ValueError("original_length must be in [1, padded_length]")
        full = full_level_count(self.padded_length)
        if len(self.levels) > full:
            raise ValueError(f"{len(self.levels)} levels exceed the {full} supported "
                             f"by padded_length {self.padded_length}")
        for lvl, coeffs in enumerate(self.levels):
            if coeffs.shape != (level_size(lvl),):
                raise ValueError(f"level {lvl} must have {level_size(lvl)} "
                                 f"coefficients, got shape {coeffs.shape}")

    @property
    def level_count(self) -> int:
        return len(self.levels)

    @property
    def coefficient_count(self) -> int:
        return sum(c.size for c in self.levels)


@dataclass(frozen=True)
class WaveletPanel:
    """Per-parameter Haar coefficients of one station's aligned series."""

    station_id: str
    per_parameter: tuple[WaveletCoefficients, ...]

    def __post_init__(self):
        if not self.per_parameter:
            raise ValueError("panel must contain at least one parameter")
        first = self.per_parameter[0]
        for coeffs in self.per_parameter[1:]:
            if (coeffs.padded_length != first.padded_length
                    or coeffs.level_count != first.level_count):
                raise ValueError("all parameters of a panel must share the same "
                                 "padded length and level structure")

    @property
    def parameter_count(self) -> int:
        return len(self.per_parameter)

    @property
    def level_count(self) -> int:
        return self.per_parameter[0].level_count


def level_size(level: int) -> int:
    """Number of coefficients held by a resolution level (1, 1, 2, 4, ...)."""
    return 1 if level == 0 else 2 ** (level - 1)


def full_level_count(padded_length: int) -> int:
    """Level count of a full decomposition of a dyadic-length series."""
    return int(np.log2(padded_length)) + 1


def prefix_length(levels: int) -> int:
    """Coefficient count of one parameter's first ``levels`` levels."""
    return sum(level_size(l) for l in range(levels))


def pad_to_pow2(series: np.ndarray) -> tuple[np.ndarray, int]:
    """Pad a series to the next power-of-two length by replicating its last value.

    Returns the padded series and the original length. Replication is used
    instead of zero padding so no artificial step edge is introduced at the
    end of the record.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(series)):
        raise ValueError("series contains non-finite values")
    n = series.size
    padded_n = 1 << max(0, (n - 1).bit_length())
    if padded_n == n:
        return series.copy(), n
    return np.concatenate([series, np.full(padded_n - n, series[-1])]), n


def haar_decompose(series: np.ndarray, original_length: int | None = None) -> WaveletCoefficients:
    """Full orthonormal Haar decomposition of a dyadic-length series."""
    series = np.asarray(series, dtype=float)
    n = series.size
    if n == 0 or n & (n - 1):
        raise ValueError(f"series length {n} is not a power of two; pad first")
    if not np.all(np.isfinite(series)):
        raise ValueError("series contains non-finite values")
    details = []  # finest first while we recurse
    current = series
    while current.size > 1:
        a = current[0::2]
        b = current[1::2]
        details.append((a - b) / _SQRT2)
        current = (a + b) / _SQRT2
    levels = (current,) + tuple(reversed(details))
    return WaveletCoefficients(levels=levels,
                               original_length=original_length if original_length is not None else n,
                               padded_length=n)


def haar_reconstruct(coeffs: WaveletCoefficients) -> np.ndarray:
    """Invert the Haar transform, returning the first ``original_length`` samples.

    Levels beyond those stored (removed by :func:`drop_finest_levels`) are
    treated as zero, so a reduced panel reconstructs to its piecewise-constant
    approximation on the original time grid.
    """
    current = np.asarray(coeffs.levels[0], dtype=float)
    for level in range(1, full_level_count(coeffs.padded_length)):
        if level < coeffs.level_count:
            detail = coeffs.levels[level]
        else:
            detail = np.zeros(level_size(level))
        if detail.shape != current.shape:
            raise ValueError(f"level {level} has {detail.size} coefficients, "
                             f"expected {current.size}")
        out = np.empty(2 * current.size)
        out[0::2] = (current + detail) / _SQRT2
        out[1::2] = (current - detail) / _SQRT2
        current = out
    return current[:coeffs.original_length]


def decompose_panel(station_id: str, series_per_parameter) -> WaveletPanel:
    """Pad and decompose each parameter series of one station into a panel."""
    padded = [pad_to_pow2(s) for s in series_per_parameter]
    lengths = {p.size for p, _ in padded}
    if len(lengths) != 1:
        raise ValueError("all parameter series of a station must share one length")
    return WaveletPanel(
        station_id=station_id,
        per_parameter=tuple(haar_decompose(p, original_length=n) for p, n in padded),
    )


def prefix_flat(panel: WaveletPanel, levels: int) -> np.ndarray:
    """Concatenate the first ``levels`` levels of every parameter into one vector.

    For levels = L >= 1 the result has parameter_count * 2**(L-1) entries.
    This vector is the clustering representation: its squared Euclidean
    distance is the per-parameter sum of squared coefficient distances.
    """
    if not 1 <= levels <= panel.level_count:
        raise ValueError(f"levels must be in [1, {panel.level_count}], got {levels}")
    return np.concatenate([np.concatenate(c.levels[:levels]) for c in panel.per_parameter])


def drop_finest_levels(panel: WaveletPanel, drop: int) -> WaveletPanel:
    """Remove the finest ``drop`` resolution levels from every parameter.

    Cuts coefficient memory by a factor of about 2**drop while leaving the
    coarse structure (and therefore any prefix up to the remaining level
    count) untouched.
    """
    if drop < 0:
        raise ValueError("drop must be non-negative")
    if drop >= panel.level_count:
        raise ValueError(f"cannot drop {drop} of {panel.level_count} levels")
    if drop == 0:
        return WaveletPanel(station_id=panel.station_id, per_parameter=panel.per_parameter)
    keep = panel.level_count - drop
    return WaveletPanel(
        station_id=panel.station_id,
        per_parameter=tuple(
            WaveletCoefficients(levels=c.levels[:keep],
                                original_length=c.original_length,
                                padded_length=c.padded_length)
            for c in panel.per_parameter
        ),
    )
