import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awt.wavelet import (
    WaveletCoefficients,
    decompose_panel,
    drop_finest_levels,
    full_level_count,
    haar_decompose,
    haar_reconstruct,
    level_size,
    pad_to_pow2,
    prefix_flat,
    prefix_length,
)

SQRT2 = np.sqrt(2.0)


def haar_basis_matrix(n):
    """Independent oracle: explicit orthonormal Haar basis, row per coefficient.

    Row 0 is the constant scaling function 1/sqrt(n); the k-th detail row of
    level l (block length b = n / 2**(l-1)) is +1/sqrt(b) on the first half
    of its block and -1/sqrt(b) on the second half.
    """
    rows = [np.full(n, 1.0 / np.sqrt(n))]
    level = 1
    while 2 ** (level - 1) <= n // 2:
        block = n // 2 ** (level - 1)
        for k in range(2 ** (level - 1)):
            row = np.zeros(n)
            row[k * block: k * block + block // 2] = 1.0 / np.sqrt(block)
            row[k * block + block // 2: (k + 1) * block] = -1.0 / np.sqrt(block)
            rows.append(row)
        level += 1
    return np.stack(rows)


def flat(coeffs):
    return np.concatenate(coeffs.levels)


series_strategy = st.lists(
    st.floats(min_value=-100, max_value=100, allow_nan=False), min_size=1,
    max_size=200,
).map(np.asarray)


class TestPadToPow2:
    def test_pads_by_replicating_last_value(self):
        padded, n = pad_to_pow2(np.array([1.0, 2.0, 3.0]))
        assert list(padded) == [1.0, 2.0, 3.0, 3.0]
        assert n == 3

    def test_power_of_two_length_unchanged(self):
        padded, n = pad_to_pow2(np.array([4.0]))
        assert list(padded) == [4.0]
        assert n == 1

    def test_constant_series(self):
        padded, n = pad_to_pow2(np.full(5, 5.0))
        assert list(padded) == [5.0] * 8
        assert n == 5

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError, match="empty input"):
            pad_to_pow2(np.array([]))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            pad_to_pow2(np.array([1.0, np.nan]))


class TestHaarDecompose:
    def test_constant_series_has_only_scaling_coefficient(self):
        coeffs = haar_decompose(np.full(4, 5.0))
        assert coeffs.levels[0] == pytest.approx([10.0])
        for detail in coeffs.levels[1:]:
            assert np.allclose(detail, 0.0)

    def test_pair_matches_explicit_matrix(self):
        # oracle: multiply by the explicit 2x2 orthonormal Haar matrix
        expected = haar_basis_matrix(2) @ np.array([8.0, 4.0])
        coeffs = haar_decompose(np.array([8.0, 4.0]))
        assert flat(coeffs) == pytest.approx(expected)
        assert coeffs.levels[0][0] == pytest.approx(12.0 / SQRT2)
        assert coeffs.levels[1][0] == pytest.approx(4.0 / SQRT2)

    def test_parseval_on_fixed_series(self):
        coeffs = haar_decompose(np.array([8.0, 4.0, 6.0, 2.0]))
        assert float(flat(coeffs) @ flat(coeffs)) == pytest.approx(120.0)

    def test_matches_matrix_oracle_for_longer_series(self):
        rng = np.random.default_rng(7)
        for n in (4, 8, 32, 128):
            x = rng.normal(size=n)
            assert flat(haar_decompose(x)) == pytest.approx(
                haar_basis_matrix(n) @ x, abs=1e-12)

    def test_non_dyadic_length_rejected(self):
        with pytest.raises(ValueError, match="power of two"):
            haar_decompose(np.array([1.0, 2.0, 3.0]))

    def test_level_shapes(self):
        coeffs = haar_decompose(np.zeros(16))
        assert [l.size for l in coeffs.levels] == [1, 1, 2, 4, 8]
        assert coeffs.coefficient_count == coeffs.padded_length == 16

    @given(series_strategy)
    def test_parseval_property(self, series):
        padded, _ = pad_to_pow2(series)
        coeffs = haar_decompose(padded)
        lhs = float(flat(coeffs) @ flat(coeffs))
        rhs = float(padded @ padded)
        assert abs(lhs - rhs) <= 1e-9 * max(rhs, 1.0)

    @given(series_strategy, st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, series, alpha, beta):
        padded, _ = pad_to_pow2(series)
        other = padded[::-1].copy()
        combined = haar_decompose(alpha * padded + beta * other)
        separate = (alpha * flat(haar_decompose(padded))
                    + beta * flat(haar_decompose(other)))
        assert flat(combined) == pytest.approx(separate, abs=1e-9)


class TestHaarReconstruct:
    @given(series_strategy)
    def test_round_trip_identity(self, series):
        padded, _ = pad_to_pow2(series)
        out = haar_reconstruct(haar_decompose(padded))
        assert out == pytest.approx(padded, abs=1e-9)

    def test_round_trip_returns_unpadded_prefix(self):
        series = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
        padded, n = pad_to_pow2(series)
        out = haar_reconstruct(haar_decompose(padded, original_length=n))
        assert out == pytest.approx(series)

    def test_constant_inverse(self):
        coeffs = WaveletCoefficients(
            levels=(np.array([10.0]), np.array([0.0]), np.zeros(2)),
            original_length=4, padded_length=4)
        assert haar_reconstruct(coeffs) == pytest.approx([5.0, 5.0, 5.0, 5.0])

    def test_zeroed_finest_level_gives_pairwise_averages(self):
        # oracle: invert by explicit basis matrix with the finest rows zeroed
        x = np.array([8.0, 4.0, 6.0, 2.0])
        basis = haar_basis_matrix(4)
        coeff_vec = basis @ x
        coeff_vec[2:] = 0.0
        expected = basis.T @ coeff_vec
        assert expected == pytest.approx([6.0, 6.0, 4.0, 4.0])

        full = haar_decompose(x)
        truncated = WaveletCoefficients(levels=full.levels[:2],
                                        original_length=4, padded_length=4)
        assert haar_reconstruct(truncated) == pytest.approx(expected)

    def test_malformed_level_shape_rejected(self):
        with pytest.raises(ValueError):
            WaveletCoefficients(levels=(np.array([1.0]), np.zeros(3)),
                                original_length=4, padded_length=4)


class TestPrefixFlat:
    def panel(self, *series):
        return decompose_panel("s", list(series))

    def test_single_level_is_scaling_coefficient(self):
        panel = self.panel(np.arange(8.0))
        prefix = prefix_flat(panel, 1)
        assert prefix.size == 1
        assert prefix[0] == pytest.approx(np.arange(8.0).sum() / np.sqrt(8))

    def test_three_levels_of_length_16(self):
        panel = self.panel(np.arange(16.0))
        assert prefix_flat(panel, 3).size == 4  # 1 + 1 + 2

    def test_full_prefix_distance_equals_raw_distance(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(2, 32))
        b = rng.normal(size=(2, 32))
        pa = decompose_panel("a", list(a))
        pb = decompose_panel("b", list(b))
        lhs = float(np.sum((prefix_flat(pa, 6) - prefix_flat(pb, 6)) ** 2))
        rhs = float(np.sum((a - b) ** 2))
        assert lhs == pytest.approx(rhs)

    def test_prefix_length_arithmetic(self):
        panel = self.panel(np.zeros(64), np.zeros(64))
        for levels in range(1, panel.level_count + 1):
            assert prefix_flat(panel, levels).size == 2 * 2 ** (levels - 1)
            assert prefix_length(levels) == 2 ** (levels - 1)

    @given(st.integers(0, 100))
    def test_prefix_distance_monotone_in_levels(self, seed):
        rng = np.random.default_rng(seed)
        a = decompose_panel("a", [rng.normal(size=32)])
        b = decompose_panel("b", [rng.normal(size=32)])
        dists = [float(np.sum((prefix_flat(a, l) - prefix_flat(b, l)) ** 2))
                 for l in range(1, a.level_count + 1)]
        for lo, hi in zip(dists, dists[1:]):
            assert hi >= lo - 1e-12

    def test_out_of_range_levels_rejected(self):
        panel = self.panel(np.zeros(8))
        with pytest.raises(ValueError):
            prefix_flat(panel, 0)
        with pytest.raises(ValueError):
            prefix_flat(panel, panel.level_count + 1)


class TestDropFinestLevels:
    def test_drop_zero_is_identity(self):
        panel = decompose_panel("s", [np.arange(16.0)])
        same = drop_finest_levels(panel, 0)
        assert same.level_count == panel.level_count
        for a, b in zip(same.per_parameter[0].levels,
                        panel.per_parameter[0].levels):
            assert a == pytest.approx(b)

    def test_drop_one_on_13_level_panel_halves_coefficients(self):
        panel = decompose_panel("s", [np.zeros(4096)])
        assert panel.level_count == 13
        dropped = drop_finest_levels(panel, 1)
        assert dropped.level_count == 12
        assert dropped.per_parameter[0].coefficient_count == 4096 // 2

    def test_drop_three_divides_by_eight(self):
        panel = decompose_panel("s", [np.zeros(4096)])
        dropped = drop_finest_levels(panel, 3)
        assert dropped.per_parameter[0].coefficient_count == 4096 // 8

    def test_coarse_prefixes_unchanged(self):
        panel = decompose_panel("s", [np.random.default_rng(0).normal(size=64)])
        dropped = drop_finest_levels(panel, 2)
        assert prefix_flat(dropped, 3) == pytest.approx(prefix_flat(panel, 3))

    def test_drop_too_many_rejected(self):
        panel = decompose_panel("s", [np.zeros(8)])
        with pytest.raises(ValueError):
            drop_finest_levels(panel, panel.level_count)


def test_level_size_and_count_helpers():
    assert [level_size(l) for l in range(5)] == [1, 1, 2, 4, 8]
    assert full_level_count(1) == 1
    assert full_level_count(4096) == 13


def test_panel_requires_uniform_series_lengths():
    with pytest.raises(ValueError):
        decompose_panel("s", [np.zeros(8), np.zeros(16)])
