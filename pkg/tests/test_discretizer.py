import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import kstest

from umtr.discretizer import (
    BinSpec,
    ConstantColumn,
    DegenerateColumnError,
    fit_bins,
    sample_within_bin,
    transform,
)
from umtr.rng import stream


def quantile_slice_edges(column, b):
    """Oracle: plain sort-and-slice quantile bin edges."""
    srt = np.sort(column)
    n = srt.size
    return np.array([srt[0]] + [srt[int(np.ceil(n * k / b)) - 1] for k in range(1, b)]
                    + [srt[-1]])


class TestFitBins:
    def test_uniform_data_matches_exact_quantiles(self):
        # Oracle: at Uniform(0,1) data the quantile and uniform limits
        # coincide, so edges must sit near k/B and occupancies near n/B.
        rng = np.random.default_rng(11)
        col = rng.random(10_000)
        spec = fit_bins(col, 20, alpha=1.0)
        assert spec.n_bins == 20
        interior = spec.edges[1:-1]
        assert np.all(np.abs(interior - np.arange(1, 20) / 20) < 0.02)
        counts = np.bincount(transform(spec, col), minlength=20)
        se = np.sqrt(10_000 * 0.05 * 0.95)
        assert np.all(np.abs(counts - 500) <= 3 * se)

    def test_alpha_to_zero_gives_equal_count_bins(self):
        # Oracle: sort-and-slice quantile binning; counts must be n/B +- 1.
        rng = np.random.default_rng(3)
        col = rng.normal(size=1000) ** 3  # skewed, all distinct
        spec = fit_bins(col, 20, alpha=1e-6)
        counts = np.bincount(transform(spec, col), minlength=spec.n_bins)
        assert np.all(np.abs(counts - 50) <= 1)
        oracle = quantile_slice_edges(col, 20)
        # Interior edges sit within one data gap of the slice quantiles.
        assert np.all(np.abs(spec.edges[1:-1] - oracle[1:-1])
                      <= np.diff(np.sort(col)).max())

    def test_alpha_to_infinity_gives_equal_width_bins(self):
        rng = np.random.default_rng(4)
        col = np.concatenate([rng.normal(0, 0.05, 900), rng.normal(4, 0.3, 100)])
        spec = fit_bins(col, 10, alpha=1e6)
        lo, hi = col.min(), col.max()
        expected = lo + (hi - lo) * np.arange(11) / 10
        assert np.all(np.abs(spec.edges - expected) <= 0.01 * (hi - lo))

    def test_single_bin(self):
        col = np.array([0.0, 0.3, 1.0])
        spec = fit_bins(col, 1, alpha=1.0)
        assert np.array_equal(spec.edges, [0.0, 1.0])
        assert np.all(transform(spec, col) == 0)

    def test_effective_bins_capped_by_distinct_values(self):
        col = np.array([0.0, 1.0, 2.0] * 30)
        spec = fit_bins(col, 20, alpha=1.0)
        assert spec.n_bins <= 3
        codes = transform(spec, np.array([0.0, 1.0, 2.0]))
        assert len(set(codes.tolist())) == spec.n_bins

    def test_constant_column_rejected(self):
        with pytest.raises(DegenerateColumnError):
            fit_bins(np.full(10, 3.3), 5)

    def test_edges_span_observed_range(self):
        rng = np.random.default_rng(8)
        col = rng.normal(size=400)
        spec = fit_bins(col, 7, alpha=0.5)
        assert spec.edges[0] == col.min()
        assert spec.edges[-1] == col.max()
        assert np.all(np.diff(spec.edges) > 0)


class TestTransform:
    def _spec(self):
        return BinSpec(np.array([0.0, 1.0, 2.0, 4.0]), alpha=1.0)

    def test_lower_edge_maps_to_bin_zero(self):
        assert transform(self._spec(), 0.0) == 0

    def test_clamping_both_sides(self):
        spec = self._spec()
        assert transform(spec, -5.0) == 0
        assert transform(spec, 4.0) == 2
        assert transform(spec, 100.0) == 2

    def test_matches_linear_scan(self):
        # Oracle: linear scan over the edges.
        rng = np.random.default_rng(2)
        edges = np.sort(rng.normal(size=12))
        spec = BinSpec(edges, alpha=1.0)

        def scan(x):
            for k in range(spec.n_bins):
                if edges[k] <= x < edges[k + 1]:
                    return k
            return 0 if x < edges[0] else spec.n_bins - 1

        for x in rng.normal(size=300) * 2:
            assert transform(spec, x) == scan(x)

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=20, unique=True),
           st.floats(-200, 200), st.floats(-200, 200))
    @settings(max_examples=50, deadline=None)
    def test_monotone(self, edges, x, y):
        spec = BinSpec(np.sort(np.asarray(edges)), alpha=0.0)
        lo, hi = sorted([x, y])
        assert transform(spec, lo) <= transform(spec, hi)


class TestSampleWithinBin:
    def test_single_bin_range(self):
        spec = BinSpec(np.array([0.0, 1.0]), alpha=1.0)
        rng = stream(0, 50)
        draws = np.array([sample_within_bin(spec, 0, rng) for _ in range(200)])
        assert np.all((draws >= 0.0) & (draws < 1.0))

    def test_uniform_within_bin_ks(self):
        # Oracle: Kolmogorov-Smirnov against the uniform CDF on the bin.
        spec = BinSpec(np.array([-1.0, 0.5, 3.0]), alpha=1.0)
        rng = stream(1, 50)
        draws = np.array([sample_within_bin(spec, 1, rng) for _ in range(10_000)])
        stat = kstest(draws, "uniform", args=(0.5, 2.5)).statistic
        assert stat < 0.02

    def test_inverse_consistency(self):
        rng_edges = np.random.default_rng(9)
        spec = BinSpec(np.sort(rng_edges.normal(size=9)), alpha=1.0)
        rng = stream(2, 50)
        for _ in range(2000):
            k = int(rng.integers(spec.n_bins))
            assert transform(spec, sample_within_bin(spec, k, rng)) == k

    def test_index_out_of_range(self):
        spec = BinSpec(np.array([0.0, 1.0]), alpha=1.0)
        with pytest.raises(IndexError):
            sample_within_bin(spec, 1, stream(0, 50))


def test_constant_column_passthrough_shape():
    c = ConstantColumn(2.5)
    assert c.n_bins == 1 and c.value == 2.5
