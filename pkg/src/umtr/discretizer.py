"""Adaptive quantization of continuous columns.

Bin edges come from inverting a smoothed empirical CDF: the average of
Gaussian CDFs centred at each data point (plus its reflections about the
column min/max, which removes the kernel's boundary bias), min-max
normalized over the data range, with bandwidth alpha times the Silverman
rule-of-thumb.  Small alpha recovers quantile (equal-count) binning; large
alpha flattens the CDF toward a straight line, recovering uniform
(equal-width) binning.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

# Bisection stops when the bracket is narrower than this fraction of the
# column range (or after the iteration cap).
BISECT_REL_TOL = 1e-10
BISECT_MAX_ITER = 200


class DegenerateColumnError(ValueError):
    """Raised for constant columns, which cannot be binned."""


@dataclass(frozen=True)
class ConstantColumn:
    """Pass-through for a constant column: one class, decoding to the constant.

    Callers route columns that fail :func:`fit_bins` with
    :class:`DegenerateColumnError` through this instead.
    """

    value: float

    @property
    def n_bins(self) -> int:
        return 1


@dataclass(frozen=True)
class BinSpec:
    """Fitted binning of one continuous column.

    edges has n_bins + 1 strictly increasing entries; edges[0] and edges[-1]
    are the observed column min and max.
    """

    edges: np.ndarray
    alpha: float
    n_bins: int = field(init=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("edges must be a 1-D vector of length >= 2")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("edges must be strictly increasing")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        edges = edges.copy()
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "n_bins", edges.size - 1)


def silverman_bandwidth(column: np.ndarray) -> float:
    """0.9 * min(std, IQR/1.34) * n**(-1/5), with IQR falling back to std."""
    column = np.asarray(column, dtype=np.float64)
    std = column.std()
    q75, q25 = np.percentile(column, [75, 25])
    iqr = q75 - q25
    a = min(std, iqr / 1.34) if iqr > 0 else std
    return 0.9 * a * column.size ** (-0.2)


def _smoothed_cdf(x, centers, h, lo, hi):
    """Average of Gaussian CDFs at each center, evaluated at points x.

    Kernels are mirrored about lo and hi so no smoothing mass leaks past the
    observed range; the constant offset this adds cancels in the min-max
    normalization done by the caller.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if h <= 0:
        # Degenerate bandwidth: plain empirical CDF.
        return (x[:, None] >= centers[None, :]).mean(axis=1)
    z = ndtr((x[:, None] - centers[None, :]) / h)
    z += ndtr((x[:, None] - (2 * lo - centers)[None, :]) / h)
    z += ndtr((x[:, None] - (2 * hi - centers)[None, :]) / h)
    return z.mean(axis=1)


def fit_bins(column, n_bins: int, alpha: float = 1.0) -> BinSpec:
    """Fit bin edges to a column by inverting its smoothed CDF.

    The effective bin count is min(n_bins, number of distinct values).
    Interior edge k solves normalized-CDF(x) = k / B by bisection on
    [min, max]; edges that collapse onto the same crossing are merged.
    """
    column = np.asarray(column, dtype=np.float64).ravel()
    if column.size < 2 or not np.all(np.isfinite(column)):
        raise ValueError("column must hold >= 2 finite values")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = column.min(), column.max()
    if lo == hi:
        raise DegenerateColumnError("constant column cannot be binned")

    n_distinct = np.unique(column).size
    b = min(n_bins, n_distinct)
    if b == 1:
        return BinSpec(np.array([lo, hi]), alpha)

    h = alpha * silverman_bandwidth(column)
    f_lo, f_hi = _smoothed_cdf(np.array([lo, hi]), column, h, lo, hi)
    span = f_hi - f_lo
    targets = f_lo + span * np.arange(1, b) / b

    lows = np.full(b - 1, lo)
    highs = np.full(b - 1, hi)
    tol = BISECT_REL_TOL * (hi - lo)
    for _ in range(BISECT_MAX_ITER):
        mids = 0.5 * (lows + highs)
        below = _smoothed_cdf(mids, column, h, lo, hi) < targets
        lows = np.where(below, mids, lows)
        highs = np.where(below, highs, mids)
        if np.all(highs - lows <= tol):
            break
    interior = 0.5 * (lows + highs)

    edges = [lo]
    for e in interior:
        if e - edges[-1] > 4 * tol:
            edges.append(e)
    # Merge the trailing interior edge into the max when they coincide.
    if hi - edges[-1] > 4 * tol:
        edges.append(hi)
    else:
        edges[-1] = hi
    return BinSpec(np.asarray(edges), alpha)


def transform(spec: BinSpec, x):
    """Bin index of x: k with edges[k] <= x < edges[k+1], clamped at the ends."""
    idx = np.searchsorted(spec.edges, x, side="right") - 1
    return np.clip(idx, 0, spec.n_bins - 1)


def sample_within_bin(spec: BinSpec, k: int, rng: np.random.Generator) -> float:
    """Draw Uniform[edges[k], edges[k+1]) within bin k."""
    if not 0 <= k < spec.n_bins:
        raise IndexError(f"bin index {k} out of range for {spec.n_bins} bins")
    return float(rng.uniform(spec.edges[k], spec.edges[k + 1]))
