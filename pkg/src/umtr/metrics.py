"""Imputation error, distributional distance, and diversity metrics.

MAE scores compare completions against ground truth on the originally
missing cells only; Wasserstein distances are exact 1-D order-statistics
computations; MAD measures spread across multiple imputations.  The moons
helpers score points against the two parametric half-circle arcs the
synthetic generator draws from.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import TabularDataset


class MetricError(ValueError):
    """Metric undefined for the given inputs (e.g. no masked cells)."""


@dataclass
class ImputationReport:
    """Flat bundle of imputation metrics plus per-feature breakdowns."""

    min_mae: float
    avg_mae: float
    w_train: float
    w_test: float
    mad: float
    per_feature: dict[str, dict[str, float]] = field(default_factory=dict)
    extras: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.min_mae > self.avg_mae + 1e-12:
            raise ValueError("min_mae cannot exceed avg_mae")

    def items(self) -> list[tuple[str, float]]:
        out = [
            ("min_mae", self.min_mae),
            ("avg_mae", self.avg_mae),
            ("w_train", self.w_train),
            ("w_test", self.w_test),
            ("mad", self.mad),
        ]
        for feat, d in self.per_feature.items():
            out += [(f"{feat}.{k}", v) for k, v in d.items()]
        out += sorted(self.extras.items())
        return out

    def to_text(self) -> str:
        return "".join(f"{k} = {v!r}\n" for k, v in self.items())

    def csv_header(self) -> str:
        return ",".join(k for k, _ in self.items())

    def to_csv_row(self) -> str:
        return ",".join(repr(v) for _, v in self.items())


def _cell_errors(truth: TabularDataset, imp: TabularDataset, cells):
    rows, cols = cells
    err = np.abs(imp.values[rows, cols] - truth.values[rows, cols])
    for j, (_, kind) in enumerate(truth.schema):
        if kind.is_categorical:
            pick = cols == j
            err[pick] = (err[pick] != 0).astype(np.float64)
    return err


def mae_scores(truth: TabularDataset, imputations, mask) -> tuple[float, float]:
    """(min, average) mean-absolute-error over the originally-missing cells.

    mask is the pre-imputation observedness; categorical cells contribute
    0/1 disagreement instead of an absolute difference.
    """
    if not imputations:
        raise MetricError("need at least one imputation")
    mask = np.asarray(mask, dtype=bool)
    cells = np.nonzero(~mask)
    if cells[0].size == 0:
        raise MetricError("no masked cells: MAE is undefined")
    if not truth.mask[cells].all():
        raise MetricError("ground truth is itself missing at masked cells")
    maes = [float(_cell_errors(truth, imp, cells).mean()) for imp in imputations]
    return min(maes), float(np.mean(maes))


def feature_mae(truth: TabularDataset, imputations, mask) -> dict[str, tuple[float, float]]:
    """Per-feature (min, avg) MAE for features with at least one masked cell."""
    mask = np.asarray(mask, dtype=bool)
    out = {}
    for j, (name, _) in enumerate(truth.schema):
        col_mask = mask.copy()
        col_mask[:, [k for k in range(truth.n_features) if k != j]] = True
        if (~col_mask).any():
            out[name] = mae_scores(truth, imputations, col_mask)
    return out


def wasserstein_1d(a, b) -> float:
    """Exact W1 between the empirical distributions of two samples.

    Integrates |Qa(u) - Qb(u)| du over the merged grid of quantile levels;
    equal-size samples reduce to the mean absolute difference of sorted
    values.
    """
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise MetricError("wasserstein_1d needs non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    levels = np.union1d(np.arange(1, a.size) / a.size,
                        np.arange(1, b.size) / b.size)
    bounds = np.concatenate([[0.0], levels, [1.0]])
    widths = np.diff(bounds)
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    qa = a[np.minimum((mids * a.size).astype(np.int64), a.size - 1)]
    qb = b[np.minimum((mids * b.size).astype(np.int64), b.size - 1)]
    return float(np.sum(widths * np.abs(qa - qb)))


def dataset_wasserstein(a: TabularDataset, b: TabularDataset) -> float:
    """Mean per-feature W1 between two datasets on min-max-normalized columns.

    Each feature is scaled by the combined (union) min/max of both samples,
    which keeps the distance symmetric; constant combined columns contribute 0.
    """
    if a.n_features != b.n_features:
        raise MetricError("datasets must share a feature count")
    total = 0.0
    for j in range(a.n_features):
        va, vb = a.column(j), b.column(j)
        lo = min(va.min(), vb.min())
        hi = max(va.max(), vb.max())
        scale = hi - lo
        if scale == 0:
            continue
        total += wasserstein_1d((va - lo) / scale, (vb - lo) / scale)
    return total / a.n_features


def mad_diversity(imputations, mask) -> float:
    """Spread of the m imputed values per masked cell, averaged over cells.

    Continuous cells: mean absolute deviation around the median; categorical
    cells: disagreement rate with the mode (ties broken toward the lowest
    code).
    """
    if len(imputations) < 2:
        raise MetricError("mad_diversity needs m >= 2 imputations")
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(~mask)
    if rows.size == 0:
        raise MetricError("no masked cells: MAD is undefined")
    stacked = np.stack([imp.values[rows, cols] for imp in imputations])
    per_cell = np.empty(rows.size)
    categorical = np.array(
        [imputations[0].schema[j][1].is_categorical for j in cols]
    )
    cont = ~categorical
    if cont.any():
        med = np.median(stacked[:, cont], axis=0)
        per_cell[cont] = np.mean(np.abs(stacked[:, cont] - med), axis=0)
    for i in np.nonzero(categorical)[0]:
        codes = stacked[:, i].astype(np.int64)
        mode = np.argmax(np.bincount(codes))
        per_cell[i] = float(np.mean(codes != mode))
    return float(per_cell.mean())


# Two-moons reference geometry: arc 1 is the upper half of the unit circle
# centred at the origin; arc 2 the lower half of the unit circle centred at
# (1, 0.5).  Must stay in sync with dataset.two_moons.
_MOON_ARCS = (
    ((0.0, 0.0), +1),
    ((1.0, 0.5), -1),
)


def _arc_distances(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 2:
        raise ValueError("points must be (n, 2)")
    dists = []
    for (cx, cy), sign in _MOON_ARCS:
        vx = pts[:, 0] - cx
        vy = pts[:, 1] - cy
        r = np.hypot(vx, vy)
        on_arc = sign * vy >= 0
        radial = np.abs(r - 1.0)
        # Off the half-plane: nearest arc points are the endpoints (cx±1, cy).
        d_end = np.minimum(
            np.hypot(vx - 1.0, vy), np.hypot(vx + 1.0, vy)
        )
        dists.append(np.where(on_arc, radial, d_end))
    return np.stack(dists, axis=1)


def moons_manifold_distance(points) -> np.ndarray:
    """Distance from each 2-D point to the nearest of the two moon arcs.

    Uses the closed-form projection onto each circle, clamped to the arc's
    endpoints when the projection falls on the wrong half.
    """
    return _arc_distances(points).min(axis=1)


def moons_nearest_arc(points) -> np.ndarray:
    """0 for points nearer the first (upper) arc, 1 for the second (lower)."""
    return _arc_distances(points).argmin(axis=1)
