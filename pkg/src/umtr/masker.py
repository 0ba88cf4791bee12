"""Training-set construction for the incremental-unmasking objective.

Each training example is replicated K times; each replicate draws an
independent uniform feature order and walks it as a reveal order.  At step t
one training row is emitted for the step's target feature: the conditioning
row contains the values revealed so far (everything else, including the
target itself, is missing) and the label is the target's quantized bin or
categorical code.  Originally-missing cells are never revealed and never
serve as labels; their steps are skipped.  Fully observed data therefore
yields exactly K * N * D rows, and in general K * (number of observed cells).
"""

from dataclasses import dataclass

import numpy as np

from . import discretizer
from .dataset import TabularDataset
from .discretizer import BinSpec, ConstantColumn
from .rng import OP_MASK_PERM, stream


@dataclass
class FeatureTrainingSet:
    """Conditioning rows and labels for one target feature.

    X is (rows, D) with NaN marking masked/missing entries; the target's own
    column is missing in every row.  y holds bin indices or categorical codes.
    """

    target_feature: int
    X: np.ndarray
    y: np.ndarray

    @property
    def is_empty(self) -> bool:
        return self.y.size == 0


def encode_labels(data: TabularDataset, bins) -> np.ndarray:
    """Quantized label matrix: bin index / categorical code per observed cell.

    bins[j] is a BinSpec for continuous columns, a ConstantColumn for constant
    ones, or None for categorical pass-through.  Unobserved cells get -1.
    """
    labels = np.full((data.n_rows, data.n_features), -1, dtype=np.int64)
    for j, spec in enumerate(bins):
        obs = data.mask[:, j]
        col = data.values[obs, j]
        if isinstance(spec, BinSpec):
            labels[obs, j] = discretizer.transform(spec, col)
        elif isinstance(spec, ConstantColumn):
            labels[obs, j] = 0
        elif spec is None:
            labels[obs, j] = col.astype(np.int64)
        else:
            raise TypeError(f"unsupported bin entry for column {j}: {spec!r}")
    return labels


def build_training_sets(
    data: TabularDataset, bins, k_dup: int, seed: int
) -> list[FeatureTrainingSet]:
    """Emit the K-replicated unmasking training sets, one per feature.

    A feature observed in no row comes back with an empty set; callers decide
    how to handle that (the engine refuses such data at fit time).
    """
    if k_dup < 1:
        raise ValueError("k_dup must be >= 1")
    if len(bins) != data.n_features:
        raise ValueError("bins must have one entry per feature")
    n, d = data.n_rows, data.n_features
    labels = encode_labels(data, bins)

    rows_per_feature = k_dup * data.mask.sum(axis=0)
    xs = [np.full((rows_per_feature[j], d), np.nan) for j in range(d)]
    ys = [np.empty(rows_per_feature[j], dtype=np.int64) for j in range(d)]
    ptr = np.zeros(d, dtype=np.int64)

    for i in range(n):
        row = data.values[i]
        obs = data.mask[i]
        for k in range(k_dup):
            perm = stream(seed, OP_MASK_PERM, row=i, rep=k).permutation(d)
            cur = np.full(d, np.nan)
            for j in perm:
                if obs[j]:
                    p = ptr[j]
                    xs[j][p] = cur
                    ys[j][p] = labels[i, j]
                    ptr[j] = p + 1
                    cur[j] = row[j]
    return [FeatureTrainingSet(j, xs[j], ys[j]) for j in range(d)]
