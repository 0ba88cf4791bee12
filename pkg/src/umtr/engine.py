"""Fit, generate, impute: the autoregressive random-order inference engine.

Fitting trains one boosted classifier per feature on the unmasking training
sets, plus per-feature discretizers for continuous columns.  Inference fills
a row's features one at a time in a uniform random order: the target
feature's classifier scores the partial row, nucleus sampling picks a bin or
class, and continuous values are realized uniformly within the sampled bin.
Imputation runs the same loop over a row's missing cells only, with observed
cells conditioning from the start.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import discretizer, gbdt, masker
from .dataset import TabularDataset
from .discretizer import BinSpec, ConstantColumn, DegenerateColumnError
from .gbdt import TreeParams
from .rng import (
    OP_GEN_ORDER,
    OP_GEN_VALUE,
    OP_IMPUTE_ORDER,
    OP_IMPUTE_VALUE,
    stream,
)


class SchemaMismatchError(ValueError):
    """Input schema does not match the schema the model was fitted on."""


@dataclass(frozen=True)
class EngineConfig:
    """Engine defaults: 20 bins, top-p 0.9, duplication factor 50, alpha 1."""

    n_bins: int = 20
    top_p: float = 0.9
    k_dup: int = 50
    alpha: float = 1.0
    trees: TreeParams = field(default_factory=TreeParams)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if self.k_dup < 1:
            raise ValueError("k_dup must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


class UnmaskingModel:
    """Per-feature classifiers + discretizers + schema, ready for inference."""

    def __init__(self, schema, labels, bins, classifiers, marginals,
                 train_ranges, config):
        self.schema = list(schema)
        self.labels = dict(labels)
        self.bins = list(bins)
        self.classifiers = list(classifiers)
        self.marginals = [np.asarray(m, dtype=np.float64) for m in marginals]
        self.train_ranges = list(train_ranges)
        self.config = config

    @property
    def n_features(self) -> int:
        return len(self.schema)

    def n_classes(self, j: int) -> int:
        _, kind = self.schema[j]
        if kind.is_categorical:
            return kind.cardinality
        return self.bins[j].n_bins

    def _decode(self, j: int, k: int, rng) -> float:
        spec = self.bins[j]
        if isinstance(spec, BinSpec):
            return discretizer.sample_within_bin(spec, k, rng)
        if isinstance(spec, ConstantColumn):
            return spec.value
        return float(k)  # categorical code

    def _class_probs(self, j: int, partial_rows: np.ndarray) -> np.ndarray:
        clf = self.classifiers[j]
        if not clf.trees:
            # Degenerate classifier (single class seen): stored marginal.
            return np.tile(self.marginals[j], (partial_rows.shape[0], 1))
        return clf.predict_proba(partial_rows)

    def save(self, path) -> None:
        from . import modelfile

        modelfile.save_model(self, path)


def nucleus_sample(probs, top_p: float, rng: np.random.Generator) -> int:
    """Top-p sampling: renormalize over the smallest high-probability prefix.

    Classes sort by descending probability (ties by ascending index); the
    prefix is the shortest one whose cumulative probability reaches top_p.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if not np.all(np.isfinite(probs)):
        raise ValueError("probabilities must be finite")
    if abs(probs.sum() - 1.0) > 1e-6:
        raise ValueError("probabilities must sum to 1")
    order = np.argsort(-probs, kind="stable")
    csum = np.cumsum(probs[order])
    cut = int(np.searchsorted(csum, top_p - 1e-12, side="left")) + 1
    nucleus = order[: min(cut, order.size)]
    w = probs[nucleus]
    w = w / w.sum()
    return int(rng.choice(nucleus, p=w))


def fit(data: TabularDataset, config: EngineConfig = EngineConfig(),
        threads: int = 1) -> UnmaskingModel:
    """Fit discretizers and the D per-feature classifiers.

    threads > 1 trains the per-feature classifiers concurrently; results are
    bit-identical to a single-threaded run.
    """
    if data.n_rows < 2:
        raise ValueError("need at least 2 rows to fit")
    obs_counts = data.mask.sum(axis=0)
    for j, cnt in enumerate(obs_counts):
        if cnt == 0:
            raise ValueError(
                f"column {data.schema[j][0]!r} has no observed values"
            )

    bins = []
    for j, (_, kind) in enumerate(data.schema):
        if kind.is_categorical:
            bins.append(None)
            continue
        col = data.column(j)
        try:
            bins.append(discretizer.fit_bins(col, config.n_bins, config.alpha))
        except DegenerateColumnError:
            bins.append(ConstantColumn(float(col[0])))

    sets = masker.build_training_sets(data, bins, config.k_dup, config.seed)
    labels = masker.encode_labels(data, bins)

    def n_classes_for(j):
        _, kind = data.schema[j]
        return kind.cardinality if kind.is_categorical else bins[j].n_bins

    def fit_one(j):
        return gbdt.fit(sets[j].X, sets[j].y, config.trees,
                        n_classes=n_classes_for(j))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            classifiers = list(pool.map(fit_one, range(data.n_features)))
    else:
        classifiers = [fit_one(j) for j in range(data.n_features)]

    marginals = []
    train_ranges = []
    for j in range(data.n_features):
        lab = labels[data.mask[:, j], j]
        counts = np.bincount(lab, minlength=n_classes_for(j)).astype(np.float64)
        marginals.append(counts / counts.sum())
        col = data.column(j)
        train_ranges.append((float(col.min()), float(col.max())))

    return UnmaskingModel(data.schema, data.labels, bins, classifiers,
                          marginals, train_ranges, config)


def _sample_cells(model, values, todo, op_value, seed, rep=0):
    """Fill cells autoregressively; todo[r] lists row r's features in order.

    Rows advance in lock step so predictions batch per feature; each cell's
    randomness comes from its own (row, feature, rep) stream, so results do
    not depend on the batching.
    """
    top_p = model.config.top_p
    ptr = np.zeros(len(todo), dtype=np.int64)
    while True:
        pending = [(r, order[ptr[r]]) for r, order in enumerate(todo)
                   if ptr[r] < len(order)]
        if not pending:
            break
        by_feature = {}
        for r, j in pending:
            by_feature.setdefault(int(j), []).append(r)
        for j, rows in sorted(by_feature.items()):
            probs = model._class_probs(j, values[rows])
            for pi, r in enumerate(rows):
                rng = stream(seed, op_value, row=r, feature=j, rep=rep)
                k = nucleus_sample(probs[pi], top_p, rng)
                values[r, j] = model._decode(j, k, rng)
                ptr[r] += 1


def generate(model: UnmaskingModel, n: int, seed: int) -> TabularDataset:
    """Sample n new rows, generating each row's features in random order."""
    if n < 0:
        raise ValueError("n must be >= 0")
    d = model.n_features
    values = np.full((n, d), np.nan)
    todo = [stream(seed, OP_GEN_ORDER, row=r).permutation(d) for r in range(n)]
    _sample_cells(model, values, todo, OP_GEN_VALUE, seed)
    return TabularDataset(values, np.ones((n, d), dtype=bool), model.schema,
                          model.labels)


def impute(model: UnmaskingModel, data: TabularDataset, m: int,
           seed: int) -> list[TabularDataset]:
    """Produce m completions of data; observed cells are preserved bit-exact.

    Each completion draws, per row, a uniform random order over the missing
    cells only and samples them conditioned on observed plus already-imputed
    values.  Completions differ only by their random stream index.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if data.schema != model.schema:
        raise SchemaMismatchError(
            "input schema does not match the model's training schema"
        )
    results = []
    for rep in range(m):
        values = np.array(data.values)
        todo = []
        for r in range(data.n_rows):
            missing = np.nonzero(~data.mask[r])[0]
            if missing.size:
                order = stream(seed, OP_IMPUTE_ORDER, row=r,
                               rep=rep).permutation(missing)
            else:
                order = missing
            todo.append(order)
        _sample_cells(model, values, todo, OP_IMPUTE_VALUE, seed, rep=rep)
        results.append(
            TabularDataset(values, np.ones_like(data.mask), model.schema,
                           model.labels)
        )
    return results


def load_model(path) -> UnmaskingModel:
    from . import modelfile

    return modelfile.load_model(path)
