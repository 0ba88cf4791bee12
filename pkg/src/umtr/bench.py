"""Bundled case-study protocols: two-moons and iris, end to end.

Each suite builds its data, applies the masking protocol, fits with the
default configuration, imputes and generates, and returns an
ImputationReport plus plot-ready datasets.  The CLI wraps these, but they
are plain functions so notebooks and tests can call them directly.
"""

import importlib.resources
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import engine, metrics
from .dataset import TabularDataset, apply_mcar, load_csv, two_moons
from .engine import EngineConfig
from .metrics import ImputationReport


class StageError(RuntimeError):
    """A named protocol stage failed; .stage carries the name."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        super().__init__(f"stage {stage!r} failed: {cause}")


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc

MOONS_N = 200
MOONS_NOISE = 0.1
IRIS_ROW_PROB = 0.5
IRIS_CELL_PROB = 0.5
N_IMPUTATIONS = 10

# Acceptance geometry for the moons imputation check: the manifold radius is
# the 2.5-sigma noise band, and the x-window where both moons overlap in y.
MOONS_DISTANCE_BAND = 0.25
MOONS_OVERLAP_X = (0.0, 1.0)


@dataclass
class SuiteResult:
    """Everything a suite produced, for reports, plots, and assertions."""

    report: ImputationReport
    truth: TabularDataset
    masked: TabularDataset
    generated: TabularDataset
    imputations: list[TabularDataset]


def load_bundled_iris() -> TabularDataset:
    """The packaged 150-row iris table (4 continuous columns + species)."""
    ref = importlib.resources.files("umtr").joinpath("data/iris.csv")
    with importlib.resources.as_file(ref) as path:
        return load_csv(path)


def mask_y_duplicate(data: TabularDataset, column: int = 1) -> TabularDataset:
    """Stack data on top of a copy with one column fully masked."""
    values = np.vstack([data.values, data.values])
    mask = np.vstack([data.mask, data.mask])
    mask[data.n_rows :, column] = False
    return TabularDataset(values, mask, data.schema, data.labels)


def _imputed_xy(imputations, masked: TabularDataset):
    """(x, imputed y) pairs of every originally-masked y cell, all imputations."""
    rows = np.nonzero(~masked.mask[:, 1])[0]
    pts = [np.column_stack([imp.values[rows, 0], imp.values[rows, 1]])
           for imp in imputations]
    return np.vstack(pts)


def run_moons(seed: int, config: EngineConfig | None = None,
              threads: int = 1) -> SuiteResult:
    """Two-moons case study: generation from clean data, imputation of masked y."""
    config = config or EngineConfig(seed=seed)
    with _stage("data"):
        truth = two_moons(MOONS_N, MOONS_NOISE, seed)
        test = two_moons(MOONS_N, MOONS_NOISE, seed + 1)
        masked = mask_y_duplicate(truth)
        truth_stacked = TabularDataset(
            np.vstack([truth.values, truth.values]),
            np.ones((2 * MOONS_N, 2), dtype=bool), truth.schema, truth.labels,
        )

    with _stage("fit"):
        gen_model = engine.fit(truth, config, threads=threads)
        imp_model = engine.fit(masked, config, threads=threads)
    with _stage("generate"):
        generated = engine.generate(gen_model, MOONS_N, seed)
    with _stage("impute"):
        imputations = engine.impute(imp_model, masked, N_IMPUTATIONS, seed)

    with _stage("metrics"):
        min_mae, avg_mae = metrics.mae_scores(
            truth_stacked, imputations, masked.mask
        )
        mad = metrics.mad_diversity(imputations, masked.mask)
        w_train = float(np.mean(
            [metrics.dataset_wasserstein(imp, truth_stacked) for imp in imputations]
        ))
        w_test = float(np.mean(
            [metrics.dataset_wasserstein(imp, test) for imp in imputations]
        ))

        imputed_pts = _imputed_xy(imputations, masked)
        dists = metrics.moons_manifold_distance(imputed_pts)
        on_manifold = float(np.mean(dists <= MOONS_DISTANCE_BAND))
        lo, hi = MOONS_OVERLAP_X
        band = imputed_pts[(imputed_pts[:, 0] >= lo) & (imputed_pts[:, 0] <= hi)]
        if band.size:
            upper_frac = float(np.mean(metrics.moons_nearest_arc(band) == 0))
        else:
            upper_frac = float("nan")

        gen_dists = metrics.moons_manifold_distance(generated.values)
    report = ImputationReport(
        min_mae=min_mae, avg_mae=avg_mae, w_train=w_train, w_test=w_test,
        mad=mad,
        per_feature={
            name: {"min_mae": mn, "avg_mae": av}
            for name, (mn, av) in metrics.feature_mae(
                truth_stacked, imputations, masked.mask
            ).items()
        },
        extras={
            "imp_manifold_frac": on_manifold,
            "imp_band_upper_frac": upper_frac,
            "gen_manifold_frac": float(np.mean(gen_dists <= MOONS_DISTANCE_BAND)),
            "gen_w_train": metrics.dataset_wasserstein(generated, truth),
            "gen_w_test": metrics.dataset_wasserstein(generated, test),
        },
    )
    return SuiteResult(report, truth_stacked, masked, generated, imputations)


def run_iris(seed: int, config: EngineConfig | None = None,
             threads: int = 1) -> SuiteResult:
    """Iris case study: 50%/50% MCAR with the species column protected."""
    config = config or EngineConfig(seed=seed)
    with _stage("data"):
        truth = load_bundled_iris()
        species_col = truth.column_names.index("species")
        masked = apply_mcar(truth, IRIS_ROW_PROB, IRIS_CELL_PROB,
                            protected_cols={species_col}, seed=seed)

    with _stage("fit"):
        model = engine.fit(masked, config, threads=threads)
    with _stage("impute"):
        imputations = engine.impute(model, masked, N_IMPUTATIONS, seed)
    with _stage("generate"):
        generated = engine.generate(model, truth.n_rows, seed)

    with _stage("metrics"):
        min_mae, avg_mae = metrics.mae_scores(truth, imputations, masked.mask)
        mad = metrics.mad_diversity(imputations, masked.mask)
        w_train = float(np.mean(
            [metrics.dataset_wasserstein(imp, truth) for imp in imputations]
        ))

        extras = {"gen_w_train": metrics.dataset_wasserstein(generated, truth)}
        extras.update(
            _iris_conditional_w1(truth, masked, imputations, species_col)
        )
    report = ImputationReport(
        min_mae=min_mae, avg_mae=avg_mae, w_train=w_train,
        w_test=float("nan"),  # no held-out split exists at this scale
        mad=mad,
        per_feature={
            name: {"min_mae": mn, "avg_mae": av}
            for name, (mn, av) in metrics.feature_mae(
                truth, imputations, masked.mask
            ).items()
        },
        extras=extras,
    )
    return SuiteResult(report, truth, masked, generated, imputations)


def _iris_conditional_w1(truth, masked, imputations, species_col,
                         feature: str = "petal_length"):
    """Per-species W1 between imputed and true petal-length distributions."""
    j = truth.column_names.index(feature)
    out = {}
    for code, label in enumerate(truth.labels[species_col]):
        in_species = truth.values[:, species_col] == code
        target = in_species & ~masked.mask[:, j]
        if not target.any():
            continue
        imputed = np.concatenate(
            [imp.values[target, j] for imp in imputations]
        )
        ref = truth.values[in_species, j]
        out[f"w1_{feature}_{label}"] = metrics.wasserstein_1d(imputed, ref)
    return out
