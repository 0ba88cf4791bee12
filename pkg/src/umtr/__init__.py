"""umtr: tabular data generation and imputation with gradient-boosted trees
trained to unmask features.

Core workflow: build a :class:`~umtr.dataset.TabularDataset`, fit an
:class:`~umtr.engine.UnmaskingModel`, then :func:`~umtr.engine.generate` new
rows or :func:`~umtr.engine.impute` missing cells.
"""

from .dataset import FeatureKind, TabularDataset, apply_mcar, load_csv, save_csv, two_moons
from .discretizer import BinSpec, fit_bins, sample_within_bin, transform
from .engine import EngineConfig, UnmaskingModel, fit, generate, impute, load_model, nucleus_sample
from .gbdt import BoostedClassifier, TreeParams
from .metrics import ImputationReport, mad_diversity, mae_scores, moons_manifold_distance, wasserstein_1d

__version__ = "0.1.0"

__all__ = [
    "FeatureKind",
    "TabularDataset",
    "apply_mcar",
    "load_csv",
    "save_csv",
    "two_moons",
    "BinSpec",
    "fit_bins",
    "transform",
    "sample_within_bin",
    "EngineConfig",
    "UnmaskingModel",
    "fit",
    "generate",
    "impute",
    "load_model",
    "nucleus_sample",
    "BoostedClassifier",
    "TreeParams",
    "ImputationReport",
    "mae_scores",
    "mad_diversity",
    "wasserstein_1d",
    "moons_manifold_distance",
    "__version__",
]
