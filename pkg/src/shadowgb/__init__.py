"""Three-way classification with shadowed granular-balls."""

__version__ = "0.1.0"

from .data import Dataset, inject_label_noise, load_csv, make_folds, normalize_min_max  # noqa: E402
from .granulation import generate_justifiable, generate_purity_baseline, space_measures  # noqa: E402
from .classifier import ShadowClassifier, ThreeWayPrediction, fit  # noqa: E402

__all__ = [
    "Dataset",
    "ShadowClassifier",
    "ThreeWayPrediction",
    "fit",
    "generate_justifiable",
    "generate_purity_baseline",
    "inject_label_noise",
    "load_csv",
    "make_folds",
    "normalize_min_max",
    "space_measures",
]
