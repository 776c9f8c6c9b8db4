"""Three-way metrics, deferral-aware cost, and the cross-validated noise experiment."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classifier import UNCERTAIN, fit, fit_gbknn, predict_gbknn_batch
from .data import Dataset, MinMaxScaling, inject_label_noise, make_folds
from .errors import ConfigurationError
from .granulation import write_trace
from .shadowing import DEFAULT_ALPHA_STEP, DEFAULT_SIGMA

CLASSIFIERS = ("shadow_3wc", "gbknn_baseline")
METRICS = ("accuracy", "precision", "recall", "f1", "ur", "cost")
CSV_COLUMNS = ("fold",) + METRICS + ("ball_count", "fit_ms", "predict_ms")


@dataclass(frozen=True)
class CostMatrix:
    correct: float = 0.0
    wrong: float = 10.0
    defer: float = 2.0

    def __post_init__(self):
        if not self.wrong > self.defer >= self.correct >= 0:
            raise ConfigurationError(
                f"costs must satisfy wrong > defer >= correct >= 0, got "
                f"wrong={self.wrong}, defer={self.defer}, correct={self.correct}"
            )


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    ur: float
    cost: float
    correct: int
    wrong: int
    deferred: int


def _as_label_array(predictions) -> np.ndarray:
    if isinstance(predictions, np.ndarray):
        return predictions.astype(np.int64)
    return np.array(
        [UNCERTAIN if getattr(p, "label", p) is None else getattr(p, "label", p) for p in predictions],
        dtype=np.int64,
    )


def score(predictions, truth, positive_class: int, costs: CostMatrix = CostMatrix(), class_count=None) -> Metrics:
    """Metrics of three-way predictions against true labels.

    ``predictions`` is a sequence of :class:`ThreeWayPrediction` or an integer
    array with ``UNCERTAIN`` (-1) for deferrals. Deferred queries count
    against accuracy and recall but are excluded from precision.
    """
    pred = _as_label_array(predictions)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ConfigurationError("predictions and truth differ in length")
    if truth.size == 0:
        raise ConfigurationError("nothing to score")
    if class_count is not None:
        known = 0 <= positive_class < class_count
    else:
        known = positive_class in set(truth.tolist()) | set(pred[pred != UNCERTAIN].tolist())
    if not known:
        raise ConfigurationError(f"unknown positive class {positive_class!r}")

    n = truth.size
    committed = pred != UNCERTAIN
    correct = int(np.count_nonzero(committed & (pred == truth)))
    deferred = int(np.count_nonzero(~committed))
    wrong = n - correct - deferred
    tp = int(np.count_nonzero(committed & (pred == positive_class) & (truth == positive_class)))
    predicted_pos = int(np.count_nonzero(pred == positive_class))
    actual_pos = int(np.count_nonzero(truth == positive_class))
    precision = tp / predicted_pos if predicted_pos else 0.0
    recall = tp / actual_pos if actual_pos else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    cost = (costs.wrong * wrong + costs.defer * deferred + costs.correct * correct) / n
    return Metrics(correct / n, precision, recall, f1, deferred / n, cost, correct, wrong, deferred)


@dataclass(frozen=True)
class FoldResult:
    fold: int
    metrics: Metrics
    ball_count: int
    fit_ms: float
    predict_ms: float

    def row(self) -> dict:
        m = self.metrics
        return {
            "fold": self.fold,
            **{k: getattr(m, k) for k in METRICS},
            "ball_count": self.ball_count,
            "fit_ms": self.fit_ms,
            "predict_ms": self.predict_ms,
        }


@dataclass(frozen=True)
class EvaluationReport:
    per_fold: tuple
    aggregate: dict
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "aggregate": self.aggregate,
            "per_fold": [
                {**r.row(), "correct": r.metrics.correct, "wrong": r.metrics.wrong, "deferred": r.metrics.deferred}
                for r in self.per_fold
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.per_fold:
            w.writerow(r.row())
        w.writerow({"fold": "mean", **{k: self.aggregate[k] for k in CSV_COLUMNS[1:]}})
        return buf.getvalue()


def aggregate(results: Sequence[FoldResult]) -> dict:
    rows = [r.row() for r in results]
    return {k: float(np.mean([row[k] for row in rows])) for k in CSV_COLUMNS[1:]}


def fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


@dataclass(frozen=True)
class _FoldTask:
    ds: Dataset
    train_idx: np.ndarray
    test_idx: np.ndarray
    fold: int
    noise_rate: float
    theta: float
    sigma: float
    alpha_step: float
    split_method: str
    seed: int
    costs: CostMatrix
    classifier_kind: str
    positive_class: int
    timing: bool
    trace_dir: Optional[str] = None


def _run_fold(task: _FoldTask) -> FoldResult:
    ds = task.ds
    scaling = MinMaxScaling.fit(ds.features[task.train_idx])
    train = Dataset(
        scaling.apply(ds.features[task.train_idx]),
        ds.labels[task.train_idx],
        ds.class_count,
        normalized=True,
        label_names=ds.label_names,
        name=ds.name,
    )
    train, _ = inject_label_noise(train, task.noise_rate, fold_seed(task.seed, task.fold))
    X_test = scaling.apply(ds.features[task.test_idx])

    t0 = time.perf_counter()
    if task.classifier_kind == "shadow_3wc":
        clf = fit(train, task.theta, task.sigma, alpha_step=task.alpha_step, split_method=task.split_method, seed=task.seed)
        ball_count = len(clf)
        t1 = time.perf_counter()
        if task.trace_dir is not None:
            name = f"trace_{task.ds.name or 'dataset'}_noise{task.noise_rate:g}_fold{task.fold}.jsonl"
            with open(Path(task.trace_dir) / name, "w") as fh:
                write_trace(clf.space.history, fh)
        pred = clf.predict_batch(X_test).labels
    else:
        table, _ = fit_gbknn(train, task.split_method, task.seed)
        ball_count = len(table.labels)
        t1 = time.perf_counter()
        pred = predict_gbknn_batch(table, X_test)
    t2 = time.perf_counter()

    metrics = score(pred, ds.labels[task.test_idx], task.positive_class, task.costs, ds.class_count)
    fit_ms, predict_ms = ((t1 - t0) * 1e3, (t2 - t1) * 1e3) if task.timing else (0.0, 0.0)
    return FoldResult(task.fold, metrics, ball_count, fit_ms, predict_ms)


def run_experiment(
    ds: Dataset,
    noise_rate: float = 0.0,
    theta: float = 0.5,
    folds: int = 10,
    seed: int = 0,
    costs: CostMatrix = CostMatrix(),
    classifier_kind: str = "shadow_3wc",
    *,
    sigma: float = DEFAULT_SIGMA,
    alpha_step: float = DEFAULT_ALPHA_STEP,
    split_method: str = "two_means",
    jobs: int = 1,
    timing: bool = True,
    trace_dir=None,
) -> EvaluationReport:
    """Stratified k-fold run with label noise injected into each training fold.

    Scaling is fitted on the training fold and reused for its test fold. The
    positive class for precision/recall is the minority class of ``ds``. With
    ``timing=False`` the millisecond columns are zero so that repeated runs
    produce identical reports. ``trace_dir`` receives one generation trace
    (JSON lines) per fold of the shadowed classifier.
    """
    if classifier_kind not in CLASSIFIERS:
        raise ConfigurationError(f"classifier must be one of {CLASSIFIERS}, got {classifier_kind!r}")
    if not 0.0 <= noise_rate <= 1.0:
        raise ConfigurationError(f"noise rate must lie in [0, 1], got {noise_rate}")
    if not 0.0 <= theta <= 1.0:
        raise ConfigurationError(f"theta must lie in [0, 1], got {theta}")
    if ds.class_count < 2:
        raise ConfigurationError("classification needs at least two classes")
    plan = make_folds(ds, folds, seed)
    positive = ds.minority_class()
    trace = None if trace_dir is None else str(trace_dir)
    tasks = [
        _FoldTask(
            ds, tr, te, k, noise_rate, theta, sigma, alpha_step, split_method,
            seed, costs, classifier_kind, positive, timing, trace,
        )
        for k, (tr, te) in enumerate(plan.splits())
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_fold, tasks))
    else:
        results = [_run_fold(t) for t in tasks]
    config = {
        "dataset": ds.name,
        "n": ds.n,
        "d": ds.d,
        "classifier": classifier_kind,
        "noise_rate": noise_rate,
        "theta": theta,
        "sigma": sigma,
        "alpha_step": alpha_step,
        "split_method": split_method,
        "folds": folds,
        "seed": seed,
        "positive_class": ds.label_names[positive],
        "costs": asdict(costs),
    }
    return EvaluationReport(tuple(results), aggregate(results), config)


@dataclass(frozen=True)
class ThetaSearch:
    rows: tuple  # (theta, EvaluationReport) in ascending theta
    best_theta: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("theta",) + METRICS + ("ball_count",))
        for theta, rep in self.rows:
            w.writerow([theta] + [rep.aggregate[k] for k in METRICS + ("ball_count",)])
        buf.write(f"# recommended theta: {self.best_theta}\n")
        return buf.getvalue()


def theta_grid_search(
    ds: Dataset,
    thetas,
    noise_rate: float = 0.0,
    folds: int = 10,
    seed: int = 0,
    **kwargs,
) -> ThetaSearch:
    """One experiment per distinct theta; recommends the F1 maximizer (ties to the smaller theta)."""
    grid = sorted({float(t) for t in thetas})
    if not grid:
        raise ConfigurationError("theta grid is empty")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ConfigurationError("theta values must lie in [0, 1]")
    kwargs.setdefault("timing", False)
    rows = tuple((t, run_experiment(ds, noise_rate, t, folds, seed, **kwargs)) for t in grid)
    best = max(rows, key=lambda r: (r[1].aggregate["f1"], -r[0]))[0]
    return ThetaSearch(rows, best)
