import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowgb.benchmarks import make_blobs
from shadowgb.classifier import ThreeWayPrediction
from shadowgb.errors import ConfigurationError
from shadowgb.evaluation import CSV_COLUMNS, CostMatrix, run_experiment, score, theta_grid_search

from conftest import make_ds


def _preds(labels):
    return [ThreeWayPrediction(None if v is None else v, "COR") for v in labels]


def test_all_correct():
    m = score(_preds([0, 1, 1, 0]), [0, 1, 1, 0], 1)
    assert (m.accuracy, m.ur, m.cost, m.precision, m.recall, m.f1) == (1.0, 0.0, 0.0, 1.0, 1.0, 1.0)


def test_all_deferred():
    m = score(_preds([None] * 4), [0, 1, 1, 0], 1, CostMatrix(0, 10, 2))
    assert (m.accuracy, m.ur, m.recall, m.cost) == (0.0, 1.0, 0.0, 2.0)


def test_mixed_counts_by_hand():
    truth = [0] * 5 + [1] * 5
    pred = [0, 0, 0, 0, 1, 1, 1, 1, None, None]  # 7 correct, 1 wrong, 2 deferred
    m = score(_preds(pred), truth, 1)
    assert m.accuracy == pytest.approx(0.7)
    assert m.ur == pytest.approx(0.2)
    assert m.cost == pytest.approx((10 * 1 + 2 * 2) / 10)
    # positive class 1: TP=3, FP=1, actual positives=5
    assert m.precision == pytest.approx(3 / 4)
    assert m.recall == pytest.approx(3 / 5)
    assert m.f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35)


def test_label_array_input_uses_minus_one_for_deferral():
    m = score(np.array([1, -1, 0]), [1, 1, 0], 1)
    assert (m.correct, m.deferred, m.wrong) == (2, 1, 0)


def test_unknown_positive_class():
    with pytest.raises(ConfigurationError):
        score(_preds([0, 1]), [0, 1], 5, class_count=2)
    with pytest.raises(ConfigurationError):
        score(_preds([0, 1]), [0, 1], 7)


@pytest.mark.parametrize("c, w, d", [(0, 2, 2), (0, 1, 2), (3, 10, 2), (-1, 10, 2)])
def test_cost_matrix_validation(c, w, d):
    with pytest.raises(ConfigurationError):
        CostMatrix(c, w, d)


outcomes = st.lists(st.tuples(st.integers(0, 2), st.one_of(st.none(), st.integers(0, 2))), min_size=1, max_size=60)


@settings(max_examples=150)
@given(outcomes)
def test_outcome_partition_and_cost_properties(rows):
    truth = [t for t, _ in rows]
    pred = [p for _, p in rows]
    m = score(_preds(pred), truth, 0, class_count=3)
    wrong_rate = m.wrong / len(rows)
    assert m.accuracy + m.ur + wrong_rate == pytest.approx(1.0, abs=1e-12)
    for v in (m.accuracy, m.precision, m.recall, m.f1, m.ur):
        assert 0.0 <= v <= 1.0
    heavier = score(_preds(pred), truth, 0, CostMatrix(0, 20, 2), class_count=3)
    assert heavier.cost >= m.cost
    wrong_at = [i for i, (t, p) in enumerate(rows) if p is not None and p != t]
    if wrong_at:
        deferred = list(pred)
        deferred[wrong_at[0]] = None
        assert score(_preds(deferred), truth, 0, class_count=3).cost < m.cost
    forced = [0 if p is None else p for p in pred]
    assert m.recall <= score(_preds(forced), truth, 0, class_count=3).recall


def _blobs():
    return make_blobs(n=200, seed=3)


def test_report_determinism_and_formats():
    ds = _blobs()
    a = run_experiment(ds, 0.2, 0.5, 5, 11, timing=False)
    b = run_experiment(ds, 0.2, 0.5, 5, 11, timing=False)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()
    rows = list(csv.DictReader(io.StringIO(a.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 6 and rows[-1]["fold"] == "mean"
    doc = json.loads(a.to_json())
    assert doc["config"]["noise_rate"] == 0.2 and doc["config"]["folds"] == 5
    assert len(doc["per_fold"]) == 5
    for r in a.per_fold:
        assert r.metrics.ur == r.metrics.deferred / (r.metrics.correct + r.metrics.wrong + r.metrics.deferred)
    assert a.aggregate["accuracy"] == pytest.approx(np.mean([r.metrics.accuracy for r in a.per_fold]))


def test_parallel_folds_match_serial():
    ds = _blobs()
    serial = run_experiment(ds, 0.1, 0.5, 4, 2, timing=False)
    parallel = run_experiment(ds, 0.1, 0.5, 4, 2, timing=False, jobs=2)
    assert serial.to_json() == parallel.to_json()


def test_baseline_never_defers():
    rep = run_experiment(_blobs(), 0.3, 0.5, 5, 0, classifier_kind="gbknn_baseline")
    assert rep.aggregate["ur"] == 0.0
    assert all(r.metrics.deferred == 0 for r in rep.per_fold)


def test_noise_lowers_accuracy_on_separable_data():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(300, 2))
    ds = make_ds(X, (X[:, 0] > 0.5).astype(int))
    clean = run_experiment(ds, 0.0, 0.5, 5, 0, timing=False).aggregate["accuracy"]
    noisy = run_experiment(ds, 0.4, 0.5, 5, 0, timing=False).aggregate["accuracy"]
    assert clean > noisy


def test_trace_files(tmp_path):
    run_experiment(_blobs(), 0.0, 0.5, 3, 0, trace_dir=tmp_path)
    files = sorted(tmp_path.glob("trace_*.jsonl"))
    assert len(files) == 3
    first = json.loads(files[0].read_text().splitlines()[0])
    assert first["step"] == 1


@pytest.mark.parametrize(
    "kwargs",
    [dict(classifier_kind="svm"), dict(noise_rate=1.2), dict(theta=2.0), dict(folds=1)],
)
def test_run_experiment_validation(kwargs):
    with pytest.raises(ConfigurationError):
        run_experiment(_blobs(), **kwargs)


def test_theta_search_single_value():
    search = theta_grid_search(_blobs(), [0.4], 0.0, 3, 0)
    assert len(search.rows) == 1 and search.best_theta == 0.4


def test_theta_search_dedupes_and_argmax():
    search = theta_grid_search(_blobs(), [0.7, 0.3, 0.5, 0.3], 0.0, 3, 0)
    thetas = [t for t, _ in search.rows]
    assert thetas == [0.3, 0.5, 0.7]
    best_f1 = max(r.aggregate["f1"] for _, r in search.rows)
    first_best = next(t for t, r in search.rows if r.aggregate["f1"] == best_f1)
    assert search.best_theta == first_best
    lines = search.to_csv().splitlines()
    assert len(lines) == 5 and lines[-1] == f"# recommended theta: {search.best_theta}"


def test_theta_search_rejects_empty_and_out_of_range():
    with pytest.raises(ConfigurationError):
        theta_grid_search(_blobs(), [], 0.0, 3, 0)
    with pytest.raises(ConfigurationError):
        theta_grid_search(_blobs(), [1.5], 0.0, 3, 0)
