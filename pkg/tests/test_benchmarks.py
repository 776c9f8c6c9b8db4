import numpy as np
import pytest

from shadowgb.benchmarks import BUNDLED, SYNTHETIC, load_benchmark, load_libsvm, resolve
from shadowgb.errors import DatasetError, DatasetParseError

# sizes and class counts of the bundled copies
EXPECTED = {
    "spectf": (267, 44),
    "endgame": (958, 9),
    "segment": (2310, 19),
    "satimage": (6435, 36),
    "mushroom": (5644, 22),
}


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_shapes(name):
    ds = load_benchmark(name)
    assert (ds.n, ds.d) == EXPECTED[name]
    assert ds.class_count == 2


@pytest.mark.parametrize("name", sorted(SYNTHETIC))
def test_synthetic_deterministic(name):
    a, b = load_benchmark(name), load_benchmark(name)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.labels, b.labels)


def test_large_synthetic_sizes():
    assert [load_benchmark(n).n for n in ("synth-rings", "synth-checkerboard", "synth-moons")] == [5000, 6000, 8000]


def test_libsvm_reader(tmp_path):
    p = tmp_path / "f"
    p.write_text("+1 1:0.5 2:1\n-1 2:3\n")
    ds = load_libsvm(p)
    assert ds.features.tolist() == [[0.5, 1.0], [0.0, 3.0]]
    assert ds.label_names == ("+1", "-1")
    assert resolve(str(p)).n == 2


def test_libsvm_bad_token(tmp_path):
    p = tmp_path / "f"
    p.write_text("+1 1:0.5 2=1\n")
    with pytest.raises(DatasetParseError):
        load_libsvm(p)


def test_unknown_names():
    with pytest.raises(DatasetError):
        resolve("no-such-dataset")
    with pytest.raises(DatasetError):
        load_benchmark("nope")


def test_external_lookup_via_environment(tmp_path, monkeypatch):
    (tmp_path / "banknote.csv").write_text("1,2,3,4,0\n2,3,4,5,1\n")
    monkeypatch.setenv("SHADOWGB_DATA_DIR", str(tmp_path))
    assert load_benchmark("banknote").n == 2
